#ifndef LCV_TEXT_HPP
#define LCV_TEXT_HPP

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lcv::text {

// Decodes one UTF-8 code point starting at `pos`; advances `pos` past it.
// Malformed bytes are consumed one at a time and returned as-is.
char32_t decode_utf8(std::string_view s, size_t& pos);

bool is_cjk(char32_t cp);

// Shared tokenizer for the TF-IDF index and the hash embedder:
// lowercase, split on non-alphanumeric runs, drop Latin tokens shorter
// than 2 characters; CJK spans additionally emit character bigrams
// (a lone CJK character is emitted by itself).
std::vector<std::string> tokenize(std::string_view text);

// Whitespace-delimited token split (the truncation unit for provider
// inputs; deliberately coarser than tokenize()).
std::vector<std::string> split_whitespace(std::string_view text);

// Keeps at most `max_tokens` whitespace tokens, rejoined with single spaces.
std::string truncate_tokens(std::string_view text, size_t max_tokens);

// Collapses whitespace runs to single spaces and trims the ends.
std::string normalize_whitespace(std::string_view text);

std::string trim(std::string_view text);

uint64_t fnv1a64(std::string_view data);

// Lowercase hex rendering of fnv1a64, used for cache keys.
std::string digest_hex(std::string_view data);

}  // namespace lcv::text

#endif  // LCV_TEXT_HPP
