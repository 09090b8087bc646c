#include "lcv/text.hpp"

#include <cctype>
#include <sstream>

namespace lcv::text {

char32_t decode_utf8(std::string_view s, size_t& pos) {
  const auto byte = [&](size_t i) -> uint8_t {
    return static_cast<uint8_t>(s[i]);
  };
  uint8_t b0 = byte(pos);
  if (b0 < 0x80) {
    pos += 1;
    return b0;
  }
  auto cont = [&](size_t i) {
    return i < s.size() && (byte(i) & 0xC0) == 0x80;
  };
  if ((b0 & 0xE0) == 0xC0 && cont(pos + 1)) {
    char32_t cp = (char32_t(b0 & 0x1F) << 6) | (byte(pos + 1) & 0x3F);
    pos += 2;
    return cp;
  }
  if ((b0 & 0xF0) == 0xE0 && cont(pos + 1) && cont(pos + 2)) {
    char32_t cp = (char32_t(b0 & 0x0F) << 12) |
                  (char32_t(byte(pos + 1) & 0x3F) << 6) |
                  (byte(pos + 2) & 0x3F);
    pos += 3;
    return cp;
  }
  if ((b0 & 0xF8) == 0xF0 && cont(pos + 1) && cont(pos + 2) && cont(pos + 3)) {
    char32_t cp = (char32_t(b0 & 0x07) << 18) |
                  (char32_t(byte(pos + 1) & 0x3F) << 12) |
                  (char32_t(byte(pos + 2) & 0x3F) << 6) |
                  (byte(pos + 3) & 0x3F);
    pos += 4;
    return cp;
  }
  pos += 1;
  return b0;
}

bool is_cjk(char32_t cp) {
  return (cp >= 0x4E00 && cp <= 0x9FFF) ||    // CJK Unified Ideographs
         (cp >= 0x3400 && cp <= 0x4DBF) ||    // Extension A
         (cp >= 0xF900 && cp <= 0xFAFF) ||    // Compatibility Ideographs
         (cp >= 0x20000 && cp <= 0x2A6DF);    // Extension B
}

namespace {

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(char(cp));
  } else if (cp < 0x800) {
    out.push_back(char(0xC0 | (cp >> 6)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(char(0xE0 | (cp >> 12)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(char(0xF0 | (cp >> 18)));
    out.push_back(char(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(char(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(char(0x80 | (cp & 0x3F)));
  }
}

bool is_latin_alnum(char32_t cp) {
  return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') ||
         (cp >= 'A' && cp <= 'Z');
}

char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 32;
  return cp;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string latin_run;
  std::vector<char32_t> cjk_run;

  auto flush_latin = [&]() {
    if (latin_run.size() >= 2) tokens.push_back(latin_run);
    latin_run.clear();
  };
  auto flush_cjk = [&]() {
    if (cjk_run.size() == 1) {
      std::string tok;
      append_utf8(tok, cjk_run[0]);
      tokens.push_back(tok);
    } else {
      for (size_t i = 0; i + 1 < cjk_run.size(); ++i) {
        std::string tok;
        append_utf8(tok, cjk_run[i]);
        append_utf8(tok, cjk_run[i + 1]);
        tokens.push_back(tok);
      }
    }
    cjk_run.clear();
  };

  size_t pos = 0;
  while (pos < text.size()) {
    char32_t cp = decode_utf8(text, pos);
    if (is_latin_alnum(cp)) {
      flush_cjk();
      append_utf8(latin_run, to_lower(cp));
    } else if (is_cjk(cp)) {
      flush_latin();
      cjk_run.push_back(cp);
    } else {
      flush_latin();
      flush_cjk();
    }
  }
  flush_latin();
  flush_cjk();
  return tokens;
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) {
        out.push_back(cur);
        cur.clear();
      }
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string truncate_tokens(std::string_view text, size_t max_tokens) {
  auto toks = split_whitespace(text);
  if (toks.size() > max_tokens) toks.resize(max_tokens);
  std::string out;
  for (size_t i = 0; i < toks.size(); ++i) {
    if (i) out.push_back(' ');
    out += toks[i];
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  return truncate_tokens(text, size_t(-1));
}

std::string trim(std::string_view text) {
  size_t b = 0, e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return std::string(text.substr(b, e - b));
}

uint64_t fnv1a64(std::string_view data) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<uint8_t>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string digest_hex(std::string_view data) {
  static const char* hex = "0123456789abcdef";
  uint64_t h = fnv1a64(data);
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[size_t(i)] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace lcv::text
