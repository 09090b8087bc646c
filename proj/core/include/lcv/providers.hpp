#ifndef LCV_PROVIDERS_HPP
#define LCV_PROVIDERS_HPP

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace lcv {

inline constexpr size_t kSentenceTokenBudget = 32;
inline constexpr size_t kArticleTokenBudget = 256;
inline constexpr const char* kPromptVersion = "v1";
inline constexpr const char* kSentinelToken = "[NO_MISSING_CONTEXT]";

// Versioned prompt rendered by the remote relation provider; {s} and {c}
// are replaced with the truncated sentence and article.
extern const char* kRelationPromptTemplate;

struct Embedding {
  std::vector<double> values;
  std::string source;
};

// Missing-context phrase for one (sentence, article) pair. The sentinel
// is a distinct state: downstream code never string-matches it.
class RelationText {
 public:
  static RelationText sentinel() { return RelationText(); }
  static RelationText phrase(std::string text) {
    RelationText r;
    r.text_ = std::move(text);
    return r;
  }
  bool is_sentinel() const { return !text_.has_value(); }
  const std::string& text() const { return *text_; }
  bool operator==(const RelationText&) const = default;

 private:
  std::optional<std::string> text_;
};

// First line only, trimmed, quotes/brackets stripped; empty outputs and
// case/punctuation variants of the sentinel token collapse to the sentinel.
RelationText normalize_output(const std::string& raw);

class TextEncoder {
 public:
  virtual ~TextEncoder() = default;
  virtual Embedding encode(const std::string& text) = 0;
  virtual size_t dim() const = 0;
  virtual std::string id() const = 0;
};

// Deterministic offline encoder: each token lands in one of `dim` buckets
// via a sign hash; the accumulated vector is L2-normalized (the zero
// vector stays zero).
class HashEmbedder : public TextEncoder {
 public:
  explicit HashEmbedder(size_t dim = 768) : dim_(dim) {}
  Embedding encode(const std::string& text) override;
  size_t dim() const override { return dim_; }
  std::string id() const override { return "hash"; }

 private:
  size_t dim_;
};

struct EndpointConfig {
  std::string url;
  std::string api_key;
  std::string model;

  // Reads LCV_ENDPOINT_URL / LCV_ENDPOINT_KEY / LCV_ENDPOINT_MODEL.
  static EndpointConfig from_env();
};

class RemoteEncoder : public TextEncoder {
 public:
  RemoteEncoder(EndpointConfig cfg, size_t expected_dim = 768)
      : cfg_(std::move(cfg)), dim_(expected_dim) {}
  Embedding encode(const std::string& text) override;
  size_t dim() const override { return dim_; }
  std::string id() const override { return "remote"; }
  size_t calls() const { return calls_; }

 private:
  EndpointConfig cfg_;
  size_t dim_;
  std::atomic<size_t> calls_{0};
};

class RelationProvider {
 public:
  virtual ~RelationProvider() = default;
  // Inputs are truncated to 32 / 256 whitespace tokens before use.
  virtual RelationText reconstruct(const std::string& sentence,
                                   const std::string& article) = 0;
  virtual std::string id() const = 0;
};

// Offline provider: the content tokens of the article absent from the
// sentence, top-3 by article frequency (ties by ascending lexicographic
// order), or the sentinel when the difference is empty.
class StubRelationProvider : public RelationProvider {
 public:
  RelationText reconstruct(const std::string& sentence,
                           const std::string& article) override;
  std::string id() const override { return "stub"; }
};

// Chat-completions client: greedy decoding, temperature 0, 16-token budget.
class RemoteRelationProvider : public RelationProvider {
 public:
  explicit RemoteRelationProvider(EndpointConfig cfg) : cfg_(std::move(cfg)) {}
  RelationText reconstruct(const std::string& sentence,
                           const std::string& article) override;
  std::string id() const override { return "remote"; }
  size_t calls() const { return calls_; }

  static std::string render_prompt(const std::string& sentence,
                                   const std::string& article);

 private:
  EndpointConfig cfg_;
  std::atomic<size_t> calls_{0};
};

struct RelationCacheKey {
  std::string sentence_hash;
  std::string article_hash;
  std::string prompt_version;
  std::string provider_id;

  // Hashes the already-truncated texts.
  static RelationCacheKey make(const std::string& truncated_sentence,
                               const std::string& truncated_article,
                               const std::string& provider_id,
                               const std::string& prompt_version = kPromptVersion);
  std::string flat() const;
};

// Append-only JSONL cache; last write wins for duplicate keys at load time.
class RelationCache {
 public:
  RelationCache() = default;
  explicit RelationCache(std::string path);  // loads existing entries

  std::optional<RelationText> get(const RelationCacheKey& key) const;
  void put(const RelationCacheKey& key, const RelationText& value);
  size_t size() const { return entries_.size(); }

 private:
  std::string path_;  // empty = in-memory only
  std::unordered_map<std::string, RelationText> entries_;
  mutable std::mutex write_mutex_;
};

// Cache-through wrapper: consults the cache before the inner provider.
class CachedRelationProvider : public RelationProvider {
 public:
  CachedRelationProvider(RelationProvider& inner, RelationCache& cache)
      : inner_(inner), cache_(cache) {}
  RelationText reconstruct(const std::string& sentence,
                           const std::string& article) override;
  std::string id() const override { return inner_.id(); }

 private:
  RelationProvider& inner_;
  RelationCache& cache_;
};

}  // namespace lcv

#endif  // LCV_PROVIDERS_HPP
