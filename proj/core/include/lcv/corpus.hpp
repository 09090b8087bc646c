#ifndef LCV_CORPUS_HPP
#define LCV_CORPUS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lcv {

enum class Split { Train, Val, Test, ContextPool };

std::string split_name(Split s);
std::optional<Split> parse_split(const std::string& name);

// A timestamped, optionally labeled document. Timestamps are integer day
// indices; labels are 0 = real, 1 = misinfo and are present exactly when
// the article is not part of the context pool.
struct Article {
  std::string id;
  std::string text;
  int64_t day = 0;
  std::optional<int> label;
  Split split = Split::ContextPool;
};

struct SentenceList {
  std::string article_id;
  std::vector<std::string> sentences;
};

// Rule-based segmentation: split on sentence-final punctuation
// (. ! ? and full-width 。！？) followed by whitespace or end-of-text.
// An unterminated trailing fragment with fewer than 3 non-whitespace
// characters is merged into the previous sentence. Keeps at most
// `sentence_budget` sentences.
SentenceList segment(const Article& article, size_t sentence_budget = 10);

class CorpusStore {
 public:
  void add(Article article);  // throws DuplicateId / invariant violations

  const Article& get(const std::string& id) const;
  bool contains(const std::string& id) const;
  size_t size() const { return order_.size(); }

  // Articles in insertion order.
  std::vector<const Article*> all() const;
  // Labeled articles of one split, sorted by id.
  std::vector<const Article*> split_articles(Split s) const;

  // Context-pool ids with day in [day - delta, day), sorted by (day, id).
  std::vector<std::string> window(int64_t day, int64_t delta) const;

 private:
  std::map<std::string, Article> articles_;
  std::vector<std::string> order_;
  std::map<int64_t, std::vector<std::string>> temporal_index_;
};

CorpusStore load_corpus(const std::string& path);
void save_corpus(const CorpusStore& store, const std::string& path);

struct SynthSpec {
  int64_t num_events = 200;
  int64_t facts_per_event = 4;
  int64_t context_articles_per_event = 3;
  double omission_rate = 0.3;   // chance a non-critical fact is left out of a context article
  double misinfo_fraction = 0.5;
  int64_t vocabulary_size = 400;
  uint64_t seed = 7;
};

SynthSpec load_synth_spec(const std::string& path);

// Generates one labeled target plus its context-pool articles per event.
// A misinfo target omits the event's critical fact (present in every
// context article) and substitutes an unrelated distractor token; a real
// target contains all facts. Every target carries the same fixed framing
// template so the label is recoverable only through the context.
CorpusStore synth_generate(const SynthSpec& spec);

// Fixed framing sentence appended to every synthetic target.
extern const char* kSynthFramingTemplate;

// Fixed wire-bulletin article added to every event's context pool.
extern const char* kSynthBulletin;

}  // namespace lcv

#endif  // LCV_CORPUS_HPP
