#include "lcv/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "json.hpp"
#include "lcv/error.hpp"
#include "lcv/text.hpp"

namespace lcv {

const char* kSynthFramingTemplate =
    "Officials insist the full picture is already known and nothing of "
    "substance was left out.";

const char* kSynthBulletin =
    "Officials insist the full picture is already known.";

std::string split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
    case Split::ContextPool: return "context-pool";
  }
  return "?";
}

std::optional<Split> parse_split(const std::string& name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  if (name == "context-pool") return Split::ContextPool;
  return std::nullopt;
}

namespace {

bool is_sentence_delim(char32_t cp) {
  return cp == '.' || cp == '!' || cp == '?' ||
         cp == 0x3002 || cp == 0xFF01 || cp == 0xFF1F;  // 。！？
}

size_t non_ws_count(const std::string& s) {
  size_t n = 0;
  for (char c : s)
    if (!std::isspace(static_cast<unsigned char>(c))) ++n;
  return n;
}

}  // namespace

SentenceList segment(const Article& article, size_t sentence_budget) {
  std::vector<std::string> pieces;
  std::string cur;
  std::string_view txt = article.text;
  size_t pos = 0;
  bool terminated = true;  // whether the last emitted piece ended at a delimiter
  while (pos < txt.size()) {
    size_t start = pos;
    char32_t cp = text::decode_utf8(txt, pos);
    cur.append(txt.substr(start, pos - start));
    if (is_sentence_delim(cp)) {
      bool at_end = pos >= txt.size();
      bool ws_next =
          !at_end && std::isspace(static_cast<unsigned char>(txt[pos]));
      if (at_end || ws_next) {
        std::string norm = text::normalize_whitespace(cur);
        if (!norm.empty()) pieces.push_back(norm);
        cur.clear();
        terminated = true;
      }
    }
  }
  std::string tail = text::normalize_whitespace(cur);
  if (!tail.empty()) {
    terminated = false;
    pieces.push_back(tail);
  }
  if (pieces.empty())
    throw data_error("EmptyText",
                     "article '" + article.id + "' has no sentences");
  // Short unterminated tail folds into the preceding sentence.
  if (!terminated && pieces.size() > 1 &&
      non_ws_count(pieces.back()) < 3) {
    std::string frag = pieces.back();
    pieces.pop_back();
    pieces.back() += " " + frag;
  }
  if (pieces.size() > sentence_budget) pieces.resize(sentence_budget);
  return SentenceList{article.id, std::move(pieces)};
}

void CorpusStore::add(Article article) {
  if (article.id.empty())
    throw data_error("ParseError", "article with empty id");
  if (articles_.count(article.id))
    throw data_error("DuplicateId", "duplicate article id '" + article.id + "'");
  bool has_label = article.label.has_value();
  bool is_pool = article.split == Split::ContextPool;
  if (has_label == is_pool)
    throw data_error("ParseError",
                     "article '" + article.id +
                         "': label must be present iff split != context-pool");
  if (has_label && *article.label != 0 && *article.label != 1)
    throw data_error("ParseError",
                     "article '" + article.id + "': label must be 0 or 1");
  if (text::normalize_whitespace(article.text).empty())
    throw data_error("ParseError",
                     "article '" + article.id + "': empty text");
  if (is_pool) {
    auto& ids = temporal_index_[article.day];
    ids.insert(std::upper_bound(ids.begin(), ids.end(), article.id),
               article.id);
  }
  order_.push_back(article.id);
  articles_.emplace(article.id, std::move(article));
}

const Article& CorpusStore::get(const std::string& id) const {
  auto it = articles_.find(id);
  if (it == articles_.end())
    throw data_error("UnknownId", "no article with id '" + id + "'");
  return it->second;
}

bool CorpusStore::contains(const std::string& id) const {
  return articles_.count(id) != 0;
}

std::vector<const Article*> CorpusStore::all() const {
  std::vector<const Article*> out;
  out.reserve(order_.size());
  for (const auto& id : order_) out.push_back(&articles_.at(id));
  return out;
}

std::vector<const Article*> CorpusStore::split_articles(Split s) const {
  std::vector<const Article*> out;
  for (const auto& [id, a] : articles_)
    if (a.split == s) out.push_back(&a);
  return out;  // std::map iteration is already id-sorted
}

std::vector<std::string> CorpusStore::window(int64_t day, int64_t delta) const {
  std::vector<std::string> out;
  auto lo = temporal_index_.lower_bound(day - delta);
  auto hi = temporal_index_.lower_bound(day);  // half-open: [day-delta, day)
  for (auto it = lo; it != hi; ++it)
    out.insert(out.end(), it->second.begin(), it->second.end());
  return out;
}

CorpusStore load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("IoError", "cannot open '" + path + "'");
  CorpusStore store;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw data_error("ParseError",
                       path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    try {
      Article a;
      a.id = j.at("id").get<std::string>();
      a.text = j.at("text").get<std::string>();
      a.day = j.at("day").get<int64_t>();
      auto split = parse_split(j.at("split").get<std::string>());
      if (!split) throw data_error("ParseError", "unknown split");
      a.split = *split;
      if (j.contains("label")) a.label = j.at("label").get<int>();
      store.add(std::move(a));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw data_error("ParseError",
                       path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return store;
}

void save_corpus(const CorpusStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("IoError", "cannot write '" + path + "'");
  for (const Article* a : store.all()) {
    nlohmann::ordered_json j;
    j["id"] = a->id;
    j["text"] = a->text;
    j["day"] = a->day;
    if (a->label) j["label"] = *a->label;
    j["split"] = split_name(a->split);
    out << j.dump() << "\n";
  }
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("IoError", "cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw data_error("ParseError", path + ": " + e.what());
  }
  SynthSpec s;
  s.num_events = j.value("num_events", s.num_events);
  s.facts_per_event = j.value("facts_per_event", s.facts_per_event);
  s.context_articles_per_event =
      j.value("context_articles_per_event", s.context_articles_per_event);
  s.omission_rate = j.value("omission_rate", s.omission_rate);
  s.misinfo_fraction = j.value("misinfo_fraction", s.misinfo_fraction);
  s.vocabulary_size = j.value("vocabulary_size", s.vocabulary_size);
  s.seed = j.value("seed", s.seed);
  return s;
}

namespace {

// Generator-local randomness helpers; modulo/shift keep the byte stream
// identical across standard libraries, unlike std::*_distribution.
uint64_t pick(std::mt19937_64& rng, uint64_t n) { return rng() % n; }

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

std::string vocab_token(int64_t i) {
  std::ostringstream os;
  os << "w";
  std::string digits = std::to_string(i);
  for (size_t k = digits.size(); k < 4; ++k) os << '0';
  os << digits;
  return os.str();
}

}  // namespace

CorpusStore synth_generate(const SynthSpec& spec) {
  if (spec.num_events < 1 || spec.facts_per_event < 1 ||
      spec.context_articles_per_event < 1 || spec.vocabulary_size < 1)
    throw data_error("InvalidSpec", "all counts must be >= 1");
  if (spec.omission_rate < 0 || spec.omission_rate > 1 ||
      spec.misinfo_fraction < 0 || spec.misinfo_fraction > 1)
    throw data_error("InvalidSpec", "probabilities must lie in [0,1]");
  if (spec.vocabulary_size < spec.facts_per_event + 1)
    throw data_error("InvalidSpec",
                     "vocabulary_size must exceed facts_per_event");

  std::mt19937_64 rng(spec.seed);

  // Exact misinfo count, assigned by a seeded shuffle of event indices.
  std::vector<int64_t> events(size_t(spec.num_events));
  for (int64_t e = 0; e < spec.num_events; ++e) events[size_t(e)] = e;
  for (size_t i = events.size(); i > 1; --i)
    std::swap(events[i - 1], events[pick(rng, i)]);
  auto n_misinfo =
      int64_t(std::llround(double(spec.num_events) * spec.misinfo_fraction));
  std::vector<bool> is_misinfo(size_t(spec.num_events), false);
  for (int64_t i = 0; i < n_misinfo; ++i) is_misinfo[size_t(events[size_t(i)])] = true;

  CorpusStore store;
  for (int64_t e = 0; e < spec.num_events; ++e) {
    int64_t target_day = 8 * (e + 1);

    // Distinct fact tokens; facts[0] is the event's critical fact.
    std::vector<int64_t> fact_ids;
    while (int64_t(fact_ids.size()) < spec.facts_per_event) {
      auto cand = int64_t(pick(rng, uint64_t(spec.vocabulary_size)));
      if (std::find(fact_ids.begin(), fact_ids.end(), cand) == fact_ids.end())
        fact_ids.push_back(cand);
    }
    int64_t distractor;
    do {
      distractor = int64_t(pick(rng, uint64_t(spec.vocabulary_size)));
    } while (std::find(fact_ids.begin(), fact_ids.end(), distractor) !=
             fact_ids.end());

    std::string marker = "evt" + std::to_string(e);

    for (int64_t c = 0; c < spec.context_articles_per_event; ++c) {
      std::ostringstream txt;
      txt << marker << " report " << vocab_token(fact_ids[0]);
      // The first context article carries the critical fact alone, so a
      // target that lacks that fact ranks it below the generic bulletin.
      if (c > 0)
        for (size_t f = 1; f < fact_ids.size(); ++f)
          if (uniform01(rng) >= spec.omission_rate)
            txt << " " << vocab_token(fact_ids[f]);
      txt << ".";
      Article ctx;
      ctx.id = "e" + std::to_string(e) + "-c" + std::to_string(c);
      ctx.text = txt.str();
      ctx.day = target_day - 1 - (c % 6);
      ctx.split = Split::ContextPool;
      store.add(std::move(ctx));
    }

    // One identical wire bulletin per event. It overlaps every target's
    // framing sentence, so it outranks the critical-fact article exactly
    // when the target omits the critical fact; retrieval structure then
    // differs by class even though the bulletin text never does.
    Article bulletin;
    bulletin.id = "e" + std::to_string(e) + "-w";
    bulletin.text = kSynthBulletin;
    bulletin.day = target_day - 7;
    bulletin.split = Split::ContextPool;
    store.add(std::move(bulletin));

    std::ostringstream txt;
    txt << marker << " report";
    for (size_t f = 0; f < fact_ids.size(); ++f) {
      int64_t tok = fact_ids[f];
      if (f == 0 && is_misinfo[size_t(e)]) tok = distractor;
      txt << " " << vocab_token(tok);
    }
    txt << ". " << kSynthFramingTemplate;
    Article target;
    target.id = "e" + std::to_string(e) + "-t";
    target.text = txt.str();
    target.day = target_day;
    target.label = is_misinfo[size_t(e)] ? 1 : 0;
    switch (e % 5) {
      case 3: target.split = Split::Val; break;
      case 4: target.split = Split::Test; break;
      default: target.split = Split::Train; break;
    }
    store.add(std::move(target));
  }
  return store;
}

}  // namespace lcv
