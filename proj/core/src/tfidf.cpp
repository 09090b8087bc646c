#include "lcv/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "lcv/error.hpp"
#include "lcv/text.hpp"

namespace lcv {

double sparse_dot(const SparseVec& a, const SparseVec& b) {
  double acc = 0.0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (a[i].first > b[j].first) {
      ++j;
    } else {
      acc += a[i].second * b[j].second;
      ++i;
      ++j;
    }
  }
  return acc;
}

namespace {

std::map<std::string, int> term_counts(const std::string& text) {
  std::map<std::string, int> counts;
  for (const auto& tok : text::tokenize(text)) ++counts[tok];
  return counts;
}

void l2_normalize(SparseVec& v) {
  double norm2 = 0.0;
  for (const auto& [_, w] : v) norm2 += w * w;
  if (norm2 == 0.0) return;  // degenerate doc stays zero
  double inv = 1.0 / std::sqrt(norm2);
  for (auto& [_, w] : v) w *= inv;
}

}  // namespace

TfIdfIndex TfIdfIndex::build(const std::vector<const Article*>& pool) {
  if (pool.empty()) throw data_error("EmptyPool", "context pool is empty");

  TfIdfIndex index;
  std::vector<std::map<std::string, int>> counts;
  counts.reserve(pool.size());
  std::map<std::string, int> df;
  for (const Article* a : pool) {
    counts.push_back(term_counts(a->text));
    for (const auto& [tok, _] : counts.back()) ++df[tok];
  }

  int col = 0;
  index.idf_.reserve(df.size());
  double n_docs = double(pool.size());
  for (const auto& [tok, d] : df) {
    index.vocabulary_.emplace(tok, col++);
    index.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + double(d))) + 1.0);
  }

  for (size_t i = 0; i < pool.size(); ++i) {
    SparseVec v;
    v.reserve(counts[i].size());
    for (const auto& [tok, tf] : counts[i]) {
      int c = index.vocabulary_.at(tok);
      v.emplace_back(c, double(tf) * index.idf_[size_t(c)]);
    }
    l2_normalize(v);
    if (v.empty()) index.degenerate_.push_back(pool[i]->id);
    index.doc_vectors_.emplace(pool[i]->id, std::move(v));
  }
  return index;
}

SparseVec TfIdfIndex::vectorize(const std::string& text) const {
  SparseVec v;
  for (const auto& [tok, tf] : term_counts(text)) {
    auto it = vocabulary_.find(tok);
    if (it == vocabulary_.end()) continue;
    v.emplace_back(it->second, double(tf) * idf_[size_t(it->second)]);
  }
  l2_normalize(v);
  return v;
}

const SparseVec* TfIdfIndex::doc_vector(const std::string& id) const {
  auto it = doc_vectors_.find(id);
  return it == doc_vectors_.end() ? nullptr : &it->second;
}

RetrievalResult retrieve(const Article& target, const CorpusStore& store,
                         const TfIdfIndex& index, size_t k, int64_t delta) {
  SparseVec tv = index.vectorize(target.text);

  std::vector<std::pair<double, std::string>> scored;
  for (const auto& id : store.window(target.day, delta)) {
    const SparseVec* dv = index.doc_vector(id);
    if (!dv)
      throw data_error("IndexMismatch",
                       "pool article '" + id + "' missing from index");
    // Rounding can push unit-vector cosines a ULP past 1.
    double score = std::clamp(sparse_dot(tv, *dv), 0.0, 1.0);
    scored.emplace_back(score, id);
  }
  std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  if (scored.size() > k) scored.resize(k);

  RetrievalResult res;
  res.target_id = target.id;
  for (auto& [score, id] : scored) {
    res.context_ids.push_back(std::move(id));
    res.scores.push_back(score);
  }
  return res;
}

void save_retrievals(const std::vector<RetrievalResult>& results,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error("IoError", "cannot write '" + path + "'");
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["target_id"] = r.target_id;
    j["context_ids"] = r.context_ids;
    j["scores"] = r.scores;
    out << j.dump() << "\n";
  }
}

std::vector<RetrievalResult> load_retrievals(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("IoError", "cannot open '" + path + "'");
  std::vector<RetrievalResult> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      RetrievalResult r;
      r.target_id = j.at("target_id").get<std::string>();
      r.context_ids = j.at("context_ids").get<std::vector<std::string>>();
      r.scores = j.at("scores").get<std::vector<double>>();
      if (r.context_ids.size() != r.scores.size())
        throw data_error("ParseError", "context_ids/scores length mismatch");
      out.push_back(std::move(r));
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw data_error("ParseError",
                       path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace lcv
