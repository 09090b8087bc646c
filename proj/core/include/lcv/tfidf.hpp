#ifndef LCV_TFIDF_HPP
#define LCV_TFIDF_HPP

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "lcv/corpus.hpp"

namespace lcv {

// Sparse unit vector: sorted (column, weight) pairs.
using SparseVec = std::vector<std::pair<int, double>>;

double sparse_dot(const SparseVec& a, const SparseVec& b);

// TF-IDF over the context pool: raw term counts, idf = ln((1+N)/(1+df)) + 1,
// L2-normalized document vectors. A document with no in-vocabulary tokens
// maps to the zero vector.
class TfIdfIndex {
 public:
  static TfIdfIndex build(const std::vector<const Article*>& pool);

  // Vectorizes arbitrary text with the pool's idf statistics
  // (out-of-vocabulary tokens are dropped).
  SparseVec vectorize(const std::string& text) const;

  const SparseVec* doc_vector(const std::string& id) const;
  size_t vocabulary_size() const { return vocabulary_.size(); }
  size_t doc_count() const { return doc_vectors_.size(); }

  // Ids of pool documents that vectorized to zero (no usable tokens).
  const std::vector<std::string>& degenerate_docs() const {
    return degenerate_;
  }

 private:
  std::map<std::string, int> vocabulary_;
  std::vector<double> idf_;
  std::unordered_map<std::string, SparseVec> doc_vectors_;
  std::vector<std::string> degenerate_;
};

struct RetrievalResult {
  std::string target_id;
  std::vector<std::string> context_ids;  // score-descending, ties by id
  std::vector<double> scores;
};

// Scores every pool article inside the half-open window
// [target.day - delta, target.day) and keeps the top K by cosine.
RetrievalResult retrieve(const Article& target, const CorpusStore& store,
                         const TfIdfIndex& index, size_t k, int64_t delta);

void save_retrievals(const std::vector<RetrievalResult>& results,
                     const std::string& path);
std::vector<RetrievalResult> load_retrievals(const std::string& path);

}  // namespace lcv

#endif  // LCV_TFIDF_HPP
