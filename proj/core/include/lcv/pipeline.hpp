#ifndef LCV_PIPELINE_HPP
#define LCV_PIPELINE_HPP

#include <string>
#include <vector>

#include "lcv/corpus.hpp"
#include "lcv/graph.hpp"
#include "lcv/providers.hpp"
#include "lcv/tfidf.hpp"

namespace lcv {

// Labeled targets (every split but the context pool), sorted by id.
std::vector<const Article*> labeled_targets(const CorpusStore& store);

// Top-K windowed retrieval for every labeled target.
std::vector<RetrievalResult> retrieve_all(const CorpusStore& store,
                                          const TfIdfIndex& index, size_t k,
                                          int64_t delta);

// Runs the relation provider over every (sentence, context) pair of every
// retrieval result; returns the number of pairs visited. With a
// cache-backed provider this warms (or replays) the cache.
size_t generate_relations(const CorpusStore& store,
                          const std::vector<RetrievalResult>& retrievals,
                          RelationProvider& provider, size_t sentence_budget);

// Full graph construction for every retrieval result.
std::vector<GraphRecord> build_all_graphs(
    const CorpusStore& store, const std::vector<RetrievalResult>& retrievals,
    RelationProvider& provider, TextEncoder& encoder, size_t window,
    size_t sentence_budget);

// Pointer view of one split of a graph bundle.
std::vector<const HeteroGraph*> graphs_of_split(
    const std::vector<GraphRecord>& records, Split split);

}  // namespace lcv

#endif  // LCV_PIPELINE_HPP
