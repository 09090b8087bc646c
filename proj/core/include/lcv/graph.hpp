#ifndef LCV_GRAPH_HPP
#define LCV_GRAPH_HPP

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lcv/corpus.hpp"
#include "lcv/providers.hpp"
#include "lcv/tfidf.hpp"

namespace lcv {

struct CrossEdge {
  size_t sentence;                // index into sentence_nodes
  size_t context;                 // index into context_nodes
  bool null_relation;             // sentinel; resolved to r_null in the model
  std::vector<double> relation;   // raw d0 embedding, empty iff null_relation
};

// Raw-embedding heterograph: one node per target sentence and per
// retrieved context article, coherence edges within the sentence window,
// and a full cross product of relation-carrying sentence-article edges.
struct HeteroGraph {
  std::vector<std::vector<double>> sentence_nodes;  // d0 each
  std::vector<std::vector<double>> context_nodes;   // d0 each
  std::vector<double> doc_embedding;                // d0
  std::vector<std::pair<size_t, size_t>> coh_edges;  // undirected (i, k), i < k
  std::vector<CrossEdge> cross_edges;               // n x K' entries
  std::optional<int> label;

  size_t d0() const { return doc_embedding.size(); }
};

using RelationMap = std::map<std::pair<size_t, size_t>, RelationText>;

// Encodes sentences, truncated context texts, the full target text, and
// every non-sentinel relation through the shared encoder. `relations`
// must cover the full sentence x context cross product.
HeteroGraph build_graph(const SentenceList& sentences, const Article& target,
                        const std::vector<std::string>& context_texts,
                        const RelationMap& relations, TextEncoder& encoder,
                        size_t window);

struct GraphRecord {
  std::string id;
  Split split = Split::Train;
  HeteroGraph graph;
};

// Versioned binary bundle so training can run without re-encoding.
void save_graphs(const std::vector<GraphRecord>& records,
                 const std::string& path);
std::vector<GraphRecord> load_graphs(const std::string& path);

}  // namespace lcv

#endif  // LCV_GRAPH_HPP
