#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "lcv/error.hpp"
#include "lcv/graph.hpp"
#include "lcv/providers.hpp"

using namespace lcv;

namespace {

Article target_art(int label = 0) {
  Article a;
  a.id = "t";
  a.text = "unused";
  a.label = label;
  a.split = Split::Train;
  return a;
}

// Builds a graph from synthetic one-word sentences/contexts with every
// relation set to the sentinel.
HeteroGraph make_graph(size_t n, size_t kp, size_t window,
                       TextEncoder& encoder) {
  SentenceList sentences;
  sentences.article_id = "t";
  for (size_t i = 0; i < n; ++i)
    sentences.sentences.push_back("sentence" + std::to_string(i));
  std::vector<std::string> contexts;
  for (size_t j = 0; j < kp; ++j)
    contexts.push_back("context" + std::to_string(j));
  RelationMap relations;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < kp; ++j)
      relations[{i, j}] = RelationText::sentinel();
  return build_graph(sentences, target_art(), contexts, relations, encoder,
                     window);
}

}  // namespace

TEST_CASE("coherence window w=2 over three sentences") {
  HashEmbedder enc(16);
  auto g = make_graph(3, 0, 2, enc);
  std::set<std::pair<size_t, size_t>> got(g.coh_edges.begin(),
                                          g.coh_edges.end());
  std::set<std::pair<size_t, size_t>> want{{0, 1}, {0, 2}, {1, 2}};
  CHECK(got == want);
}

TEST_CASE("single isolated sentence yields no edges") {
  HashEmbedder enc(16);
  auto g = make_graph(1, 0, 2, enc);
  CHECK(g.sentence_nodes.size() == 1);
  CHECK(g.coh_edges.empty());
  CHECK(g.cross_edges.empty());
}

TEST_CASE("cross edges form the full sentence x context product") {
  HashEmbedder enc(16);
  auto g = make_graph(2, 3, 2, enc);
  CHECK(g.cross_edges.size() == 6);
}

TEST_CASE("edge-count identities hold across sizes") {
  HashEmbedder enc(8);
  for (size_t n = 1; n <= 10; ++n)
    for (size_t kp = 0; kp <= 3; ++kp)
      for (size_t w : {1, 2, 3}) {
        auto g = make_graph(n, kp, w, enc);
        CHECK(g.cross_edges.size() == n * kp);
        // sum over i of min(w, n-1-i)
        size_t expect_coh = 0;
        for (size_t i = 0; i < n; ++i)
          expect_coh += std::min(w, n - 1 - i);
        CHECK(g.coh_edges.size() == expect_coh);
        for (const auto& [i, k] : g.coh_edges) {
          CHECK(i < k);
          CHECK(k - i <= w);
          CHECK(k < n);
        }
      }
}

TEST_CASE("non-sentinel relations are encoded; sentinels stay empty") {
  HashEmbedder enc(16);
  SentenceList sentences{"t", {"sentence0"}};
  RelationMap relations;
  relations[{0, 0}] = RelationText::phrase("missing detail");
  relations[{0, 1}] = RelationText::sentinel();
  auto g = build_graph(sentences, target_art(), {"ctx0", "ctx1"}, relations,
                       enc, 2);
  REQUIRE(g.cross_edges.size() == 2);
  CHECK(!g.cross_edges[0].null_relation);
  CHECK(g.cross_edges[0].relation ==
        enc.encode("missing detail").values);
  CHECK(g.cross_edges[1].null_relation);
  CHECK(g.cross_edges[1].relation.empty());
}

TEST_CASE("a missing relation entry is rejected") {
  HashEmbedder enc(16);
  SentenceList sentences{"t", {"sentence0", "sentence1"}};
  RelationMap relations;
  relations[{0, 0}] = RelationText::sentinel();  // (1, 0) absent
  CHECK_THROWS_AS(
      build_graph(sentences, target_art(), {"ctx0"}, relations, enc, 2),
      Error);
}

TEST_CASE("graph bundles round-trip through the binary format") {
  lcvtest::TempDir dir;
  std::mt19937_64 rng(11);
  std::vector<GraphRecord> records;
  for (int i = 0; i < 5; ++i) {
    GraphRecord rec;
    rec.id = "g" + std::to_string(i);
    rec.split = i % 2 ? Split::Val : Split::Train;
    rec.graph = lcvtest::random_graph(rng, 1 + size_t(i % 3), size_t(i % 4), 12);
    records.push_back(std::move(rec));
  }
  auto path = dir.file("graphs.bin");
  save_graphs(records, path);
  auto loaded = load_graphs(path);
  REQUIRE(loaded.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].id == records[i].id);
    CHECK(loaded[i].split == records[i].split);
    const auto& a = records[i].graph;
    const auto& b = loaded[i].graph;
    CHECK(a.label == b.label);
    CHECK(a.doc_embedding == b.doc_embedding);
    CHECK(a.sentence_nodes == b.sentence_nodes);
    CHECK(a.context_nodes == b.context_nodes);
    CHECK(a.coh_edges == b.coh_edges);
    REQUIRE(a.cross_edges.size() == b.cross_edges.size());
    for (size_t e = 0; e < a.cross_edges.size(); ++e) {
      CHECK(a.cross_edges[e].sentence == b.cross_edges[e].sentence);
      CHECK(a.cross_edges[e].context == b.cross_edges[e].context);
      CHECK(a.cross_edges[e].null_relation == b.cross_edges[e].null_relation);
      CHECK(a.cross_edges[e].relation == b.cross_edges[e].relation);
    }
  }
}

TEST_CASE("loading a non-bundle file fails cleanly") {
  lcvtest::TempDir dir;
  auto path = dir.file("junk.bin");
  std::ofstream(path) << "this is not a graph bundle";
  CHECK_THROWS_AS(load_graphs(path), Error);
  CHECK_THROWS_AS(load_graphs(dir.file("missing.bin")), Error);
}
