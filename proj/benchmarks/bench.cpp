// Hot paths: text hashing, retrieval over the synthetic pool, and the
// model forward/backward on a mid-sized graph.
#include <random>

#include <benchmark/benchmark.h>

#include "lcv/corpus.hpp"
#include "lcv/model.hpp"
#include "lcv/pipeline.hpp"
#include "lcv/providers.hpp"
#include "lcv/tensor.hpp"
#include "lcv/tfidf.hpp"
#include "lcv/trainer.hpp"

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * double(rng() >> 11) * 0x1.0p-53 - 1.0;
  return v;
}

lcv::HeteroGraph make_graph(size_t n, size_t kp, size_t d0) {
  std::mt19937_64 rng(99);
  lcv::HeteroGraph g;
  for (size_t i = 0; i < n; ++i) g.sentence_nodes.push_back(random_vec(rng, d0));
  for (size_t j = 0; j < kp; ++j) g.context_nodes.push_back(random_vec(rng, d0));
  g.doc_embedding = random_vec(rng, d0);
  for (size_t i = 0; i < n; ++i)
    for (size_t k = i + 1; k < n && k - i <= 2; ++k)
      g.coh_edges.emplace_back(i, k);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < kp; ++j) {
      lcv::CrossEdge e;
      e.sentence = i;
      e.context = j;
      e.null_relation = (i + j) % 3 == 0;
      if (!e.null_relation) e.relation = random_vec(rng, d0);
      g.cross_edges.push_back(std::move(e));
    }
  g.label = 1;
  return g;
}

void BM_HashEmbed(benchmark::State& state) {
  lcv::HashEmbedder enc(768);
  std::string text =
      "officials confirmed the committee reviewed seventeen filings before "
      "the deadline and published a revised schedule for public comment";
  for (auto _ : state) benchmark::DoNotOptimize(enc.encode(text));
}
BENCHMARK(BM_HashEmbed);

void BM_Retrieve(benchmark::State& state) {
  lcv::SynthSpec spec;
  spec.num_events = 100;
  auto store = lcv::synth_generate(spec);
  auto index =
      lcv::TfIdfIndex::build(store.split_articles(lcv::Split::ContextPool));
  for (auto _ : state)
    benchmark::DoNotOptimize(lcv::retrieve_all(store, index, 3, 7));
}
BENCHMARK(BM_Retrieve);

void BM_Forward(benchmark::State& state) {
  lcv::ModelConfig cfg;
  cfg.d0 = 128;
  cfg.d = 64;
  auto params = lcv::init_params(cfg, 7);
  auto g = make_graph(size_t(state.range(0)), 3, cfg.d0);
  std::mt19937_64 rng(0);
  for (auto _ : state)
    benchmark::DoNotOptimize(lcv::forward(g, params, false, rng).value());
}
BENCHMARK(BM_Forward)->Arg(4)->Arg(10);

void BM_ForwardBackward(benchmark::State& state) {
  lcv::ModelConfig cfg;
  cfg.d0 = 128;
  cfg.d = 64;
  auto params = lcv::init_params(cfg, 7);
  auto g = make_graph(size_t(state.range(0)), 3, cfg.d0);
  std::mt19937_64 rng(0);
  for (auto _ : state) {
    params.zero_grad();
    auto l = lcv::loss(lcv::forward(g, params, true, rng), *g.label);
    lcv::ad::backward(l);
    benchmark::DoNotOptimize(l.item());
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(4)->Arg(10);

}  // namespace

BENCHMARK_MAIN();
