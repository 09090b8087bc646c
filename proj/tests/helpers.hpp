// Shared scaffolding for the test suites: scratch directories, random
// graph construction, a straight-line dense recomputation of the model
// forward pass, and a finite-difference gradient checker. The dense and
// finite-difference code deliberately avoids the library's autodiff and
// graph machinery so it can serve as an independent oracle.
#ifndef LCV_TESTS_HELPERS_HPP
#define LCV_TESTS_HELPERS_HPP

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "lcv/graph.hpp"
#include "lcv/model.hpp"
#include "lcv/pipeline.hpp"
#include "lcv/tensor.hpp"

namespace lcvtest {

// Synthetic corpus -> retrieval -> stub relations -> encoded graphs, the
// offline end-to-end path used by the learnability checks.
inline std::vector<lcv::GraphRecord> build_synth_graphs(int64_t num_events,
                                                        size_t d0) {
  lcv::SynthSpec spec;
  spec.num_events = num_events;
  auto store = lcv::synth_generate(spec);
  auto index =
      lcv::TfIdfIndex::build(store.split_articles(lcv::Split::ContextPool));
  auto retrievals = lcv::retrieve_all(store, index, /*k=*/3, /*delta=*/7);
  lcv::StubRelationProvider stub;
  lcv::HashEmbedder encoder(d0);
  return lcv::build_all_graphs(store, retrievals, stub, encoder, /*window=*/2,
                               /*sentence_budget=*/10);
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<uint64_t> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("lcv_test_" + std::to_string(counter.fetch_add(1)) + "_" +
             std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline double urand(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

inline std::vector<double> random_vec(std::mt19937_64& rng, size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = 2.0 * urand(rng) - 1.0;
  return v;
}

// Labeled graph with random embeddings, the standard coherence-window
// edges, a full sentence x context cross product, and a mix of sentinel
// and embedded relations.
inline lcv::HeteroGraph random_graph(std::mt19937_64& rng, size_t n, size_t kp,
                                     size_t d0, size_t window = 2) {
  lcv::HeteroGraph g;
  for (size_t i = 0; i < n; ++i) g.sentence_nodes.push_back(random_vec(rng, d0));
  for (size_t j = 0; j < kp; ++j) g.context_nodes.push_back(random_vec(rng, d0));
  g.doc_embedding = random_vec(rng, d0);
  for (size_t i = 0; i < n; ++i)
    for (size_t k = i + 1; k < n && k - i <= window; ++k)
      g.coh_edges.emplace_back(i, k);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < kp; ++j) {
      lcv::CrossEdge e;
      e.sentence = i;
      e.context = j;
      e.null_relation = urand(rng) < 0.3;
      if (!e.null_relation) e.relation = random_vec(rng, d0);
      g.cross_edges.push_back(std::move(e));
    }
  g.label = int(rng() % 2);
  return g;
}

using Mat = std::vector<std::vector<double>>;

inline Mat mat_of(const lcv::ad::Tensor& t) {
  size_t rows = t.shape()[0], cols = t.shape()[1];
  Mat m(rows, std::vector<double>(cols));
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) m[i][j] = t.value()[i * cols + j];
  return m;
}

inline std::vector<double> matvec(const Mat& m, const std::vector<double>& v) {
  std::vector<double> out(m.size(), 0.0);
  for (size_t i = 0; i < m.size(); ++i)
    for (size_t j = 0; j < v.size(); ++j) out[i] += m[i][j] * v[j];
  return out;
}

inline double vdot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

inline std::vector<double> dense_softmax(const std::vector<double>& z) {
  double mx = *std::max_element(z.begin(), z.end());
  std::vector<double> out(z.size());
  double sum = 0.0;
  for (size_t i = 0; i < z.size(); ++i) {
    out[i] = std::exp(z[i] - mx);
    sum += out[i];
  }
  for (double& o : out) o /= sum;
  return out;
}

// Eval-mode logits computed with explicit loops over plain vectors.
inline std::array<double, 2> dense_forward(const lcv::HeteroGraph& g,
                                           const lcv::ModelParams& P) {
  const lcv::ModelConfig& cfg = P.config;
  size_t n = g.sentence_nodes.size();
  bool with_context = cfg.ablation != lcv::Ablation::NoContext;
  size_t kp = with_context ? g.context_nodes.size() : 0;
  size_t total = n + kp;

  Mat Pi_s = mat_of(P.Pi_s), Pi_c = mat_of(P.Pi_c), Pi_g = mat_of(P.Pi_g),
      Pi_r = mat_of(P.Pi_r), W_coh_score = mat_of(P.W_coh_score),
      W_o = mat_of(P.W_o);

  std::vector<std::vector<double>> x(total);
  for (size_t i = 0; i < n; ++i) x[i] = matvec(Pi_s, g.sentence_nodes[i]);
  for (size_t j = 0; j < kp; ++j) x[n + j] = matvec(Pi_c, g.context_nodes[j]);
  std::vector<double> g0 = matvec(Pi_g, g.doc_embedding);

  struct Nb {
    size_t node;
    int kind;  // 0 coherence, 1 sentence->context, 2 context->sentence
    int rel;
  };
  std::vector<std::vector<double>> rels;
  std::vector<std::vector<Nb>> nbrs(total);
  for (const auto& [i, k] : g.coh_edges) {
    nbrs[i].push_back({k, 0, -1});
    nbrs[k].push_back({i, 0, -1});
  }
  if (with_context) {
    for (const auto& e : g.cross_edges) {
      std::vector<double> r;
      if (cfg.ablation == lcv::Ablation::StructuralEdges)
        r = P.structural_edge.value();
      else if (e.null_relation)
        r = P.r_null.value();
      else
        r = matvec(Pi_r, e.relation);
      int rid = int(rels.size());
      rels.push_back(std::move(r));
      nbrs[e.sentence].push_back({n + e.context, 1, rid});
      nbrs[n + e.context].push_back({e.sentence, 2, rid});
    }
  }

  for (size_t l = 0; l < cfg.layers; ++l) {
    const lcv::LayerParams& lp = P.layers[l];
    Mat Q_sc = mat_of(lp.Q_sc), T_sc = mat_of(lp.T_sc), Q_cs = mat_of(lp.Q_cs),
        T_cs = mat_of(lp.T_cs), W_coh = mat_of(lp.W_coh), W_sc = mat_of(lp.W_sc),
        W_cs = mat_of(lp.W_cs);
    std::vector<std::vector<double>> next(total);
    for (size_t a = 0; a < total; ++a) {
      if (nbrs[a].empty()) {
        next[a] = x[a];
        continue;
      }
      std::vector<double> psi;
      for (const auto& nb : nbrs[a]) {
        if (nb.kind == 0) {
          std::vector<double> diff(x[a].size());
          for (size_t i = 0; i < diff.size(); ++i)
            diff[i] = x[a][i] - x[nb.node][i];
          std::vector<double> t = matvec(W_coh_score, diff);
          psi.push_back(-vdot(t, t));
        } else {
          const Mat& Q = nb.kind == 1 ? Q_sc : Q_cs;
          const Mat& T = nb.kind == 1 ? T_sc : T_cs;
          const auto& r = rels[size_t(nb.rel)];
          psi.push_back(vdot(x[a], matvec(Q, x[nb.node])) +
                        vdot(r, matvec(T, r)));
        }
      }
      std::vector<double> pi = dense_softmax(psi);
      std::vector<double> acc(x[a].size(), 0.0);
      for (size_t t = 0; t < nbrs[a].size(); ++t) {
        const auto& nb = nbrs[a][t];
        const Mat& W = nb.kind == 0 ? W_coh : nb.kind == 1 ? W_sc : W_cs;
        std::vector<double> msg = matvec(W, x[nb.node]);
        for (size_t i = 0; i < acc.size(); ++i) acc[i] += pi[t] * msg[i];
      }
      for (double& v : acc) v = v > 0.0 ? v : 0.0;
      next[a] = std::move(acc);
    }
    x = std::move(next);
  }

  std::vector<std::vector<double>> refined(n);
  if (cfg.ablation == lcv::Ablation::NoGlobalSummary) {
    for (size_t i = 0; i < n; ++i) refined[i] = x[i];
  } else {
    std::vector<double> m(cfg.d, 0.0);
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < cfg.d; ++j) m[j] += x[i][j];
    for (size_t j = 0; j < cfg.d; ++j)
      m[j] = (m[j] + cfg.lambda * g0[j]) / (double(n) + cfg.lambda);
    std::vector<double> scores(n);
    std::vector<double> a_vec = P.attn_a.value();
    for (size_t i = 0; i < n; ++i) scores[i] = vdot(a_vec, x[i]);
    std::vector<double> eta = dense_softmax(scores);
    for (size_t i = 0; i < n; ++i) {
      refined[i].resize(cfg.d);
      for (size_t j = 0; j < cfg.d; ++j)
        refined[i][j] = x[i][j] + eta[i] * m[j];
    }
  }

  std::vector<double> b_vec = P.pool_b.value();
  std::vector<double> pool_scores(n);
  for (size_t i = 0; i < n; ++i) pool_scores[i] = vdot(b_vec, refined[i]);
  std::vector<double> beta = dense_softmax(pool_scores);
  std::vector<double> p(cfg.d, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < cfg.d; ++j) p[j] += beta[i] * refined[i][j];

  std::vector<double> logits = matvec(W_o, p);
  logits[0] += P.b_o.value()[0];
  logits[1] += P.b_o.value()[1];
  return {logits[0], logits[1]};
}

inline double eval_loss(const lcv::HeteroGraph& g,
                        const lcv::ModelParams& params) {
  std::mt19937_64 rng(0);
  return lcv::loss(lcv::forward(g, params, /*train_mode=*/false, rng),
                   *g.label)
      .item();
}

// Worst relative disagreement between the analytic gradient and central
// finite differences across every element of every named parameter.
inline double max_grad_error(const lcv::HeteroGraph& g,
                             lcv::ModelParams& params, double eps = 1e-5) {
  params.zero_grad();
  {
    std::mt19937_64 rng(0);
    lcv::ad::Tensor l =
        lcv::loss(lcv::forward(g, params, false, rng), *g.label);
    lcv::ad::backward(l);
  }
  double worst = 0.0;
  for (auto& [name, t] : params.named()) {
    const auto& grad = t.grad();
    auto& values = t.value_mut();
    for (size_t i = 0; i < values.size(); ++i) {
      double analytic = grad.empty() ? 0.0 : grad[i];
      double orig = values[i];
      values[i] = orig + eps;
      double fp = eval_loss(g, params);
      values[i] = orig - eps;
      double fm = eval_loss(g, params);
      values[i] = orig;
      double fd = (fp - fm) / (2.0 * eps);
      double err = std::abs(analytic - fd) /
                   std::max({1e-2, std::abs(analytic), std::abs(fd)});
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace lcvtest

#endif  // LCV_TESTS_HELPERS_HPP
