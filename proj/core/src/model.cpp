#include "lcv/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "lcv/error.hpp"

namespace lcv {

using ad::Tensor;

std::string ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoContext: return "no_context";
    case Ablation::StructuralEdges: return "structural_edges";
    case Ablation::NoGlobalSummary: return "no_global_summary";
  }
  return "?";
}

std::optional<Ablation> parse_ablation(const std::string& name) {
  if (name == "full") return Ablation::Full;
  if (name == "no_context") return Ablation::NoContext;
  if (name == "structural_edges") return Ablation::StructuralEdges;
  if (name == "no_global_summary") return Ablation::NoGlobalSummary;
  return std::nullopt;
}

namespace {

double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

// Box-Muller; kept stdlib-independent so seeded init is byte-stable.
double normal01(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 < 1e-300) u1 = 1e-300;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Tensor glorot(std::mt19937_64& rng, size_t rows, size_t cols) {
  double a = std::sqrt(6.0 / double(rows + cols));
  std::vector<double> data(rows * cols);
  for (double& x : data) x = (2.0 * uniform01(rng) - 1.0) * a;
  return Tensor::leaf({rows, cols}, std::move(data), true);
}

Tensor gaussian_vec(std::mt19937_64& rng, size_t n, double stddev) {
  std::vector<double> data(n);
  for (double& x : data) x = normal01(rng) * stddev;
  return Tensor::leaf({n}, std::move(data), true);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> ModelParams::named() const {
  std::vector<std::pair<std::string, Tensor>> out;
  out.emplace_back("Pi_s", Pi_s);
  out.emplace_back("Pi_c", Pi_c);
  out.emplace_back("Pi_g", Pi_g);
  out.emplace_back("Pi_r", Pi_r);
  out.emplace_back("r_null", r_null);
  out.emplace_back("W_coh", W_coh_score);
  for (size_t l = 0; l < layers.size(); ++l) {
    std::string prefix = "layer" + std::to_string(l) + ".";
    out.emplace_back(prefix + "Q_s2c", layers[l].Q_sc);
    out.emplace_back(prefix + "T_s2c", layers[l].T_sc);
    out.emplace_back(prefix + "Q_c2s", layers[l].Q_cs);
    out.emplace_back(prefix + "T_c2s", layers[l].T_cs);
    out.emplace_back(prefix + "W_coh", layers[l].W_coh);
    out.emplace_back(prefix + "W_s2c", layers[l].W_sc);
    out.emplace_back(prefix + "W_c2s", layers[l].W_cs);
  }
  out.emplace_back("attn_a", attn_a);
  out.emplace_back("pool_b", pool_b);
  out.emplace_back("W_o", W_o);
  out.emplace_back("b_o", b_o);
  if (structural_edge.defined())
    out.emplace_back("structural_edge", structural_edge);
  return out;
}

void ModelParams::zero_grad() {
  for (auto& [_, t] : named()) t.zero_grad();
}

ModelParams init_params(const ModelConfig& config, uint64_t seed) {
  if (config.d < 1 || config.layers < 1 || config.lambda < 0 ||
      config.dropout_p < 0 || config.dropout_p >= 1)
    throw data_error("InvalidSpec", "invalid model config");
  std::mt19937_64 rng(seed);
  size_t d0 = config.d0, d = config.d;
  double vec_std = 1.0 / std::sqrt(double(d));

  ModelParams p;
  p.config = config;
  p.Pi_s = glorot(rng, d, d0);
  p.Pi_c = glorot(rng, d, d0);
  p.Pi_g = glorot(rng, d, d0);
  p.Pi_r = glorot(rng, d, d0);
  p.r_null = gaussian_vec(rng, d, vec_std);
  p.W_coh_score = glorot(rng, d, d);
  for (size_t l = 0; l < config.layers; ++l) {
    LayerParams lp;
    lp.Q_sc = glorot(rng, d, d);
    lp.T_sc = glorot(rng, d, d);
    lp.Q_cs = glorot(rng, d, d);
    lp.T_cs = glorot(rng, d, d);
    lp.W_coh = glorot(rng, d, d);
    lp.W_sc = glorot(rng, d, d);
    lp.W_cs = glorot(rng, d, d);
    p.layers.push_back(std::move(lp));
  }
  p.attn_a = gaussian_vec(rng, d, vec_std);
  p.pool_b = gaussian_vec(rng, d, vec_std);
  p.W_o = glorot(rng, 2, d);
  p.b_o = Tensor::leaf({2}, {0.0, 0.0}, true);
  if (config.ablation == Ablation::StructuralEdges)
    p.structural_edge = gaussian_vec(rng, d, vec_std);
  return p;
}

ModelParams clone_params(const ModelParams& params) {
  ModelParams out = init_params(params.config, 0);
  auto src = params.named();
  auto dst = out.named();
  for (size_t i = 0; i < src.size(); ++i)
    dst[i].second.value_mut() = src[i].second.value();
  return out;
}

namespace {

enum EdgeKind { kCoh = 0, kS2C = 1, kC2S = 2 };

struct Neighbor {
  size_t node;
  EdgeKind kind;
  int relation = -1;  // index into the relation tensor list for cross edges
};

}  // namespace

ad::Tensor forward(const HeteroGraph& graph, const ModelParams& params,
                   bool train_mode, std::mt19937_64& rng) {
  const ModelConfig& cfg = params.config;
  if (graph.d0() != cfg.d0)
    throw data_error("ConfigMismatch",
                     "graph embedding dimension " +
                         std::to_string(graph.d0()) + " != model d0 " +
                         std::to_string(cfg.d0));
  size_t n = graph.sentence_nodes.size();
  if (n == 0) throw data_error("ConfigMismatch", "graph has no sentence nodes");
  bool with_context = cfg.ablation != Ablation::NoContext;
  size_t kp = with_context ? graph.context_nodes.size() : 0;
  size_t total = n + kp;

  auto raw = [&](const std::vector<double>& v) {
    return Tensor::leaf({cfg.d0}, v, false);
  };

  // Input projections; dropout on the projected node features.
  std::vector<Tensor> x(total);
  for (size_t i = 0; i < n; ++i)
    x[i] = ad::dropout(ad::matmul(params.Pi_s, raw(graph.sentence_nodes[i])),
                       cfg.dropout_p, train_mode, rng);
  for (size_t j = 0; j < kp; ++j)
    x[n + j] =
        ad::dropout(ad::matmul(params.Pi_c, raw(graph.context_nodes[j])),
                    cfg.dropout_p, train_mode, rng);
  Tensor g0 = ad::matmul(params.Pi_g, raw(graph.doc_embedding));

  // Relation embeddings, shared by both directions of each cross edge.
  std::vector<Tensor> relations;
  std::vector<Neighbor> empty;
  std::vector<std::vector<Neighbor>> nbrs(total);
  for (const auto& [i, k] : graph.coh_edges) {
    nbrs[i].push_back({k, kCoh, -1});
    nbrs[k].push_back({i, kCoh, -1});
  }
  if (with_context) {
    for (const auto& e : graph.cross_edges) {
      Tensor r;
      if (cfg.ablation == Ablation::StructuralEdges)
        r = params.structural_edge;
      else if (e.null_relation)
        r = params.r_null;
      else
        r = ad::matmul(params.Pi_r, raw(e.relation));
      int rid = int(relations.size());
      relations.push_back(std::move(r));
      nbrs[e.sentence].push_back({n + e.context, kS2C, rid});
      nbrs[n + e.context].push_back({e.sentence, kC2S, rid});
    }
  }

  // L layers of omission-aware propagation: one softmax per
  // node over all its neighbors regardless of edge type.
  for (size_t l = 0; l < cfg.layers; ++l) {
    const LayerParams& lp = params.layers[l];
    std::vector<Tensor> next(total);
    for (size_t a = 0; a < total; ++a) {
      if (nbrs[a].empty()) {
        next[a] = x[a];  // isolated-node passthrough
        continue;
      }
      std::vector<Tensor> psis;
      psis.reserve(nbrs[a].size());
      for (const auto& nb : nbrs[a]) {
        if (nb.kind == kCoh) {
          // psi = -||W_coh (x_a - x_b)||^2 = log kappa_coh
          psis.push_back(ad::scalar_mul(
              -1.0, ad::squared_norm(ad::matmul(
                        params.W_coh_score, ad::sub(x[a], x[nb.node])))));
        } else {
          const Tensor& Q = nb.kind == kS2C ? lp.Q_sc : lp.Q_cs;
          const Tensor& T = nb.kind == kS2C ? lp.T_sc : lp.T_cs;
          const Tensor& r = relations[size_t(nb.relation)];
          psis.push_back(ad::add(ad::dot(x[a], ad::matmul(Q, x[nb.node])),
                                 ad::dot(r, ad::matmul(T, r))));
        }
      }
      Tensor pi = ad::softmax(ad::concat(psis));
      Tensor acc;
      for (size_t t = 0; t < nbrs[a].size(); ++t) {
        const auto& nb = nbrs[a][t];
        const Tensor& W = nb.kind == kCoh   ? lp.W_coh
                          : nb.kind == kS2C ? lp.W_sc
                                            : lp.W_cs;
        Tensor msg = ad::mul(ad::pick(pi, t), ad::matmul(W, x[nb.node]));
        acc = acc.defined() ? ad::add(acc, msg) : msg;
      }
      next[a] = ad::relu(acc);
    }
    x = std::move(next);
  }

  // Global summary m = (sum_i h_i + lambda g0) / (n + lambda) and
  // attention-weighted refinement.
  std::vector<Tensor> refined(n);
  if (cfg.ablation == Ablation::NoGlobalSummary) {
    for (size_t i = 0; i < n; ++i) refined[i] = x[i];
  } else {
    Tensor sum = x[0];
    for (size_t i = 1; i < n; ++i) sum = ad::add(sum, x[i]);
    Tensor m = ad::scalar_mul(1.0 / (double(n) + cfg.lambda),
                              ad::add(sum, ad::scalar_mul(cfg.lambda, g0)));
    std::vector<Tensor> scores(n);
    for (size_t i = 0; i < n; ++i) scores[i] = ad::dot(params.attn_a, x[i]);
    Tensor eta = ad::softmax(ad::concat(scores));
    for (size_t i = 0; i < n; ++i)
      refined[i] = ad::add(x[i], ad::mul(ad::pick(eta, i), m));
  }

  // Attention pooling and the linear head.
  std::vector<Tensor> pool_scores(n);
  for (size_t i = 0; i < n; ++i)
    pool_scores[i] = ad::dot(params.pool_b, refined[i]);
  Tensor beta = ad::softmax(ad::concat(pool_scores));
  Tensor p;
  for (size_t i = 0; i < n; ++i) {
    Tensor term = ad::mul(ad::pick(beta, i), refined[i]);
    p = p.defined() ? ad::add(p, term) : term;
  }
  p = ad::dropout(p, cfg.dropout_p, train_mode, rng);
  return ad::add(ad::matmul(params.W_o, p), params.b_o);
}

ad::Tensor loss(const ad::Tensor& logits, int label) {
  if (label != 0 && label != 1)
    throw data_error("ConfigMismatch", "label must be 0 or 1");
  return ad::cross_entropy_with_softmax(logits, label);
}

std::vector<double> predict_proba(const HeteroGraph& graph,
                                  const ModelParams& params) {
  std::mt19937_64 rng(0);
  Tensor logits = forward(graph, params, /*train_mode=*/false, rng);
  const auto& v = logits.value();
  double mx = std::max(v[0], v[1]);
  double e0 = std::exp(v[0] - mx), e1 = std::exp(v[1] - mx);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

namespace {

constexpr uint32_t kCkptMagic = 0x4C435643;  // "LCVC"
constexpr uint32_t kCkptVersion = 1;

void write_u64(std::ostream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_u32(std::ostream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
void write_f64(std::ostream& out, double v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
uint64_t read_u64(std::istream& in) {
  uint64_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
uint32_t read_u32(std::istream& in) {
  uint32_t v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}
double read_f64(std::istream& in) {
  double v;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("IoError", "cannot write '" + path + "'");
  write_u32(out, kCkptMagic);
  write_u32(out, kCkptVersion);
  const auto& c = params.config;
  write_u64(out, c.d0);
  write_u64(out, c.d);
  write_u64(out, c.layers);
  write_u64(out, c.window);
  write_f64(out, c.lambda);
  write_f64(out, c.dropout_p);
  write_u32(out, uint32_t(c.ablation));
  auto named = params.named();
  write_u64(out, named.size());
  for (const auto& [name, t] : named) {
    write_u64(out, name.size());
    out.write(name.data(), std::streamsize(name.size()));
    write_u64(out, t.shape().size());
    for (size_t dim : t.shape()) write_u64(out, dim);
    out.write(reinterpret_cast<const char*>(t.value().data()),
              std::streamsize(t.size() * sizeof(double)));
  }
}

ModelParams load_checkpoint(const std::string& path,
                            const ModelConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("IoError", "cannot open '" + path + "'");
  if (read_u32(in) != kCkptMagic)
    throw data_error("ParseError", "'" + path + "' is not a checkpoint");
  if (read_u32(in) != kCkptVersion)
    throw data_error("VersionMismatch",
                     "unsupported checkpoint version in '" + path + "'");
  ModelConfig c;
  c.d0 = read_u64(in);
  c.d = read_u64(in);
  c.layers = read_u64(in);
  c.window = read_u64(in);
  c.lambda = read_f64(in);
  c.dropout_p = read_f64(in);
  c.ablation = Ablation(read_u32(in));
  if (expected &&
      (expected->d0 != c.d0 || expected->d != c.d ||
       expected->layers != c.layers || expected->ablation != c.ablation))
    throw data_error("VersionMismatch",
                     "checkpoint config does not match the expected config");

  ModelParams params = init_params(c, /*seed=*/0);
  auto named = params.named();
  uint64_t count = read_u64(in);
  if (count != named.size())
    throw data_error("VersionMismatch", "checkpoint tensor count mismatch");
  for (auto& [name, t] : named) {
    std::string stored(read_u64(in), '\0');
    in.read(stored.data(), std::streamsize(stored.size()));
    if (stored != name)
      throw data_error("VersionMismatch",
                       "unexpected tensor '" + stored + "' in checkpoint");
    ad::Shape shape(read_u64(in));
    for (auto& dim : shape) dim = read_u64(in);
    if (shape != t.shape())
      throw data_error("VersionMismatch",
                       "shape mismatch for tensor '" + name + "'");
    in.read(reinterpret_cast<char*>(t.value_mut().data()),
            std::streamsize(t.size() * sizeof(double)));
  }
  if (!in) throw data_error("ParseError", "truncated checkpoint '" + path + "'");
  return params;
}

}  // namespace lcv
