#ifndef LCV_MODEL_HPP
#define LCV_MODEL_HPP

#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "lcv/graph.hpp"
#include "lcv/tensor.hpp"

namespace lcv {

enum class Ablation { Full, NoContext, StructuralEdges, NoGlobalSummary };

std::string ablation_name(Ablation a);
std::optional<Ablation> parse_ablation(const std::string& name);

struct ModelConfig {
  size_t d0 = 768;       // text encoder output dimension
  size_t d = 256;        // graph hidden size
  size_t layers = 2;     // propagation depth L
  size_t window = 2;     // coherence window w
  double lambda = 1.0;   // global summary mixing coefficient
  double dropout_p = 0.1;
  Ablation ablation = Ablation::Full;
};

// Per-layer relation-specific forms; Q/T score cross edges, W transforms
// messages for each edge type.
struct LayerParams {
  ad::Tensor Q_sc, T_sc, Q_cs, T_cs;  // d x d
  ad::Tensor W_coh, W_sc, W_cs;       // d x d
};

struct ModelParams {
  ModelConfig config;
  ad::Tensor Pi_s, Pi_c, Pi_g, Pi_r;  // d0 -> d projections
  ad::Tensor r_null;                  // d
  ad::Tensor W_coh_score;             // d x d, shared across layers
  std::vector<LayerParams> layers;
  ad::Tensor attn_a, pool_b;          // d
  ad::Tensor W_o;                     // 2 x d
  ad::Tensor b_o;                     // 2
  ad::Tensor structural_edge;         // d; allocated for StructuralEdges only

  // Stable (name, tensor) view covering every learnable tensor; the
  // order defines checkpoint layout and optimizer iteration.
  std::vector<std::pair<std::string, ad::Tensor>> named() const;
  void zero_grad();
};

// Glorot-uniform matrices, N(0, 1/d) vectors, zero output bias.
ModelParams init_params(const ModelConfig& config, uint64_t seed);

// Deep copy: fresh leaf tensors with identical values.
ModelParams clone_params(const ModelParams& params);

// Full propagation + pooled classifier forward; returns the 2-vector of
// logits. `rng` drives dropout and is only consumed in train mode.
ad::Tensor forward(const HeteroGraph& graph, const ModelParams& params,
                   bool train_mode, std::mt19937_64& rng);

ad::Tensor loss(const ad::Tensor& logits, int label);

// Eval-mode class probabilities {p_real, p_misinfo}.
std::vector<double> predict_proba(const HeteroGraph& graph,
                                  const ModelParams& params);

void save_checkpoint(const ModelParams& params, const std::string& path);
// `expected`, when given, must agree with the stored config
// (VersionMismatch otherwise).
ModelParams load_checkpoint(const std::string& path,
                            const ModelConfig* expected = nullptr);

}  // namespace lcv

#endif  // LCV_MODEL_HPP
