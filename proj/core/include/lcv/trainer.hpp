#ifndef LCV_TRAINER_HPP
#define LCV_TRAINER_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "lcv/metrics.hpp"
#include "lcv/model.hpp"

namespace lcv {

struct TrainConfig {
  double lr = 2e-5;
  size_t batch_size = 16;
  size_t max_epochs = 30;
  size_t patience = 7;
  std::vector<uint64_t> seeds = {13, 42, 2024};
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Independent deterministic streams derived from one run seed: parameter
// init, epoch shuffling, and dropout.
struct SeedStreams {
  uint64_t init_seed;
  std::mt19937_64 shuffle;
  std::mt19937_64 dropout;
};
SeedStreams set_seed(uint64_t seed);

// Adam with bias correction over the named parameter list.
class AdamOptimizer {
 public:
  AdamOptimizer(ModelParams& params, const TrainConfig& config);
  void step();
  size_t steps_taken() const { return step_; }

 private:
  ModelParams& params_;
  const TrainConfig& config_;
  std::vector<std::vector<double>> m_, v_;
  size_t step_ = 0;
};

struct EpochStats {
  size_t epoch = 0;
  double train_loss = 0;
  MetricReport val;
};

struct TrainResult {
  ModelParams best_params;
  MetricReport best_val;
  size_t best_epoch = 0;
  std::vector<EpochStats> history;
};

// One run: shuffled mini-batches, Adam updates on the mean batch loss,
// per-epoch validation macro-F1, strictly-greater checkpoint selection,
// early stop `patience` epochs after the last improvement.
TrainResult train(const std::vector<const HeteroGraph*>& train_graphs,
                  const std::vector<const HeteroGraph*>& val_graphs,
                  const ModelConfig& model_config,
                  const TrainConfig& train_config, uint64_t seed);

// Eval-mode argmax predictions plus metrics against graph labels.
MetricReport evaluate(const std::vector<const HeteroGraph*>& graphs,
                      const ModelParams& params);

}  // namespace lcv

#endif  // LCV_TRAINER_HPP
