#include "lcv/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "lcv/error.hpp"

namespace lcv {

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

SeedStreams set_seed(uint64_t seed) {
  return SeedStreams{splitmix64(seed),
                     std::mt19937_64(splitmix64(seed ^ 0x5368756666ULL)),
                     std::mt19937_64(splitmix64(seed ^ 0x44726F70ULL))};
}

AdamOptimizer::AdamOptimizer(ModelParams& params, const TrainConfig& config)
    : params_(params), config_(config) {
  for (const auto& [_, t] : params_.named()) {
    m_.emplace_back(t.size(), 0.0);
    v_.emplace_back(t.size(), 0.0);
  }
}

void AdamOptimizer::step() {
  ++step_;
  double bc1 = 1.0 - std::pow(config_.beta1, double(step_));
  double bc2 = 1.0 - std::pow(config_.beta2, double(step_));
  auto named = params_.named();
  for (size_t p = 0; p < named.size(); ++p) {
    auto& t = named[p].second;
    const auto& g = t.grad();
    auto& values = t.value_mut();
    for (size_t i = 0; i < values.size(); ++i) {
      // A parameter untouched by the batch has no allocated grad; treat as 0.
      double gi = g.empty() ? 0.0 : g[i];
      m_[p][i] = config_.beta1 * m_[p][i] + (1.0 - config_.beta1) * gi;
      v_[p][i] = config_.beta2 * v_[p][i] + (1.0 - config_.beta2) * gi * gi;
      double mhat = m_[p][i] / bc1;
      double vhat = v_[p][i] / bc2;
      values[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

MetricReport evaluate(const std::vector<const HeteroGraph*>& graphs,
                      const ModelParams& params) {
  std::vector<int> preds, labels;
  for (const HeteroGraph* g : graphs) {
    if (!g->label) throw data_error("EmptySplit", "unlabeled graph in eval");
    auto proba = predict_proba(*g, params);
    preds.push_back(proba[1] > proba[0] ? 1 : 0);
    labels.push_back(*g->label);
  }
  return compute_metrics(preds, labels);
}

TrainResult train(const std::vector<const HeteroGraph*>& train_graphs,
                  const std::vector<const HeteroGraph*>& val_graphs,
                  const ModelConfig& model_config,
                  const TrainConfig& train_config, uint64_t seed) {
  if (train_graphs.empty() || val_graphs.empty())
    throw data_error("EmptySplit", "train and val splits must be non-empty");
  if (train_config.lr < 0 || train_config.batch_size < 1 ||
      train_config.patience > train_config.max_epochs)
    throw data_error("InvalidSpec", "invalid train config");

  SeedStreams streams = set_seed(seed);
  ModelParams params = init_params(model_config, streams.init_seed);
  AdamOptimizer optimizer(params, train_config);

  TrainResult result;
  result.best_params = clone_params(params);
  double best_f1 = -1.0;
  size_t last_improvement = 0;

  std::vector<size_t> order(train_graphs.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[size_t(streams.shuffle() % i)]);

    double epoch_loss = 0.0;
    for (size_t start = 0; start < order.size();
         start += train_config.batch_size) {
      size_t end = std::min(start + train_config.batch_size, order.size());
      params.zero_grad();
      ad::Tensor batch_loss;
      for (size_t b = start; b < end; ++b) {
        const HeteroGraph* g = train_graphs[order[b]];
        if (!g->label)
          throw data_error("EmptySplit", "unlabeled graph in train split");
        ad::Tensor logits =
            forward(*g, params, /*train_mode=*/true, streams.dropout);
        ad::Tensor l = loss(logits, *g->label);
        batch_loss = batch_loss.defined() ? ad::add(batch_loss, l) : l;
      }
      batch_loss = ad::scalar_mul(1.0 / double(end - start), batch_loss);
      ad::backward(batch_loss);
      optimizer.step();
      epoch_loss += batch_loss.item() * double(end - start);
    }
    epoch_loss /= double(order.size());

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = epoch_loss;
    stats.val = evaluate(val_graphs, params);
    result.history.push_back(stats);

    if (stats.val.macro_f1 > best_f1) {  // ties keep the earlier checkpoint
      best_f1 = stats.val.macro_f1;
      result.best_params = clone_params(params);
      result.best_val = stats.val;
      result.best_epoch = epoch;
      last_improvement = epoch;
    } else if (epoch - last_improvement >= train_config.patience) {
      break;
    }
  }
  return result;
}

}  // namespace lcv
