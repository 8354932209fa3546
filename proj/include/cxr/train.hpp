#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cxr/metrics.hpp"
#include "cxr/model.hpp"

namespace cxr {

enum class Optimizer { Adam, SgdMomentum };

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;  // Adam beta1 / SGD momentum
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int batch_size = 64;
  int epochs = 20;
  std::uint64_t seed = 0;
  LossMode loss_mode = LossMode::ExpertSoft;
  bool eq_literal = false;  // drop the (1-p) term, the literal written form
  Optimizer optimizer = Optimizer::Adam;
  int threads = 0;  // 0 = hardware concurrency

  std::size_t hidden_dim = 64;
  std::size_t edge_dim = 8;
  std::size_t layers = 3;
  std::size_t head_hidden = 32;
  double alpha = 0.3;
  double beta = 0.4;
  double tau = 0.5;
};

// One study prepared for the model: graph view plus soft and hardened
// targets.
struct TrainStudy {
  std::string study_id;
  GraphView view;
  std::vector<double> targets_soft;
  std::vector<double> targets_hard;
};

TrainStudy make_train_study(const std::string& study_id,
                            const AnatomyGraph& graph,
                            const SoftLabelVector& labels);

struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double val_mean_auc = 0.0;
  double top5 = 0.0;
  double top10 = 0.0;
};

struct TrainResult {
  ModelParams params;  // the best-validation-AUC checkpoint
  std::vector<EpochMetrics> history;
  int best_epoch = 0;
  double best_val_auc = 0.0;
};

// Mini-batch training. Per epoch the study order is reshuffled from a
// dedicated seeded generator; per batch, per-study gradients are computed in
// fixed-size chunks that worker threads may process concurrently, then
// reduced in study order, so results are bit-identical for any thread count.
// Throws DivergenceError when the loss or a parameter becomes non-finite.
TrainResult train_model(const std::vector<TrainStudy>& train_set,
                        const std::vector<TrainStudy>& val_set,
                        const TrainConfig& config,
                        const AnatomyGraph& canonical);

std::vector<double> predict(const ModelParams& params, const GraphView& view);

struct EvalOptions {
  // Treat probability-0.1 (never mentioned) labels as negatives (default)
  // or exclude those studies from that class's AUC.
  bool exclude_unmentioned = false;
  int threads = 0;
};

struct EvalResult {
  AucResult auc;
  double top5 = 0.0;
  double top10 = 0.0;
  std::size_t n_studies = 0;
};

EvalResult evaluate(const ModelParams& params,
                    const std::vector<TrainStudy>& studies,
                    const EvalOptions& options = {});

struct SweepCell {
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;
  double mean_auc = 0.0;
};

// Retrains per (alpha, beta) cell with the same seed; cells with
// alpha + beta > 1 are rejected (skipped).
std::vector<SweepCell> sweep_fusion(const std::vector<TrainStudy>& train_set,
                                    const std::vector<TrainStudy>& val_set,
                                    const TrainConfig& base,
                                    const AnatomyGraph& canonical,
                                    std::span<const double> alpha_grid,
                                    std::span<const double> beta_grid);

// Maps the tau grid through a caller-supplied retrain callback returning the
// validation mean AUC at that threshold.
std::vector<SweepCell> sweep_tau(
    std::span<const double> tau_grid,
    const std::function<double(double)>& val_auc_for_tau);

}  // namespace cxr
