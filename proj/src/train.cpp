#include "cxr/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

namespace cxr {

namespace {

constexpr std::size_t kChunkStudies = 8;  // fixed, so threading cannot reorder

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void parallel_chunks(std::size_t n_chunks, int threads,
                     const std::function<void(std::size_t)>& work) {
  const int n_workers = std::min<int>(threads, static_cast<int>(n_chunks));
  if (n_workers <= 1) {
    for (std::size_t c = 0; c < n_chunks; ++c) work(c);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(n_workers));
  for (int t = 0; t < n_workers; ++t) {
    pool.emplace_back([&, t] {
      for (std::size_t c = static_cast<std::size_t>(t); c < n_chunks;
           c += static_cast<std::size_t>(n_workers)) {
        work(c);
      }
    });
  }
  for (std::thread& worker : pool) worker.join();
}

struct OptimizerState {
  std::vector<std::vector<double>> m;  // Adam first moment / SGD velocity
  std::vector<std::vector<double>> v;  // Adam second moment
  std::int64_t step = 0;

  explicit OptimizerState(const ModelParams& params) {
    for (const Matrix* tensor : param_tensors(params)) {
      m.emplace_back(tensor->data.size(), 0.0);
      v.emplace_back(tensor->data.size(), 0.0);
    }
  }
};

void apply_update(ModelParams& params, const ModelGrads& grads,
                  const TrainConfig& config, OptimizerState& state) {
  ++state.step;
  const auto tensors = param_tensors(params);
  const auto grad_tensors = param_tensors(grads.tensors);
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    std::vector<double>& values = tensors[i]->data;
    const std::vector<double>& g = grad_tensors[i]->data;
    if (config.optimizer == Optimizer::Adam) {
      const double b1 = config.momentum;
      const double b2 = config.adam_beta2;
      const double correction1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
      const double correction2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
      for (std::size_t n = 0; n < values.size(); ++n) {
        double& m = state.m[i][n];
        double& v = state.v[i][n];
        m = b1 * m + (1.0 - b1) * g[n];
        v = b2 * v + (1.0 - b2) * g[n] * g[n];
        const double m_hat = m / correction1;
        const double v_hat = v / correction2;
        values[n] -= config.learning_rate * m_hat /
                     (std::sqrt(v_hat) + config.adam_epsilon);
      }
    } else {
      for (std::size_t n = 0; n < values.size(); ++n) {
        double& velocity = state.m[i][n];
        velocity = config.momentum * velocity + g[n];
        values[n] -= config.learning_rate * velocity;
      }
    }
  }
  ++params.revision;
}

void check_finite(const ModelParams& params, double loss) {
  if (!std::isfinite(loss)) {
    throw DivergenceError("training loss is not finite");
  }
  for (const Matrix* tensor : param_tensors(params)) {
    for (const double v : tensor->data) {
      if (!std::isfinite(v)) {
        throw DivergenceError("a model parameter is not finite");
      }
    }
  }
}

ModelDims dims_from_config(const TrainConfig& config, std::size_t input_dim) {
  ModelDims dims;
  dims.input_dim = input_dim;
  dims.hidden_dim = config.hidden_dim;
  dims.edge_dim = config.edge_dim;
  dims.layers = config.layers;
  dims.head_hidden = config.head_hidden;
  return dims;
}

}  // namespace

TrainStudy make_train_study(const std::string& study_id,
                            const AnatomyGraph& graph,
                            const SoftLabelVector& labels) {
  TrainStudy study;
  study.study_id = study_id;
  study.view = make_graph_view(graph);
  study.targets_soft = label_targets(labels);
  study.targets_hard = label_targets(harden_labels(labels));
  return study;
}

std::vector<double> predict(const ModelParams& params, const GraphView& view) {
  return forward(view, params).fused;
}

EvalResult evaluate(const ModelParams& params,
                    const std::vector<TrainStudy>& studies,
                    const EvalOptions& options) {
  EvalResult result;
  result.n_studies = studies.size();
  if (studies.empty()) return result;

  const std::size_t n_classes = params.dims.classes;
  std::vector<std::vector<double>> scores(studies.size());
  std::vector<std::vector<int>> labels(studies.size());

  const int threads = resolve_threads(options.threads);
  parallel_chunks(studies.size(), threads, [&](std::size_t i) {
    scores[i] = predict(params, studies[i].view);
    labels[i].resize(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
      labels[i][c] = studies[i].targets_hard[c] == 1.0 ? 1 : 0;
    }
  });

  if (options.exclude_unmentioned) {
    result.auc.per_class.resize(n_classes);
    double total = 0.0;
    for (std::size_t c = 0; c < n_classes; ++c) {
      std::vector<double> s;
      std::vector<int> y;
      for (std::size_t i = 0; i < studies.size(); ++i) {
        if (studies[i].targets_soft[c] == 0.1) continue;
        s.push_back(scores[i][c]);
        y.push_back(labels[i][c]);
      }
      result.auc.per_class[c] = binary_auc(s, y);
      if (result.auc.per_class[c]) {
        total += *result.auc.per_class[c];
        ++result.auc.included_classes;
      }
    }
    result.auc.mean = result.auc.included_classes > 0
                          ? total / result.auc.included_classes
                          : std::numeric_limits<double>::quiet_NaN();
  } else {
    result.auc = multilabel_auc(scores, labels);
  }
  result.top5 = topk_accuracy(scores, labels, 5);
  result.top10 = topk_accuracy(scores, labels, 10);
  return result;
}

TrainResult train_model(const std::vector<TrainStudy>& train_set,
                        const std::vector<TrainStudy>& val_set,
                        const TrainConfig& config,
                        const AnatomyGraph& canonical) {
  if (train_set.empty()) throw std::invalid_argument("empty training set");
  if (config.batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (config.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (config.learning_rate < 0.0) {
    throw std::invalid_argument("learning rate must be >= 0");
  }

  const std::size_t input_dim = train_set[0].view.features.cols;
  for (const TrainStudy& study : train_set) {
    if (study.view.features.cols != input_dim) {
      throw DimensionError("training studies disagree on feature width");
    }
  }

  ModelParams params =
      ModelParams::init(dims_from_config(config, input_dim), config.seed,
                        canonical, config.alpha, config.beta);
  OptimizerState state(params);
  const int threads = resolve_threads(config.threads);

  std::mt19937_64 order_gen(config.seed ^ 0x5e11aa11d5eedull);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  const std::size_t n_batches =
      (train_set.size() + static_cast<std::size_t>(config.batch_size) - 1) /
      static_cast<std::size_t>(config.batch_size);
  const std::size_t max_chunks =
      (static_cast<std::size_t>(config.batch_size) + kChunkStudies - 1) /
      kChunkStudies;

  struct ChunkWork {
    ModelGrads grads;
    double loss_sum = 0.0;
  };
  std::vector<ChunkWork> chunks;
  chunks.reserve(max_chunks);
  for (std::size_t c = 0; c < max_chunks; ++c) {
    chunks.push_back(ChunkWork{ModelGrads::like(params), 0.0});
  }
  ModelGrads total = ModelGrads::like(params);

  TrainResult result;
  result.best_val_auc = -1.0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i >= 1; --i) {
      const std::size_t j = static_cast<std::size_t>(order_gen() % (i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    std::size_t seen = 0;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t begin = b * static_cast<std::size_t>(config.batch_size);
      const std::size_t end =
          std::min(train_set.size(),
                   begin + static_cast<std::size_t>(config.batch_size));
      const std::size_t batch_n = end - begin;
      const std::size_t n_chunks = (batch_n + kChunkStudies - 1) / kChunkStudies;

      parallel_chunks(n_chunks, threads, [&](std::size_t c) {
        ChunkWork& work = chunks[c];
        work.grads.zero();
        work.loss_sum = 0.0;
        const std::size_t lo = begin + c * kChunkStudies;
        const std::size_t hi = std::min(end, lo + kChunkStudies);
        for (std::size_t s = lo; s < hi; ++s) {
          const TrainStudy& study = train_set[order[s]];
          const std::span<const double> targets =
              config.loss_mode == LossMode::Hard
                  ? std::span<const double>(study.targets_hard)
                  : std::span<const double>(study.targets_soft);
          const Prediction pred = forward(study.view, params);
          work.loss_sum += backward(pred, study.view, params, targets,
                                    config.loss_mode, config.eq_literal,
                                    work.grads);
        }
      });

      total.zero();
      double batch_loss = 0.0;
      for (std::size_t c = 0; c < n_chunks; ++c) {
        total.add(chunks[c].grads);
        batch_loss += chunks[c].loss_sum;
      }
      const double scale = 1.0 / static_cast<double>(batch_n);
      for (Matrix* tensor : param_tensors(total.tensors)) {
        for (double& g : tensor->data) g *= scale;
      }
      batch_loss *= scale;
      epoch_loss += batch_loss * static_cast<double>(batch_n);
      seen += batch_n;

      apply_update(params, total, config, state);
      check_finite(params, batch_loss);
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = epoch_loss / static_cast<double>(seen);
    if (!val_set.empty()) {
      EvalOptions eval_options;
      eval_options.threads = config.threads;
      const EvalResult val = evaluate(params, val_set, eval_options);
      metrics.val_mean_auc = val.auc.mean;
      metrics.top5 = val.top5;
      metrics.top10 = val.top10;
    }
    result.history.push_back(metrics);

    if (val_set.empty() || metrics.val_mean_auc > result.best_val_auc) {
      result.best_val_auc = val_set.empty() ? 0.0 : metrics.val_mean_auc;
      result.best_epoch = epoch;
      result.params = params;
    }
  }
  return result;
}

std::vector<SweepCell> sweep_fusion(const std::vector<TrainStudy>& train_set,
                                    const std::vector<TrainStudy>& val_set,
                                    const TrainConfig& base,
                                    const AnatomyGraph& canonical,
                                    std::span<const double> alpha_grid,
                                    std::span<const double> beta_grid) {
  std::vector<SweepCell> cells;
  for (const double alpha : alpha_grid) {
    for (const double beta : beta_grid) {
      if (alpha < 0.0 || beta < 0.0 || alpha + beta > 1.0) continue;
      TrainConfig config = base;
      config.alpha = alpha;
      config.beta = beta;
      const TrainResult run = train_model(train_set, val_set, config, canonical);
      cells.push_back(SweepCell{alpha, beta, base.tau, run.best_val_auc});
    }
  }
  return cells;
}

std::vector<SweepCell> sweep_tau(
    std::span<const double> tau_grid,
    const std::function<double(double)>& val_auc_for_tau) {
  std::vector<SweepCell> cells;
  for (const double tau : tau_grid) {
    SweepCell cell;
    cell.tau = tau;
    cell.mean_auc = val_auc_for_tau(tau);
    cells.push_back(cell);
  }
  return cells;
}

}  // namespace cxr
