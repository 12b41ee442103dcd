#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gdn/dataset.hpp"
#include "gdn/graphs.hpp"
#include "gdn/linalg.hpp"
#include "gdn/model.hpp"

namespace gdn {

enum class Task { link, regress_mse, regress_mae };
std::string to_string(Task t);
Task task_from_string(const std::string& s);

struct TrainConfig {
  Task task = Task::link;
  double lr = 0.01;
  double beta1 = 0.85;
  double beta2 = 0.99;
  double eps = 1e-8;
  std::size_t batch_size = 200;
  std::size_t max_epochs = 100;
  std::size_t patience = 20;
  double hinge_margin = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Scalar loss and its (sub)gradient w.r.t. the prediction.
struct LossValue {
  double value = 0.0;
  Matrix grad;
};

/// Off-diagonal hinge: non-edges pay (p - m)^+, edges pay (1 - m - p)^+.
LossValue hinge_loss(const Adjacency& pred, const Adjacency& label, double margin);
/// 1/2 sum_{i != j} (label - pred)^2.
LossValue mse_loss(const Adjacency& pred, const Adjacency& label);
/// sum_{i != j} |label - pred|, subgradient 0 at ties.
LossValue mae_loss(const Adjacency& pred, const Adjacency& label);
LossValue task_loss(Task task, const Adjacency& pred, const Adjacency& label, double margin);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::size_t step = 0;
};

/// One bias-corrected Adam update in place. Throws DivergenceError on a
/// non-finite gradient entry.
void adam_update(std::span<double> params, std::span<const double> grads, AdamState& state,
                 double lr, double beta1, double beta2, double eps);

/// Adam on the flat parameter view followed by project().
void adam_step(GdnParams& params, const GdnGrads& grads, AdamState& state, const TrainConfig& cfg);

/// 1 where pred >= t off the diagonal.
Adjacency binarize(const Adjacency& pred, double t);
/// Mismatched unordered pairs over n(n-1)/2.
double link_error(const Adjacency& pred_binary, const Adjacency& label);
/// Pooled link error of continuous predictions cut at t.
double link_error_at(const std::vector<Adjacency>& preds, const std::vector<Adjacency>& labels,
                     double t);

struct ThresholdChoice {
  double t = 0.0;
  double error = 0.0;
};

/// Minimizes pooled link error over the midpoints of sorted unique
/// off-diagonal values plus {0, max + eps}; the smaller t wins ties.
ThresholdChoice tune_threshold(const std::vector<Adjacency>& preds,
                               const std::vector<Adjacency>& labels);

struct SampleMetrics {
  double error = 0.0;
  double mse = 0.0;  // per off-diagonal entry
  double mae = 0.0;
};

struct MetricSummary {
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(count); 0 for a single value
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

MetricSummary summarize(std::span<const double> values);

struct EvalReport {
  std::string method;
  Task task = Task::link;
  double threshold = 0.0;
  double scale = 1.0;
  MetricSummary error;
  MetricSummary mse;
  MetricSummary mae;
  std::vector<SampleMetrics> samples;
};

SampleMetrics sample_metrics(const Adjacency& pred, const Adjacency& label, double t);

/// Per-sample metrics of continuous predictions; link error is taken at t.
EvalReport evaluate_predictions(const std::string& method, Task task,
                                const std::vector<Adjacency>& preds,
                                const std::vector<Adjacency>& labels, double t);

std::vector<Adjacency> predict_all(const GdnParams& params, const std::vector<SymMatrix>& obs);

EvalReport evaluate_model(const std::string& method, Task task, const GdnParams& params,
                          const std::vector<SymMatrix>& obs, const std::vector<Adjacency>& labels,
                          double t);

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_metric = 0.0;
  double wall_ms = 0.0;
  double prior_grad_norm = 0.0;
};

struct TrainResult {
  GdnParams params;
  std::vector<EpochRecord> history;
  double threshold = 0.0;
  std::size_t best_epoch = 0;
  double best_val = 0.0;
};

/// Mean task loss over the given samples.
double mean_loss(const GdnParams& params, const std::vector<SymMatrix>& obs,
                 const std::vector<Adjacency>& labels, const TrainConfig& cfg);

/// Mini-batch Adam with early stopping on the validation split. The
/// returned threshold is tuned on validation for the best parameters.
TrainResult train(const GraphPairDataset& ds, GdnParams init, const TrainConfig& cfg);
inline constexpr std::size_t kMaxInitAttempts = 64;

/// init_params from successive init streams of `seed`, keeping the first
/// draw whose prediction is nonzero on some of the first 50 training
/// samples. An all-zero output has no gradient through the final ReLU.
GdnParams init_live_params(const GraphPairDataset& ds, const Architecture& arch,
                           std::uint64_t seed, const Matrix& prior = {});

/// Same, starting from init_live_params drawn from the config seed.
TrainResult train(const GraphPairDataset& ds, const Architecture& arch, const TrainConfig& cfg,
                  const Matrix& prior = {});

}  // namespace gdn
