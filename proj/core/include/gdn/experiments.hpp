#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gdn/baselines.hpp"
#include "gdn/dataset.hpp"
#include "gdn/model.hpp"
#include "gdn/training.hpp"

namespace gdn {

/// Where fixed and learned priors come from.
enum class PriorSource { zeros, block, mean };
std::string to_string(PriorSource s);
PriorSource prior_source_from_string(const std::string& s);

struct BaselineConfig {
  bool threshold = true;
  bool nd = true;
  bool glasso = true;
  bool lsopt = true;
  NdOptions nd_options;
  std::vector<double> glasso_alphas{0.01, 0.03, 0.1, 0.3};
  double glasso_tol = 1e-6;
  std::size_t glasso_max_iter = 500;
  std::vector<double> lsopt_steps{1e-3, 1e-2, 1e-1};
  std::vector<double> lsopt_lambdas{0.0, 1e-3, 1e-2};
  std::size_t lsopt_iters = 100;
  double lsopt_ridge = 1e-6;
  bool lsopt_adam = false;
  std::size_t tune_samples = 25;  // validation samples used for baseline grid searches
};

struct ExperimentConfig {
  DatasetRecipe dataset;
  Architecture model;
  TrainConfig train;
  PriorSource prior_source = PriorSource::block;
  std::size_t repeats = 3;
  bool run_gdn = true;
  bool run_gdn_shared = true;
  bool run_k0 = false;  // adds the no_linear variant as "GDN-K0"
  BaselineConfig baselines;

  void validate() const;
};

/// Desk-scale defaults: n = 20, K = 2, P = 50, splits 300/100/100, D = C = 8.
ExperimentConfig desk_config(EnsembleKind kind = EnsembleKind::RG);
/// Full-scale protocol: n = 68, splits 913/500/500.
ExperimentConfig full_scale_config(EnsembleKind kind = EnsembleKind::RG);
/// Default ensemble parameters for each domain.
EnsembleSpec domain_ensemble(EnsembleKind kind, std::size_t n);

/// Parses a JSON config; absent keys keep the desk defaults.
ExperimentConfig parse_experiment_config(const std::string& json_text);
std::string experiment_config_json(const ExperimentConfig& cfg);

/// Seed of filter resample r (r = 0 is reused by the size sweep).
std::uint64_t repeat_seed(std::uint64_t seed, std::size_t r);

/// The prior matrix that fixed/learned modes start from.
Matrix resolve_prior(const ExperimentConfig& cfg, const GraphPairDataset& ds);

struct MethodResult {
  std::string method;
  std::vector<EvalReport> repeats;
  std::vector<std::vector<EpochRecord>> histories;  // trained models only
  MetricSummary error, mse, mae;                     // across repeat means
  MetricSummary sample_error, sample_mse, sample_mae;  // pooled test samples
};

struct BenchmarkReport {
  std::string domain;
  Task task = Task::link;
  std::vector<MethodResult> methods;

  const MethodResult& method(const std::string& name) const;
};

/// Wraps any stage failure in an Error tagged with the stage name.
BenchmarkReport run_benchmark(const ExperimentConfig& cfg);

/// Evaluates every enabled baseline on one dataset, tuning on validation.
std::vector<EvalReport> run_baselines(const GraphPairDataset& ds, const BaselineConfig& cfg,
                                      Task task);

struct SizePoint {
  std::size_t n = 0;
  EvalReport report;
};

struct SizeGenReport {
  std::size_t train_n = 0;
  double threshold = 0.0;
  std::vector<SizePoint> points;
  std::vector<EpochRecord> history;
};

/// Trains once at the config's n with the ensemble covariance and evaluates
/// the frozen model (threshold included) at each test size.
SizeGenReport run_size_generalization(const ExperimentConfig& cfg,
                                      const std::vector<std::size_t>& test_sizes,
                                      std::size_t graphs_per_size = 200);

/// Runs zeros / ones / block / learned priors, `seeds` dataset seeds each.
BenchmarkReport run_prior_ablation(const ExperimentConfig& cfg, std::size_t seeds);

/// Full GDN against the no_linear variant on the same datasets, baselines off.
BenchmarkReport run_k0_ablation(const ExperimentConfig& cfg);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t draws = 0;
  std::size_t skipped_draws = 0;  // too close to a ReLU kink or a max tie
  std::size_t checked = 0;        // scalar comparisons made
};

/// Central differences of a random linear functional of the prediction
/// against backward(), over `draws` random models with a learned prior.
/// Relative error is |fd - an| / max(|fd|, |an|, 1e-4).
GradCheckResult gradient_check(const Architecture& arch, std::size_t n, std::size_t draws,
                               std::uint64_t seed, double step = 1e-5);

MethodResult aggregate(const std::string& method, std::vector<EvalReport> repeats);

std::string benchmark_json(const BenchmarkReport& r);
std::string benchmark_csv(const BenchmarkReport& r);
std::string size_curve_csv(const SizeGenReport& r);
std::string size_curve_json(const SizeGenReport& r);

}  // namespace gdn
