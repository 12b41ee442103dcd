#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gdn/diffusion.hpp"
#include "gdn/graphs.hpp"
#include "gdn/linalg.hpp"

namespace gdn {

enum class ObservationForm { covariance, correlation };
std::string to_string(ObservationForm f);
ObservationForm observation_form_from_string(const std::string& s);

/// Everything needed to regenerate a dataset bit for bit.
struct DatasetRecipe {
  EnsembleSpec ensemble;
  std::size_t train = 0;
  std::size_t val = 0;
  std::size_t test = 0;
  std::size_t filter_order = 2;
  std::optional<FilterCoeffs> filter;  // sampled from the seed when absent
  std::size_t signals = 50;
  bool ensemble_covariance = false;
  ObservationForm observation = ObservationForm::covariance;
  std::uint64_t seed = 0;

  std::size_t total() const { return train + val + test; }
};

struct DatasetMeta {
  DatasetRecipe recipe;
  FilterCoeffs filter;                     // the filter actually used
  bool weighted_labels = false;
  double label_scale = 1.0;                // raw label weights were divided by this
  std::vector<double> observation_scale;   // per-sample max |eigenvalue| divided out
};

/// Ordered (A_O, A_L) pairs with train/val/test index lists.
struct GraphPairDataset {
  std::size_t n = 0;
  std::vector<SymMatrix> observations;
  std::vector<Adjacency> labels;
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  DatasetMeta meta;

  std::size_t size() const { return observations.size(); }
  /// Shapes, finiteness, and split disjointness/coverage. Throws on violation.
  void validate() const;

  friend bool operator==(const GraphPairDataset&, const GraphPairDataset&);
};

bool operator==(const DatasetRecipe& a, const DatasetRecipe& b);
bool operator==(const DatasetMeta& a, const DatasetMeta& b);

/// Samples latent graphs, one shared filter, and normalized observations.
GraphPairDataset build_dataset(const DatasetRecipe& recipe);

/// Same pipeline over caller-supplied latent graphs (e.g. real structural
/// networks). Weighted labels are scaled into [0, 1] by their maximum weight.
GraphPairDataset build_dataset_from_latents(const DatasetRecipe& recipe,
                                            std::vector<Adjacency> latents);

/// Sub-dataset view of the given indices (copies).
std::vector<SymMatrix> gather(const std::vector<SymMatrix>& all, const std::vector<std::size_t>& idx);
std::vector<Adjacency> gather(const std::vector<Adjacency>& all, const std::vector<std::size_t>& idx);

/// Edgewise mean of the training labels (the "mean prior").
Matrix mean_training_label(const GraphPairDataset& ds);

}  // namespace gdn
