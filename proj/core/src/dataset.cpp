#include "gdn/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "gdn/errors.hpp"
#include "gdn/rng.hpp"

namespace gdn {

std::string to_string(ObservationForm f) {
  return f == ObservationForm::covariance ? "covariance" : "correlation";
}

ObservationForm observation_form_from_string(const std::string& s) {
  if (s == "covariance") return ObservationForm::covariance;
  if (s == "correlation") return ObservationForm::correlation;
  throw Error("unknown observation form '" + s + "'");
}

namespace {

bool same_spec(const EnsembleSpec& a, const EnsembleSpec& b) {
  return a.kind == b.kind && a.n == b.n && a.p == b.p && a.dim == b.dim && a.radius == b.radius &&
         a.m == b.m && a.blocks == b.blocks && a.p_in == b.p_in && a.p_out == b.p_out &&
         a.density_lo == b.density_lo && a.density_hi == b.density_hi &&
         a.require_connected == b.require_connected && a.max_tries == b.max_tries;
}

std::pair<SymMatrix, double> observe(const Adjacency& a, const FilterCoeffs& h,
                                     const DatasetRecipe& recipe, std::size_t index) {
  SymMatrix cov;
  if (recipe.ensemble_covariance) {
    cov = ensemble_covariance(a, h);
  } else {
    Rng rng = child_rng(recipe.seed, streams::kSignal, index);
    cov = sample_covariance(diffuse_white(a, h, recipe.signals, rng));
  }
  if (recipe.observation == ObservationForm::correlation) cov = covariance_to_correlation(cov);
  const double scale = max_abs_eigval(cov);
  return {SymMatrix(cov.matrix() * (1.0 / scale)), scale};
}

FilterCoeffs resolve_filter(const DatasetRecipe& recipe) {
  if (recipe.filter) {
    if (recipe.filter->h.empty()) throw Error("dataset recipe: empty filter");
    return *recipe.filter;
  }
  Rng rng = child_rng(recipe.seed, streams::kFilter, 0);
  return sample_unit_sphere_coeffs(recipe.filter_order, rng);
}

void assign_splits(GraphPairDataset& ds) {
  const auto& r = ds.meta.recipe;
  std::vector<std::size_t> all(r.total());
  std::iota(all.begin(), all.end(), 0);
  ds.train.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(r.train));
  ds.val.assign(all.begin() + static_cast<std::ptrdiff_t>(r.train),
                all.begin() + static_cast<std::ptrdiff_t>(r.train + r.val));
  ds.test.assign(all.begin() + static_cast<std::ptrdiff_t>(r.train + r.val), all.end());
}

}  // namespace

bool operator==(const DatasetRecipe& a, const DatasetRecipe& b) {
  return same_spec(a.ensemble, b.ensemble) && a.train == b.train && a.val == b.val &&
         a.test == b.test && a.filter_order == b.filter_order && a.filter == b.filter &&
         a.signals == b.signals && a.ensemble_covariance == b.ensemble_covariance &&
         a.observation == b.observation && a.seed == b.seed;
}

bool operator==(const DatasetMeta& a, const DatasetMeta& b) {
  return a.recipe == b.recipe && a.filter == b.filter && a.weighted_labels == b.weighted_labels &&
         a.label_scale == b.label_scale && a.observation_scale == b.observation_scale;
}

bool operator==(const GraphPairDataset& a, const GraphPairDataset& b) {
  return a.n == b.n && a.observations == b.observations && a.labels == b.labels &&
         a.train == b.train && a.val == b.val && a.test == b.test && a.meta == b.meta;
}

void GraphPairDataset::validate() const {
  if (observations.size() != labels.size())
    throw InvariantError("dataset: observation and label counts differ");
  for (std::size_t i = 0; i < size(); ++i) {
    if (observations[i].n() != n || labels[i].n() != n) {
      std::ostringstream os;
      os << "dataset: sample " << i << " is not " << n << 'x' << n;
      throw ShapeError(os.str());
    }
    if (!all_finite(observations[i].matrix()))
      throw InvariantError("dataset: non-finite observation");
  }
  std::vector<char> seen(size(), 0);
  for (const auto* split : {&train, &val, &test}) {
    for (std::size_t idx : *split) {
      if (idx >= size()) throw InvariantError("dataset: split index out of range");
      if (seen[idx]) {
        std::ostringstream os;
        os << "dataset: sample " << idx << " appears in more than one split";
        throw InvariantError(os.str());
      }
      seen[idx] = 1;
    }
  }
  if (!meta.observation_scale.empty() && meta.observation_scale.size() != size())
    throw InvariantError("dataset: normalization constants do not match sample count");
}

GraphPairDataset build_dataset(const DatasetRecipe& recipe) {
  recipe.ensemble.validate();
  GraphPairDataset ds;
  ds.n = recipe.ensemble.n;
  ds.meta.recipe = recipe;
  ds.meta.filter = resolve_filter(recipe);
  const std::size_t total = recipe.total();
  ds.observations.reserve(total);
  ds.labels.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    Rng rng = child_rng(recipe.seed, streams::kGraph, i);
    Adjacency a = sample_constrained(recipe.ensemble, rng);
    auto [obs, scale] = observe(a, ds.meta.filter, recipe, i);
    ds.observations.push_back(std::move(obs));
    ds.meta.observation_scale.push_back(scale);
    ds.labels.push_back(std::move(a));
  }
  assign_splits(ds);
  ds.validate();
  return ds;
}

GraphPairDataset build_dataset_from_latents(const DatasetRecipe& recipe,
                                            std::vector<Adjacency> latents) {
  if (latents.empty()) throw Error("build_dataset_from_latents: no latent graphs");
  if (latents.size() != recipe.total())
    throw Error("build_dataset_from_latents: split sizes do not add up to the graph count");
  GraphPairDataset ds;
  ds.n = latents.front().n();
  ds.meta.recipe = recipe;
  ds.meta.recipe.ensemble.n = ds.n;
  ds.meta.filter = resolve_filter(recipe);
  double max_w = 0.0;
  bool weighted = false;
  for (const auto& a : latents) {
    max_w = std::max(max_w, max_abs(a.weights()));
    weighted = weighted || !a.is_binary();
  }
  ds.meta.weighted_labels = weighted;
  ds.meta.label_scale = (weighted && max_w > 0.0) ? max_w : 1.0;
  for (std::size_t i = 0; i < latents.size(); ++i) {
    auto [obs, scale] = observe(latents[i], ds.meta.filter, recipe, i);
    ds.observations.push_back(std::move(obs));
    ds.meta.observation_scale.push_back(scale);
    if (ds.meta.label_scale != 1.0)
      ds.labels.emplace_back(latents[i].weights() * (1.0 / ds.meta.label_scale));
    else
      ds.labels.push_back(std::move(latents[i]));
  }
  assign_splits(ds);
  ds.validate();
  return ds;
}

std::vector<SymMatrix> gather(const std::vector<SymMatrix>& all, const std::vector<std::size_t>& idx) {
  std::vector<SymMatrix> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all.at(i));
  return out;
}

std::vector<Adjacency> gather(const std::vector<Adjacency>& all, const std::vector<std::size_t>& idx) {
  std::vector<Adjacency> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(all.at(i));
  return out;
}

Matrix mean_training_label(const GraphPairDataset& ds) {
  if (ds.train.empty()) throw Error("mean_training_label: empty training split");
  Matrix m(ds.n, ds.n);
  for (std::size_t i : ds.train) m += ds.labels.at(i).weights();
  m *= 1.0 / static_cast<double>(ds.train.size());
  return m;
}

}  // namespace gdn
