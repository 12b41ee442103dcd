#pragma once

#include <cstddef>
#include <vector>

#include "gdn/graphs.hpp"
#include "gdn/linalg.hpp"
#include "gdn/rng.hpp"

namespace gdn {

/// Coefficients h_0..h_K of the polynomial filter H(A; h) = sum_k h_k A^k.
struct FilterCoeffs {
  std::vector<double> h;

  std::size_t order() const { return h.empty() ? 0 : h.size() - 1; }
  friend bool operator==(const FilterCoeffs&, const FilterCoeffs&) = default;
};

/// i.i.d. standard normals normalized to unit length (uniform on the sphere).
FilterCoeffs sample_unit_sphere_coeffs(std::size_t k, Rng& rng);

/// H(A; h) evaluated on the adjacency matrix.
SymMatrix graph_filter(const Adjacency& a, const FilterCoeffs& h);

/// n x p matrix whose columns are H(A_L; h) w_i with w_i ~ N(0, I).
Matrix diffuse_white(const Adjacency& a_l, const FilterCoeffs& h, std::size_t p, Rng& rng);

/// (1/p) sum_i (x_i - mean)(x_i - mean)^T over columns of an n x p matrix.
SymMatrix sample_covariance(const Matrix& x);
/// Pearson correlation of the rows of x.
SymMatrix sample_correlation(const Matrix& x);
/// Rescale a covariance to unit diagonal. Throws naming the zero-variance node.
SymMatrix covariance_to_correlation(const SymMatrix& cov);

/// H(A_L; h)^2, the exact covariance of diffused white noise.
SymMatrix ensemble_covariance(const Adjacency& a_l, const FilterCoeffs& h);

/// a_o / max |lambda(a_o)|.
SymMatrix normalize_observation(const SymMatrix& a_o);

}  // namespace gdn
