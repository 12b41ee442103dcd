#include "gdn/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gdn/errors.hpp"

namespace gdn {

FilterCoeffs sample_unit_sphere_coeffs(std::size_t k, Rng& rng) {
  if (k < 1) throw Error("sample_unit_sphere_coeffs: order must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  FilterCoeffs c{std::vector<double>(k + 1)};
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : c.h) {
      v = normal(rng);
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : c.h) v /= norm;
  return c;
}

SymMatrix graph_filter(const Adjacency& a, const FilterCoeffs& h) {
  return mat_poly(a.as_sym(), h.h);
}

Matrix diffuse_white(const Adjacency& a_l, const FilterCoeffs& h, std::size_t p, Rng& rng) {
  if (p < 1) throw Error("diffuse_white: need at least one signal");
  const std::size_t n = a_l.n();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix w(n, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) w(i, j) = normal(rng);
  return matmul(graph_filter(a_l, h).matrix(), w);
}

SymMatrix sample_covariance(const Matrix& x) {
  const std::size_t n = x.rows(), p = x.cols();
  if (p < 2) throw Error("sample_covariance: need at least 2 samples");
  std::vector<double> mean(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < p; ++k) mean[i] += x(i, k);
    mean[i] /= static_cast<double>(p);
  }
  Matrix c(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < p; ++k) s += (x(i, k) - mean[i]) * (x(j, k) - mean[j]);
      c(i, j) = c(j, i) = s / static_cast<double>(p);
    }
  }
  return SymMatrix(std::move(c));
}

SymMatrix covariance_to_correlation(const SymMatrix& cov) {
  const std::size_t n = cov.n();
  std::vector<double> sd(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(cov(i, i) > 0.0)) {
      std::ostringstream os;
      os << "correlation: node " << i << " has zero variance";
      throw Error(os.str());
    }
    sd[i] = std::sqrt(cov(i, i));
  }
  Matrix r(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    r(i, i) = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = std::clamp(cov(i, j) / (sd[i] * sd[j]), -1.0, 1.0);
      r(i, j) = r(j, i) = v;
    }
  }
  return SymMatrix(std::move(r));
}

SymMatrix sample_correlation(const Matrix& x) {
  return covariance_to_correlation(sample_covariance(x));
}

SymMatrix ensemble_covariance(const Adjacency& a_l, const FilterCoeffs& h) {
  const SymMatrix f = graph_filter(a_l, h);
  return SymMatrix(matmul(f.matrix(), f.matrix()));
}

SymMatrix normalize_observation(const SymMatrix& a_o) {
  const double lam = max_abs_eigval(a_o);
  return SymMatrix(a_o.matrix() * (1.0 / lam));
}

}  // namespace gdn
