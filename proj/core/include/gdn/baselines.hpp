#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "gdn/diffusion.hpp"
#include "gdn/graphs.hpp"
#include "gdn/linalg.hpp"
#include "gdn/training.hpp"

namespace gdn {

/// Indicator of |a_o| >= t off the diagonal.
Adjacency hard_threshold(const SymMatrix& a_o, double t);

/// |raw| with the diagonal zeroed: the score matrix every baseline is
/// thresholded or scaled from.
Adjacency score_matrix(const SymMatrix& raw);

enum class NdMode { pearson, raw };
std::string to_string(NdMode m);
NdMode nd_mode_from_string(const std::string& s);

struct NdOptions {
  NdMode mode = NdMode::pearson;
  bool rescale = true;      // squeeze the spectrum into (-1, 1) first
  double eig_margin = 0.01;
};

/// Network deconvolution: eigenvalues mapped by f(l) = l / (1 + l).
SymMatrix network_deconvolution(const SymMatrix& a_o, const NdOptions& opt = {});

struct GlassoResult {
  SymMatrix precision;
  bool converged = false;
  std::size_t iterations = 0;
  /// log det T - tr(S T) - alpha * sum_{i != j} |T_ij| after each accepted step,
  /// starting with the initial iterate.
  std::vector<double> objective;
};

/// Proximal gradient with backtracking on the negated penalized likelihood.
GlassoResult glasso(const SymMatrix& s, double alpha, double tol = 1e-10,
                    std::size_t max_iter = 5000);

/// g(A) = 1/2 ||A_O - H(A; h)||_F^2.
double g_objective(const SymMatrix& a, const SymMatrix& a_o, const FilterCoeffs& h);
/// Exact gradient of g for any filter order.
Matrix grad_g_full(const SymMatrix& a, const SymMatrix& a_o, const FilterCoeffs& h);
/// Gradient of g truncated to terms of degree <= 1 in A (order-2 filters only).
Matrix grad_g_linear(const SymMatrix& a, const SymMatrix& a_o, const FilterCoeffs& h);

/// Ridge least squares for h from vec(A_O) ~ sum_k h_k vec(A_L^k).
FilterCoeffs lsopt_fit_coeffs(const std::vector<SymMatrix>& obs, const std::vector<Adjacency>& labels,
                              std::size_t k, double ridge);

struct LsoptOptions {
  double lambda = 0.0;
  double step = 1e-2;
  std::size_t iters = 200;
  bool use_adam = false;
  double adam_lr = 0.01;
};

struct LsoptResult {
  Adjacency estimate;
  std::vector<double> objective;  // g(A) + lambda * sum_{i != j} A_ij per iterate
};

/// A <- ReLU(A - step grad g(A) - step lambda) with the diagonal re-zeroed.
/// Throws DivergenceError once the objective exceeds 1e12.
LsoptResult lsopt_solve(const SymMatrix& a_o, const FilterCoeffs& h, const LsoptOptions& opt,
                        const Matrix& prior = {});

/// Positive s minimizing the mean regression loss of s * score against the
/// labels (golden-section search on a bracket grown by doubling).
double tune_scale(const std::vector<Adjacency>& scores, const std::vector<Adjacency>& labels,
                  Task task);

std::vector<Adjacency> scaled(const std::vector<Adjacency>& scores, double s);

}  // namespace gdn
