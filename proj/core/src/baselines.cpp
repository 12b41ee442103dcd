#include "gdn/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gdn/errors.hpp"

namespace gdn {

Adjacency hard_threshold(const SymMatrix& a_o, double t) {
  const std::size_t n = a_o.n();
  Matrix b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && std::abs(a_o(i, j)) >= t) b(i, j) = 1.0;
  return Adjacency(std::move(b));
}

Adjacency score_matrix(const SymMatrix& raw) {
  const std::size_t n = raw.n();
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) m(i, j) = m(j, i) = std::abs(raw(i, j));
  return Adjacency(std::move(m));
}

std::string to_string(NdMode m) { return m == NdMode::pearson ? "pearson" : "raw"; }

NdMode nd_mode_from_string(const std::string& s) {
  if (s == "pearson") return NdMode::pearson;
  if (s == "raw") return NdMode::raw;
  throw Error("unknown ND mode '" + s + "'");
}

SymMatrix network_deconvolution(const SymMatrix& a_o, const NdOptions& opt) {
  if (max_abs(a_o.matrix()) == 0.0) throw Error("network_deconvolution: zero matrix");
  if (!(opt.eig_margin >= 0.0)) throw Error("network_deconvolution: eig_margin must be >= 0");
  const SymMatrix input = opt.mode == NdMode::pearson ? covariance_to_correlation(a_o) : a_o;
  const EigenPair eig = sym_eig(input);
  std::vector<double> lam = eig.values;
  if (opt.rescale) {
    const double top = std::max(lam.back(), std::abs(lam.front()));
    const double c = (1.0 + opt.eig_margin) * top;
    for (double& l : lam) l /= c;
  }
  for (double& l : lam) {
    const double d = 1.0 + l;
    if (std::abs(d) < 1e-12) {
      std::ostringstream os;
      os << "network_deconvolution: eigenvalue " << l << " sits on the pole at -1";
      throw Error(os.str());
    }
    l /= d;
  }
  return reconstruct(eig, lam);
}

namespace {

double offdiag_l1(const Matrix& m) {
  double s = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j)
      if (i != j) s += std::abs(m(i, j));
  return s;
}

Matrix symmetrized(const Matrix& m) {
  Matrix r(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r(i, j) = 0.5 * (m(i, j) + m(j, i));
  return r;
}

}  // namespace

GlassoResult glasso(const SymMatrix& s, double alpha, double tol, std::size_t max_iter) {
  if (!(alpha >= 0.0)) throw Error("glasso: alpha must be >= 0");
  const std::size_t n = s.n();
  const Matrix& sm = s.matrix();
  Matrix theta(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = s(i, i) + alpha;
    if (!(d > 0.0)) throw Error("glasso: diagonal of S plus alpha must be positive");
    theta(i, i) = 1.0 / d;
  }

  GlassoResult res;
  Cholesky chol = cholesky_logdet(SymMatrix(theta));
  double f = -chol.logdet + inner(sm, theta);
  double obj = f + alpha * offdiag_l1(theta);
  res.objective.push_back(-obj);

  double t = 1.0;
  for (std::size_t it = 1; it <= max_iter; ++it) {
    const Matrix grad = sm - cholesky_inverse(chol).matrix();
    bool accepted = false;
    Matrix cand;
    Cholesky cand_chol;
    double cand_f = 0.0, cand_obj = 0.0;
    for (int bt = 0; bt < 80 && !accepted; ++bt, t *= 0.5) {
      cand = theta;
      cand.add_scaled(grad, -t);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) cand(i, j) = soft_threshold(cand(i, j), t * alpha);
      cand = symmetrized(cand);
      try {
        cand_chol = cholesky_logdet(SymMatrix(cand));
      } catch (const NotPositiveDefinite&) {
        continue;
      }
      cand_f = -cand_chol.logdet + inner(sm, cand);
      const Matrix d = cand - theta;
      const double model = f + inner(grad, d) + inner(d, d) / (2.0 * t);
      cand_obj = cand_f + alpha * offdiag_l1(cand);
      if (cand_f <= model && cand_obj <= obj) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No step makes progress: stationary to working precision.
      res.converged = true;
      break;
    }
    // Step-based stop: an objective-change test halts with parameter error ~sqrt(tol).
    const double rel = max_abs(cand - theta) / std::max(1.0, max_abs(theta));
    theta = std::move(cand);
    chol = std::move(cand_chol);
    f = cand_f;
    obj = cand_obj;
    res.objective.push_back(-obj);
    res.iterations = it;
    if (rel < tol) {
      res.converged = true;
      break;
    }
    t *= 2.0;
  }
  res.precision = SymMatrix(std::move(theta));
  return res;
}

namespace {

std::vector<Matrix> powers(const Matrix& a, std::size_t up_to) {
  std::vector<Matrix> p;
  p.push_back(Matrix::identity(a.rows()));
  for (std::size_t k = 1; k <= up_to; ++k) p.push_back(matmul(p.back(), a));
  return p;
}

}  // namespace

double g_objective(const SymMatrix& a, const SymMatrix& a_o, const FilterCoeffs& h) {
  const Matrix r = a_o.matrix() - mat_poly(a, h.h).matrix();
  return 0.5 * inner(r, r);
}

Matrix grad_g_full(const SymMatrix& a, const SymMatrix& a_o, const FilterCoeffs& h) {
  if (h.h.empty()) throw Error("grad_g_full: empty filter");
  if (a.n() != a_o.n()) throw ShapeError("grad_g_full: size mismatch");
  const std::size_t k_max = h.order();
  const std::vector<Matrix> p = powers(a.matrix(), 2 * k_max);
  const std::size_t n = a.n();
  Matrix g(n, n);

  std::vector<Matrix> op;  // A_O A^r
  for (std::size_t r = 0; r < k_max; ++r) op.push_back(matmul(a_o.matrix(), p[r]));
  for (std::size_t k = 1; k <= k_max; ++k) {
    if (h.h[k] == 0.0) continue;
    for (std::size_t r = 0; r < k; ++r) g.add_scaled(matmul(p[k - r - 1], op[r]), -h.h[k]);
  }
  for (std::size_t k = 0; k <= k_max; ++k)
    for (std::size_t l = 0; l <= k_max; ++l)
      if (k + l >= 1)
        g.add_scaled(p[k + l - 1], 0.5 * h.h[k] * h.h[l] * static_cast<double>(k + l));
  return symmetrized(g);
}

Matrix grad_g_linear(const SymMatrix& a, const SymMatrix& a_o, const FilterCoeffs& h) {
  if (h.h.size() != 3) throw Error("grad_g_linear: needs exactly three coefficients");
  if (a.n() != a_o.n()) throw ShapeError("grad_g_linear: size mismatch");
  const double h0 = h.h[0], h1 = h.h[1], h2 = h.h[2];
  const Matrix& am = a.matrix();
  const Matrix& om = a_o.matrix();
  Matrix g = om * (-h1);
  g.add_scaled(matmul(om, am) + matmul(am, om), -h2);
  g.add_scaled(am, 2.0 * h0 * h2 + h1 * h1);
  return symmetrized(g);
}

FilterCoeffs lsopt_fit_coeffs(const std::vector<SymMatrix>& obs, const std::vector<Adjacency>& labels,
                              std::size_t k, double ridge) {
  if (obs.empty()) throw Error("lsopt_fit_coeffs: no training pairs");
  if (obs.size() != labels.size()) throw ShapeError("lsopt_fit_coeffs: list sizes differ");
  if (!(ridge >= 0.0)) throw Error("lsopt_fit_coeffs: ridge must be >= 0");
  const std::size_t m = k + 1;
  Matrix gram(m, m);
  Matrix rhs(m, 1);
  for (std::size_t s = 0; s < obs.size(); ++s) {
    if (obs[s].n() != labels[s].n()) throw ShapeError("lsopt_fit_coeffs: pair size mismatch");
    const std::vector<Matrix> p = powers(labels[s].weights(), k);
    for (std::size_t a = 0; a < m; ++a) {
      rhs(a, 0) += inner(p[a], obs[s].matrix());
      for (std::size_t b = a; b < m; ++b) {
        const double v = inner(p[a], p[b]);
        gram(a, b) += v;
        if (b != a) gram(b, a) += v;
      }
    }
  }
  double diag_max = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    diag_max = std::max(diag_max, gram(a, a));
    gram(a, a) += ridge;
  }
  const char* hint = "lsopt_fit_coeffs: singular normal equations (collinear matrix powers); use ridge > 0";
  Cholesky c;
  try {
    c = cholesky_logdet(SymMatrix(gram));
  } catch (const NotPositiveDefinite&) {
    throw Error(hint);
  }
  if (ridge == 0.0) {
    for (std::size_t a = 0; a < m; ++a) {
      const double piv = c.lower(a, a) * c.lower(a, a);
      if (piv <= 1e-13 * std::max(diag_max, 1.0)) throw Error(hint);
    }
  }
  const Matrix sol = cholesky_solve(c, rhs);
  FilterCoeffs h;
  for (std::size_t a = 0; a < m; ++a) h.h.push_back(sol(a, 0));
  return h;
}

LsoptResult lsopt_solve(const SymMatrix& a_o, const FilterCoeffs& h, const LsoptOptions& opt,
                        const Matrix& prior) {
  if (!(opt.step > 0.0)) throw Error("lsopt_solve: step must be > 0");
  if (!(opt.lambda >= 0.0)) throw Error("lsopt_solve: lambda must be >= 0");
  const std::size_t n = a_o.n();
  Matrix a = prior.empty() ? Matrix(n, n) : prior;
  if (a.rows() != n || a.cols() != n) throw ShapeError("lsopt_solve: prior size mismatch");
  a.zero_diagonal();

  LsoptResult res;
  auto objective = [&](const Matrix& x) {
    double l1 = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) l1 += std::abs(x(i, j));
    return g_objective(SymMatrix(x), a_o, h) + opt.lambda * l1;
  };
  auto check = [&](double v, std::size_t it) {
    if (!std::isfinite(v) || v > 1e12) {
      std::ostringstream os;
      os << "lsopt_solve: objective diverged (" << v << ") at iteration " << it;
      throw DivergenceError(os.str());
    }
  };
  res.objective.push_back(objective(a));
  check(res.objective.back(), 0);

  AdamState adam;
  for (std::size_t it = 1; it <= opt.iters; ++it) {
    Matrix g = grad_g_full(SymMatrix(a), a_o, h);
    if (opt.use_adam) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          if (i != j) g(i, j) += opt.lambda;
      adam_update(a.values(), g.values(), adam, opt.adam_lr, 0.9, 0.999, 1e-8);
    } else {
      a.add_scaled(g, -opt.step);
      for (double& v : a.values()) v -= opt.step * opt.lambda;
    }
    for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
    a.zero_diagonal();
    a = symmetrized(a);
    res.objective.push_back(objective(a));
    check(res.objective.back(), it);
  }
  res.estimate = Adjacency(std::move(a));
  return res;
}

std::vector<Adjacency> scaled(const std::vector<Adjacency>& scores, double s) {
  std::vector<Adjacency> out;
  out.reserve(scores.size());
  for (const auto& a : scores) out.emplace_back(a.weights() * s);
  return out;
}

double tune_scale(const std::vector<Adjacency>& scores, const std::vector<Adjacency>& labels,
                  Task task) {
  if (scores.empty() || scores.size() != labels.size())
    throw Error("tune_scale: need matched, nonempty lists");
  if (task == Task::link) throw Error("tune_scale: link task uses a threshold, not a scale");
  auto loss = [&](double s) {
    double total = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      const Matrix& r = scores[k].weights();
      const Matrix& l = labels[k].weights();
      for (std::size_t i = 0; i < r.size(); ++i) {
        const double d = s * r.values()[i] - l.values()[i];
        total += task == Task::regress_mse ? d * d : std::abs(d);
      }
    }
    return total;
  };
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    for (double v : labels[k].weights().values()) num += v;
    for (double v : scores[k].weights().values()) den += v;
  }
  if (den == 0.0) return 1.0;
  double hi = std::max(num / den, 1e-12);
  for (int k = 0; k < 200 && loss(2.0 * hi) < loss(hi); ++k) hi *= 2.0;
  hi *= 2.0;

  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double lo = 0.0;
  double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
  double f1 = loss(x1), f2 = loss(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    if (f1 <= f2) {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - phi * (hi - lo);
      f1 = loss(x1);
    } else {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + phi * (hi - lo);
      f2 = loss(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace gdn
