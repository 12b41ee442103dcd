#include "gdn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "gdn/errors.hpp"

namespace gdn {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << op << ": shape mismatch " << a.rows() << 'x' << a.cols() << " vs " << b.rows() << 'x'
       << b.cols();
    throw ShapeError(os.str());
  }
}

double off_diagonal_norm(const Matrix& a) {
  double s = 0.0;
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += a(i, j) * a(i, j);
  return std::sqrt(s);
}

}  // namespace

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  Matrix m(r, c);
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("Matrix::from_rows: ragged rows");
    std::size_t j = 0;
    for (double v : row) m(i, j++) = v;
    ++i;
  }
  return m;
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

void Matrix::zero_diagonal() {
  const std::size_t n = std::min(rows_, cols_);
  for (std::size_t i = 0; i < n; ++i) data_[i * cols_ + i] = 0.0;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "operator+=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_shape(*this, other, "operator-=");
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix& Matrix::add_scaled(const Matrix& other, double s) {
  require_same_shape(*this, other, "add_scaled");
  const double* src = other.data_.data();
  double* dst = data_.data();
  const std::size_t len = data_.size();
  for (std::size_t k = 0; k < len; ++k) dst[k] += s * src[k];
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

void matmul_into(const Matrix& a, const Matrix& b, Matrix& out) {
  if (a.cols() != b.rows()) throw ShapeError("matmul: inner dimensions differ");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  if (out.rows() != n || out.cols() != m) out = Matrix(n, m);
  else out.fill(0.0);
  const double* pa = a.data();
  const double* pb = b.data();
  double* po = out.data();
  for (std::size_t i = 0; i < n; ++i) {
    double* orow = po + i * m;
    for (std::size_t l = 0; l < k; ++l) {
      const double av = pa[i * k + l];
      const double* brow = pb + l * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  Matrix out;
  matmul_into(a, b, out);
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  const double* pa = a.data();
  const double* pb = b.data();
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += pa[k] * pb[k];
  return s;
}

double frobenius_norm(const Matrix& a) { return std::sqrt(inner(a, a)); }

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double v : a.values()) m = std::max(m, std::abs(v));
  return m;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.values().begin(), a.values().end(),
                     [](double v) { return std::isfinite(v); });
}

bool is_symmetric(const Matrix& a, double tol) {
  if (!a.square()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

SymMatrix::SymMatrix(Matrix m) : m_(std::move(m)) {
  if (!m_.square()) throw ShapeError("SymMatrix: matrix is not square");
  if (!all_finite(m_)) throw InvariantError("SymMatrix: non-finite entry");
  const double tol = kSymmetryTol * std::max(1.0, max_abs(m_));
  const std::size_t n = m_.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double a = m_(i, j), b = m_(j, i);
      if (std::abs(a - b) > tol) {
        std::ostringstream os;
        os << "SymMatrix: entries (" << i << ',' << j << ")=" << a << " and (" << j << ',' << i
           << ")=" << b << " differ";
        throw InvariantError(os.str());
      }
      if (a != b) m_(i, j) = m_(j, i) = 0.5 * (a + b);
    }
  }
}

SymMatrix SymMatrix::identity(std::size_t n) { return SymMatrix(Matrix::identity(n)); }
SymMatrix SymMatrix::zeros(std::size_t n) { return SymMatrix(Matrix(n, n)); }

EigenPair sym_eig(const SymMatrix& sym) {
  const std::size_t n = sym.n();
  if (n == 0) throw ShapeError("sym_eig: empty matrix");
  Matrix a = sym.matrix();
  Matrix v = Matrix::identity(n);
  const double scale = frobenius_norm(a);
  const double target = 1e-13 * scale;

  double off = off_diagonal_norm(a);
  std::size_t sweep = 0;
  while (off > target && off > 0.0) {
    if (sweep == kJacobiMaxSweeps) {
      std::ostringstream os;
      os << "sym_eig: Jacobi did not converge after " << kJacobiMaxSweeps
         << " sweeps (off-diagonal residual " << off << ")";
      throw ConvergenceError(os.str(), off);
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- A J, columns p and q
        for (std::size_t r = 0; r < n; ++r) {
          const double arp = a(r, p), arq = a(r, q);
          a(r, p) = c * arp - s * arq;
          a(r, q) = s * arp + c * arq;
        }
        // A <- J^T A, rows p and q
        for (std::size_t r = 0; r < n; ++r) {
          const double apr = a(p, r), aqr = a(q, r);
          a(p, r) = c * apr - s * aqr;
          a(q, r) = s * apr + c * aqr;
        }
        a(p, q) = a(q, p) = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
          const double vrp = v(r, p), vrq = v(r, q);
          v(r, p) = c * vrp - s * vrq;
          v(r, q) = s * vrp + c * vrq;
        }
      }
    }
    ++sweep;
    off = off_diagonal_norm(a);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });
  EigenPair out{Matrix(n, n), std::vector<double>(n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]);
    for (std::size_t r = 0; r < n; ++r) out.vectors(r, k) = v(r, order[k]);
  }
  return out;
}

double max_abs_eigval(const SymMatrix& sym, double tol, std::size_t max_iter) {
  const std::size_t n = sym.n();
  const Matrix& a = sym.matrix();
  if (n == 0 || max_abs(a) == 0.0) throw Error("max_abs_eigval: zero operator");

  // Power iteration on A^2 so that +/- lambda pairs do not oscillate.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> v(n), w(n), u(n);
  for (double& x : v) x = normal(rng);
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double e : x) s += e * e;
    s = std::sqrt(s);
    for (double& e : x) e /= s;
    return s;
  };
  normalize(v);
  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a(i, j) * x[j];
      y[i] = s;
    }
  };

  double residual = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    apply(v, w);
    apply(w, u);
    double rho = 0.0;
    for (double e : w) rho += e * e;  // v^T A^2 v
    if (rho == 0.0) {
      for (double& x : v) x = normal(rng);
      normalize(v);
      continue;
    }
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = u[i] - rho * v[i];
      r2 += d * d;
    }
    residual = std::sqrt(r2) / rho;
    if (residual <= tol) return std::sqrt(rho);
    v = u;
    normalize(v);
  }
  std::ostringstream os;
  os << "max_abs_eigval: power iteration did not converge in " << max_iter
     << " iterations (relative residual " << residual << ")";
  throw ConvergenceError(os.str(), residual);
}

SymMatrix mat_poly(const SymMatrix& sym, std::span<const double> h) {
  if (h.empty()) throw ShapeError("mat_poly: empty coefficient vector");
  const std::size_t n = sym.n();
  const Matrix& a = sym.matrix();
  Matrix r = Matrix::identity(n) * h.back();
  Matrix tmp;
  for (std::size_t k = h.size() - 1; k-- > 0;) {
    matmul_into(r, a, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp(i, i) += h[k];
    std::swap(r, tmp);
  }
  return SymMatrix(std::move(r));
}

SymMatrix reconstruct(const EigenPair& eig, std::span<const double> values) {
  const std::size_t n = eig.vectors.rows();
  if (values.size() != n) throw ShapeError("reconstruct: value count mismatch");
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += eig.vectors(i, k) * values[k] * eig.vectors(j, k);
      out(i, j) = out(j, i) = s;
    }
  }
  return SymMatrix(std::move(out));
}

Cholesky cholesky_logdet(const SymMatrix& sym) {
  const std::size_t n = sym.n();
  const Matrix& a = sym.matrix();
  Cholesky c{Matrix(n, n), 0.0};
  Matrix& l = c.lower;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) {
      std::ostringstream os;
      os << "cholesky: not PD (pivot " << j << " = " << d << ")";
      throw NotPositiveDefinite(os.str(), j);
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    c.logdet += 2.0 * std::log(ljj);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return c;
}

Matrix cholesky_solve(const Cholesky& c, const Matrix& b) {
  const Matrix& l = c.lower;
  const std::size_t n = l.rows();
  if (b.rows() != n) throw ShapeError("cholesky_solve: rhs row count mismatch");
  Matrix x = b;
  for (std::size_t col = 0; col < b.cols(); ++col) {
    for (std::size_t i = 0; i < n; ++i) {
      double s = x(i, col);
      for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * x(k, col);
      x(i, col) = s / l(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double s = x(i, col);
      for (std::size_t k = i + 1; k < n; ++k) s -= l(k, i) * x(k, col);
      x(i, col) = s / l(i, i);
    }
  }
  return x;
}

SymMatrix cholesky_inverse(const Cholesky& c) {
  Matrix inv = cholesky_solve(c, Matrix::identity(c.lower.rows()));
  const std::size_t n = inv.rows();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) inv(i, j) = inv(j, i) = 0.5 * (inv(i, j) + inv(j, i));
  return SymMatrix(std::move(inv));
}

}  // namespace gdn
