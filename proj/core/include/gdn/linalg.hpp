#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace gdn {

/// Dense row-major real matrix. The building block for every n x n
/// operand in the library; sizes here are small (n <= a few hundred).
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool square() const noexcept { return rows_ == cols_; }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }

  void fill(double v);
  void zero_diagonal();

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);
  /// this += s * other
  Matrix& add_scaled(const Matrix& other, double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);

Matrix matmul(const Matrix& a, const Matrix& b);
/// out = a * b; out must not alias a or b. Resizes out when needed.
void matmul_into(const Matrix& a, const Matrix& b, Matrix& out);
Matrix transpose(const Matrix& a);

/// Frobenius inner product sum_ij a_ij b_ij.
double inner(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& a);
double max_abs(const Matrix& a);
bool all_finite(const Matrix& a);
bool is_symmetric(const Matrix& a, double tol);

double soft_threshold(double x, double t);

/// Symmetric matrix. Construction checks symmetry (relative 1e-12) and
/// finiteness, then stores an exactly symmetric copy.
class SymMatrix {
 public:
  static constexpr double kSymmetryTol = 1e-12;

  SymMatrix() = default;
  explicit SymMatrix(Matrix m);

  static SymMatrix identity(std::size_t n);
  static SymMatrix zeros(std::size_t n);

  std::size_t n() const noexcept { return m_.rows(); }
  const Matrix& matrix() const noexcept { return m_; }
  double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  friend bool operator==(const SymMatrix&, const SymMatrix&) = default;

 private:
  Matrix m_;
};

struct EigenPair {
  Matrix vectors;               ///< columns are orthonormal eigenvectors
  std::vector<double> values;   ///< ascending
};

inline constexpr std::size_t kJacobiMaxSweeps = 100;

/// Cyclic Jacobi eigen-decomposition. Throws ConvergenceError carrying the
/// off-diagonal residual when kJacobiMaxSweeps sweeps are not enough.
EigenPair sym_eig(const SymMatrix& a);

/// Power iteration estimate of max_i |lambda_i|. Throws Error("zero operator")
/// for the zero matrix and ConvergenceError past max_iter.
double max_abs_eigval(const SymMatrix& a, double tol = 1e-12, std::size_t max_iter = 200000);

/// sum_k h_k a^k by Horner's rule.
SymMatrix mat_poly(const SymMatrix& a, std::span<const double> h);

/// V diag(f) V^T for an eigen-decomposition.
SymMatrix reconstruct(const EigenPair& eig, std::span<const double> values);

struct Cholesky {
  Matrix lower;
  double logdet = 0.0;
};

/// Throws NotPositiveDefinite on a non-positive pivot.
Cholesky cholesky_logdet(const SymMatrix& a);
/// Inverse of the factored matrix.
SymMatrix cholesky_inverse(const Cholesky& c);
/// Solve (L L^T) x = b for a matrix right-hand side.
Matrix cholesky_solve(const Cholesky& c, const Matrix& b);

}  // namespace gdn
