#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "gdn/errors.hpp"
#include "gdn/linalg.hpp"
#include "test_util.hpp"

using namespace gdn;

TEST(SymMatrix, RejectsAsymmetricAndNonFinite) {
  EXPECT_THROW(SymMatrix(Matrix::from_rows({{1, 2}, {3, 1}})), InvariantError);
  EXPECT_THROW(SymMatrix(Matrix::from_rows({{1, NAN}, {NAN, 1}})), InvariantError);
  EXPECT_THROW(SymMatrix(Matrix(2, 3)), ShapeError);
  const SymMatrix s(Matrix::from_rows({{1, 2}, {2, 1}}));
  EXPECT_EQ(s(0, 1), 2.0);
}

TEST(SymEig, Identity) {
  const EigenPair e = sym_eig(SymMatrix::identity(3));
  for (double v : e.values) EXPECT_NEAR(v, 1.0, 1e-14);
  EXPECT_LT(testutil::orthogonality_error(e.vectors), 1e-12);
}

TEST(SymEig, Diagonal) {
  const EigenPair e = sym_eig(SymMatrix(Matrix::from_rows({{5, 0}, {0, 2}})));
  EXPECT_NEAR(e.values[0], 2.0, 1e-14);
  EXPECT_NEAR(e.values[1], 5.0, 1e-14);
  EXPECT_NEAR(std::abs(e.vectors(1, 0)), 1.0, 1e-14);
}

TEST(SymEig, SwapMatrixMatchesCharacteristicPolynomial) {
  // lambda^2 - 1 = 0 with eigenvectors (1, -1)/sqrt2 and (1, 1)/sqrt2.
  const EigenPair e = sym_eig(SymMatrix(Matrix::from_rows({{0, 1}, {1, 0}})));
  EXPECT_NEAR(e.values[0], -1.0, 1e-14);
  EXPECT_NEAR(e.values[1], 1.0, 1e-14);
  const double r = 1.0 / std::sqrt(2.0);
  EXPECT_NEAR(std::abs(e.vectors(0, 0)), r, 1e-12);
  EXPECT_NEAR(e.vectors(0, 0), -e.vectors(1, 0), 1e-12);
  EXPECT_NEAR(e.vectors(0, 1), e.vectors(1, 1), 1e-12);
}

TEST(SymEig, RandomReconstructionAndOrthogonality) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + trial % 12;
    const SymMatrix a = testutil::random_sym(n, rng);
    const EigenPair e = sym_eig(a);
    EXPECT_TRUE(std::is_sorted(e.values.begin(), e.values.end()));
    EXPECT_LT(testutil::orthogonality_error(e.vectors), 1e-8);
    const Matrix back = reconstruct(e, e.values).matrix();
    EXPECT_LT(frobenius_norm(back - a.matrix()) / std::max(1e-300, frobenius_norm(a.matrix())), 1e-8);
  }
}

TEST(MaxAbsEigval, Examples) {
  EXPECT_NEAR(max_abs_eigval(SymMatrix(Matrix::from_rows({{3, 0}, {0, -7}}))), 7.0, 1e-10);
  EXPECT_NEAR(max_abs_eigval(SymMatrix::identity(5)), 1.0, 1e-12);
  EXPECT_NEAR(max_abs_eigval(SymMatrix(Matrix::from_rows({{0, 1}, {1, 0}}))), 1.0, 1e-10);
  try {
    max_abs_eigval(SymMatrix::zeros(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("zero operator"), std::string::npos);
  }
}

TEST(MaxAbsEigval, AgreesWithJacobi) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    const SymMatrix a = testutil::random_sym(2 + trial % 11, rng);
    const EigenPair e = sym_eig(a);
    const double ref = std::max(std::abs(e.values.front()), std::abs(e.values.back()));
    EXPECT_NEAR(max_abs_eigval(a), ref, 1e-8 * std::max(1.0, ref));
  }
}

TEST(MatPoly, Examples) {
  std::mt19937_64 rng(5);
  const SymMatrix a = testutil::random_sym(4, rng);
  const std::vector<double> h0{2.5};
  EXPECT_EQ(mat_poly(a, h0).matrix(), (Matrix::identity(4) * 2.5));
  const std::vector<double> h1{0, 1};
  EXPECT_LT(max_abs(mat_poly(a, h1).matrix() - a.matrix()), 1e-15);
  const std::vector<double> h2{1, 2, 3};
  const SymMatrix d(Matrix::from_rows({{1, 0}, {0, 2}}));
  const Matrix r = mat_poly(d, h2).matrix();
  EXPECT_NEAR(r(0, 0), 6.0, 1e-14);
  EXPECT_NEAR(r(1, 1), 17.0, 1e-14);
  EXPECT_EQ(r(0, 1), 0.0);
}

TEST(MatPoly, CommutesWithArgument) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> nd;
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix a = testutil::random_sym(2 + trial % 11, rng);
    std::vector<double> h(4);
    for (double& v : h) v = nd(rng);
    const Matrix f = mat_poly(a, h).matrix();
    EXPECT_LT(frobenius_norm(matmul(f, a.matrix()) - matmul(a.matrix(), f)), 1e-10);
  }
}

TEST(MatPoly, ScalingAmbiguity) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> nd;
  for (double c : {0.5, 2.0, 10.0}) {
    const SymMatrix a = testutil::random_sym(6, rng);
    std::vector<double> h{nd(rng), nd(rng), nd(rng)}, hs(h);
    for (std::size_t k = 0; k < hs.size(); ++k) hs[k] /= std::pow(c, static_cast<double>(k));
    const SymMatrix ca(a.matrix() * c);
    EXPECT_LT(max_abs(mat_poly(ca, hs).matrix() - mat_poly(a, h).matrix()), 1e-10);
  }
}

TEST(Cholesky, Examples) {
  const Cholesky c1 = cholesky_logdet(SymMatrix::identity(3));
  EXPECT_EQ(c1.lower, Matrix::identity(3));
  EXPECT_EQ(c1.logdet, 0.0);
  const Cholesky c2 = cholesky_logdet(SymMatrix(Matrix::from_rows({{4, 0}, {0, 9}})));
  EXPECT_NEAR(c2.lower(0, 0), 2.0, 1e-15);
  EXPECT_NEAR(c2.lower(1, 1), 3.0, 1e-15);
  EXPECT_NEAR(c2.logdet, std::log(36.0), 1e-14);
  const Cholesky c3 = cholesky_logdet(SymMatrix(Matrix::from_rows({{2, -1}, {-1, 2}})));
  EXPECT_NEAR(c3.logdet, std::log(3.0), 1e-14);
  const Matrix llt = matmul(c3.lower, transpose(c3.lower));
  EXPECT_LT(max_abs(llt - Matrix::from_rows({{2, -1}, {-1, 2}})), 1e-14);
}

TEST(Cholesky, NotPositiveDefinite) {
  EXPECT_THROW(cholesky_logdet(SymMatrix(Matrix::from_rows({{1, 2}, {2, 1}}))), NotPositiveDefinite);
  EXPECT_THROW(cholesky_logdet(SymMatrix::zeros(2)), NotPositiveDefinite);
}

TEST(Cholesky, InverseAndSolve) {
  const SymMatrix a(Matrix::from_rows({{4, 1, 0}, {1, 3, 1}, {0, 1, 2}}));
  const Cholesky c = cholesky_logdet(a);
  const Matrix inv = cholesky_inverse(c).matrix();
  EXPECT_LT(max_abs(matmul(a.matrix(), inv) - Matrix::identity(3)), 1e-14);
  const Matrix b = Matrix::from_rows({{1}, {2}, {3}});
  EXPECT_LT(max_abs(matmul(a.matrix(), cholesky_solve(c, b)) - b), 1e-14);
}

TEST(SoftThreshold, Shrinks) {
  EXPECT_EQ(soft_threshold(3.0, 1.0), 2.0);
  EXPECT_EQ(soft_threshold(-3.0, 1.0), -2.0);
  EXPECT_EQ(soft_threshold(0.5, 1.0), 0.0);
  EXPECT_EQ(soft_threshold(-0.5, 1.0), 0.0);
}

TEST(Matrix, MatmulAgainstNaiveLoop) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix a(3, 4), b(4, 2);
  for (double& v : a.values()) v = u(rng);
  for (double& v : b.values()) v = u(rng);
  const Matrix c = matmul(a, b);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0;
      for (std::size_t k = 0; k < 4; ++k) s += a(i, k) * b(k, j);
      EXPECT_NEAR(c(i, j), s, 1e-15);
    }
  EXPECT_THROW(matmul(b, b), ShapeError);
}
