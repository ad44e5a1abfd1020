#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sgfem/linalg.hpp"

using namespace sgfem;

namespace {

DenseMatrix random_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  DenseMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = u(rng);
  }
  return a;
}

DenseMatrix laplacian(int n) {
  DenseMatrix a(n, n);
  for (int i = 0; i < n; ++i) {
    a(i, i) = 2.0;
    if (i > 0) a(i, i - 1) = -1.0;
    if (i + 1 < n) a(i, i + 1) = -1.0;
  }
  return a;
}

}  // namespace

TEST(Lu, SolvesRandomSystems) {
  std::mt19937_64 rng(9);
  for (int n : {1, 2, 5, 20, 60}) {
    const DenseMatrix a = random_matrix(n, rng);
    Vector x(static_cast<std::size_t>(n));
    for (auto& v : x) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Vector b = a.multiply(x);
    const LuFactorization lu(a);
    const Vector y = lu.solve(b);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(y[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)], 1e-9);
    const Vector bt = a.transposed().multiply(x);
    const Vector yt = lu.solve_transposed(bt);
    for (int i = 0; i < n; ++i) EXPECT_NEAR(yt[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(i)], 1e-9);
  }
}

TEST(Lu, NeedsPivoting) {
  DenseMatrix a(2, 2);
  a(0, 0) = 0.0;
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  a(1, 1) = 1.0;
  const Vector x = solve(a, Vector{2.0, 3.0});
  EXPECT_DOUBLE_EQ(x[0], 1.0);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
}

TEST(Lu, SingularReportsRequestedCode) {
  DenseMatrix a(3, 3);
  for (int i = 0; i < 3; ++i) {
    a(i, 0) = 1.0;
    a(i, 1) = 2.0;
    a(i, 2) = i;
  }
  try {
    (void)solve(a, Vector{1, 1, 1}, ErrorCode::SingularJacobian);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularJacobian);
  }
  // Rank deficient up to rounding: second row a multiple of the first.
  DenseMatrix b(2, 2);
  b(0, 0) = 0.1;
  b(0, 1) = 0.3;
  b(1, 0) = 0.2;
  b(1, 1) = 0.6;
  EXPECT_THROW((void)solve(b, Vector{1, 1}), Error);
  EXPECT_THROW(LuFactorization(DenseMatrix(2, 3)), Error);
}

TEST(ConditionEstimate, Identity) { EXPECT_DOUBLE_EQ(condition_estimate(DenseMatrix::identity(7)), 1.0); }

TEST(ConditionEstimate, DiagonalScalingRemoved) {
  DenseMatrix a(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 1e6;
  EXPECT_NEAR(condition_estimate(a), 1.0, 1e-14);
}

TEST(ConditionEstimate, LaplacianGrowsQuadratically) {
  const double c100 = condition_estimate(laplacian(99));
  const double c200 = condition_estimate(laplacian(199));
  const double ratio = c200 / c100;
  EXPECT_GE(ratio, 3.0);
  EXPECT_LE(ratio, 5.0);
  // Exact value: the scaled matrix is A/2 with ||A/2||_1 = 2 and
  // ||(A/2)^{-1}||_1 = 2 ||A^{-1}||_1, the inverse known in closed form
  // min(i,j)(n+1-max(i,j))/(n+1).
  const int n = 99;
  double inv = 0.0;
  for (int j = 1; j <= n; ++j) {
    double s = 0.0;
    for (int i = 1; i <= n; ++i) s += static_cast<double>(std::min(i, j)) * (n + 1 - std::max(i, j)) / (n + 1);
    inv = std::max(inv, s);
  }
  EXPECT_NEAR(c100, 4.0 * inv, 1e-8 * inv);
}

TEST(ConditionEstimate, SingularMatrix) {
  DenseMatrix a(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  a(1, 1) = 1.0;
  try {
    (void)condition_estimate(a);
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularMatrix);
  }
}

TEST(ConditionEstimateProperty, WithinFactorOfExact) {
  // Estimator is a lower bound of the exact ||A^{-1}||_1 and rarely far off.
  std::mt19937_64 rng(17);
  for (int t = 0; t < 20; ++t) {
    const int n = 4 + t;
    const DenseMatrix a = random_matrix(n, rng);
    const LuFactorization lu(a);
    double exact = 0.0;
    for (int j = 0; j < n; ++j) {
      Vector e(static_cast<std::size_t>(n), 0.0);
      e[static_cast<std::size_t>(j)] = 1.0;
      const Vector col = lu.solve(e);
      double s = 0.0;
      for (double v : col) s += std::abs(v);
      exact = std::max(exact, s);
    }
    const double est = inverse_one_norm_estimate(lu);
    EXPECT_LE(est, exact * (1 + 1e-10));
    EXPECT_GE(est, exact / 10.0);
  }
}

TEST(DenseMatrixOps, Basics) {
  DenseMatrix a(2, 3);
  a(0, 2) = -4.0;
  a(1, 0) = 2.0;
  EXPECT_EQ(a.max_abs(), 4.0);
  const auto t = a.transposed();
  EXPECT_EQ(t.rows(), 3);
  EXPECT_EQ(t(2, 0), -4.0);
  DenseMatrix b(2, 3);
  b(0, 2) = 1.0;
  a += b;
  EXPECT_EQ(a(0, 2), -3.0);
  EXPECT_EQ(inf_norm(Vector{1.0, -5.0, 2.0}), 5.0);
  EXPECT_EQ(one_norm(a), 3.0);
}
