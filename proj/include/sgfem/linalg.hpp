#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sgfem/error.hpp"

namespace sgfem {

using Vector = std::vector<double>;

/// Row-major dense matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {}

  static DenseMatrix identity(int n) {
    DenseMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  [[nodiscard]] int rows() const noexcept { return rows_; }
  [[nodiscard]] int cols() const noexcept { return cols_; }

  double& operator()(int i, int j) noexcept { return data_[index(i, j)]; }
  double operator()(int i, int j) const noexcept { return data_[index(i, j)]; }

  [[nodiscard]] std::span<double> row(int i) noexcept {
    return {data_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_),
            static_cast<std::size_t>(cols_)};
  }
  [[nodiscard]] std::span<const double> row(int i) const noexcept {
    return {data_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_),
            static_cast<std::size_t>(cols_)};
  }

  [[nodiscard]] DenseMatrix transposed() const {
    DenseMatrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i) {
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    }
    return t;
  }

  DenseMatrix& operator+=(const DenseMatrix& other) {
    if (other.rows_ != rows_ || other.cols_ != cols_) {
      throw Error(ErrorCode::DimensionMismatch, "matrix sum of different shapes");
    }
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
    return *this;
  }

  [[nodiscard]] Vector multiply(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != cols_) throw Error(ErrorCode::DimensionMismatch, "matrix-vector product");
    Vector y(static_cast<std::size_t>(rows_), 0.0);
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      const auto r = row(i);
      for (int j = 0; j < cols_; ++j) s += r[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  [[nodiscard]] double max_abs() const noexcept {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  [[nodiscard]] std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(j);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline double inf_norm(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

/// LU factorization with partial pivoting, PA = LU. A pivot smaller than
/// 1e-14 times the infinity norm of its original row counts as singular.
class LuFactorization {
 public:
  static constexpr double kPivotTol = 1e-14;

  explicit LuFactorization(DenseMatrix a, ErrorCode on_singular = ErrorCode::SingularMatrix)
      : lu_(std::move(a)) {
    const int n = lu_.rows();
    if (lu_.cols() != n) throw Error(ErrorCode::DimensionMismatch, "LU needs a square matrix");
    perm_.resize(static_cast<std::size_t>(n));
    std::vector<double> row_norm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      perm_[static_cast<std::size_t>(i)] = i;
      row_norm[static_cast<std::size_t>(i)] = inf_norm(lu_.row(i));
    }
    for (int k = 0; k < n; ++k) {
      int piv = k;
      double best = std::abs(lu_(k, k));
      for (int i = k + 1; i < n; ++i) {
        const double v = std::abs(lu_(i, k));
        if (v > best) {
          best = v;
          piv = i;
        }
      }
      if (piv != k) {
        std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(), lu_.row(piv).begin());
        std::swap(perm_[static_cast<std::size_t>(k)], perm_[static_cast<std::size_t>(piv)]);
        std::swap(row_norm[static_cast<std::size_t>(k)], row_norm[static_cast<std::size_t>(piv)]);
      }
      const double pivot = lu_(k, k);
      if (!(std::abs(pivot) >= kPivotTol * row_norm[static_cast<std::size_t>(k)]) || pivot == 0.0) {
        throw Error(on_singular, "pivot " + std::to_string(k) + " below tolerance");
      }
      const auto rk = lu_.row(k);
      for (int i = k + 1; i < n; ++i) {
        double& lik = lu_(i, k);
        if (lik == 0.0) continue;
        lik /= pivot;
        const double m = lik;
        auto ri = lu_.row(i);
        for (int j = k + 1; j < n; ++j) ri[static_cast<std::size_t>(j)] -= m * rk[static_cast<std::size_t>(j)];
      }
    }
  }

  [[nodiscard]] int size() const noexcept { return lu_.rows(); }

  /// Solves A x = b.
  [[nodiscard]] Vector solve(std::span<const double> b) const {
    const int n = size();
    if (static_cast<int>(b.size()) != n) throw Error(ErrorCode::DimensionMismatch, "LU solve");
    Vector x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(i)] = b[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])];
    for (int i = 0; i < n; ++i) {
      const auto r = lu_.row(i);
      double s = x[static_cast<std::size_t>(i)];
      for (int j = 0; j < i; ++j) s -= r[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(i)] = s;
    }
    for (int i = n - 1; i >= 0; --i) {
      const auto r = lu_.row(i);
      double s = x[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) s -= r[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
      x[static_cast<std::size_t>(i)] = s / r[static_cast<std::size_t>(i)];
    }
    return x;
  }

  /// Solves A^T x = b.
  [[nodiscard]] Vector solve_transposed(std::span<const double> b) const {
    const int n = size();
    if (static_cast<int>(b.size()) != n) throw Error(ErrorCode::DimensionMismatch, "LU transposed solve");
    // A^T = U^T L^T P, so solve U^T y = b, L^T z = y, x = P^T z.
    Vector y(b.begin(), b.end());
    for (int i = 0; i < n; ++i) {
      double s = y[static_cast<std::size_t>(i)];
      for (int j = 0; j < i; ++j) s -= lu_(j, i) * y[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s / lu_(i, i);
    }
    for (int i = n - 1; i >= 0; --i) {
      double s = y[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) s -= lu_(j, i) * y[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    Vector x(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) x[static_cast<std::size_t>(perm_[static_cast<std::size_t>(i)])] = y[static_cast<std::size_t>(i)];
    return x;
  }

 private:
  DenseMatrix lu_;
  std::vector<int> perm_;
};

inline Vector solve(const DenseMatrix& a, std::span<const double> b, ErrorCode on_singular = ErrorCode::SingularMatrix) {
  return LuFactorization(a, on_singular).solve(b);
}

inline double one_norm(const DenseMatrix& a) {
  double best = 0.0;
  for (int j = 0; j < a.cols(); ++j) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i) s += std::abs(a(i, j));
    best = std::max(best, s);
  }
  return best;
}

/// Hager's estimate of ||A^{-1}||_1 from an existing factorization.
inline double inverse_one_norm_estimate(const LuFactorization& lu) {
  const int n = lu.size();
  if (n == 0) return 0.0;
  Vector x(static_cast<std::size_t>(n), 1.0 / n);
  double est = 0.0;
  int last_j = -1;
  for (int it = 0; it < 5; ++it) {
    const Vector y = lu.solve(x);
    double ny = 0.0;
    for (double v : y) ny += std::abs(v);
    if (it > 0 && ny <= est) break;
    est = ny;
    Vector xi(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) xi[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)] >= 0.0 ? 1.0 : -1.0;
    const Vector z = lu.solve_transposed(xi);
    int j = 0;
    for (int i = 1; i < n; ++i) {
      if (std::abs(z[static_cast<std::size_t>(i)]) > std::abs(z[static_cast<std::size_t>(j)])) j = i;
    }
    double ztx = 0.0;
    for (int i = 0; i < n; ++i) ztx += z[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(i)];
    if (std::abs(z[static_cast<std::size_t>(j)]) <= ztx || j == last_j) break;
    last_j = j;
    std::fill(x.begin(), x.end(), 0.0);
    x[static_cast<std::size_t>(j)] = 1.0;
  }
  // Higham's alternating-sign safeguard.
  Vector alt(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double sign = (i % 2 == 0) ? 1.0 : -1.0;
    alt[static_cast<std::size_t>(i)] = sign * (1.0 + (n > 1 ? static_cast<double>(i) / (n - 1) : 0.0));
  }
  const Vector y = lu.solve(alt);
  double ny = 0.0;
  for (double v : y) ny += std::abs(v);
  return std::max(est, 2.0 * ny / (3.0 * n));
}

/// 1-norm condition estimate of D^{-1/2} M D^{-1/2} with D = |diag M|.
inline double condition_estimate(const DenseMatrix& m) {
  const int n = m.rows();
  if (m.cols() != n) throw Error(ErrorCode::DimensionMismatch, "condition estimate needs a square matrix");
  DenseMatrix s = m;
  std::vector<double> scale(static_cast<std::size_t>(n), 1.0);
  for (int i = 0; i < n; ++i) {
    const double d = std::abs(m(i, i));
    if (d > 0.0) scale[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(d);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s(i, j) *= scale[static_cast<std::size_t>(i)] * scale[static_cast<std::size_t>(j)];
  }
  const LuFactorization lu(s, ErrorCode::SingularMatrix);
  return one_norm(s) * inverse_one_norm_estimate(lu);
}

}  // namespace sgfem
