#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "fmpols/errors.hpp"

namespace fmpols {

using Vec = std::vector<double>;

// Dense row-major real matrix. Every public constructor rejects non-finite
// entries, so a Mat in hand is always finite.
class Mat {
 public:
  Mat() = default;
  Mat(std::size_t rows, std::size_t cols, double fill = 0.0);
  Mat(std::size_t rows, std::size_t cols, std::vector<double> entries);
  Mat(std::initializer_list<std::initializer_list<double>> rows);

  static Mat identity(std::size_t n);
  static Mat diag(std::span<const double> d);
  static Mat column(std::span<const double> v);
  static Mat row(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return entries_.empty(); }
  bool square() const noexcept { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<const double> data() const noexcept { return entries_; }
  std::span<double> data() noexcept { return entries_; }
  std::span<const double> row_span(std::size_t i) const {
    return std::span<const double>(entries_).subspan(i * cols_, cols_);
  }

  Mat transpose() const;
  Mat& operator+=(const Mat& other);
  Mat& operator-=(const Mat& other);
  Mat& operator*=(double s);

  bool operator==(const Mat& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

Mat operator+(Mat a, const Mat& b);
Mat operator-(Mat a, const Mat& b);
Mat operator*(const Mat& a, const Mat& b);
Mat operator*(double s, Mat m);
Vec operator*(const Mat& m, std::span<const double> v);

// Small vector helpers used throughout.
Vec vec_add(std::span<const double> a, std::span<const double> b);
Vec vec_sub(std::span<const double> a, std::span<const double> b);
Vec vec_scale(std::span<const double> a, double s);
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> v);
double norm2_squared(std::span<const double> v);
Mat outer(std::span<const double> a, std::span<const double> b);

double frobenius_norm(const Mat& m);
double max_abs_entry(const Mat& m);
void require_finite(std::span<const double> values, const char* where);

/// Largest singular value by power iteration on m^T m. Stops when the
/// Rayleigh quotient changes by less than 1e-12 (relative) or after 500
/// iterations.
double operator_norm(const Mat& m);

struct EigenSet {
  std::vector<std::complex<double>> values;
  double max_abs = 0.0;
};

/// Eigenvalues of a square matrix of dimension <= 8. Dimension <= 2 uses the
/// characteristic polynomial; larger matrices go through Hessenberg
/// reduction and shifted QR. Throws NonConvergence past 10^4 sweeps.
EigenSet eigenvalues_small(const Mat& m);

struct RankOneUpdate {
  Vec gain;       // K = P z / (1 + z^T P z)
  Mat inverse;    // P - K z^T P, symmetrized
};

RankOneUpdate sherman_morrison(const Mat& P, std::span<const double> z);

struct DareSolution {
  Mat P;
  Mat L;
  int iterations = 0;
};

/// Steady-state predictor Riccati equation by fixed-point iteration from
/// P0 = Q. L = A P C^T (C P C^T + R)^-1.
DareSolution solve_dare(const Mat& A, const Mat& C, const Mat& Q, const Mat& R);

/// [A^0, A^1, ..., A^k_max].
std::vector<Mat> mat_power_seq(const Mat& A, int k_max);

// Gaussian elimination with partial pivoting.
Mat inverse(const Mat& m);
Mat solve(const Mat& A, const Mat& B);  // A X = B
double determinant(const Mat& m);
double log_abs_determinant(const Mat& m);
int numerical_rank(const Mat& m, double tol);

}  // namespace fmpols
