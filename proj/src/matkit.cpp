#include "fmpols/matkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace fmpols {

namespace {

void check_same_shape(const Mat& a, const Mat& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::InvalidArgument, std::string(op) + ": shape mismatch");
  }
}

}  // namespace

void require_finite(std::span<const double> values, const char* where) {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFinite, std::string(where) + ": non-finite value");
    }
  }
}

Mat::Mat(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
  require_finite(std::span<const double>(&fill, 1), "Mat");
}

Mat::Mat(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  if (entries_.size() != rows_ * cols_) {
    throw Error(ErrorCode::InvalidArgument, "Mat: entries length != rows * cols");
  }
  require_finite(entries_, "Mat");
}

Mat::Mat(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  entries_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw Error(ErrorCode::InvalidArgument, "Mat: ragged rows");
    entries_.insert(entries_.end(), r.begin(), r.end());
  }
  require_finite(entries_, "Mat");
}

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(std::span<const double> d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  require_finite(d, "Mat::diag");
  return m;
}

Mat Mat::column(std::span<const double> v) {
  return Mat(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Mat Mat::row(std::span<const double> v) {
  return Mat(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

Mat Mat::transpose() const {
  Mat t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

Mat& Mat::operator+=(const Mat& other) {
  check_same_shape(*this, other, "operator+");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += other.entries_[k];
  return *this;
}

Mat& Mat::operator-=(const Mat& other) {
  check_same_shape(*this, other, "operator-");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= other.entries_[k];
  return *this;
}

Mat& Mat::operator*=(double s) {
  for (double& e : entries_) e *= s;
  return *this;
}

Mat operator+(Mat a, const Mat& b) { return a += b; }
Mat operator-(Mat a, const Mat& b) { return a -= b; }
Mat operator*(double s, Mat m) { return m *= s; }

Mat operator*(const Mat& a, const Mat& b) {
  if (a.cols() != b.rows()) throw Error(ErrorCode::InvalidArgument, "operator*: inner dimension mismatch");
  Mat c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
    }
  }
  return c;
}

Vec operator*(const Mat& m, std::span<const double> v) {
  if (m.cols() != v.size()) throw Error(ErrorCode::InvalidArgument, "Mat*Vec: dimension mismatch");
  Vec out(m.rows(), 0.0);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols(); ++j) acc += m(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

Vec vec_add(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "vec_add: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vec vec_sub(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "vec_sub: length mismatch");
  Vec out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vec vec_scale(std::span<const double> a, double s) {
  Vec out(a.begin(), a.end());
  for (double& x : out) x *= s;
  return out;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "dot: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double norm2_squared(std::span<const double> v) { return dot(v, v); }
double norm2(std::span<const double> v) { return std::sqrt(norm2_squared(v)); }

Mat outer(std::span<const double> a, std::span<const double> b) {
  Mat m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

double frobenius_norm(const Mat& m) { return norm2(m.data()); }

double max_abs_entry(const Mat& m) {
  double best = 0.0;
  for (double e : m.data()) best = std::max(best, std::abs(e));
  return best;
}

double operator_norm(const Mat& m) {
  if (m.empty() || max_abs_entry(m) == 0.0) return 0.0;
  const std::size_t n = m.cols();
  const Mat mt = m.transpose();

  auto run = [&](Vec v) {
    double nv = norm2(v);
    for (double& x : v) x /= nv;
    double rayleigh = 0.0;
    for (int it = 0; it < 500; ++it) {
      Vec w = m * v;
      const double next = norm2_squared(w);
      Vec u = mt * w;
      const double nu = norm2(u);
      if (nu == 0.0) return next;
      for (std::size_t i = 0; i < n; ++i) v[i] = u[i] / nu;
      const bool done = it > 0 && std::abs(next - rayleigh) < 1e-12 * next;
      rayleigh = next;
      if (done) break;
    }
    return rayleigh;
  };

  Vec start(n);
  for (std::size_t i = 0; i < n; ++i) start[i] = 1.0 + 0.5 * std::cos(1.234 * static_cast<double>(i) + 0.3);
  double sq = run(start);
  if (sq == 0.0) {
    // Start vector fell in the null space; restart from the heaviest column.
    std::size_t best = 0;
    double best_norm = -1.0;
    for (std::size_t j = 0; j < n; ++j) {
      double c = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i) c += m(i, j) * m(i, j);
      if (c > best_norm) best_norm = c, best = j;
    }
    Vec e(n, 0.0);
    e[best] = 1.0;
    sq = run(e);
  }
  return std::sqrt(sq);
}

namespace {

EigenSet finish(std::vector<std::complex<double>> values) {
  EigenSet out;
  out.values = std::move(values);
  for (const auto& z : out.values) out.max_abs = std::max(out.max_abs, std::abs(z));
  return out;
}

std::pair<std::complex<double>, std::complex<double>> quadratic_roots(double trace, double det) {
  const double half = 0.5 * trace;
  const double disc = half * half - det;
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    const double big = half >= 0.0 ? half + s : half - s;
    const double small = big != 0.0 ? det / big : 0.0;
    return {big, small};
  }
  const double s = std::sqrt(-disc);
  return {{half, s}, {half, -s}};
}

// Householder reduction to upper Hessenberg form, 1-based buffer a[1..n][1..n].
void hessenberg(std::vector<std::vector<double>>& a, int n) {
  for (int k = 1; k <= n - 2; ++k) {
    double alpha = 0.0;
    for (int i = k + 1; i <= n; ++i) alpha += a[i][k] * a[i][k];
    alpha = std::sqrt(alpha);
    if (alpha == 0.0) continue;
    if (a[k + 1][k] > 0.0) alpha = -alpha;
    std::vector<double> v(n + 1, 0.0);
    v[k + 1] = a[k + 1][k] - alpha;
    for (int i = k + 2; i <= n; ++i) v[i] = a[i][k];
    double vv = 0.0;
    for (int i = k + 1; i <= n; ++i) vv += v[i] * v[i];
    if (vv == 0.0) continue;
    // A <- (I - 2vv^T/vv) A (I - 2vv^T/vv)
    for (int j = 1; j <= n; ++j) {
      double s = 0.0;
      for (int i = k + 1; i <= n; ++i) s += v[i] * a[i][j];
      s *= 2.0 / vv;
      for (int i = k + 1; i <= n; ++i) a[i][j] -= s * v[i];
    }
    for (int i = 1; i <= n; ++i) {
      double s = 0.0;
      for (int j = k + 1; j <= n; ++j) s += a[i][j] * v[j];
      s *= 2.0 / vv;
      for (int j = k + 1; j <= n; ++j) a[i][j] -= s * v[j];
    }
    for (int i = k + 2; i <= n; ++i) a[i][k] = 0.0;
  }
}

// Francis double-shift QR on an upper Hessenberg matrix (1-based).
std::vector<std::complex<double>> hessenberg_qr(std::vector<std::vector<double>>& a, int n) {
  constexpr int kMaxSweeps = 10000;
  std::vector<double> wr(n + 1, 0.0), wi(n + 1, 0.0);
  double anorm = 0.0;
  for (int i = 1; i <= n; ++i)
    for (int j = std::max(i - 1, 1); j <= n; ++j) anorm += std::abs(a[i][j]);

  int nn = n;
  int sweeps = 0;
  double t = 0.0;
  double p = 0, q = 0, r = 0, s = 0, w = 0, x = 0, y = 0, z = 0;
  while (nn >= 1) {
    int its = 0;
    int l = 0;
    do {
      for (l = nn; l >= 2; --l) {
        s = std::abs(a[l - 1][l - 1]) + std::abs(a[l][l]);
        if (s == 0.0) s = anorm;
        if (std::abs(a[l][l - 1]) + s == s) {
          a[l][l - 1] = 0.0;
          break;
        }
      }
      if (l < 1) l = 1;
      x = a[nn][nn];
      if (l == nn) {
        wr[nn] = x + t;
        wi[nn--] = 0.0;
      } else {
        y = a[nn - 1][nn - 1];
        w = a[nn][nn - 1] * a[nn - 1][nn];
        if (l == nn - 1) {
          p = 0.5 * (y - x);
          q = p * p + w;
          z = std::sqrt(std::abs(q));
          x += t;
          if (q >= 0.0) {
            z = p + std::copysign(z, p);
            wr[nn - 1] = wr[nn] = x + z;
            if (z != 0.0) wr[nn] = x - w / z;
            wi[nn - 1] = wi[nn] = 0.0;
          } else {
            wr[nn - 1] = wr[nn] = x + p;
            wi[nn - 1] = -(wi[nn] = z);
          }
          nn -= 2;
        } else {
          if (++sweeps > kMaxSweeps) {
            throw Error(ErrorCode::NonConvergence, "eigenvalues_small: QR iteration exceeded 1e4 sweeps");
          }
          if (its > 0 && its % 10 == 0) {
            // Exceptional shift.
            t += x;
            for (int i = 1; i <= nn; ++i) a[i][i] -= x;
            s = std::abs(a[nn][nn - 1]) + std::abs(a[nn - 1][nn - 2]);
            y = x = 0.75 * s;
            w = -0.4375 * s * s;
          }
          ++its;
          int m = nn - 2;
          for (; m >= l; --m) {
            z = a[m][m];
            r = x - z;
            s = y - z;
            p = (r * s - w) / a[m + 1][m] + a[m][m + 1];
            q = a[m + 1][m + 1] - z - r - s;
            r = a[m + 2][m + 1];
            s = std::abs(p) + std::abs(q) + std::abs(r);
            p /= s;
            q /= s;
            r /= s;
            if (m == l) break;
            const double u = std::abs(a[m][m - 1]) * (std::abs(q) + std::abs(r));
            const double v = std::abs(p) * (std::abs(a[m - 1][m - 1]) + std::abs(z) + std::abs(a[m + 1][m + 1]));
            if (u + v == v) break;
          }
          for (int i = m + 2; i <= nn; ++i) {
            a[i][i - 2] = 0.0;
            if (i != m + 2) a[i][i - 3] = 0.0;
          }
          for (int k = m; k <= nn - 1; ++k) {
            if (k != m) {
              p = a[k][k - 1];
              q = a[k + 1][k - 1];
              r = 0.0;
              if (k != nn - 1) r = a[k + 2][k - 1];
              if ((x = std::abs(p) + std::abs(q) + std::abs(r)) != 0.0) {
                p /= x;
                q /= x;
                r /= x;
              }
            }
            if ((s = std::copysign(std::sqrt(p * p + q * q + r * r), p)) != 0.0) {
              if (k == m) {
                if (l != m) a[k][k - 1] = -a[k][k - 1];
              } else {
                a[k][k - 1] = -s * x;
              }
              p += s;
              x = p / s;
              y = q / s;
              z = r / s;
              q /= p;
              r /= p;
              for (int j = k; j <= nn; ++j) {
                p = a[k][j] + q * a[k + 1][j];
                if (k != nn - 1) {
                  p += r * a[k + 2][j];
                  a[k + 2][j] -= p * z;
                }
                a[k + 1][j] -= p * y;
                a[k][j] -= p * x;
              }
              const int mmin = nn < k + 3 ? nn : k + 3;
              for (int i = l; i <= mmin; ++i) {
                p = x * a[i][k] + y * a[i][k + 1];
                if (k != nn - 1) {
                  p += z * a[i][k + 2];
                  a[i][k + 2] -= p * r;
                }
                a[i][k + 1] -= p * q;
                a[i][k] -= p;
              }
            }
          }
        }
      }
    } while (l < nn - 1);
  }

  std::vector<std::complex<double>> out;
  out.reserve(n);
  for (int i = 1; i <= n; ++i) out.emplace_back(wr[i], wi[i]);
  return out;
}

}  // namespace

EigenSet eigenvalues_small(const Mat& m) {
  if (!m.square()) throw Error(ErrorCode::InvalidArgument, "eigenvalues_small: matrix not square");
  const int n = static_cast<int>(m.rows());
  if (n == 0 || n > 8) throw Error(ErrorCode::InvalidArgument, "eigenvalues_small: dimension must be in [1, 8]");
  if (n == 1) return finish({m(0, 0)});
  if (n == 2) {
    const double tr = m(0, 0) + m(1, 1);
    const double det = m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    auto [a, b] = quadratic_roots(tr, det);
    return finish({a, b});
  }
  std::vector<std::vector<double>> a(n + 1, std::vector<double>(n + 1, 0.0));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i + 1][j + 1] = m(i, j);
  hessenberg(a, n);
  return finish(hessenberg_qr(a, n));
}

RankOneUpdate sherman_morrison(const Mat& P, std::span<const double> z) {
  if (!P.square() || P.rows() != z.size()) {
    throw Error(ErrorCode::InvalidArgument, "sherman_morrison: dimension mismatch");
  }
  const std::size_t d = z.size();
  Vec pz = P * z;
  const double denom = 1.0 + dot(z, pz);
  RankOneUpdate out;
  out.gain = vec_scale(pz, 1.0 / denom);
  out.inverse = P;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j) out.inverse(i, j) -= out.gain[i] * pz[j];
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = i + 1; j < d; ++j) {
      const double avg = 0.5 * (out.inverse(i, j) + out.inverse(j, i));
      out.inverse(i, j) = avg;
      out.inverse(j, i) = avg;
    }
  }
  require_finite(out.inverse.data(), "sherman_morrison");
  return out;
}

DareSolution solve_dare(const Mat& A, const Mat& C, const Mat& Q, const Mat& R) {
  const std::size_t n = A.rows();
  if (!A.square() || C.cols() != n || Q.rows() != n || !Q.square() || R.rows() != C.rows() || !R.square()) {
    throw Error(ErrorCode::InvalidArgument, "solve_dare: dimension mismatch");
  }
  const Mat At = A.transpose();
  const Mat Ct = C.transpose();
  Mat P = Q;
  for (int it = 1; it <= 100000; ++it) {
    const Mat APCt = A * P * Ct;
    const Mat S = C * P * Ct + R;
    const Mat gain = APCt * inverse(S);
    Mat next = A * P * At - gain * APCt.transpose() + Q;
    // Keep the iterate symmetric.
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) next(i, j) = next(j, i) = 0.5 * (next(i, j) + next(j, i));
    const double delta = frobenius_norm(next - P);
    P = std::move(next);
    if (!std::isfinite(delta) || max_abs_entry(P) > 1e15) break;
    if (delta < 1e-12) {
      DareSolution sol;
      sol.L = A * P * Ct * inverse(C * P * Ct + R);
      sol.P = std::move(P);
      sol.iterations = it;
      return sol;
    }
  }
  throw Error(ErrorCode::NonConvergence, "solve_dare: fixed-point iteration did not converge");
}

std::vector<Mat> mat_power_seq(const Mat& A, int k_max) {
  if (!A.square()) throw Error(ErrorCode::InvalidArgument, "mat_power_seq: matrix not square");
  if (k_max < 0) throw Error(ErrorCode::InvalidArgument, "mat_power_seq: k_max < 0");
  std::vector<Mat> out;
  out.reserve(static_cast<std::size_t>(k_max) + 1);
  out.push_back(Mat::identity(A.rows()));
  for (int k = 1; k <= k_max; ++k) out.push_back(out.back() * A);
  return out;
}

namespace {

struct LuResult {
  Mat lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

LuResult lu_decompose(const Mat& m) {
  if (!m.square()) throw Error(ErrorCode::InvalidArgument, "lu: matrix not square");
  const std::size_t n = m.rows();
  LuResult r{m, {}, 1, false};
  r.perm.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.perm[i] = i;
  Mat& a = r.lu;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k))) piv = i;
    if (a(piv, k) == 0.0) {
      r.singular = true;
      continue;
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(r.perm[k], r.perm[piv]);
      r.sign = -r.sign;
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      a(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= f * a(k, j);
    }
  }
  return r;
}

}  // namespace

Mat solve(const Mat& A, const Mat& B) {
  if (A.rows() != B.rows()) throw Error(ErrorCode::InvalidArgument, "solve: dimension mismatch");
  const LuResult r = lu_decompose(A);
  if (r.singular) throw Error(ErrorCode::Degenerate, "solve: singular matrix");
  const std::size_t n = A.rows();
  Mat X(n, B.cols());
  for (std::size_t c = 0; c < B.cols(); ++c) {
    Vec y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = B(r.perm[i], c);
      for (std::size_t j = 0; j < i; ++j) acc -= r.lu(i, j) * y[j];
      y[i] = acc;
    }
    for (std::size_t ii = n; ii-- > 0;) {
      double acc = y[ii];
      for (std::size_t j = ii + 1; j < n; ++j) acc -= r.lu(ii, j) * X(j, c);
      X(ii, c) = acc / r.lu(ii, ii);
    }
  }
  require_finite(X.data(), "solve");
  return X;
}

Mat inverse(const Mat& m) { return solve(m, Mat::identity(m.rows())); }

double determinant(const Mat& m) {
  const LuResult r = lu_decompose(m);
  if (r.singular) return 0.0;
  double det = r.sign;
  for (std::size_t i = 0; i < m.rows(); ++i) det *= r.lu(i, i);
  return det;
}

double log_abs_determinant(const Mat& m) {
  const LuResult r = lu_decompose(m);
  if (r.singular) throw Error(ErrorCode::Degenerate, "log_abs_determinant: singular matrix");
  double acc = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i) acc += std::log(std::abs(r.lu(i, i)));
  return acc;
}

int numerical_rank(const Mat& m, double tol) {
  Mat a = m;
  const std::size_t rows = a.rows(), cols = a.cols();
  const double scale = std::max(1.0, max_abs_entry(a));
  int rank = 0;
  std::vector<bool> used(rows, false);
  for (std::size_t c = 0; c < cols; ++c) {
    std::size_t piv = rows;
    double best = tol * scale;
    for (std::size_t i = 0; i < rows; ++i) {
      if (!used[i] && std::abs(a(i, c)) > best) best = std::abs(a(i, c)), piv = i;
    }
    if (piv == rows) continue;
    used[piv] = true;
    ++rank;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == piv) continue;
      const double f = a(i, c) / a(piv, c);
      for (std::size_t j = c; j < cols; ++j) a(i, j) -= f * a(piv, j);
    }
  }
  return rank;
}

}  // namespace fmpols
