#include "fmpols/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace fmpols {

Feature build_feature(std::span<const Vec> history, std::int64_t t, int H, std::size_t p) {
  if (H < 1) throw Error(ErrorCode::InvalidArgument, "build_feature: H must be >= 1");
  if (t < 1) throw Error(ErrorCode::InvalidArgument, "build_feature: t must be >= 1");
  if (static_cast<std::int64_t>(history.size()) < t - 1) {
    throw Error(ErrorCode::InvalidArgument, "build_feature: history shorter than t - 1");
  }
  Feature f;
  f.t = t;
  f.H = H;
  f.z.assign(p * static_cast<std::size_t>(H), 0.0);
  for (int k = 1; k <= H; ++k) {
    const std::int64_t s = t - k;
    if (s <= 0) break;
    const Vec& y = history[static_cast<std::size_t>(s - 1)];
    if (y.size() != p) throw Error(ErrorCode::InvalidArgument, "build_feature: output dimension mismatch");
    std::copy(y.begin(), y.end(), f.z.begin() + static_cast<std::ptrdiff_t>((k - 1) * p));
  }
  return f;
}

PolsState PolsState::initial(std::size_t p, std::size_t d, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "PolsState: lambda must be > 0");
  if (p == 0 || d == 0) throw Error(ErrorCode::InvalidArgument, "PolsState: empty dimensions");
  PolsState s;
  s.M = Mat(p, d);
  s.P = (1.0 / lambda) * Mat::identity(d);
  s.d = d;
  s.p = p;
  s.lambda = lambda;
  s.t = 0;
  return s;
}

namespace {

// M + (target - base) K^T
Mat rank_one_correct(const Mat& M, std::span<const double> target, std::span<const double> base,
                     std::span<const double> gain) {
  Mat out = M;
  for (std::size_t i = 0; i < M.rows(); ++i) {
    const double e = target[i] - base[i];
    for (std::size_t j = 0; j < M.cols(); ++j) out(i, j) += e * gain[j];
  }
  return out;
}

}  // namespace

StagedStep pols_step(PolsState state, const Feature& feature, std::span<const double> hint) {
  if (feature.z.size() != state.d) throw Error(ErrorCode::InvalidArgument, "pols_step: feature dimension mismatch");
  if (hint.size() != state.p) throw Error(ErrorCode::InvalidArgument, "pols_step: hint dimension mismatch");
  require_finite(hint, "pols_step hint");

  RankOneUpdate upd = sherman_morrison(state.P, feature.z);
  StagedStep staged;
  staged.innovation_base = state.M * feature.z;
  staged.M_pols = rank_one_correct(state.M, hint, staged.innovation_base, upd.gain);
  staged.prediction = staged.M_pols * feature.z;
  staged.gain = std::move(upd.gain);
  staged.z = feature.z;
  state.P = std::move(upd.inverse);
  staged.state = std::move(state);
  return staged;
}

PolsState pols_commit(StagedStep staged, std::span<const double> y) {
  PolsState& s = staged.state;
  if (y.size() != s.p) throw Error(ErrorCode::InvalidArgument, "pols_commit: observation dimension mismatch");
  require_finite(y, "pols_commit observation");
  s.M = rank_one_correct(s.M, y, staged.innovation_base, staged.gain);
  s.t += 1;
  return std::move(s);
}

Vec ols_predict(const PolsState& state, const Feature& feature) { return state.M * feature.z; }

Mat regularized_gram(double lambda, std::span<const Vec> features, std::size_t d) {
  Mat G = lambda * Mat::identity(d);
  for (const Vec& z : features) {
    if (z.size() != d) throw Error(ErrorCode::InvalidArgument, "regularized_gram: feature dimension mismatch");
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) G(i, j) += z[i] * z[j];
  }
  return G;
}

namespace {

using LVec = std::vector<long double>;

// Normal equations M G = B accumulated and eliminated in extended precision.
// The lag features of a marginally stable output stream make G badly
// conditioned (cond ~ 1e10 over T = 2000), which double elimination cannot
// resolve to the accuracy the recursion reaches.
Mat normal_equations(double lambda, std::span<const Vec> features, std::size_t gram_count,
                     std::span<const Vec> targets, std::span<const double> hint, std::size_t p) {
  const std::size_t d = features.front().size();
  std::vector<LVec> G(d, LVec(d, 0.0L));
  std::vector<LVec> Bt(d, LVec(p, 0.0L));  // B^T
  for (std::size_t i = 0; i < d; ++i) G[i][i] = lambda;
  for (std::size_t s = 0; s < gram_count; ++s) {
    const Vec& z = features[s];
    if (z.size() != d) throw Error(ErrorCode::InvalidArgument, "closed form: feature dimension mismatch");
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) G[i][j] += static_cast<long double>(z[i]) * z[j];
  }
  for (std::size_t s = 0; s < targets.size(); ++s) {
    if (targets[s].size() != p) throw Error(ErrorCode::InvalidArgument, "closed form: target dimension mismatch");
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < p; ++i) Bt[j][i] += static_cast<long double>(targets[s][i]) * features[s][j];
  }
  if (!hint.empty()) {
    const Vec& z = features.back();
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t i = 0; i < p; ++i) Bt[j][i] += static_cast<long double>(hint[i]) * z[j];
  }
  // Gaussian elimination with partial pivoting on G X = B^T.
  for (std::size_t k = 0; k < d; ++k) {
    std::size_t piv = k;
    for (std::size_t r = k + 1; r < d; ++r) {
      if (std::abs(G[r][k]) > std::abs(G[piv][k])) piv = r;
    }
    std::swap(G[k], G[piv]);
    std::swap(Bt[k], Bt[piv]);
    for (std::size_t r = k + 1; r < d; ++r) {
      const long double f = G[r][k] / G[k][k];
      if (f == 0.0L) continue;
      for (std::size_t c = k; c < d; ++c) G[r][c] -= f * G[k][c];
      for (std::size_t c = 0; c < p; ++c) Bt[r][c] -= f * Bt[k][c];
    }
  }
  Mat M(p, d);
  for (std::size_t k = d; k-- > 0;) {
    for (std::size_t c = 0; c < p; ++c) {
      long double acc = Bt[k][c];
      for (std::size_t j = k + 1; j < d; ++j) acc -= G[k][j] * static_cast<long double>(M(c, j));
      M(c, k) = static_cast<double>(acc / G[k][k]);
    }
  }
  return M;
}

}  // namespace

Mat pols_closed_form(double lambda, std::span<const Vec> features, std::span<const Vec> targets,
                     std::span<const double> hint) {
  if (features.empty()) throw Error(ErrorCode::InvalidArgument, "pols_closed_form: no features");
  if (targets.size() + 1 != features.size()) {
    throw Error(ErrorCode::LengthMismatch, "pols_closed_form: need t features and t-1 targets");
  }
  if (hint.empty()) throw Error(ErrorCode::InvalidArgument, "pols_closed_form: empty hint");
  return normal_equations(lambda, features, features.size(), targets, hint, hint.size());
}

Mat ols_closed_form(double lambda, std::span<const Vec> features, std::span<const Vec> targets, std::size_t p) {
  if (features.empty()) throw Error(ErrorCode::InvalidArgument, "ols_closed_form: no features");
  if (targets.size() + 1 != features.size()) {
    throw Error(ErrorCode::LengthMismatch, "ols_closed_form: need t features and t-1 targets");
  }
  return normal_equations(lambda, features, features.size() - 1, targets, {}, p);
}

}  // namespace fmpols
