#include "fmpols/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

namespace fmpols {

RegretReport regret_from_losses(std::vector<double> learner_losses, std::vector<double> comparator_losses,
                                std::string comparator_id) {
  if (learner_losses.size() != comparator_losses.size()) {
    throw Error(ErrorCode::LengthMismatch, "regret: learner and comparator series differ in length");
  }
  RegretReport rep;
  rep.cumulative_regret.reserve(learner_losses.size());
  double acc = 0.0;
  for (std::size_t t = 0; t < learner_losses.size(); ++t) {
    acc += learner_losses[t] - comparator_losses[t];
    rep.cumulative_regret.push_back(acc);
  }
  rep.learner_losses = std::move(learner_losses);
  rep.comparator_losses = std::move(comparator_losses);
  rep.comparator_id = std::move(comparator_id);
  return rep;
}

RegretReport luenberger_regret(std::span<const Vec> learner, std::span<const Vec> comparator,
                               std::span<const Vec> outputs, std::string comparator_id) {
  if (learner.size() != outputs.size() || comparator.size() != outputs.size()) {
    throw Error(ErrorCode::LengthMismatch, "luenberger_regret: prediction and output streams differ in length");
  }
  std::vector<double> ll, cl;
  ll.reserve(outputs.size());
  cl.reserve(outputs.size());
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    ll.push_back(norm2_squared(vec_sub(learner[t], outputs[t])));
    cl.push_back(norm2_squared(vec_sub(comparator[t], outputs[t])));
  }
  return regret_from_losses(std::move(ll), std::move(cl), std::move(comparator_id));
}

void validate(const BoundInputs& in) {
  auto nonneg = [](double x, const char* what) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, std::string("BoundInputs: ") + what + " must be finite and >= 0");
  };
  nonneg(in.norm_C, "norm_C");
  nonneg(in.C_w, "C_w");
  nonneg(in.C_v, "C_v");
  nonneg(in.C_y, "C_y");
  nonneg(in.delta_max, "delta_max");
  if (!(in.gamma > 0.0 && in.gamma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "BoundInputs: gamma must be in (0, 1]");
  if (!(in.gamma_tilde > 0.0 && in.gamma_tilde <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "BoundInputs: gamma_tilde must be in (0, 1]");
  }
  if (!(in.kappa >= 1.0 && in.kappa_tilde >= 1.0 && in.kappa_A >= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "BoundInputs: kappa, kappa_tilde, kappa_A must be >= 1");
  }
  if (!(in.lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "BoundInputs: lambda must be > 0");
  if (in.n < 1 || in.p < 1 || in.r < 1 || in.H < 1 || in.T < 1) {
    throw Error(ErrorCode::InvalidArgument, "BoundInputs: n, p, r, H, T must be >= 1");
  }
}

double c_trun(const BoundInputs& in) { return in.norm_C * in.kappa * in.kappa * in.C_y / in.gamma; }

double c_pred(const BoundInputs& in) {
  return in.norm_C * in.kappa * (in.C_w + in.kappa * in.C_v) / in.gamma + in.C_v;
}

double truncation_bound(const BoundInputs& in, int t) {
  return c_trun(in) * std::pow(1.0 + t, in.r) * std::pow(1.0 - in.gamma, in.H);
}

int recommended_memory(double gamma, int r, int T) {
  if (!(gamma > 0.0 && gamma <= 1.0) || r < 1 || T < 1) {
    throw Error(ErrorCode::InvalidArgument, "recommended_memory: need gamma in (0, 1], r >= 1, T >= 1");
  }
  return static_cast<int>(std::ceil((r + 1) * std::log1p(static_cast<double>(T)) / gamma));
}

double regret_bound(const BoundInputs& in) {
  const double p = static_cast<double>(in.p);
  const double k2 = in.kappa * in.kappa;
  const double reg = in.lambda * in.norm_C * in.norm_C * k2 * k2 * p / in.gamma;
  double middle = 0.0;
  if (in.delta_max > 0.0) {
    const double growth = std::pow(1.0 + in.T, 2 * in.r + 1);
    middle = in.delta_max * in.delta_max * p * in.H * std::log1p(in.C_y * in.C_y * growth / (in.lambda * p));
  }
  const double ct = c_trun(in);
  return reg + middle + ct * ct + 2.0 * c_pred(in) * ct;
}

double regression_regret_bound(double lambda, double comparator_frobenius, double delta_max, std::size_t d,
                               double sum_z_squared) {
  const double dd = static_cast<double>(d);
  return lambda * comparator_frobenius * comparator_frobenius +
         delta_max * delta_max * dd * std::log1p(sum_z_squared / (lambda * dd));
}

std::string_view to_string(ResidualKind kind) {
  switch (kind) {
    case ResidualKind::LuenbergerHint: return "luenberger";
    case ResidualKind::TwoLag: return "two_lag";
    case ResidualKind::HighOrderDiff: return "high_order_diff";
  }
  return "luenberger";
}

double residual_bound(ResidualKind kind, const BoundInputs& in) {
  const double n = static_cast<double>(in.n);
  switch (kind) {
    case ResidualKind::LuenbergerHint:
      return in.norm_C * in.kappa_tilde * (in.C_w + in.kappa_tilde * in.C_v) / in.gamma_tilde + in.C_v;
    case ResidualKind::TwoLag:
      return 2.0 * in.C_v + (1.0 + in.kappa_A + 2.0 * n * in.kappa_A) * in.norm_C * in.C_w;
    case ResidualKind::HighOrderDiff: {
      const double r = in.r;
      const double e2 = std::numbers::e * std::numbers::e;
      const double h_r = std::pow(8.0, r);
      const double k_r = r * std::pow(2.0 * e2, r);
      return std::pow(2.0, r) * in.C_v + (h_r + k_r * n) * in.kappa_A * in.norm_C * in.C_w;
    }
  }
  return 0.0;
}

FilteredSum filtered_jordan_sum(const Mat& A, int r, int s_max) {
  if (s_max < 0) throw Error(ErrorCode::InvalidArgument, "filtered_jordan_sum: s_max must be >= 0");
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "filtered_jordan_sum: r must be >= 1");
  const std::size_t n = A.rows();
  const Mat base = A * A - Mat::identity(n);
  Mat filter = Mat::identity(n);
  for (int k = 0; k < r; ++k) filter = filter * base;
  const std::vector<Mat> powers = mat_power_seq(A, s_max);
  FilteredSum out;
  out.partial_sums.reserve(powers.size());
  double acc = 0.0;
  for (const Mat& Ps : powers) {
    out.last_increment = operator_norm(filter * Ps);
    acc += out.last_increment;
    out.partial_sums.push_back(acc);
  }
  return out;
}

int filtered_sum_horizon(double gamma_eff) {
  if (!(gamma_eff > 0.0)) throw Error(ErrorCode::InvalidArgument, "filtered_sum_horizon: gamma_eff must be > 0");
  return std::max(500, static_cast<int>(std::ceil(20.0 / gamma_eff)));
}

double residual_decomposition_check(const SystemSpec& sys, std::span<const double> coeffs, const Trajectory& traj) {
  if (coeffs.empty()) throw Error(ErrorCode::InvalidArgument, "residual_decomposition_check: empty coefficients");
  const std::size_t n = sys.n(), p = sys.p();
  const int m = static_cast<int>(coeffs.size()) - 1;
  const int T = traj.T;
  if (static_cast<int>(traj.w.size()) < T || static_cast<int>(traj.v.size()) < T + 1) {
    throw Error(ErrorCode::InvalidArgument, "residual_decomposition_check: trajectory lacks stored noises");
  }
  const std::vector<Mat> powers = mat_power_seq(sys.A, std::max(T, m));
  const Mat qA = poly_eval(coeffs, sys.A);

  // C sum_{i<=s} c_i A^(s-i), s < m
  std::vector<Mat> head;
  for (int s = 0; s < m; ++s) {
    Mat acc(n, n);
    for (int i = 0; i <= s; ++i) acc += coeffs[static_cast<std::size_t>(i)] * powers[static_cast<std::size_t>(s - i)];
    head.push_back(sys.C * acc);
  }
  // C q(A) A^s
  std::vector<Mat> tail;
  const Mat CqA = sys.C * qA;
  for (int s = 0; s + m + 1 <= T; ++s) tail.push_back(CqA * powers[static_cast<std::size_t>(s)]);

  double worst = 0.0;
  for (int t = 1; t <= T; ++t) {
    Vec direct(p, 0.0);
    Vec expanded(p, 0.0);
    for (int i = 0; i <= m; ++i) {
      const double c = coeffs[static_cast<std::size_t>(i)];
      const Vec y = traj.y_or_zero(t - i, p);
      const Vec v = traj.v_or_zero(t - i, p);
      for (std::size_t j = 0; j < p; ++j) {
        direct[j] += c * y[j];
        expanded[j] += c * v[j];
      }
    }
    for (int s = 0; s < m; ++s) {
      const int idx = t - 1 - s;
      if (idx < 0) break;
      expanded = vec_add(expanded, head[static_cast<std::size_t>(s)] * traj.w_or_zero(idx, n));
    }
    for (int s = 0; s <= t - m - 1; ++s) {
      expanded = vec_add(expanded, tail[static_cast<std::size_t>(s)] * traj.w_or_zero(t - m - 1 - s, n));
    }
    for (std::size_t j = 0; j < p; ++j) worst = std::max(worst, std::abs(direct[j] - expanded[j]));
  }
  return worst;
}

namespace {

Fit fit_against(std::span<const double> series, int t_min, int t_max, double (*transform)(double)) {
  if (t_min < 1) throw Error(ErrorCode::InvalidArgument, "fit: t_min must be >= 1");
  const int last = t_max == 0 ? static_cast<int>(series.size()) : std::min<int>(t_max, static_cast<int>(series.size()));
  Fit f;
  if (last < t_min || last - t_min + 1 < 10) throw Error(ErrorCode::Degenerate, "fit: fewer than 10 points");
  f.points = static_cast<std::size_t>(last - t_min + 1);
  long double sx = 0, sy = 0;
  for (int t = t_min; t <= last; ++t) {
    sx += transform(t);
    sy += series[static_cast<std::size_t>(t - 1)];
  }
  const long double mx = sx / f.points, my = sy / f.points;
  long double sxx = 0, sxy = 0, syy = 0;
  for (int t = t_min; t <= last; ++t) {
    const long double dx = transform(t) - mx;
    const long double dy = series[static_cast<std::size_t>(t - 1)] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  const long double slope = sxx > 0 ? sxy / sxx : 0;
  f.slope = static_cast<double>(slope);
  f.intercept = static_cast<double>(my - slope * mx);
  long double ss_res = 0;
  for (int t = t_min; t <= last; ++t) {
    const long double e = series[static_cast<std::size_t>(t - 1)] - (f.intercept + slope * transform(t));
    ss_res += e * e;
  }
  if (syy == 0 || ss_res == 0) {
    f.r_squared = 1.0;
  } else {
    f.r_squared = static_cast<double>(1 - ss_res / syy);
  }
  return f;
}

double log_of(double t) { return std::log(t); }
double identity_of(double t) { return t; }

}  // namespace

Fit log_fit(std::span<const double> series, int t_min, int t_max) { return fit_against(series, t_min, t_max, log_of); }

Fit linear_fit(std::span<const double> series, int t_min, int t_max) {
  return fit_against(series, t_min, t_max, identity_of);
}

}  // namespace fmpols
