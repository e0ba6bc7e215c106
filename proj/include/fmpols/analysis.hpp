#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fmpols/hints.hpp"
#include "fmpols/lds.hpp"
#include "fmpols/matkit.hpp"

namespace fmpols {

struct RegretReport {
  std::vector<double> learner_losses;
  std::vector<double> comparator_losses;
  std::vector<double> cumulative_regret;  // signed, never clamped
  std::vector<double> delta_max_series;   // filled by the caller when a hint is present
  std::string comparator_id;

  double final_regret() const { return cumulative_regret.empty() ? 0.0 : cumulative_regret.back(); }
};

/// Per-step squared losses of both prediction streams and the prefix sums of
/// their difference. Throws LengthMismatch unless all three have equal length.
RegretReport luenberger_regret(std::span<const Vec> learner, std::span<const Vec> comparator,
                               std::span<const Vec> outputs, std::string comparator_id = {});

/// Same, from precomputed per-step losses.
RegretReport regret_from_losses(std::vector<double> learner_losses, std::vector<double> comparator_losses,
                                std::string comparator_id = {});

struct BoundInputs {
  double norm_C = 1.0;
  std::size_t n = 1;
  std::size_t p = 1;
  int r = 1;
  double kappa_A = 1.0;
  double kappa = 1.0;
  double gamma = 1.0;
  double kappa_tilde = 1.0;
  double gamma_tilde = 1.0;
  double C_w = 0.0;
  double C_v = 0.0;
  double C_y = 0.0;
  double lambda = 1.0;
  int H = 1;
  int T = 1;
  double delta_max = 0.0;
};

/// Throws InvalidArgument on negative constants or gamma outside (0, 1].
void validate(const BoundInputs& in);

/// gamma^-1 ||C|| kappa^2 C_y
double c_trun(const BoundInputs& in);
/// gamma^-1 ||C|| kappa (C_w + kappa C_v) + C_v
double c_pred(const BoundInputs& in);
/// Pointwise truncation envelope C_trun (1 + t)^r (1 - gamma)^H.
double truncation_bound(const BoundInputs& in, int t);
/// ceil(gamma^-1 (r + 1) log(1 + T))
int recommended_memory(double gamma, int r, int T);

/// lambda ||C||^2 kappa^4 p / gamma + delta_max^2 p H log(1 + C_y^2 (1+T)^(2r+1) / (lambda p))
///   + C_trun^2 + 2 C_pred C_trun
double regret_bound(const BoundInputs& in);

/// lambda ||M||_F^2 + delta_max^2 d log(1 + sum ||z||^2 / (lambda d))
double regression_regret_bound(double lambda, double comparator_frobenius, double delta_max, std::size_t d,
                               double sum_z_squared);

enum class ResidualKind { LuenbergerHint, TwoLag, HighOrderDiff };
std::string_view to_string(ResidualKind kind);

/// Uniform bound on ||y_t - hint_t|| for the matching hint family:
///   LuenbergerHint  gamma~^-1 ||C|| kappa~ (C_w + kappa~ C_v) + C_v
///   TwoLag          2 C_v + (1 + kappa_A + 2 n kappa_A) ||C|| C_w
///   HighOrderDiff   2^r C_v + (8^r + r (2 e^2)^r n) kappa_A ||C|| C_w
double residual_bound(ResidualKind kind, const BoundInputs& in);

struct FilteredSum {
  std::vector<double> partial_sums;  // entry s: sum_{j<=s} ||(A^2 - I)^r A^j||
  double last_increment = 0.0;

  double total() const { return partial_sums.empty() ? 0.0 : partial_sums.back(); }
  bool converged(double tol = 1e-10) const { return last_increment < tol; }
};

FilteredSum filtered_jordan_sum(const Mat& A, int r, int s_max);

/// Truncation point for the filtered sums: max(500, ceil(20 / gamma_eff)).
int filtered_sum_horizon(double gamma_eff);

/// Largest entrywise gap between the directly computed residual
/// sum_i c_i y_{t-i} and its expansion into output noise, the first m
/// disturbance taps, and the q(A)-filtered tail, over t = 1..T.
double residual_decomposition_check(const SystemSpec& sys, std::span<const double> coeffs, const Trajectory& traj);

struct Fit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 1.0;
  std::size_t points = 0;
};

/// Least squares of series[t-1] (the value at t) against log t over
/// t_min <= t <= t_max (t_max = 0 means the end). Degenerate below 10 points.
/// A zero-residual fit reports R^2 = 1.
Fit log_fit(std::span<const double> series, int t_min, int t_max = 0);
/// Same against t itself.
Fit linear_fit(std::span<const double> series, int t_min, int t_max = 0);

}  // namespace fmpols
