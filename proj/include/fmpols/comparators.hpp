#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fmpols/lds.hpp"
#include "fmpols/matkit.hpp"
#include "fmpols/predictor.hpp"

namespace fmpols {

struct LuenbergerGain {
  Mat L;
  double kappa = 0.0;
  double gamma = 0.0;
  bool certified = false;
  double spectral_radius = 0.0;  // rho(A - L C)
};

/// Predictions C x^_t of the observer x^_{t+1} = (A - L C) x^_t + L y_t from
/// x^_0 = 0, for t = 1..T. Throws Divergence past ||x^|| > 1e12.
std::vector<Vec> luenberger_rollout(const SystemSpec& sys, const Mat& L, std::span<const Vec> outputs);

// H-tap approximation M_L = [C L, C A_L L, ..., C A_L^(H-1) L].
struct TruncatedPredictor {
  Mat M_L;
  int H = 0;

  Vec predict(const Feature& f) const { return M_L * f.z; }
};

TruncatedPredictor truncated_predictor(const SystemSpec& sys, const Mat& L, int H);

/// Smallest kappa with ||A_L^k|| <= kappa (1 - gamma)^k over k <= ceil(10/gamma).
/// Infinite when gamma = 1 and some A_L^k, k >= 1, is not (numerically) zero.
double decay_constant(const SystemSpec& sys, const Mat& L, double gamma);

/// Certified iff rho(A_L) <= 1 - gamma + 1e-9, ||L|| <= kappa and the power
/// decay check passes with kappa (1 + 1e-6).
LuenbergerGain certify_gain(const SystemSpec& sys, const Mat& L, double kappa, double gamma);

/// Places every eigenvalue of A - L C at 1 - target_gamma by Ackermann's
/// formula on the dual pair, then certifies with the smallest kappa the decay
/// check admits. When rounding pushes rho(A - L C) past the target radius the
/// reported gamma is 1 - rho instead. Single-output placement: for p > 1 the first output channel
/// that is observable on its own carries the gain.
LuenbergerGain design_gain(const SystemSpec& sys, double target_gamma);

struct GainGrid {
  double lo = -2.0;
  double hi = 2.0;
  int steps = 41;  // points per gain entry
  double kappa = 20.0;
  double gamma = 0.1;
};

struct HindsightResult {
  std::vector<Mat> candidates;           // certified candidates, lattice order
  std::vector<std::size_t> best_index;   // argmin at each t (index into candidates)
  std::vector<double> best_cumulative;   // min_L sum_{s<=t} loss_s(L)
  std::vector<double> step_loss;         // best_cumulative[t] - best_cumulative[t-1]
  std::size_t lattice_size = 0;
};

/// Running best-in-hindsight gain L*(t) over an axis-aligned lattice of gain
/// entries, keeping only candidates certified against (kappa, gamma). Ties go
/// to the lowest lattice index. Throws EmptyGrid if nothing certifies.
HindsightResult best_in_hindsight(const SystemSpec& sys, const GainGrid& grid, std::span<const Vec> outputs);

/// Same, over an explicit candidate list (already filtered by the caller).
HindsightResult best_in_hindsight(const SystemSpec& sys, std::vector<Mat> candidates, std::span<const Vec> outputs);

/// Diagonal stationary second moments of the three noise components:
/// bias^2 + amp^2 / 2 + C^2 / 3 per coordinate (C^2 for Gaussian noise).
struct NoiseCovariance {
  Mat Q;
  Mat R;
};
NoiseCovariance rms_covariance(const NoiseModel& model);

/// Certifies L against gamma = 1 - rho(A - L C) (floored at 1e-6) and the
/// smallest kappa >= max(1, ||L||) the decay check admits.
LuenbergerGain characterize_gain(const SystemSpec& sys, const Mat& L);

/// Steady-state Kalman predictor gain from the DARE. Certified flag reports
/// against (kappa = decay constant, gamma = 1 - rho).
LuenbergerGain kalman_gain(const SystemSpec& sys, const Mat& Q, const Mat& R);

/// Covariance-inflated Kalman design, Q <- Q (1 + level). level < 0 is an
/// InvalidLevel error; level = 0 reproduces kalman_gain.
LuenbergerGain hinf_gain(const SystemSpec& sys, const Mat& Q, const Mat& R, double level = 1.0);

}  // namespace fmpols
