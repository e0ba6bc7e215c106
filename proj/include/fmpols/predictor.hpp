#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fmpols/matkit.hpp"

namespace fmpols {

// Stacked history z_t = [y_{t-1}; y_{t-2}; ...; y_{t-H}] with y_s = 0 for s <= 0.
struct Feature {
  Vec z;
  std::int64_t t = 0;
  int H = 0;
};

/// `history` holds y_1..y_{t-1} (it may hold more; only indices < t are read).
Feature build_feature(std::span<const Vec> history, std::int64_t t, int H, std::size_t p);

// Committed FM-POLS state after step t: predictor M_t (p x d) and inverse
// regularized Gram P_t = G_t^-1.
struct PolsState {
  Mat M;
  Mat P;
  std::size_t d = 0;
  std::size_t p = 0;
  double lambda = 1.0;
  std::int64_t t = 0;

  /// M_0 = 0, P_0 = lambda^-1 I.
  static PolsState initial(std::size_t p, std::size_t d, double lambda);
};

// Output of the predict half of a step: the covariance is already updated,
// M still holds M_{t-1} until the observation is committed.
struct StagedStep {
  PolsState state;  // M = M_{t-1}, P = P_t, t = t-1
  Vec gain;         // K_t
  Vec z;
  Vec innovation_base;  // M_{t-1} z_t
  Mat M_pols;
  Vec prediction;   // M_pols z_t
};

/// Covariance update, look-ahead predictor M^pols = M + (hint - M z) K^T,
/// and the prediction M^pols z.
StagedStep pols_step(PolsState state, const Feature& feature, std::span<const double> hint);

/// M_t = M_{t-1} + (y_t - M_{t-1} z_t) K_t^T; advances t.
PolsState pols_commit(StagedStep staged, std::span<const double> y);

/// Prediction of plain OLS from the committed state: M_{t-1} z_t.
Vec ols_predict(const PolsState& state, const Feature& feature);

/// Direct solution of the look-ahead least-squares problem,
/// (B_{t-1} + hint z_t^T) G_t^-1, by Gaussian elimination in long double.
/// `features` holds z_1..z_t, `targets` holds y_1..y_{t-1}.
Mat pols_closed_form(double lambda, std::span<const Vec> features, std::span<const Vec> targets,
                     std::span<const double> hint);

/// OLS normal equations B_{t-1} G_{t-1}^-1 over the first t-1 samples (long double).
Mat ols_closed_form(double lambda, std::span<const Vec> features, std::span<const Vec> targets, std::size_t p);

/// G_t = lambda I + sum_s z_s z_s^T over all given features.
Mat regularized_gram(double lambda, std::span<const Vec> features, std::size_t d);

}  // namespace fmpols
