#include "fmpols/comparators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace fmpols {

std::vector<Vec> luenberger_rollout(const SystemSpec& sys, const Mat& L, std::span<const Vec> outputs) {
  if (L.rows() != sys.n() || L.cols() != sys.p()) throw Error(ErrorCode::InvalidArgument, "luenberger_rollout: L must be n x p");
  const Mat A_L = sys.A - L * sys.C;
  Vec state(sys.n(), 0.0);
  std::vector<Vec> predictions;
  predictions.reserve(outputs.size());
  for (std::size_t t = 0; t < outputs.size(); ++t) {
    predictions.push_back(sys.C * state);
    state = vec_add(A_L * state, L * outputs[t]);
    if (!(norm2(state) <= 1e12)) {
      throw Error(ErrorCode::Divergence, "luenberger_rollout: observer state exceeded 1e12 at t = " + std::to_string(t + 1));
    }
  }
  return predictions;
}

TruncatedPredictor truncated_predictor(const SystemSpec& sys, const Mat& L, int H) {
  if (H < 1) throw Error(ErrorCode::InvalidArgument, "truncated_predictor: H must be >= 1");
  const std::size_t p = sys.p();
  const Mat A_L = sys.A - L * sys.C;
  const std::vector<Mat> powers = mat_power_seq(A_L, H - 1);
  TruncatedPredictor tp;
  tp.H = H;
  tp.M_L = Mat(p, p * static_cast<std::size_t>(H));
  for (int k = 0; k < H; ++k) {
    const Mat block = sys.C * powers[static_cast<std::size_t>(k)] * L;
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < p; ++j) tp.M_L(i, static_cast<std::size_t>(k) * p + j) = block(i, j);
  }
  return tp;
}

double decay_constant(const SystemSpec& sys, const Mat& L, double gamma) {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw Error(ErrorCode::InvalidArgument, "decay_constant: gamma must be in (0, 1]");
  const Mat A_L = sys.A - L * sys.C;
  const int k0 = static_cast<int>(std::ceil(10.0 / gamma));
  const double rate = 1.0 - gamma;
  double kappa = 1.0;  // k = 0: ||I|| / 1
  Mat power = Mat::identity(sys.n());
  for (int k = 1; k <= k0; ++k) {
    power = power * A_L;
    const double nrm = operator_norm(power);
    const double scale = std::pow(rate, k);
    if (scale == 0.0) {
      if (nrm > 1e-9) return std::numeric_limits<double>::infinity();
      continue;
    }
    kappa = std::max(kappa, nrm / scale);
  }
  return kappa;
}

LuenbergerGain certify_gain(const SystemSpec& sys, const Mat& L, double kappa, double gamma) {
  LuenbergerGain g;
  g.L = L;
  g.kappa = kappa;
  g.gamma = gamma;
  g.spectral_radius = eigenvalues_small(sys.A - L * sys.C).max_abs;
  if (!(gamma > 0.0 && gamma <= 1.0)) return g;
  if (g.spectral_radius > 1.0 - gamma + 1e-9) return g;
  if (operator_norm(L) > kappa) return g;
  g.certified = decay_constant(sys, L, gamma) <= kappa * (1.0 + 1e-6);
  return g;
}

namespace {

Mat observability_matrix(const Mat& A, const Mat& C) {
  const std::size_t n = A.rows(), p = C.rows();
  Mat O(n * p, n);
  Mat block = C;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < p; ++i)
      for (std::size_t j = 0; j < n; ++j) O(k * p + i, j) = block(i, j);
    block = block * A;
  }
  return O;
}

}  // namespace

LuenbergerGain design_gain(const SystemSpec& sys, double target_gamma) {
  if (!(target_gamma > 0.0 && target_gamma <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "design_gain: target_gamma must be in (0, 1]");
  }
  const std::size_t n = sys.n(), p = sys.p();
  if (n > 4) throw Error(ErrorCode::NotSupported, "design_gain: placement implemented for n <= 4");
  if (numerical_rank(observability_matrix(sys.A, sys.C), 1e-9) < static_cast<int>(n)) {
    throw Error(ErrorCode::NotObservable, "design_gain: (A, C) is not observable");
  }
  const double radius = 1.0 - target_gamma;
  // phi(A) = (A - radius I)^n
  const Mat shifted = sys.A - radius * Mat::identity(n);
  Mat phi = Mat::identity(n);
  for (std::size_t k = 0; k < n; ++k) phi = phi * shifted;

  for (std::size_t ch = 0; ch < p; ++ch) {
    Mat c_row(1, n);
    for (std::size_t j = 0; j < n; ++j) c_row(0, j) = sys.C(ch, j);
    const Mat O = observability_matrix(sys.A, c_row);
    if (numerical_rank(O, 1e-9) < static_cast<int>(n)) continue;
    Mat e_last(n, 1);
    e_last(n - 1, 0) = 1.0;
    const Mat column = phi * solve(O, e_last);
    Mat L(n, p);
    for (std::size_t i = 0; i < n; ++i) L(i, ch) = column(i, 0);
    // A repeated pole splits by ~eps^(1/n) once L is rounded, so the stored
    // gain can sit a hair outside the requested radius. Certify what it does
    // achieve rather than the target.
    const double rho = eigenvalues_small(sys.A - L * sys.C).max_abs;
    const double gamma = rho > radius + 1e-9 ? std::max(1e-6, 1.0 - rho) : target_gamma;
    const double kappa = std::max({1.0, operator_norm(L), decay_constant(sys, L, gamma)});
    return certify_gain(sys, L, kappa, gamma);
  }
  throw Error(ErrorCode::NotSupported, "design_gain: no single output channel observes the full state");
}

namespace {

std::vector<Mat> enumerate_lattice(const SystemSpec& sys, const GainGrid& grid, std::size_t& lattice_size) {
  if (grid.steps < 1) throw Error(ErrorCode::InvalidArgument, "GainGrid: steps must be >= 1");
  const std::size_t entries = sys.n() * sys.p();
  double total = std::pow(static_cast<double>(grid.steps), static_cast<double>(entries));
  if (total > 5e6) throw Error(ErrorCode::InvalidArgument, "GainGrid: lattice larger than 5e6 candidates");
  lattice_size = static_cast<std::size_t>(total);
  const double step = grid.steps == 1 ? 0.0 : (grid.hi - grid.lo) / (grid.steps - 1);

  std::vector<Mat> certified;
  std::vector<int> digits(entries, 0);
  for (std::size_t idx = 0; idx < lattice_size; ++idx) {
    // Row-major over L entries, first entry most significant.
    std::size_t rem = idx;
    for (std::size_t e = entries; e-- > 0;) {
      digits[e] = static_cast<int>(rem % static_cast<std::size_t>(grid.steps));
      rem /= static_cast<std::size_t>(grid.steps);
    }
    Mat L(sys.n(), sys.p());
    for (std::size_t e = 0; e < entries; ++e) L.data()[e] = grid.lo + step * digits[e];
    if (certify_gain(sys, L, grid.kappa, grid.gamma).certified) certified.push_back(std::move(L));
  }
  return certified;
}

}  // namespace

HindsightResult best_in_hindsight(const SystemSpec& sys, std::vector<Mat> candidates, std::span<const Vec> outputs) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyGrid, "best_in_hindsight: no certified candidate");
  HindsightResult res;
  res.lattice_size = candidates.size();
  const std::size_t K = candidates.size();
  std::vector<Mat> closed_loop;
  closed_loop.reserve(K);
  for (const Mat& L : candidates) closed_loop.push_back(sys.A - L * sys.C);
  std::vector<Vec> states(K, Vec(sys.n(), 0.0));
  std::vector<double> cumulative(K, 0.0);

  res.best_index.reserve(outputs.size());
  res.best_cumulative.reserve(outputs.size());
  res.step_loss.reserve(outputs.size());
  double previous_best = 0.0;
  for (const Vec& y : outputs) {
    std::size_t best = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const Vec err = vec_sub(y, sys.C * states[k]);
      cumulative[k] += norm2_squared(err);
      if (cumulative[k] < cumulative[best]) best = k;
      states[k] = vec_add(closed_loop[k] * states[k], candidates[k] * y);
    }
    res.best_index.push_back(best);
    res.best_cumulative.push_back(cumulative[best]);
    res.step_loss.push_back(cumulative[best] - previous_best);
    previous_best = cumulative[best];
  }
  res.candidates = std::move(candidates);
  return res;
}

HindsightResult best_in_hindsight(const SystemSpec& sys, const GainGrid& grid, std::span<const Vec> outputs) {
  std::size_t lattice_size = 0;
  std::vector<Mat> certified = enumerate_lattice(sys, grid, lattice_size);
  HindsightResult res = best_in_hindsight(sys, std::move(certified), outputs);
  res.lattice_size = lattice_size;
  return res;
}

NoiseCovariance rms_covariance(const NoiseModel& model) {
  auto moments = [&](const Vec& bias, const Vec& amp, double bound) {
    Vec d(bias.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      d[i] = model.kind == NoiseKind::Gaussian ? bound * bound
                                               : bias[i] * bias[i] + 0.5 * amp[i] * amp[i] + bound * bound / 3.0;
    }
    return Mat::diag(d);
  };
  return {moments(model.bias_w, model.amp_w, model.uniform_w), moments(model.bias_v, model.amp_v, model.uniform_v)};
}

LuenbergerGain characterize_gain(const SystemSpec& sys, const Mat& L) {
  const double rho = eigenvalues_small(sys.A - L * sys.C).max_abs;
  const double gamma = std::clamp(1.0 - rho, 1e-6, 1.0);
  const double kappa = std::max({1.0, operator_norm(L), decay_constant(sys, L, gamma)});
  return certify_gain(sys, L, kappa, gamma);
}

LuenbergerGain kalman_gain(const SystemSpec& sys, const Mat& Q, const Mat& R) {
  DareSolution sol = solve_dare(sys.A, sys.C, Q, R);
  return characterize_gain(sys, sol.L);
}

LuenbergerGain hinf_gain(const SystemSpec& sys, const Mat& Q, const Mat& R, double level) {
  if (!(level >= 0.0)) throw Error(ErrorCode::InvalidLevel, "hinf_gain: level must be >= 0");
  DareSolution sol = solve_dare(sys.A, sys.C, (1.0 + level) * Q, R);
  return characterize_gain(sys, sol.L);
}

}  // namespace fmpols
