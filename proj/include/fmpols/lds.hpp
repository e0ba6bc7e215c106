#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "fmpols/matkit.hpp"

namespace fmpols {

enum class SpectrumTag { RealDiagonalizable, RealJordan, ComplexMarginal, Stable };

std::string_view to_string(SpectrumTag tag);
SpectrumTag spectrum_tag_from_string(std::string_view s);

// A partially observed system x_{t+1} = A x_t + w_t, y_t = C x_t + v_t with
// declared Jordan metadata: largest block size r and conditioning kappa_A of
// the similarity A = S J S^-1.
struct SystemSpec {
  std::string name;
  Mat A;
  Mat C;
  int jordan_r = 1;
  double kappa_A = 1.0;
  SpectrumTag spectrum = SpectrumTag::Stable;

  std::size_t n() const noexcept { return A.rows(); }
  std::size_t p() const noexcept { return C.rows(); }
};

/// Builds a SystemSpec and validates it: shapes, rho(A) <= 1 + 1e-9,
/// kappa_A >= 1, and the power bound ||A^k|| <= kappa_A (1+k)^(r-1) for
/// k <= 200.
SystemSpec make_system(std::string name, Mat A, Mat C, int jordan_r, double kappa_A, SpectrumTag spectrum);

/// Smallest kappa with ||A^k|| <= kappa (1+k)^(r-1) for all k <= k_max.
double power_bound_constant(const Mat& A, int jordan_r, int k_max = 200);

// Built-in registry: double_integrator, symmetric_swap, jordan3,
// rotation_jordan (theta = 0.7), scalar_stable.
std::vector<std::string> builtin_system_names();
SystemSpec builtin_system(std::string_view name);
SystemSpec rotation_jordan_system(double theta);

enum class NoiseKind { Nonstochastic, Gaussian };

std::string_view to_string(NoiseKind kind);
NoiseKind noise_kind_from_string(std::string_view s);

// Bias + sinusoid + bounded uniform disturbances, or i.i.d. Gaussian. All
// draws come from a counter-based generator keyed by (seed, t, stream).
struct NoiseModel {
  Vec bias_w;
  Vec amp_w;
  double freq_w = 0.05;
  double uniform_w = 0.0;
  Vec bias_v;
  Vec amp_v;
  double freq_v = 0.08;
  double uniform_v = 0.0;
  NoiseKind kind = NoiseKind::Nonstochastic;
  std::uint64_t seed = 0;

  // ||bias|| + ||amp|| + C * sqrt(dim): a per-step bound on ||w_t||, ||v_t||.
  double effective_bound_w() const;
  double effective_bound_v() const;
};

/// Zero-bias, zero-amplitude model of the right dimensions.
NoiseModel zero_noise(std::size_t n, std::size_t p, std::uint64_t seed = 0);

struct NoiseSample {
  Vec w;
  Vec v;
};

NoiseSample sample_noise(const NoiseModel& model, std::int64_t t);

/// Uniform double in [0, 1) from a stateless hash of its arguments.
double counter_uniform(std::uint64_t seed, std::uint64_t t, std::uint64_t stream, std::uint64_t index);
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

// states[t] = x_t for t = 0..T; outputs[t-1] = y_t for t = 1..T;
// w[t] = w_t for t = 0..T-1; v[t] = v_t for t = 1..T (v[0] unused, zero).
struct Trajectory {
  int T = 0;
  std::vector<Vec> states;
  std::vector<Vec> outputs;
  std::vector<Vec> w;
  std::vector<Vec> v;

  const Vec& y(int t) const { return outputs.at(static_cast<std::size_t>(t - 1)); }
  // y_s with the convention y_s = 0 for s <= 0.
  Vec y_or_zero(int t, std::size_t p) const;
  Vec w_or_zero(int t, std::size_t n) const;
  Vec v_or_zero(int t, std::size_t p) const;
};

/// Rolls the system forward from x_0 = 0. Throws Overflow when any state
/// entry exceeds 1e12 in magnitude.
Trajectory simulate(const SystemSpec& sys, const NoiseModel& model, int T);

struct GrowthEnvelope {
  double C_x = 0.0;
  double C_y = 0.0;
};

/// C_x = kappa_A C_w, C_y = ||C|| C_x + C_v with effective noise bounds.
/// NotApplicable for Gaussian noise.
GrowthEnvelope growth_envelope(const SystemSpec& sys, const NoiseModel& model);

}  // namespace fmpols
