#include "fmpols/lds.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace fmpols {

std::string_view to_string(SpectrumTag tag) {
  switch (tag) {
    case SpectrumTag::RealDiagonalizable: return "real_diagonalizable";
    case SpectrumTag::RealJordan: return "real_jordan";
    case SpectrumTag::ComplexMarginal: return "complex_marginal";
    case SpectrumTag::Stable: return "stable";
  }
  return "stable";
}

SpectrumTag spectrum_tag_from_string(std::string_view s) {
  for (auto tag : {SpectrumTag::RealDiagonalizable, SpectrumTag::RealJordan, SpectrumTag::ComplexMarginal,
                   SpectrumTag::Stable}) {
    if (to_string(tag) == s) return tag;
  }
  throw Error(ErrorCode::ConfigError, "unknown spectrum tag '" + std::string(s) + "'");
}

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::Gaussian ? "gaussian" : "nonstochastic";
}

NoiseKind noise_kind_from_string(std::string_view s) {
  if (s == "gaussian") return NoiseKind::Gaussian;
  if (s == "nonstochastic") return NoiseKind::Nonstochastic;
  throw Error(ErrorCode::ConfigError, "unknown noise kind '" + std::string(s) + "'");
}

double power_bound_constant(const Mat& A, int jordan_r, int k_max) {
  double kappa = 0.0;
  Mat power = Mat::identity(A.rows());
  for (int k = 0; k <= k_max; ++k) {
    const double growth = std::pow(1.0 + k, jordan_r - 1);
    kappa = std::max(kappa, operator_norm(power) / growth);
    power = power * A;
  }
  return kappa;
}

SystemSpec make_system(std::string name, Mat A, Mat C, int jordan_r, double kappa_A, SpectrumTag spectrum) {
  if (!A.square() || A.rows() == 0) throw Error(ErrorCode::InvalidArgument, name + ": A must be square");
  if (C.cols() != A.rows() || C.rows() == 0) throw Error(ErrorCode::InvalidArgument, name + ": C must be p x n");
  if (jordan_r < 1) throw Error(ErrorCode::InvalidArgument, name + ": jordan_r must be >= 1");
  if (!(kappa_A >= 1.0)) throw Error(ErrorCode::InvalidArgument, name + ": kappa_A must be >= 1");
  const double rho = eigenvalues_small(A).max_abs;
  if (rho > 1.0 + 1e-9) {
    throw Error(ErrorCode::InvalidArgument, name + ": spectral radius " + std::to_string(rho) + " exceeds 1");
  }
  const double needed = power_bound_constant(A, jordan_r);
  if (needed > kappa_A * (1.0 + 1e-9)) {
    throw Error(ErrorCode::InvalidArgument,
                name + ": declared kappa_A fails the power bound (needs " + std::to_string(needed) + ")");
  }
  return SystemSpec{std::move(name), std::move(A), std::move(C), jordan_r, kappa_A, spectrum};
}

SystemSpec rotation_jordan_system(double theta) {
  const double c = std::cos(theta), s = std::sin(theta);
  Mat A{{c, -s, 1.0, 0.0}, {s, c, 0.0, 1.0}, {0.0, 0.0, c, -s}, {0.0, 0.0, s, c}};
  Mat C{{1.0, 0.3, 0.0, 0.0}};
  // A = diag(R, R) [[I, R^-1], [0, I]]; the powers have the norm of a 2x2
  // Jordan block, so kappa_A = 1 with r = 2.
  return make_system("rotation_jordan", std::move(A), std::move(C), 2, 1.0, SpectrumTag::ComplexMarginal);
}

std::vector<std::string> builtin_system_names() {
  return {"double_integrator", "symmetric_swap", "jordan3", "rotation_jordan", "scalar_stable"};
}

SystemSpec builtin_system(std::string_view name) {
  if (name == "double_integrator") {
    return make_system("double_integrator", Mat{{1.0, 1.0}, {0.0, 1.0}}, Mat{{1.0, 0.0}}, 2, 1.0,
                       SpectrumTag::RealJordan);
  }
  if (name == "symmetric_swap") {
    return make_system("symmetric_swap", Mat{{0.0, 1.0}, {1.0, 0.0}}, Mat{{1.0, 0.5}}, 1, 1.0,
                       SpectrumTag::RealDiagonalizable);
  }
  if (name == "jordan3") {
    return make_system("jordan3", Mat{{1.0, 1.0, 0.0}, {0.0, 1.0, 1.0}, {0.0, 0.0, 1.0}}, Mat{{1.0, 0.0, 0.0}}, 3,
                       1.0, SpectrumTag::RealJordan);
  }
  if (name == "rotation_jordan") return rotation_jordan_system(0.7);
  if (name == "scalar_stable") {
    return make_system("scalar_stable", Mat{{0.5}}, Mat{{1.0}}, 1, 1.0, SpectrumTag::Stable);
  }
  throw Error(ErrorCode::ConfigError, "unknown system '" + std::string(name) + "'");
}

double NoiseModel::effective_bound_w() const {
  if (kind == NoiseKind::Gaussian) throw Error(ErrorCode::NotApplicable, "no per-step bound for Gaussian noise");
  return norm2(bias_w) + norm2(amp_w) + uniform_w * std::sqrt(static_cast<double>(bias_w.size()));
}

double NoiseModel::effective_bound_v() const {
  if (kind == NoiseKind::Gaussian) throw Error(ErrorCode::NotApplicable, "no per-step bound for Gaussian noise");
  return norm2(bias_v) + norm2(amp_v) + uniform_v * std::sqrt(static_cast<double>(bias_v.size()));
}

NoiseModel zero_noise(std::size_t n, std::size_t p, std::uint64_t seed) {
  NoiseModel m;
  m.bias_w.assign(n, 0.0);
  m.amp_w.assign(n, 0.0);
  m.bias_v.assign(p, 0.0);
  m.amp_v.assign(p, 0.0);
  m.seed = seed;
  return m;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word.
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double counter_uniform(std::uint64_t seed, std::uint64_t t, std::uint64_t stream, std::uint64_t index) {
  const std::uint64_t h = mix_seed(mix_seed(mix_seed(seed, stream), t), index);
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

namespace {

enum Stream : std::uint64_t { kUniformW = 1, kUniformV = 2, kGaussW = 3, kGaussV = 4 };

double standard_normal(std::uint64_t seed, std::int64_t t, Stream stream, std::size_t index) {
  // Box-Muller on two independent counter draws.
  const auto ut = static_cast<std::uint64_t>(t);
  const double u1 = 1.0 - counter_uniform(seed, ut, stream, 2 * index);
  const double u2 = counter_uniform(seed, ut, stream, 2 * index + 1);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec structured(std::span<const double> bias, std::span<const double> amp, double freq, double bound,
               std::uint64_t seed, std::int64_t t, Stream stream) {
  Vec out(bias.size());
  const double phase = std::sin(freq * static_cast<double>(t));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double u = counter_uniform(seed, static_cast<std::uint64_t>(t), stream, i);
    out[i] = bias[i] + amp[i] * phase + bound * (2.0 * u - 1.0);
  }
  return out;
}

}  // namespace

NoiseSample sample_noise(const NoiseModel& model, std::int64_t t) {
  if (t < 0) throw Error(ErrorCode::InvalidArgument, "sample_noise: t < 0");
  if (model.amp_w.size() != model.bias_w.size() || model.amp_v.size() != model.bias_v.size()) {
    throw Error(ErrorCode::InvalidArgument, "sample_noise: bias/amplitude length mismatch");
  }
  NoiseSample s;
  if (model.kind == NoiseKind::Gaussian) {
    s.w.resize(model.bias_w.size());
    s.v.resize(model.bias_v.size());
    for (std::size_t i = 0; i < s.w.size(); ++i) s.w[i] = model.uniform_w * standard_normal(model.seed, t, kGaussW, i);
    for (std::size_t i = 0; i < s.v.size(); ++i) s.v[i] = model.uniform_v * standard_normal(model.seed, t, kGaussV, i);
    return s;
  }
  s.w = structured(model.bias_w, model.amp_w, model.freq_w, model.uniform_w, model.seed, t, kUniformW);
  s.v = structured(model.bias_v, model.amp_v, model.freq_v, model.uniform_v, model.seed, t, kUniformV);
  return s;
}

Vec Trajectory::y_or_zero(int t, std::size_t p) const {
  if (t <= 0 || t > T) return Vec(p, 0.0);
  return y(t);
}

Vec Trajectory::w_or_zero(int t, std::size_t n) const {
  if (t < 0 || t >= static_cast<int>(w.size())) return Vec(n, 0.0);
  return w[static_cast<std::size_t>(t)];
}

Vec Trajectory::v_or_zero(int t, std::size_t p) const {
  if (t <= 0 || t > T) return Vec(p, 0.0);
  return v[static_cast<std::size_t>(t)];
}

Trajectory simulate(const SystemSpec& sys, const NoiseModel& model, int T) {
  if (T < 1) throw Error(ErrorCode::InvalidArgument, "simulate: T must be >= 1");
  if (model.bias_w.size() != sys.n() || model.bias_v.size() != sys.p()) {
    throw Error(ErrorCode::InvalidArgument, "simulate: noise dimensions do not match the system");
  }
  Trajectory traj;
  traj.T = T;
  traj.states.reserve(static_cast<std::size_t>(T) + 1);
  traj.outputs.reserve(static_cast<std::size_t>(T));
  traj.w.reserve(static_cast<std::size_t>(T));
  traj.v.reserve(static_cast<std::size_t>(T) + 1);
  traj.states.emplace_back(sys.n(), 0.0);
  traj.v.emplace_back(sys.p(), 0.0);
  for (int t = 0; t < T; ++t) {
    NoiseSample at_t = sample_noise(model, t);
    Vec next = vec_add(sys.A * traj.states.back(), at_t.w);
    for (double e : next) {
      if (!(std::abs(e) <= 1e12)) {
        throw Error(ErrorCode::Overflow, "simulate: state magnitude exceeded 1e12 at t = " + std::to_string(t + 1));
      }
    }
    traj.w.push_back(std::move(at_t.w));
    Vec v_next = sample_noise(model, t + 1).v;
    traj.outputs.push_back(vec_add(sys.C * next, v_next));
    traj.v.push_back(std::move(v_next));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

GrowthEnvelope growth_envelope(const SystemSpec& sys, const NoiseModel& model) {
  if (model.kind != NoiseKind::Nonstochastic) {
    throw Error(ErrorCode::NotApplicable, "growth_envelope: bounds hold only for the nonstochastic model");
  }
  GrowthEnvelope env;
  env.C_x = sys.kappa_A * model.effective_bound_w();
  env.C_y = operator_norm(sys.C) * env.C_x + model.effective_bound_v();
  return env;
}

}  // namespace fmpols
