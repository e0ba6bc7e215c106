#include "fmpols/hints.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>

namespace fmpols {

PolyCoeffs diff_coeffs(int r) {
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "diff_coeffs: r must be >= 1");
  if (r > 30) throw Error(ErrorCode::InvalidArgument, "diff_coeffs: r too large for exact expansion");
  PolyCoeffs c(static_cast<std::size_t>(2 * r) + 1, 0.0);
  std::int64_t binom = 1;  // C(r, k)
  for (int k = 0; k <= r; ++k) {
    c[static_cast<std::size_t>(2 * k)] = static_cast<double>((k % 2 == 0 ? 1 : -1) * binom);
    binom = binom * (r - k) / (k + 1);
  }
  return c;
}

PolyCoeffs lag_coeffs(int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "lag_coeffs: k must be >= 1");
  PolyCoeffs c(static_cast<std::size_t>(k) + 1, 0.0);
  c.front() = 1.0;
  c.back() = -1.0;
  return c;
}

PolyCoeffs poly_multiply(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return {};
  PolyCoeffs out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

PolyCoeffs cayley_hamilton_coeffs(std::span<const std::complex<double>> roots) {
  bool integral = true;
  for (const auto& z : roots) {
    if (z.imag() != 0.0 || z.real() != std::nearbyint(z.real()) || std::abs(z.real()) > 1e6) integral = false;
  }
  if (integral) {
    std::vector<std::int64_t> c{1};
    for (const auto& z : roots) {
      const auto root = static_cast<std::int64_t>(z.real());
      std::vector<std::int64_t> next(c.size() + 1, 0);
      for (std::size_t i = 0; i < c.size(); ++i) {
        next[i] += c[i];
        next[i + 1] -= root * c[i];
      }
      c = std::move(next);
    }
    return PolyCoeffs(c.begin(), c.end());
  }
  std::vector<std::complex<double>> c{1.0};
  for (const auto& z : roots) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= z * c[i];
    }
    c = std::move(next);
  }
  PolyCoeffs out;
  out.reserve(c.size());
  for (const auto& ci : c) {
    if (std::abs(ci.imag()) > 1e-9 * (1.0 + std::abs(ci.real()))) {
      throw Error(ErrorCode::InvalidArgument, "cayley_hamilton_coeffs: roots are not closed under conjugation");
    }
    out.push_back(ci.real());
  }
  return out;
}

PolyCoeffs oracle_complex_coeffs(double theta, int r) {
  if (!(theta > 0.0 && theta < std::numbers::pi)) throw Error(ErrorCode::InvalidArgument, "oracle_complex_coeffs: theta not in (0, pi)");
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "oracle_complex_coeffs: r must be >= 1");
  const PolyCoeffs base{1.0, -2.0 * std::cos(theta), 1.0};
  PolyCoeffs out{1.0};
  for (int k = 0; k < r; ++k) out = poly_multiply(out, base);
  return out;
}

double poly_l1_norm(std::span<const double> c) {
  double acc = 0.0;
  for (double x : c) acc += std::abs(x);
  return acc;
}

Mat poly_eval(std::span<const double> coeffs, const Mat& A) {
  // Horner: ((c_0 A + c_1) A + c_2) ...
  Mat acc(A.rows(), A.cols());
  const Mat I = Mat::identity(A.rows());
  for (double c : coeffs) acc = acc * A + c * I;
  return acc;
}

Vec polynomial_hint(std::span<const double> coeffs, std::span<const Vec> history, std::int64_t t, std::size_t p) {
  Vec hint(p, 0.0);
  for (std::size_t i = 1; i < coeffs.size(); ++i) {
    const std::int64_t s = t - static_cast<std::int64_t>(i);
    if (s <= 0) break;
    const Vec& y = history[static_cast<std::size_t>(s - 1)];
    for (std::size_t j = 0; j < p; ++j) hint[j] -= coeffs[i] * y[j];
  }
  return hint;
}

Vec luenberger_hint_step(LuenbergerHintState& s, std::optional<std::span<const double>> y_prev) {
  if (s.steps > 0) {
    if (!y_prev) throw Error(ErrorCode::InvalidArgument, "luenberger_hint_step: y_{t-1} required after t = 1");
    // x^_{t} = A x^_{t-1} + L (y_{t-1} - C x^_{t-1})
    const Vec innovation = vec_sub(*y_prev, s.C * s.state);
    s.state = vec_add(s.A * s.state, s.gain * innovation);
  }
  s.steps += 1;
  return s.C * s.state;
}

std::string_view to_string(HintKind kind) {
  switch (kind) {
    case HintKind::Luenberger: return "luenberger";
    case HintKind::Polynomial: return "polynomial";
    case HintKind::Zero: return "zero";
    case HintKind::SelfConsistent: return "self_consistent";
  }
  return "zero";
}

HintProvider HintProvider::luenberger(const SystemSpec& sys, Mat gain) { return luenberger(sys.A, sys.C, std::move(gain)); }

HintProvider HintProvider::luenberger(Mat A, Mat C, Mat gain) {
  if (gain.rows() != A.rows() || gain.cols() != C.rows()) {
    throw Error(ErrorCode::InvalidArgument, "luenberger hint: gain must be n x p");
  }
  const double rho = eigenvalues_small(A - gain * C).max_abs;
  if (!(rho < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "luenberger hint: gain is not stabilizing (rho = " + std::to_string(rho) + ")");
  }
  LuenbergerHintState s{std::move(A), std::move(C), std::move(gain), {}, 0};
  s.state.assign(s.A.rows(), 0.0);
  return HintProvider(std::move(s));
}

HintProvider HintProvider::polynomial(PolyCoeffs coeffs, std::size_t p) {
  if (coeffs.empty() || coeffs.front() != 1.0) {
    throw Error(ErrorCode::InvalidArgument, "polynomial hint: leading coefficient must be 1");
  }
  require_finite(coeffs, "polynomial hint");
  return HintProvider(Polynomial{std::move(coeffs), p});
}

HintProvider HintProvider::zero(std::size_t p) { return HintProvider(Zero{p}); }
HintProvider HintProvider::self_consistent(std::size_t p) { return HintProvider(SelfConsistent{p}); }

HintKind HintProvider::kind() const noexcept {
  switch (impl_.index()) {
    case 0: return HintKind::Luenberger;
    case 1: return HintKind::Polynomial;
    case 2: return HintKind::Zero;
    default: return HintKind::SelfConsistent;
  }
}

const PolyCoeffs* HintProvider::coeffs() const {
  if (const auto* poly = std::get_if<Polynomial>(&impl_)) return &poly->coeffs;
  return nullptr;
}

const Mat* HintProvider::gain() const {
  if (const auto* lb = std::get_if<LuenbergerHintState>(&impl_)) return &lb->gain;
  return nullptr;
}

Vec HintProvider::next(const HintContext& ctx) {
  if (ctx.t != expected_t_) throw Error(ErrorCode::InvalidArgument, "HintProvider: steps must be requested in order");
  if (static_cast<std::int64_t>(ctx.history.size()) < ctx.t - 1) {
    throw Error(ErrorCode::InvalidArgument, "HintProvider: history shorter than t - 1");
  }
  ++expected_t_;
  struct Visitor {
    const HintContext& ctx;
    Vec operator()(LuenbergerHintState& s) const {
      if (ctx.t == 1) return luenberger_hint_step(s, std::nullopt);
      const Vec& prev = ctx.history[static_cast<std::size_t>(ctx.t - 2)];
      return luenberger_hint_step(s, std::span<const double>(prev));
    }
    Vec operator()(const Polynomial& poly) const { return polynomial_hint(poly.coeffs, ctx.history, ctx.t, poly.p); }
    Vec operator()(const Zero& z) const { return Vec(z.p, 0.0); }
    Vec operator()(const SelfConsistent& sc) const {
      if (ctx.predictor == nullptr || ctx.feature == nullptr) {
        throw Error(ErrorCode::InvalidArgument, "self-consistent hint needs the predictor state and feature");
      }
      Vec out = ols_predict(*ctx.predictor, *ctx.feature);
      if (out.size() != sc.p) throw Error(ErrorCode::InvalidArgument, "self-consistent hint: dimension mismatch");
      return out;
    }
  };
  return std::visit(Visitor{ctx}, impl_);
}

void ResidualTrace::push(std::span<const double> y, std::span<const double> hint) {
  Vec delta = vec_sub(y, hint);
  const double nrm = norm2(delta);
  running_max.push_back(running_max.empty() ? nrm : std::max(running_max.back(), nrm));
  residuals.push_back(std::move(delta));
}

}  // namespace fmpols
