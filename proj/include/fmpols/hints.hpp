#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "fmpols/lds.hpp"
#include "fmpols/matkit.hpp"
#include "fmpols/predictor.hpp"

namespace fmpols {

// Coefficients c_0..c_m of q(z) = sum_i c_i z^(m-i); c_0 = 1 throughout.
using PolyCoeffs = std::vector<double>;

/// (z^2 - 1)^r, expanded exactly via binomials.
PolyCoeffs diff_coeffs(int r);
/// z^k - 1 (the k-lag filter; k = 2 is the 2-lag hint).
PolyCoeffs lag_coeffs(int k);
/// Monic polynomial with the given roots (repeat a root for multiplicity).
/// Integer roots are expanded in exact integer arithmetic.
PolyCoeffs cayley_hamilton_coeffs(std::span<const std::complex<double>> roots);
/// (z^2 - 2 cos(theta) z + 1)^r for theta in (0, pi).
PolyCoeffs oracle_complex_coeffs(double theta, int r);
PolyCoeffs poly_multiply(std::span<const double> a, std::span<const double> b);
double poly_l1_norm(std::span<const double> c);
/// q(A) = sum_i c_i A^(m-i).
Mat poly_eval(std::span<const double> coeffs, const Mat& A);

/// -sum_{i=1}^m c_i y_{t-i}, with y_s = 0 for s <= 0. `history` holds y_1..y_{t-1}.
Vec polynomial_hint(std::span<const double> coeffs, std::span<const Vec> history, std::int64_t t, std::size_t p);

// Observer x^_{t+1} = (A - L C) x^_t + L y_t from x^_0 = 0, emitting C x^_t.
struct LuenbergerHintState {
  Mat A;
  Mat C;
  Mat gain;
  Vec state;
  std::int64_t steps = 0;
};

/// Advances the observer with y_{t-1} (nothing to consume at t = 1) and
/// returns C x^_t.
Vec luenberger_hint_step(LuenbergerHintState& s, std::optional<std::span<const double>> y_prev);

// Public information available to a hint at step t: past outputs, and the
// learner's own committed state (for the self-consistent hint).
struct HintContext {
  std::span<const Vec> history;  // y_1..y_{t-1}
  std::int64_t t = 1;
  const PolsState* predictor = nullptr;
  const Feature* feature = nullptr;
};

enum class HintKind { Luenberger, Polynomial, Zero, SelfConsistent };
std::string_view to_string(HintKind kind);

class HintProvider {
 public:
  /// Throws InvalidArgument unless rho(A - gain C) < 1.
  static HintProvider luenberger(const SystemSpec& sys, Mat gain);
  static HintProvider luenberger(Mat A, Mat C, Mat gain);
  /// Throws InvalidArgument unless coeffs[0] == 1.
  static HintProvider polynomial(PolyCoeffs coeffs, std::size_t p);
  static HintProvider zero(std::size_t p);
  static HintProvider self_consistent(std::size_t p);

  HintKind kind() const noexcept;
  /// The hint for step ctx.t. Steps must be requested in order 1, 2, ...
  Vec next(const HintContext& ctx);

  const PolyCoeffs* coeffs() const;
  const Mat* gain() const;

 private:
  struct Polynomial {
    PolyCoeffs coeffs;
    std::size_t p;
  };
  struct Zero {
    std::size_t p;
  };
  struct SelfConsistent {
    std::size_t p;
  };
  using Impl = std::variant<LuenbergerHintState, Polynomial, Zero, SelfConsistent>;

  explicit HintProvider(Impl impl) : impl_(std::move(impl)) {}

  Impl impl_;
  std::int64_t expected_t_ = 1;
};

// Hint residuals Delta_t = y_t - hint_t and the running max of their norms.
struct ResidualTrace {
  std::vector<Vec> residuals;
  std::vector<double> running_max;

  void push(std::span<const double> y, std::span<const double> hint);
  double delta_max() const { return running_max.empty() ? 0.0 : running_max.back(); }
};

}  // namespace fmpols
