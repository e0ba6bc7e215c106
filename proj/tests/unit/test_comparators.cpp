#include <doctest.h>

#include <cmath>

#include "fmpols/analysis.hpp"
#include "fmpols/comparators.hpp"
#include "support.hpp"

using namespace fmpols;

namespace {

NoiseModel exp1_like(std::uint64_t seed) {
  NoiseModel m = zero_noise(2, 1, seed);
  m.bias_w.assign(2, 0.01);
  m.amp_w.assign(2, 0.02);
  m.uniform_w = 0.3;
  m.bias_v.assign(1, 0.01);
  m.amp_v.assign(1, 0.02);
  m.uniform_v = 0.3;
  return m;
}

SystemSpec scalar_unit() { return make_system("unit", Mat{{1.0}}, Mat{{1.0}}, 1, 1.0, SpectrumTag::RealDiagonalizable); }

double scalar_dare(double a, double q) {
  // P = a^2 P / (P + 1) + q  with c = r = 1:  P^2 + (1 - a^2 - q) P - q = 0
  const double b = 1.0 - a * a - q;
  return (-b + std::sqrt(b * b + 4.0 * q)) / 2.0;
}

}  // namespace

TEST_CASE("luenberger_rollout examples") {
  const SystemSpec di = builtin_system("double_integrator");
  const Trajectory tr = simulate(di, exp1_like(1), 100);
  for (const Vec& v : luenberger_rollout(di, Mat(2, 1), tr.outputs)) CHECK(v == Vec{0});

  const SystemSpec u = scalar_unit();
  const Trajectory tu = simulate(u, exp1_like(2).kind == NoiseKind::Gaussian ? zero_noise(1, 1) : [] {
    NoiseModel m = zero_noise(1, 1, 3);
    m.uniform_w = 0.5;
    m.uniform_v = 0.2;
    return m;
  }(), 50);
  const auto pred = luenberger_rollout(u, Mat{{1.0}}, tu.outputs);
  CHECK(pred[0] == Vec{0});
  for (int t = 2; t <= 50; ++t) CHECK(pred[static_cast<std::size_t>(t - 1)] == tu.y(t - 1));

  CHECK_THROWS_AS(luenberger_rollout(u, Mat{{-5.0}}, tu.outputs), Error);
}

TEST_CASE("observer error follows A_L e + w - L v") {
  const SystemSpec di = builtin_system("double_integrator");
  const Trajectory tr = simulate(di, exp1_like(5), 300);
  const LuenbergerGain g = design_gain(di, 0.4);
  const auto pred = luenberger_rollout(di, g.L, tr.outputs);
  const Mat AL = di.A - g.L * di.C;
  Vec e = tr.w[0];  // e_1 = x_1 - 0
  for (int t = 1; t <= 300; ++t) {
    // y_t - yhat_t = C e_t + v_t
    const Vec lhs = vec_sub(tr.y(t), pred[static_cast<std::size_t>(t - 1)]);
    const Vec rhs = vec_add(di.C * e, tr.v[static_cast<std::size_t>(t)]);
    CHECK(std::abs(lhs[0] - rhs[0]) <= 1e-9 * (1.0 + std::abs(lhs[0])));
    if (t < 300) e = vec_sub(vec_add(AL * e, tr.w[static_cast<std::size_t>(t)]), g.L * tr.v[static_cast<std::size_t>(t)]);
  }
}

TEST_CASE("truncated predictor") {
  const SystemSpec di = builtin_system("double_integrator");
  const Trajectory tr = simulate(di, exp1_like(7), 60);
  const LuenbergerGain g = design_gain(di, 0.5);
  const int H = 10;
  const TruncatedPredictor tp = truncated_predictor(di, g.L, H);
  const Mat AL = di.A - g.L * di.C;
  const auto pw = mat_power_seq(AL, H);
  for (int k = 0; k < H; ++k) {
    const Mat block = di.C * pw[static_cast<std::size_t>(k)] * g.L;
    CHECK(std::abs(tp.M_L(0, static_cast<std::size_t>(k)) - block(0, 0)) <= 1e-14);
  }
  const auto lb = luenberger_rollout(di, g.L, tr.outputs);
  for (int t = 1; t <= H; ++t) {
    const Vec p = tp.predict(build_feature(tr.outputs, t, H, 1));
    CHECK(std::abs(p[0] - lb[static_cast<std::size_t>(t - 1)][0]) <= 1e-9 * (1.0 + std::abs(p[0])));
  }
  const TruncatedPredictor one = truncated_predictor(di, g.L, 1);
  CHECK(one.M_L(0, 0) == doctest::Approx((di.C * g.L)(0, 0)));

  const SystemSpec u = scalar_unit();
  const auto lu = luenberger_rollout(u, Mat{{1.0}}, tr.outputs);
  const TruncatedPredictor dz = truncated_predictor(u, Mat{{1.0}}, 5);
  for (int t = 1; t <= 60; ++t) CHECK(dz.predict(build_feature(tr.outputs, t, 5, 1)) == lu[static_cast<std::size_t>(t - 1)]);
}

TEST_CASE("certify_gain examples") {
  const SystemSpec di = builtin_system("double_integrator");
  CHECK_FALSE(certify_gain(di, Mat(2, 1), 100.0, 0.1).certified);

  const SystemSpec u = scalar_unit();
  CHECK(certify_gain(u, Mat{{1.0}}, 1.0, 1.0).certified);
  CHECK(certify_gain(u, Mat{{1.0}}, 3.0, 1.0).certified);
  CHECK_FALSE(certify_gain(u, Mat{{1.0}}, 0.5, 1.0).certified);

  // Both closed-loop poles at 0.5: z^2 - (2 - l1) z + (1 - l1 + l2) = (z - 0.5)^2.
  const Mat L{{1.0}, {0.25}};
  const double kappa = decay_constant(di, L, 0.5);
  CHECK(std::isfinite(kappa));
  const LuenbergerGain g = certify_gain(di, L, kappa, 0.5);
  CHECK(g.certified);
  CHECK(g.spectral_radius == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_FALSE(certify_gain(di, L, kappa * 0.9, 0.5).certified);
  CHECK_FALSE(certify_gain(di, L, kappa, 0.6).certified);
}

TEST_CASE("design_gain examples") {
  const SystemSpec di = builtin_system("double_integrator");
  const LuenbergerGain dead = design_gain(di, 1.0);
  const Mat AL = di.A - dead.L * di.C;
  CHECK(operator_norm(AL * AL) <= 1e-9);

  const LuenbergerGain half = design_gain(di, 0.5);
  CHECK(half.L(0, 0) == doctest::Approx(1.0));
  CHECK(half.L(1, 0) == doctest::Approx(0.25));
  CHECK(half.certified);

  for (double a : {0.5, -0.3, 1.0}) {
    const SystemSpec s = make_system("s", Mat{{a}}, Mat{{1.0}}, 1, 1.0, SpectrumTag::Stable);
    for (double gm : {0.2, 0.7}) CHECK(design_gain(s, gm).L(0, 0) == doctest::Approx(a - (1.0 - gm)));
  }

  SystemSpec blind = di;
  blind.C = Mat(1, 2);
  try {
    design_gain(blind, 0.5);
    FAIL("expected NotObservable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotObservable);
  }

  // Every placed pole sits at the requested radius.
  for (const char* name : {"jordan3", "rotation_jordan", "symmetric_swap"}) {
    const SystemSpec sys = builtin_system(name);
    const LuenbergerGain g = design_gain(sys, 0.5);
    const Eigen::MatrixXd ALe = test::to_eigen(sys.A - g.L * sys.C);
    const auto ev = Eigen::EigenSolver<Eigen::MatrixXd>(ALe).eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) CHECK(std::abs(ev(i)) == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(g.certified);
    CHECK(g.gamma <= 0.5);
    CHECK(g.gamma >= 0.4999);
  }
}

TEST_CASE("best_in_hindsight: single candidate, ties, deadbeat") {
  const SystemSpec di = builtin_system("double_integrator");
  const Trajectory tr = simulate(di, exp1_like(3), 200);
  const LuenbergerGain g = design_gain(di, 0.5);
  const HindsightResult one = best_in_hindsight(di, std::vector<Mat>{g.L}, tr.outputs);
  for (auto idx : one.best_index) CHECK(idx == 0);

  const HindsightResult tie = best_in_hindsight(di, std::vector<Mat>{g.L, g.L}, tr.outputs);
  for (auto idx : tie.best_index) CHECK(idx == 0);

  // Noise-free stream that the deadbeat observer predicts exactly from t = 3.
  const SystemSpec u = scalar_unit();
  NoiseModel c = zero_noise(1, 1);
  c.bias_w = {0.0};
  Trajectory flat = simulate(u, c, 50);
  for (auto& y : flat.outputs) y = {2.0};
  const HindsightResult dz = best_in_hindsight(u, std::vector<Mat>{Mat{{0.5}}, Mat{{1.0}}, Mat{{0.2}}}, flat.outputs);
  for (std::size_t t = 2; t < dz.best_index.size(); ++t) CHECK(dz.best_index[t] == 1);

  CHECK_THROWS_AS(best_in_hindsight(di, std::vector<Mat>{}, tr.outputs), Error);
}

TEST_CASE("best_in_hindsight equals an independent prefix minimum") {
  const SystemSpec di = builtin_system("double_integrator");
  const Trajectory tr = simulate(di, exp1_like(11), 300);
  GainGrid grid;
  grid.steps = 21;
  const HindsightResult h = best_in_hindsight(di, grid, tr.outputs);
  REQUIRE(!h.candidates.empty());
  CHECK(h.lattice_size == 441);
  std::vector<std::vector<double>> cum;
  for (const Mat& L : h.candidates) {
    CHECK(certify_gain(di, L, grid.kappa, grid.gamma).certified);
    const auto pred = luenberger_rollout(di, L, tr.outputs);
    std::vector<double> c;
    double acc = 0.0;
    for (int t = 1; t <= 300; ++t) c.push_back(acc += norm2_squared(vec_sub(pred[static_cast<std::size_t>(t - 1)], tr.y(t))));
    cum.push_back(c);
  }
  double prev = 0.0;
  for (std::size_t t = 0; t < 300; ++t) {
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t k = 0; k < cum.size(); ++k) {
      if (cum[k][t] < best) {
        best = cum[k][t];
        arg = k;
      }
    }
    CHECK(h.best_cumulative[t] == doctest::Approx(best).epsilon(1e-12));
    CHECK(h.best_index[t] == arg);
    CHECK(h.step_loss[t] == doctest::Approx(best - prev).epsilon(1e-9));
    prev = best;
  }
}

TEST_CASE("Kalman and H-infinity gains") {
  const SystemSpec s = builtin_system("scalar_stable");
  const LuenbergerGain k = kalman_gain(s, Mat{{1.0}}, Mat{{1.0}});
  const double P = scalar_dare(0.5, 1.0);
  CHECK(k.L(0, 0) == doctest::Approx(0.5 * P / (P + 1.0)).epsilon(1e-9));
  CHECK(k.L(0, 0) == doctest::Approx(0.265565).epsilon(1e-6));
  CHECK(max_abs_entry(kalman_gain(s, Mat{{0.0}}, Mat{{1.0}}).L) <= 1e-12);

  const LuenbergerGain h0 = hinf_gain(s, Mat{{1.0}}, Mat{{1.0}}, 0.0);
  CHECK(h0.L == k.L);
  const LuenbergerGain h1 = hinf_gain(s, Mat{{1.0}}, Mat{{1.0}}, 1.0);
  const double P2 = scalar_dare(0.5, 2.0);
  CHECK(h1.L(0, 0) == doctest::Approx(0.5 * P2 / (P2 + 1.0)).epsilon(1e-9));
  try {
    hinf_gain(s, Mat{{1.0}}, Mat{{1.0}}, -0.1);
    FAIL("expected InvalidLevel");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidLevel);
  }
}

TEST_CASE("RMS-matched covariance") {
  NoiseModel m = zero_noise(2, 1);
  m.bias_w = {0.1, 0.0};
  m.amp_w = {0.2, 0.0};
  m.uniform_w = 0.3;
  m.uniform_v = 0.6;
  const NoiseCovariance c = rms_covariance(m);
  CHECK(c.Q(0, 0) == doctest::Approx(0.01 + 0.02 + 0.03));
  CHECK(c.Q(1, 1) == doctest::Approx(0.03));
  CHECK(c.Q(0, 1) == 0.0);
  CHECK(c.R(0, 0) == doctest::Approx(0.12));
}

TEST_CASE("truncation and prediction error bounds on certified gains") {
  const SystemSpec di = builtin_system("double_integrator");
  GainGrid grid;
  grid.steps = 21;
  const int T = 600;
  for (std::uint64_t seed : {21u, 22u}) {
    const NoiseModel m = exp1_like(seed);
    const Trajectory tr = simulate(di, m, T);
    const auto env = growth_envelope(di, m);
    BoundInputs in;
    in.r = 2;
    in.kappa = grid.kappa;
    in.gamma = grid.gamma;
    in.C_w = m.effective_bound_w();
    in.C_v = m.effective_bound_v();
    in.C_y = env.C_y;
    const int H = recommended_memory(grid.gamma, 2, T);
    in.H = H;
    const HindsightResult h = best_in_hindsight(di, grid, std::span<const Vec>(tr.outputs).first(1));
    for (std::size_t k = 0; k < h.candidates.size(); k += std::max<std::size_t>(1, h.candidates.size() / 6)) {
      const Mat& L = h.candidates[k];
      const auto lb = luenberger_rollout(di, L, tr.outputs);
      const TruncatedPredictor tp = truncated_predictor(di, L, H);
      double sum = 0.0, sum2 = 0.0;
      for (int t = 1; t <= T; ++t) {
        const Vec& yl = lb[static_cast<std::size_t>(t - 1)];
        const double err = norm2(vec_sub(yl, tp.predict(build_feature(tr.outputs, t, H, 1))));
        CHECK(err <= truncation_bound(in, t));
        sum += err;
        sum2 += err * err;
        CHECK(norm2(vec_sub(yl, tr.y(t))) <= c_pred(in));
      }
      CHECK(sum <= c_trun(in));
      CHECK(sum2 <= c_trun(in) * c_trun(in));
    }
  }
}

TEST_CASE("characterize_gain reports the realized decay") {
  const SystemSpec di = builtin_system("double_integrator");
  const LuenbergerGain g = characterize_gain(di, Mat{{1.0}, {0.25}});
  CHECK(g.gamma == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(g.certified);
  CHECK(g.kappa >= 1.0);
}
