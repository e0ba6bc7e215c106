#include <doctest.h>

#include "fmpols/hints.hpp"
#include "fmpols/predictor.hpp"
#include "support.hpp"

using namespace fmpols;

namespace {

std::vector<Vec> scalars(std::initializer_list<double> xs) {
  std::vector<Vec> out;
  for (double x : xs) out.push_back({x});
  return out;
}

// Ridge solution with the look-ahead term, through Eigen's LDLT.
Eigen::MatrixXd ridge_oracle(double lambda, const std::vector<Vec>& zs, const std::vector<Vec>& ys, const Vec* hint,
                             std::size_t p) {
  const std::size_t d = zs.front().size();
  Eigen::MatrixXd G = lambda * Eigen::MatrixXd::Identity(d, d);
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(p, d);
  const std::size_t n_gram = hint ? zs.size() : zs.size() - 1;
  for (std::size_t s = 0; s < n_gram; ++s) {
    const Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(zs[s].data(), d);
    G += z * z.transpose();
  }
  for (std::size_t s = 0; s < ys.size(); ++s) {
    B += Eigen::Map<const Eigen::VectorXd>(ys[s].data(), p) * Eigen::Map<const Eigen::VectorXd>(zs[s].data(), d).transpose();
  }
  if (hint) {
    B += Eigen::Map<const Eigen::VectorXd>(hint->data(), p) *
         Eigen::Map<const Eigen::VectorXd>(zs.back().data(), d).transpose();
  }
  return G.ldlt().solve(B.transpose()).transpose();
}

}  // namespace

TEST_CASE("build_feature stacking and padding") {
  CHECK(build_feature({}, 1, 4, 2).z == Vec(8, 0.0));
  const auto y = scalars({1, 2, 3});
  CHECK(build_feature(y, 3, 2, 1).z == Vec{2, 1});
  CHECK(build_feature(scalars({5}), 2, 3, 1).z == Vec{5, 0, 0});
  const std::vector<Vec> y2{{1, 10}, {2, 20}};
  CHECK(build_feature(y2, 3, 3, 2).z == Vec{2, 20, 1, 10, 0, 0});
  CHECK_THROWS_AS(build_feature(y, 3, 0, 1), Error);
  CHECK_THROWS_AS(build_feature(y, 6, 2, 1), Error);
}

TEST_CASE("initial state") {
  const PolsState s = PolsState::initial(2, 3, 4.0);
  CHECK(s.M == Mat(2, 3));
  CHECK(s.P == 0.25 * Mat::identity(3));
  CHECK_THROWS_AS(PolsState::initial(1, 1, 0.0), Error);
}

TEST_CASE("pols_step and commit: scalar examples") {
  PolsState s = PolsState::initial(1, 1, 1.0);
  Feature f{{1.0}, 1, 1};
  StagedStep st = pols_step(s, f, Vec{2.0});
  CHECK(st.M_pols(0, 0) == doctest::Approx(1.0));
  CHECK(st.prediction[0] == doctest::Approx(1.0));

  // Fresh state, any z: zero hint predicts zero.
  StagedStep z = pols_step(PolsState::initial(1, 3, 1.0), Feature{{0.3, -2.0, 5.0}, 1, 3}, Vec{0.0});
  CHECK(z.prediction == Vec{0.0});

  // y = M z leaves M unchanged; y = hint makes M_t = M_pols.
  PolsState warm = pols_commit(pols_step(PolsState::initial(1, 2, 1.0), Feature{{1, 2}, 1, 2}, Vec{0}), Vec{3});
  StagedStep again = pols_step(warm, Feature{{0.5, -1.0}, 2, 2}, Vec{7});
  const Vec base = again.innovation_base;
  const PolsState same = pols_commit(again, base);
  CHECK(max_abs_entry(same.M - warm.M) <= 1e-15);
  StagedStep h = pols_step(warm, Feature{{0.5, -1.0}, 2, 2}, Vec{7});
  const Mat mp = h.M_pols;
  CHECK(max_abs_entry(pols_commit(h, Vec{7}).M - mp) <= 1e-15);
}

TEST_CASE("pols_closed_form examples") {
  const std::vector<Vec> z1{{1.0}};
  CHECK(pols_closed_form(1.0, z1, {}, Vec{2.0})(0, 0) == doctest::Approx(1.0));
  const std::vector<Vec> zs{{1, 2}, {0.5, 1}, {3, -1}};
  const std::vector<Vec> ys{{0}, {0}};
  CHECK(max_abs_entry(pols_closed_form(0.7, zs, ys, Vec{0})) == 0.0);
  CHECK_THROWS_AS(pols_closed_form(1.0, zs, std::span<const Vec>(ys).first(1), Vec{0}), Error);
}

TEST_CASE("recursion equals the Eigen ridge oracle for random hints") {
  std::mt19937_64 rng(41);
  for (int inst = 0; inst < 30; ++inst) {
    const std::size_t p = 1 + rng() % 2, H = 1 + rng() % 3, d = p * H;
    const double lambda = 0.1 + (rng() % 100) / 10.0;
    std::vector<Vec> ys, zs;
    for (int t = 0; t < 100; ++t) ys.push_back(test::random_vec(rng, p));
    PolsState s = PolsState::initial(p, d, lambda);
    for (int t = 1; t <= 100; ++t) {
      const std::span<const Vec> hist(ys.data(), static_cast<std::size_t>(t - 1));
      const Feature f = build_feature(hist, t, static_cast<int>(H), p);
      zs.push_back(f.z);
      const Vec hint = test::random_vec(rng, p);
      StagedStep st = pols_step(std::move(s), f, hint);
      const std::vector<Vec> past(ys.begin(), ys.begin() + t - 1);
      const Eigen::MatrixXd ref = ridge_oracle(lambda, zs, past, &hint, p);
      CHECK((test::to_eigen(st.M_pols) - ref).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK((test::to_eigen(pols_closed_form(lambda, zs, past, hint)) - ref).cwiseAbs().maxCoeff() <= 1e-9);
      // P_t is the inverse of G_t
      const Eigen::MatrixXd G = test::to_eigen(regularized_gram(lambda, zs, d));
      CHECK((test::to_eigen(st.state.P) - G.inverse()).norm() <= 1e-9);
      s = pols_commit(std::move(st), ys[static_cast<std::size_t>(t - 1)]);
    }
  }
}

TEST_CASE("P stays symmetric positive definite and below lambda^-1 I") {
  std::mt19937_64 rng(43);
  const double lambda = 2.0;
  PolsState s = PolsState::initial(1, 4, lambda);
  std::vector<Vec> ys;
  for (int t = 1; t <= 300; ++t) {
    const Feature f = build_feature(ys, t, 4, 1);
    StagedStep st = pols_step(std::move(s), f, Vec{0.0});
    const Eigen::MatrixXd P = test::to_eigen(st.state.P);
    CHECK((P - P.transpose()).cwiseAbs().maxCoeff() == 0.0);
    const Eigen::VectorXd ev = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(P).eigenvalues();
    CHECK(ev.minCoeff() > 0.0);
    CHECK(ev.maxCoeff() <= 1.0 / lambda + 1e-9);
    ys.push_back(test::random_vec(rng, 1, 3.0));
    s = pols_commit(std::move(st), ys.back());
  }
}

TEST_CASE("self-consistent hint recovers OLS, zero hint gives the VAW forecaster") {
  std::mt19937_64 rng(47);
  for (int inst = 0; inst < 20; ++inst) {
    const std::size_t p = 1 + inst % 2, H = 2, d = p * H;
    std::vector<Vec> ys, zs;
    for (int t = 0; t < 100; ++t) ys.push_back(test::random_vec(rng, p));
    PolsState s = PolsState::initial(p, d, 1.0), v = PolsState::initial(p, d, 1.0);
    HintProvider sc = HintProvider::self_consistent(p);
    HintProvider zero = HintProvider::zero(p);
    for (int t = 1; t <= 100; ++t) {
      const std::span<const Vec> hist(ys.data(), static_cast<std::size_t>(t - 1));
      const Feature f = build_feature(hist, t, static_cast<int>(H), p);
      zs.push_back(f.z);
      const std::vector<Vec> past(hist.begin(), hist.end());
      const Vec hs = sc.next(HintContext{hist, t, &s, &f});
      CHECK(hs == ols_predict(s, f));
      StagedStep st = pols_step(std::move(s), f, hs);
      CHECK((test::to_eigen(st.M_pols) - ridge_oracle(1.0, zs, past, nullptr, p)).cwiseAbs().maxCoeff() <= 1e-9);
      CHECK(max_abs_entry(st.M_pols - ols_closed_form(1.0, zs, past, p)) <= 1e-9);

      const Vec hz = zero.next(HintContext{hist, t, &v, &f});
      CHECK(hz == Vec(p, 0.0));
      StagedStep sv = pols_step(std::move(v), f, hz);
      const Vec zero_hint(p, 0.0);
      CHECK((test::to_eigen(sv.M_pols) - ridge_oracle(1.0, zs, past, &zero_hint, p)).cwiseAbs().maxCoeff() <= 1e-9);

      s = pols_commit(std::move(st), ys[static_cast<std::size_t>(t - 1)]);
      v = pols_commit(std::move(sv), ys[static_cast<std::size_t>(t - 1)]);
    }
  }
}

TEST_CASE("dimension checks") {
  PolsState s = PolsState::initial(1, 2, 1.0);
  CHECK_THROWS_AS(pols_step(s, Feature{{1, 2, 3}, 1, 3}, Vec{0}), Error);
  CHECK_THROWS_AS(pols_step(s, Feature{{1, 2}, 1, 2}, Vec{0, 0}), Error);
  CHECK_THROWS_AS(pols_commit(pols_step(s, Feature{{1, 2}, 1, 2}, Vec{0}), Vec{NAN}), Error);
}
