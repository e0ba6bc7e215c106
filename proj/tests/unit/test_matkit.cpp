#include <doctest.h>

#include <cmath>
#include <complex>

#include "fmpols/matkit.hpp"
#include "support.hpp"

using namespace fmpols;

TEST_CASE("operator_norm on small matrices") {
  CHECK(operator_norm(Mat::identity(2)) == doctest::Approx(1.0));
  CHECK(operator_norm(Mat{{3, 0}, {0, -4}}) == doctest::Approx(4.0));
  CHECK(operator_norm(Mat{{0, 1}, {1, 0}}) == doctest::Approx(1.0));
  CHECK(operator_norm(Mat(3, 2)) == 0.0);
}

TEST_CASE("operator_norm agrees with SVD and is submultiplicative") {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 50; ++k) {
    const std::size_t n = 1 + rng() % 8, m = 1 + rng() % 8, q = 1 + rng() % 8;
    const Mat A = test::random_mat(rng, n, m), B = test::random_mat(rng, m, q);
    CHECK(operator_norm(A) == doctest::Approx(test::spectral_norm(test::to_eigen(A))).epsilon(1e-8));
    CHECK(operator_norm(A * B) <= operator_norm(A) * operator_norm(B) + 1e-10);
  }
}

TEST_CASE("Mat rejects non-finite entries") {
  CHECK_THROWS_AS(Mat(1, 1, std::vector<double>{NAN}), Error);
  CHECK_THROWS_AS(Mat(1, 2, std::vector<double>{1.0, INFINITY}), Error);
}

TEST_CASE("eigenvalues of the reference matrices") {
  auto jordan = eigenvalues_small(Mat{{1, 1}, {0, 1}});
  CHECK(jordan.max_abs == doctest::Approx(1.0));
  for (auto v : jordan.values) CHECK(std::abs(v - 1.0) < 1e-8);

  auto swap = eigenvalues_small(Mat{{0, 1}, {1, 0}});
  CHECK(swap.max_abs == doctest::Approx(1.0));
  std::vector<double> re{swap.values[0].real(), swap.values[1].real()};
  std::sort(re.begin(), re.end());
  CHECK(re[0] == doctest::Approx(-1.0));
  CHECK(re[1] == doctest::Approx(1.0));

  const double c = std::cos(0.7), s = std::sin(0.7);
  auto rot = eigenvalues_small(Mat{{c, -s}, {s, c}});
  CHECK(rot.max_abs == doctest::Approx(1.0));
  for (auto v : rot.values) {
    CHECK(v.real() == doctest::Approx(0.764842).epsilon(1e-6));
    CHECK(std::abs(v.imag()) == doctest::Approx(0.644218).epsilon(1e-6));
  }
}

TEST_CASE("eigenvalues: trace, determinant, conjugate pairs, Eigen oracle") {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 60; ++k) {
    const std::size_t n = 1 + rng() % 8;
    const Mat A = test::random_mat(rng, n, n);
    const EigenSet es = eigenvalues_small(A);
    REQUIRE(es.values.size() == n);
    std::complex<double> sum = 0.0, prod = 1.0;
    double mx = 0.0;
    for (auto v : es.values) {
      sum += v;
      prod *= v;
      mx = std::max(mx, std::abs(v));
    }
    double tr = 0.0;
    for (std::size_t i = 0; i < n; ++i) tr += A(i, i);
    CHECK(std::abs(sum.real() - tr) <= 1e-8);
    const double det = determinant(A);
    CHECK(std::abs(prod.real() - det) <= 1e-7 * std::max(1.0, std::abs(det)));
    CHECK(std::abs(es.max_abs - mx) <= 1e-10);

    // conjugate-pair closure
    for (auto v : es.values) {
      double best = INFINITY;
      for (auto u : es.values) best = std::min(best, std::abs(u - std::conj(v)));
      CHECK(best <= 1e-9);
    }
    const auto ref = Eigen::EigenSolver<Eigen::MatrixXd>(test::to_eigen(A)).eigenvalues();
    for (Eigen::Index i = 0; i < ref.size(); ++i) {
      double best = INFINITY;
      for (auto v : es.values) best = std::min(best, std::abs(v - ref(i)));
      CHECK(best <= 1e-7);
    }
  }
}

TEST_CASE("sherman_morrison examples") {
  auto s = sherman_morrison(Mat{{1.0}}, Vec{1.0});
  CHECK(s.gain[0] == doctest::Approx(0.5));
  CHECK(s.inverse(0, 0) == doctest::Approx(0.5));

  const Mat P{{2, 0.5}, {0.5, 1}};
  auto z = sherman_morrison(P, Vec{0, 0});
  CHECK(z.gain == Vec{0, 0});
  CHECK(z.inverse == P);

  auto e = sherman_morrison(Mat::identity(2), Vec{1, 0});
  CHECK(e.gain[0] == doctest::Approx(0.5));
  CHECK(e.gain[1] == doctest::Approx(0.0));
  CHECK(e.inverse(0, 0) == doctest::Approx(0.5));
  CHECK(e.inverse(1, 1) == doctest::Approx(1.0));
  CHECK(e.inverse(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("sherman_morrison matches the direct inverse of P^-1 + z z^T") {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    const std::size_t n = 1 + rng() % 6;
    const Mat X = test::random_mat(rng, n, n);
    const Mat P = X * X.transpose() + Mat::identity(n);
    const Vec z = test::random_vec(rng, n);
    const auto upd = sherman_morrison(P, z);
    const Eigen::MatrixXd Pe = test::to_eigen(P);
    const Eigen::VectorXd ze = Eigen::Map<const Eigen::VectorXd>(z.data(), n);
    const Eigen::MatrixXd direct = (Pe.inverse() + ze * ze.transpose()).inverse();
    CHECK((test::to_eigen(upd.inverse) - direct).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK(upd.inverse == upd.inverse.transpose());
  }
}

TEST_CASE("solve_dare scalar quadratic and trivial cases") {
  // P^2 - 0.25 P - 1 = 0
  const double p_ref = (0.25 + std::sqrt(0.0625 + 4.0)) / 2.0;
  auto sol = solve_dare(Mat{{0.5}}, Mat{{1.0}}, Mat{{1.0}}, Mat{{1.0}});
  CHECK(sol.P(0, 0) == doctest::Approx(p_ref).epsilon(1e-9));
  CHECK(sol.L(0, 0) == doctest::Approx(0.5 * p_ref / (p_ref + 1.0)).epsilon(1e-9));
  CHECK(sol.P(0, 0) == doctest::Approx(1.132782).epsilon(1e-6));
  CHECK(sol.L(0, 0) == doctest::Approx(0.265565).epsilon(1e-6));

  auto zero = solve_dare(Mat{{0.5, 0.1}, {0, 0.3}}, Mat{{1, 0}}, Mat(2, 2), Mat{{1.0}});
  CHECK(max_abs_entry(zero.P) <= 1e-12);
  CHECK(max_abs_entry(zero.L) <= 1e-12);

  auto none = solve_dare(Mat{{0.0}}, Mat{{1.0}}, Mat{{0.7}}, Mat{{1.0}});
  CHECK(none.P(0, 0) == doctest::Approx(0.7));
  CHECK(none.L(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("solve_dare residual on random observable pairs") {
  std::mt19937_64 rng(21);
  for (int k = 0; k < 20; ++k) {
    const std::size_t n = 2 + rng() % 3;
    Mat A = test::random_mat(rng, n, n);
    A = (0.9 / std::max(1e-9, eigenvalues_small(A).max_abs)) * A;
    const Mat C = test::random_mat(rng, 1, n);
    const Mat Q = Mat::identity(n), R{{0.5}};
    const auto sol = solve_dare(A, C, Q, R);
    const Mat& P = sol.P;
    const Mat S = C * P * C.transpose() + R;
    const Mat rhs = A * P * A.transpose() - A * P * C.transpose() * inverse(S) * C * P * A.transpose() + Q;
    CHECK(frobenius_norm(P - rhs) <= 1e-9);
  }
}

TEST_CASE("mat_power_seq") {
  auto id = mat_power_seq(Mat::identity(2), 3);
  REQUIRE(id.size() == 4);
  for (const auto& m : id) CHECK(m == Mat::identity(2));
  auto j = mat_power_seq(Mat{{1, 1}, {0, 1}}, 5);
  CHECK(j[5] == (Mat{{1, 5}, {0, 1}}));
  auto s = mat_power_seq(Mat{{0, 1}, {1, 0}}, 2);
  CHECK(s[2] == Mat::identity(2));
}

TEST_CASE("inverse, solve, determinant against Eigen") {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 40; ++k) {
    const std::size_t n = 1 + rng() % 6;
    const Mat A = test::random_mat(rng, n, n) + 3.0 * Mat::identity(n);
    const Mat B = test::random_mat(rng, n, 2);
    const Eigen::MatrixXd Ae = test::to_eigen(A);
    CHECK((test::to_eigen(inverse(A)) - Ae.inverse()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((test::to_eigen(solve(A, B)) - Ae.partialPivLu().solve(test::to_eigen(B))).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(determinant(A) == doctest::Approx(Ae.determinant()).epsilon(1e-10));
    CHECK(log_abs_determinant(A) == doctest::Approx(std::log(std::abs(Ae.determinant()))).epsilon(1e-10));
  }
  CHECK(numerical_rank(Mat{{1, 2}, {2, 4}}, 1e-9) == 1);
  CHECK(numerical_rank(Mat::identity(3), 1e-9) == 3);
}
