#pragma once

#include <Eigen/Dense>
#include <random>

#include "fmpols/matkit.hpp"

namespace test {

inline Eigen::MatrixXd to_eigen(const fmpols::Mat& m) {
  Eigen::MatrixXd e(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) e(i, j) = m(i, j);
  return e;
}

inline fmpols::Mat from_eigen(const Eigen::MatrixXd& e) {
  fmpols::Mat m(e.rows(), e.cols());
  for (Eigen::Index i = 0; i < e.rows(); ++i)
    for (Eigen::Index j = 0; j < e.cols(); ++j) m(i, j) = e(i, j);
  return m;
}

inline fmpols::Mat random_mat(std::mt19937_64& rng, std::size_t r, std::size_t c, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  fmpols::Mat m(r, c);
  for (auto& v : m.data()) v = u(rng);
  return m;
}

inline fmpols::Vec random_vec(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  fmpols::Vec v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline double spectral_norm(const Eigen::MatrixXd& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues()(0);
}

}  // namespace test
