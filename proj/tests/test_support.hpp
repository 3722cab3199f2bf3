#pragma once

#include "promforge/fe_kernel.hpp"

#include <Eigen/Dense>

#include <random>

namespace testing_support {

// Black box with constant tangent: f(q) = K q.
class LinearModel final : public promforge::fe::StructuralModel {
 public:
  LinearModel(Eigen::MatrixXd m, Eigen::MatrixXd k) : m_(std::move(m)), k_(std::move(k)) {}
  int dofs() const override { return static_cast<int>(k_.rows()); }
  Eigen::MatrixXd mass_matrix() const override { return m_; }
  Eigen::MatrixXd linear_stiffness() const override { return k_; }
  Eigen::VectorXd internal_force(const Eigen::VectorXd& q) const override { return k_ * q; }
  Eigen::MatrixXd tangent_stiffness(const Eigen::VectorXd&) const override { return k_; }

 private:
  Eigen::MatrixXd m_, k_;
};

inline promforge::fe::BeamSpec beam(int ne = 16) {
  promforge::fe::BeamSpec s;
  s.n_elements = ne;
  return s;
}

inline Eigen::MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = d(rng);
  return a * a.transpose() + n * Eigen::MatrixXd::Identity(n, n);
}

inline double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

}  // namespace testing_support
