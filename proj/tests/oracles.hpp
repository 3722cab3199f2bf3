#pragma once

// Closed-form references shared by the unit tests and the acceptance run.

#include "promforge/rom_core.hpp"

#include <cmath>
#include <complex>
#include <numbers>

namespace testing_support {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kPi = std::numbers::pi;

class Sdof final : public promforge::rom::DynamicModel {
 public:
  Sdof(double omega, double zeta) : m_(MatrixXd::Ones(1, 1)), c_(MatrixXd::Constant(1, 1, 2 * zeta * omega)), k_(omega * omega) {}
  int dofs() const override { return 1; }
  const MatrixXd& mass() const override { return m_; }
  const MatrixXd& damping() const override { return c_; }
  VectorXd force(const VectorXd& q) const override { return k_ * q; }
  MatrixXd tangent(const VectorXd&) const override { return MatrixXd::Constant(1, 1, k_); }
  VectorXd load(double) const override { return VectorXd::Zero(1); }

 private:
  MatrixXd m_, c_;
  double k_;
};

// Damped single-mode response to p sin(W t) on [0, T), free afterwards, from rest.
// Written with the characteristic roots so that overdamped modes (zeta > 1,
// common for stiff companion modes under Rayleigh damping) stay finite.
inline double modal_pulse_response(double omega, double zeta, double p, double T, double t) {
  using C = std::complex<double>;
  const double W = kPi / T;
  const C root = omega * std::sqrt(C(zeta * zeta - 1.0, 0.0));
  const C r1 = -zeta * omega + root, r2 = -zeta * omega - root;
  const double den = std::pow(omega * omega - W * W, 2) + std::pow(2 * zeta * omega * W, 2);
  const double A = p * (omega * omega - W * W) / den, B = -p * 2 * zeta * omega * W / den;
  // Homogeneous part d1 e^{r1 s} + d2 e^{r2 s} fitted to rest at s = 0.
  const C d1 = (-A * W + r2 * B) / (r1 - r2), d2 = -B - d1;
  auto y_at = [&](double s) {
    return A * std::sin(W * s) + B * std::cos(W * s) + (d1 * std::exp(r1 * s) + d2 * std::exp(r2 * s)).real();
  };
  if (t < T) return y_at(t);
  const double y0 = y_at(T);
  const double v0 =
      A * W * std::cos(W * T) - B * W * std::sin(W * T) + (r1 * d1 * std::exp(r1 * T) + r2 * d2 * std::exp(r2 * T)).real();
  const C f1 = (v0 - r2 * y0) / (r1 - r2), f2 = y0 - f1;
  return (f1 * std::exp(r1 * (t - T)) + f2 * std::exp(r2 * (t - T))).real();
}

}  // namespace testing_support
