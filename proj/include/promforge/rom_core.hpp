#pragma once

#include "promforge/fe_kernel.hpp"
#include "promforge/sampling.hpp"
#include "promforge/sym_tensor.hpp"

#include <string>
#include <utility>
#include <vector>

namespace promforge::rom {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Reduced model at one parameter point. The reduced mass is the identity
/// and the reduced damping follows from (alpha, beta, k1).
struct RomOperators {
  MatrixXd V;               // n x m
  VectorXd k1;              // diagonal linear stiffness, omega^2
  SymmetricTensor k2;       // order 3, dim m
  SymmetricTensor k3;       // order 4, dim m
  double alpha = 0.0;       // 1/s
  double beta = 0.0;        // s
  sampling::Point p_hat;

  int m() const { return static_cast<int>(k1.size()); }
  int n() const { return static_cast<int>(V.rows()); }
  void validate() const;
};

/// k1 eta + k2 : eta eta + k3 : eta eta eta.
VectorXd reduced_force(const RomOperators& ops, const VectorXd& eta);
/// diag(k1) + 2 k2 . eta + 3 k3 : eta eta.
MatrixXd reduced_tangent(const RomOperators& ops, const VectorXd& eta);

/// Rayleigh coefficients giving damping ratio zeta at omega1 and omega2.
std::pair<double, double> rayleigh_params(double omega1, double omega2, double zeta);
/// Damping ratio (alpha / omega + beta omega) / 2 of a mode.
double modal_damping_ratio(double alpha, double beta, double omega);

/// Diagonal reduced damping alpha + beta k1.
VectorXd assemble_damping(const RomOperators& ops);

RomOperators linearize(const RomOperators& ops);

/// Full-order displacements V eta, one column per time step.
MatrixXd reconstruct(const MatrixXd& V, const MatrixXd& eta_history);

/// Second-order model M a + C v + f(q) = load(t) consumed by the integrator.
class DynamicModel {
 public:
  virtual ~DynamicModel() = default;
  virtual int dofs() const = 0;
  virtual const MatrixXd& mass() const = 0;
  virtual const MatrixXd& damping() const = 0;
  virtual VectorXd force(const VectorXd& q) const = 0;
  virtual MatrixXd tangent(const VectorXd& q) const = 0;
  virtual VectorXd load(double t) const = 0;
};

/// Full-order model with Rayleigh damping alpha M + beta K1.
class FullOrderModel final : public DynamicModel {
 public:
  FullOrderModel(const fe::StructuralModel& model, double alpha, double beta, fe::LoadDescriptor load);
  int dofs() const override { return model_.dofs(); }
  const MatrixXd& mass() const override { return m_; }
  const MatrixXd& damping() const override { return c_; }
  VectorXd force(const VectorXd& q) const override { return model_.internal_force(q); }
  MatrixXd tangent(const VectorXd& q) const override { return model_.tangent_stiffness(q); }
  VectorXd load(double t) const override { return load_.at(t); }

 private:
  const fe::StructuralModel& model_;
  MatrixXd m_, c_;
  fe::LoadDescriptor load_;
};

/// Tensorial reduced model; the full-order load pattern is projected on V.
class ReducedModel final : public DynamicModel {
 public:
  ReducedModel(RomOperators ops, const fe::LoadDescriptor& full_load);
  int dofs() const override { return ops_.m(); }
  const MatrixXd& mass() const override { return m_; }
  const MatrixXd& damping() const override { return c_; }
  VectorXd force(const VectorXd& eta) const override { return reduced_force(ops_, eta); }
  MatrixXd tangent(const VectorXd& eta) const override { return reduced_tangent(ops_, eta); }
  VectorXd load(double t) const override { return load_.at(t); }
  const RomOperators& operators() const { return ops_; }

 private:
  RomOperators ops_;
  MatrixXd m_, c_;
  fe::LoadDescriptor load_;
};

struct NewmarkOptions {
  double gamma = 0.5;
  double beta = 0.25;
  double tol_rel = 1e-8;
  int max_iterations = 20;
  VectorXd q0;  // empty: zero initial displacement
  VectorXd v0;  // empty: zero initial velocity
  // Rows map the state to the monitored quantities (empty: no monitoring).
  MatrixXd monitor;
  bool store_states = true;
};

struct TimeHistory {
  std::string kind;
  VectorXd t;
  MatrixXd q, v, a;    // dofs x steps (empty when states are not stored)
  MatrixXd monitored;  // steps x monitored count
  long newton_iterations = 0;

  int steps() const { return static_cast<int>(t.size()); }
};

/// Implicit Newmark integration with Newton iterations at every step.
TimeHistory newmark_integrate(const DynamicModel& model, double t_end, double dt, const NewmarkOptions& opts = {});

/// Mean period between upward zero crossings of the mean-removed signal for
/// t >= t_start; returns 0 when fewer than two crossings exist.
double dominant_period(const VectorXd& t, const VectorXd& signal, double t_start);

/// ||a - b|| / ||b|| over a sampled history.
double relative_l2(const VectorXd& a, const VectorXd& b);

/// Linear interpolation of (t, y) at the points t_new (clamped at the ends).
VectorXd resample(const VectorXd& t, const VectorXd& y, const VectorXd& t_new);

}  // namespace promforge::rom
