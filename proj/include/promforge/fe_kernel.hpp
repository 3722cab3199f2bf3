#pragma once

#include <Eigen/Dense>

#include <array>
#include <vector>

namespace promforge::fe {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Shape parameters of the curved beam: midspan rise (in thickness multiples)
/// and a linear skew that biases the rise toward one end.
struct GeometryParams {
  double rise = 0.0;
  double skew = 0.0;
};

/// Section, material and mesh of the desk-scale beam. SI units.
struct BeamSpec {
  double length = 0.4;
  double width = 0.02;
  double thickness = 0.8e-3;
  double youngs_modulus = 70e9;
  double density = 2700.0;
  int n_elements = 40;
  // Clamp every axial DOF as well (removes the membrane path; used by oracles).
  bool clamp_axial = false;
};

enum class DofKind { kAxial = 0, kTransverse = 1, kRotation = 2 };

/// Black-box evaluation contract consumed by the reduction pipeline. Every
/// method is a pure function of the model and its arguments.
class StructuralModel {
 public:
  virtual ~StructuralModel() = default;
  virtual int dofs() const = 0;
  virtual MatrixXd mass_matrix() const = 0;
  virtual MatrixXd linear_stiffness() const = 0;
  virtual VectorXd internal_force(const VectorXd& q) const = 0;
  virtual MatrixXd tangent_stiffness(const VectorXd& q) const = 0;
};

/// Undeformed transverse coordinate z0(x) of the arch.
double initial_shape(const GeometryParams& p, const BeamSpec& spec, double x);
double initial_slope(const GeometryParams& p, const BeamSpec& spec, double x);

/// Two-node von Karman beam assembly (linear axial, Hermite transverse),
/// both ends clamped. Immutable after construction.
class Assembly final : public StructuralModel {
 public:
  Assembly(const GeometryParams& params, const BeamSpec& spec);

  int dofs() const override { return n_free_; }
  MatrixXd mass_matrix() const override;
  MatrixXd linear_stiffness() const override;
  VectorXd internal_force(const VectorXd& q) const override;
  MatrixXd tangent_stiffness(const VectorXd& q) const override;

  /// Mass matrix over every DOF, clamped ones included.
  MatrixXd unconstrained_mass_matrix() const;

  /// Consistent nodal load of a uniform transverse pressure (Pa) acting in +z.
  VectorXd uniform_pressure_load(double pressure) const;

  const GeometryParams& params() const { return params_; }
  const BeamSpec& spec() const { return spec_; }
  int n_nodes() const { return spec_.n_elements + 1; }
  const std::vector<std::array<int, 2>>& connectivity() const { return connectivity_; }
  const std::vector<double>& node_x() const { return x_; }
  const std::vector<double>& node_z() const { return z0_; }

  /// Free-DOF index of (node, kind), or -1 if clamped.
  int free_index(int node, DofKind kind) const { return free_map_[3 * node + static_cast<int>(kind)]; }
  DofKind kind_of(int free_dof) const { return kinds_[free_dof]; }
  /// Free index of the transverse DOF at midspan (requires an even element count).
  int midspan_transverse_dof() const;
  /// 1.0 on transverse DOFs, 0.0 elsewhere.
  VectorXd transverse_mask() const;

  // Element-level data, shared with the direct-projection oracle.
  struct ElementGeometry {
    double length;
    std::array<double, 4> shape_dofs;  // z0, z0', z0, z0' at both ends
    std::array<int, 6> free;           // u1 w1 t1 u2 w2 t2 -> free index or -1
  };
  const std::vector<ElementGeometry>& elements() const { return elements_; }

  double axial_rigidity() const;
  double bending_rigidity() const;

 private:
  GeometryParams params_;
  BeamSpec spec_;
  int n_free_ = 0;
  std::vector<double> x_, z0_, slope_;
  std::vector<std::array<int, 2>> connectivity_;
  std::vector<int> free_map_;
  std::vector<DofKind> kinds_;
  std::vector<ElementGeometry> elements_;
};

/// Gauss-Legendre points/weights on [0, 1]; the 5-point rule integrates the
/// degree-8 element integrands exactly.
struct GaussRule {
  std::array<double, 5> xi;
  std::array<double, 5> weight;
};
const GaussRule& gauss5();

/// Shape-function rows of the element at local coordinate xi in [0, 1].
struct ShapeRows {
  Eigen::Matrix<double, 2, 1> du;   // d/dx of linear axial functions
  Eigen::Matrix<double, 4, 1> nw;   // Hermite values
  Eigen::Matrix<double, 4, 1> dw;   // d/dx
  Eigen::Matrix<double, 4, 1> d2w;  // d2/dx2
};
ShapeRows shape_rows(double xi, double le);

/// Pulse load: pattern * a * sin(pi t / T) for t < T, zero afterwards.
struct LoadDescriptor {
  VectorXd pattern;
  double amplitude = 1.0;
  double duration = 1.0;

  VectorXd at(double t) const;
  double time_factor(double t) const;
};

struct NewtonOptions {
  double tol_rel = 1e-9;
  double tol_abs = 1e-12;
  int max_iterations = 25;
  int max_bisections = 6;
};

/// Nonlinear static equilibrium f(q) = load by Newton iteration with load
/// stepping; throws NonConvergence once the bisection budget is spent.
VectorXd static_solve(const StructuralModel& model, const VectorXd& load, const VectorXd& q0,
                      const NewtonOptions& opts = {});

}  // namespace promforge::fe
