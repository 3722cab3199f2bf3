#pragma once

#include "promforge/fe_kernel.hpp"
#include "promforge/sym_tensor.hpp"

#include <algorithm>
#include <string>
#include <vector>

namespace promforge::tensor_id {

using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Method { kEed, kEd };

const char* method_name(Method m);

struct IdentifiedTensors {
  SymmetricTensor quadratic;
  SymmetricTensor cubic;
  int m = 0;
  Method method = Method::kEed;
  VectorXd scales;
  // Relative spread between redundant determinations of the same unique entry.
  double asymmetry_quadratic = 0.0;
  double asymmetry_cubic = 0.0;
  int evaluations = 0;

  double asymmetry() const { return std::max(asymmetry_quadratic, asymmetry_cubic); }
};

struct Probe {
  VectorXd eta;  // reduced displacement; the black box sees V * eta
  std::string label;
};

int eed_probe_count(int m);
int ed_probe_count(int m);

/// Per-column scales s_i such that the largest transverse entry of s_i v_i
/// equals target * thickness. Columns without transverse content fall back
/// to their largest entry overall.
VectorXd plan_scales(const MatrixXd& V, const VectorXd& transverse_mask, double thickness, double target);
VectorXd plan_scales(const MatrixXd& V, const fe::Assembly& a, double target);

/// +-s_i e_i for every i, then s_i e_i + s_j e_j for i < j.
std::vector<Probe> eed_plan(const VectorXd& scales);
/// +-s_i e_i, then +-(s_i e_i + s_j e_j) for i < j, then s_i e_i + s_j e_j + s_k e_k for i < j < k.
std::vector<Probe> ed_plan(const VectorXd& scales);

/// Tensors from projected tangent evaluations V^T Kt(V eta) V.
IdentifiedTensors identify_eed(const fe::StructuralModel& model, const MatrixXd& V, const VectorXd& scales,
                               int workers = 1);

/// Tensors from projected force evaluations V^T f(V eta).
IdentifiedTensors identify_ed(const fe::StructuralModel& model, const MatrixXd& V, const VectorXd& scales,
                              int workers = 1);

/// Averages dense raw tensors over index permutations and records the
/// removed antisymmetric fraction.
IdentifiedTensors symmetrize_and_check(int m, const std::vector<double>& quadratic_dense,
                                       const std::vector<double>& cubic_dense);

}  // namespace promforge::tensor_id
