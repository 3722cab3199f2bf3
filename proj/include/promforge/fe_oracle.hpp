#pragma once

// Intrusive reference computation of reduced tensors. Used only by tests and
// diagnostics; the reduction pipeline goes through the black-box contract.

#include "promforge/fe_kernel.hpp"
#include "promforge/sym_tensor.hpp"

namespace promforge::fe {

struct DirectTensors {
  MatrixXd linear;          // V^T K1 V
  SymmetricTensor quadratic;
  SymmetricTensor cubic;
  double asymmetry_quadratic = 0.0;
  double asymmetry_cubic = 0.0;
};

/// Contracts the exact element-level quadratic and cubic force integrals
/// against V without forming full-order tensors.
DirectTensors reduced_tensors_direct(const Assembly& a, const MatrixXd& V);

}  // namespace promforge::fe
