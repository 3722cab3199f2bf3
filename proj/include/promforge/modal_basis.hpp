#pragma once

#include "promforge/fe_kernel.hpp"

#include <string>
#include <utility>
#include <vector>

namespace promforge::modal {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Mass-normalized vibration modes, ascending in frequency.
struct ModeSet {
  MatrixXd phi;
  VectorXd omega;                 // rad/s
  std::vector<int> mode_numbers;  // 1-based index into the full spectrum

  int size() const { return static_cast<int>(omega.size()); }
};

enum class CompanionKind { kSmd, kDualMode };

const char* companion_name(CompanionKind k);

struct CompanionSet {
  MatrixXd theta;
  std::vector<std::string> labels;  // "smd 1-2" or "dm 3"
  CompanionKind kind = CompanionKind::kSmd;
  // Set when every snapshot vanished (linear black box); theta is then empty.
  bool degenerate = false;

  int size() const { return static_cast<int>(theta.cols()); }
};

/// k lowest modes of the pencil (K1, M). Each mode is scaled so that
/// phi^T M phi = 1 and its largest-magnitude entry is positive.
ModeSet solve_vms(const MatrixXd& M, const MatrixXd& K1, int k);

/// Participation of a force pattern in each mass-normalized mode.
VectorXd mpf(const ModeSet& ms, const VectorXd& pattern);

/// Keeps modes with f <= f_max (Hz) and |MPF| > mpf_tol * max|MPF|.
ModeSet select_vms(const ModeSet& ms, const VectorXd& mpfs, double f_max_hz, double mpf_tol);

/// Static modal derivative from a central difference of the tangent along
/// phi_i, applied to phi_j. `k1_solver` may carry a factorized K1.
VectorXd compute_smd(const fe::StructuralModel& model, const VectorXd& phi_i, const VectorXd& phi_j, double h,
                     const Eigen::LDLT<MatrixXd>* k1_solver = nullptr);

/// Unordered mode pairs (0-based, i <= j) ranked by |MPF_i MPF_j|, ties
/// broken lexicographically; the first k_pairs are returned.
std::vector<std::pair<int, int>> select_smds(const ModeSet& ms, const VectorXd& mpfs, int k_pairs);

CompanionSet compute_smds(const fe::StructuralModel& model, const ModeSet& ms,
                          const std::vector<std::pair<int, int>>& pairs, double h);

struct DualModeOptions {
  double energy = 1.0 - 1e-8;  // POD threshold on the residual snapshots
  bool include_pairs = false;
  fe::NewtonOptions newton;
};

/// Dual modes from nonlinear static solutions under +-K1 phi_i s_i (and
/// optionally +-K1 (phi_i s_i + phi_j s_j)), linear part removed, POD-compressed.
CompanionSet compute_dual_modes(const fe::StructuralModel& model, const ModeSet& ms, const VectorXd& scales,
                                const DualModeOptions& opts = {});

/// Same, with scales set so that the largest transverse entry of s_i phi_i
/// equals target thicknesses.
CompanionSet compute_dual_modes(const fe::Assembly& a, const ModeSet& ms, double target,
                                const DualModeOptions& opts = {});

}  // namespace promforge::modal
