#include "promforge/modal_basis.hpp"

#include "promforge/errors.hpp"
#include "promforge/global_basis.hpp"
#include "promforge/tensor_id.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace promforge::modal {

const char* companion_name(CompanionKind k) { return k == CompanionKind::kSmd ? "smd" : "dual_mode"; }

ModeSet solve_vms(const MatrixXd& M, const MatrixXd& K1, int k) {
  const int n = static_cast<int>(M.rows());
  require(M.cols() == n && K1.rows() == n && K1.cols() == n, "solve_vms: matrix shape mismatch");
  require(k >= 1 && k <= n, "solve_vms: mode count out of range");
  require(M.llt().info() == Eigen::Success, "solve_vms: mass matrix is not positive definite");

  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> es(K1, M, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  require(es.info() == Eigen::Success, "solve_vms: eigensolver failed", ErrorCode::kNumeric);
  const VectorXd& lam = es.eigenvalues();
  require(lam[0] > 0.0, "solve_vms: stiffness matrix is not positive definite");

  ModeSet ms;
  ms.phi = es.eigenvectors().leftCols(k);
  ms.omega = lam.head(k).cwiseSqrt();
  for (int j = 0; j < k; ++j) {
    auto col = ms.phi.col(j);
    col /= std::sqrt(col.dot(M * col));
    Eigen::Index imax = 0;
    col.cwiseAbs().maxCoeff(&imax);
    if (col[imax] < 0.0) col = -col;
    ms.mode_numbers.push_back(j + 1);
  }
  return ms;
}

VectorXd mpf(const ModeSet& ms, const VectorXd& pattern) {
  require(pattern.size() == ms.phi.rows(), "mpf: load pattern length mismatch");
  return ms.phi.transpose() * pattern;
}

ModeSet select_vms(const ModeSet& ms, const VectorXd& mpfs, double f_max_hz, double mpf_tol) {
  require(mpfs.size() == ms.size(), "select_vms: one participation factor per mode is required");
  const double peak = mpfs.size() ? mpfs.cwiseAbs().maxCoeff() : 0.0;
  std::vector<int> keep;
  for (int i = 0; i < ms.size(); ++i) {
    const double f = ms.omega[i] / (2.0 * std::numbers::pi);
    const bool in_band = f <= f_max_hz;
    const bool participates = mpf_tol <= 0.0 ? true : std::abs(mpfs[i]) > mpf_tol * peak;
    if (in_band && participates) keep.push_back(i);
  }
  if (keep.empty()) {
    std::ostringstream msg;
    msg << "select_vms: no mode passes f_max = " << f_max_hz << " Hz and mpf_tol = " << mpf_tol;
    if (ms.size() > 0) msg << " (first mode at " << ms.omega[0] / (2.0 * std::numbers::pi) << " Hz)";
    throw Error(ErrorCode::kEmptySelection, msg.str());
  }
  ModeSet out;
  out.phi.resize(ms.phi.rows(), static_cast<Eigen::Index>(keep.size()));
  out.omega.resize(static_cast<Eigen::Index>(keep.size()));
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.phi.col(c) = ms.phi.col(keep[c]);
    out.omega[c] = ms.omega[keep[c]];
    out.mode_numbers.push_back(ms.mode_numbers[keep[c]]);
  }
  return out;
}

VectorXd compute_smd(const fe::StructuralModel& model, const VectorXd& phi_i, const VectorXd& phi_j, double h,
                     const Eigen::LDLT<MatrixXd>* k1_solver) {
  require(h > 0.0, "compute_smd: step must be positive");
  require(phi_i.size() == model.dofs() && phi_j.size() == model.dofs(), "compute_smd: mode length mismatch");
  const MatrixXd dk = (model.tangent_stiffness(h * phi_i) - model.tangent_stiffness(-h * phi_i)) / (2.0 * h);
  const VectorXd rhs = -(dk * phi_j);
  require(rhs.allFinite(), "compute_smd: finite difference produced non-finite values", ErrorCode::kNumeric);
  VectorXd theta;
  if (k1_solver) {
    theta = k1_solver->solve(rhs);
  } else {
    const Eigen::LDLT<MatrixXd> solver(model.linear_stiffness());
    require(solver.info() == Eigen::Success, "compute_smd: linear stiffness is singular", ErrorCode::kNumeric);
    theta = solver.solve(rhs);
  }
  require(theta.allFinite(), "compute_smd: non-finite derivative", ErrorCode::kNumeric);
  return theta;
}

std::vector<std::pair<int, int>> select_smds(const ModeSet& ms, const VectorXd& mpfs, int k_pairs) {
  const int n = ms.size();
  require(mpfs.size() == n, "select_smds: one participation factor per mode is required");
  require(k_pairs >= 1 && k_pairs <= n * (n + 1) / 2, "select_smds: k_pairs out of range");
  struct Ranked {
    double score;
    int i, j;
  };
  std::vector<Ranked> all;
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) all.push_back({std::abs(mpfs[i] * mpfs[j]), i, j});
  std::stable_sort(all.begin(), all.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });
  std::vector<std::pair<int, int>> out;
  for (int r = 0; r < k_pairs; ++r) out.emplace_back(all[r].i, all[r].j);
  return out;
}

CompanionSet compute_smds(const fe::StructuralModel& model, const ModeSet& ms,
                          const std::vector<std::pair<int, int>>& pairs, double h) {
  require(!pairs.empty(), "compute_smds: no mode pairs requested");
  const Eigen::LDLT<MatrixXd> solver(model.linear_stiffness());
  require(solver.info() == Eigen::Success, "compute_smds: linear stiffness is singular", ErrorCode::kNumeric);
  CompanionSet out;
  out.kind = CompanionKind::kSmd;
  out.theta.resize(model.dofs(), static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t c = 0; c < pairs.size(); ++c) {
    const auto [i, j] = pairs[c];
    require(i >= 0 && j >= 0 && i < ms.size() && j < ms.size(), "compute_smds: pair index out of range");
    out.theta.col(c) = compute_smd(model, ms.phi.col(i), ms.phi.col(j), h, &solver);
    out.labels.push_back("smd " + std::to_string(ms.mode_numbers[i]) + "-" + std::to_string(ms.mode_numbers[j]));
  }
  if (out.theta.colwise().norm().minCoeff() == 0.0) {
    // A linear model has no derivatives to offer.
    out.degenerate = true;
    out.theta.resize(model.dofs(), 0);
    out.labels.clear();
  }
  return out;
}

CompanionSet compute_dual_modes(const fe::StructuralModel& model, const ModeSet& ms, const VectorXd& scales,
                                const DualModeOptions& opts) {
  require(scales.size() == ms.size(), "compute_dual_modes: one scale per mode is required");
  require((scales.array() > 0.0).all(), "compute_dual_modes: scales must be positive");
  const MatrixXd k1 = model.linear_stiffness();
  const VectorXd zero = VectorXd::Zero(model.dofs());

  std::vector<VectorXd> imposed;
  std::vector<std::string> labels;
  for (int i = 0; i < ms.size(); ++i) {
    const VectorXd d = scales[i] * ms.phi.col(i);
    imposed.push_back(d);
    labels.push_back("+" + std::to_string(ms.mode_numbers[i]));
    imposed.push_back(-d);
    labels.push_back("-" + std::to_string(ms.mode_numbers[i]));
  }
  if (opts.include_pairs)
    for (int i = 0; i < ms.size(); ++i)
      for (int j = i + 1; j < ms.size(); ++j) {
        const VectorXd d = scales[i] * ms.phi.col(i) + scales[j] * ms.phi.col(j);
        const std::string tag = std::to_string(ms.mode_numbers[i]) + "+" + std::to_string(ms.mode_numbers[j]);
        imposed.push_back(d);
        labels.push_back("+(" + tag + ")");
        imposed.push_back(-d);
        labels.push_back("-(" + tag + ")");
      }

  MatrixXd snaps(model.dofs(), static_cast<Eigen::Index>(imposed.size()));
  double scale_ref = 0.0;
  for (std::size_t c = 0; c < imposed.size(); ++c) {
    VectorXd q;
    try {
      q = fe::static_solve(model, k1 * imposed[c], zero, opts.newton);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNonConvergence) throw;
      throw Error(ErrorCode::kNonConvergence, "dual mode load " + labels[c] + ": " + e.what());
    }
    snaps.col(c) = q - imposed[c];
    scale_ref = std::max(scale_ref, imposed[c].norm());
  }

  CompanionSet out;
  out.kind = CompanionKind::kDualMode;
  if (snaps.norm() <= 1e-12 * scale_ref) {
    out.degenerate = true;
    out.theta.resize(model.dofs(), 0);
    return out;
  }
  const global::PodResult pod = global::pod_truncate(snaps, opts.energy);
  out.theta = pod.vectors;
  for (int c = 0; c < pod.m; ++c) out.labels.push_back("dm " + std::to_string(c + 1));
  return out;
}

CompanionSet compute_dual_modes(const fe::Assembly& a, const ModeSet& ms, double target,
                                const DualModeOptions& opts) {
  require(target > 0.0, "compute_dual_modes: scale target must be positive");
  const VectorXd s = tensor_id::plan_scales(ms.phi, a, target);
  return compute_dual_modes(static_cast<const fe::StructuralModel&>(a), ms, s, opts);
}

}  // namespace promforge::modal
