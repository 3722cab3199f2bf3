#pragma once

#include "promforge/rom_core.hpp"
#include "promforge/sampling.hpp"

#include <array>
#include <string>
#include <vector>

namespace promforge::interp {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using sampling::Point;

enum class KernelKind { kInverseMultiquadric, kGaussian };

const char* kernel_name(KernelKind k);
KernelKind kernel_from_name(const std::string& s);

struct RbfKernel {
  KernelKind kind = KernelKind::kInverseMultiquadric;
  double eps = 1.0;
};

/// gamma(delta): 1/sqrt(1 + (eps delta)^2) or exp(-(eps delta)^2).
double kernel_eval(const RbfKernel& k, double delta);
/// gamma'(delta) / delta, finite at delta = 0.
double kernel_slope_over_delta(const RbfKernel& k, double delta);

/// Symmetric kernel matrix Gamma_ij = gamma(|c_i - c_j|).
MatrixXd kernel_matrix(const std::vector<Point>& centers, const RbfKernel& k);

struct FitDiagnostics {
  double rcond = 1.0;  // reciprocal condition estimate of Gamma
  bool ill_conditioned = false;
  std::string warning;
};

/// Reciprocal condition above which Gamma counts as well conditioned.
constexpr double kMinRcond = 1e-12;

/// Row-wise interpolant g(p) ~ W gamma(p); W is N_e x N_t.
struct RbfInterpolant {
  std::vector<Point> centers;
  MatrixXd W;
  RbfKernel kernel;
  std::string op;

  VectorXd evaluate(const Point& p) const;
  /// d g / d p, N_e x n_p.
  MatrixXd gradient(const Point& p) const;
};

/// Solves Gamma W^T = G^T with one LDLT factorization shared by all rows of G
/// (N_e x N_t). Throws on a singular Gamma; flags condition estimates beyond 1e12.
RbfInterpolant fit_weights(const MatrixXd& G, const std::vector<Point>& centers, const RbfKernel& k,
                           FitDiagnostics* diag = nullptr);

/// The interpolated ROM operators, in storage order.
enum class Operator { kK1 = 0, kK2, kK3, kV, kAlpha, kBeta };
constexpr int kOperatorCount = 6;
const char* operator_name(Operator op);
std::array<Operator, kOperatorCount> all_operators();

/// Flattened operator entries of one ROM (unique tensor entries, V column-major).
VectorXd operator_values(const rom::RomOperators& ops, Operator op);
/// N_e x N matrix of operator entries over a set of ROMs.
MatrixXd operator_samples(const std::vector<rom::RomOperators>& roms, Operator op);

struct EvalOptions {
  bool warn_on_structure_violation = false;
  std::vector<std::string>* warnings = nullptr;
};

struct PromModel {
  std::array<RbfInterpolant, kOperatorCount> interpolants;
  int n = 0;
  int m = 0;
  // Training damping coefficients were positive, so interpolated ones must be too.
  bool damping_expected = true;

  const std::vector<Point>& centers() const { return interpolants[0].centers; }
  const RbfInterpolant& at(Operator op) const { return interpolants[static_cast<int>(op)]; }
};

/// Fits all six interpolants with one shape parameter per operator.
PromModel fit_prom(const std::vector<rom::RomOperators>& roms, const std::vector<Point>& centers, KernelKind kind,
                   const std::array<double, kOperatorCount>& eps, std::vector<FitDiagnostics>* diags = nullptr);

/// Interpolated ROM at p_hat; damping is rebuilt from alpha, beta and k1.
/// Throws StructureViolation when k1, alpha or beta lose their sign.
rom::RomOperators evaluate(const PromModel& model, const Point& p_hat, const EvalOptions& opts = {});

/// Per-operator parameter derivatives, N_e x n_p each.
std::array<MatrixXd, kOperatorCount> gradient(const PromModel& model, const Point& p_hat);

/// 50 log-spaced values in [1e-2, 10].
VectorXd default_eps_grid();

enum class ErrorMeasure { kVerbatim, kSquared };

struct ValidationReport {
  VectorXd eps_grid;
  KernelKind kind = KernelKind::kInverseMultiquadric;
  ErrorMeasure measure = ErrorMeasure::kVerbatim;
  std::array<VectorXd, kOperatorCount> e_rel;
  VectorXd rcond;  // per grid point
  std::array<double, kOperatorCount> selected{};
  std::array<int, kOperatorCount> selected_index{};
};

/// e_rel(eps) = sqrt(sum_i r_i) (verbatim) or sqrt(sum_i r_i^2) (squared),
/// r_i = |g_i - W gamma(p_i)| / |g_i| over the validation ROMs.
double validation_error(const MatrixXd& G_val, const MatrixXd& G_pred, ErrorMeasure measure);

/// Scans the grid, one Gamma factorization per value shared by all operators,
/// and picks the per-operator minimizer among well-conditioned values.
ValidationReport validate_eps(const std::vector<rom::RomOperators>& train, const std::vector<Point>& train_centers,
                              const std::vector<rom::RomOperators>& validation,
                              const std::vector<Point>& validation_centers, KernelKind kind, const VectorXd& grid,
                              ErrorMeasure measure = ErrorMeasure::kVerbatim, double min_rcond = kMinRcond);

}  // namespace promforge::interp
