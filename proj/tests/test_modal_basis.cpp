#include "promforge/errors.hpp"
#include "promforge/modal_basis.hpp"
#include "promforge/tensor_id.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>

using namespace promforge;
using namespace promforge::modal;
using testing_support::beam;

namespace {

ModeSet beam_modes(const fe::Assembly& a, int k) { return solve_vms(a.mass_matrix(), a.linear_stiffness(), k); }

}  // namespace

TEST(SolveVms, ResidualAndNormalization) {
  fe::Assembly a({1.3, 0.2}, beam());
  const MatrixXd m = a.mass_matrix(), k = a.linear_stiffness();
  const ModeSet ms = solve_vms(m, k, 8);
  ASSERT_EQ(ms.size(), 8);
  for (int i = 0; i < 8; ++i) {
    const VectorXd phi = ms.phi.col(i);
    EXPECT_LT((k * phi - ms.omega[i] * ms.omega[i] * m * phi).norm(), 1e-8 * (k * phi).norm());
    Eigen::Index imax = 0;
    phi.cwiseAbs().maxCoeff(&imax);
    EXPECT_GT(phi[imax], 0.0);
    EXPECT_EQ(ms.mode_numbers[i], i + 1);
    if (i > 0) EXPECT_GE(ms.omega[i], ms.omega[i - 1]);
  }
  const MatrixXd g = ms.phi.transpose() * m * ms.phi;
  EXPECT_LT((g - MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff(), 1e-10);
  const MatrixXd kr = ms.phi.transpose() * k * ms.phi;
  const MatrixXd w2 = ms.omega.array().square().matrix().asDiagonal();
  EXPECT_LT((kr - w2).norm(), 1e-8 * w2.norm());
}

TEST(SolveVms, RejectsIndefinitePencil) {
  MatrixXd m = MatrixXd::Identity(3, 3), k = MatrixXd::Identity(3, 3);
  k(2, 2) = -1.0;
  EXPECT_THROW(solve_vms(m, k, 2), Error);
  m(0, 0) = -1.0;
  EXPECT_THROW(solve_vms(m, MatrixXd::Identity(3, 3), 2), Error);
  EXPECT_THROW(solve_vms(MatrixXd::Identity(3, 3), MatrixXd::Identity(3, 3), 4), Error);
}

TEST(Mpf, OrthogonalAndMassPatterns) {
  fe::Assembly a({1.0, 0.1}, beam());
  const MatrixXd m = a.mass_matrix();
  const ModeSet ms = beam_modes(a, 5);
  const VectorXd p = mpf(ms, m * ms.phi.col(2));
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(p[i], i == 2 ? 1.0 : 0.0, 1e-10);
  // Pattern M-orthogonal to every kept mode.
  EXPECT_LT(mpf(ms, VectorXd::Zero(a.dofs())).norm(), 1e-30 + 0.0);
}

TEST(Mpf, UniformLoadSkipsAntisymmetricMode) {
  fe::Assembly a({0.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 3);
  const VectorXd p = mpf(ms, a.uniform_pressure_load(1.0));
  // Mode 2 of the clamped beam is antisymmetric.
  EXPECT_LT(std::abs(p[1]), 1e-8 * p.cwiseAbs().maxCoeff());
}

TEST(SelectVms, EmptySelectionBelowFirstFrequency) {
  fe::Assembly a({1.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 4);
  const VectorXd p = mpf(ms, a.uniform_pressure_load(1.0));
  try {
    select_vms(ms, p, 0.5 * ms.omega[0] / (2 * std::numbers::pi), 0.0);
    FAIL() << "expected EmptySelection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptySelection);
  }
}

TEST(SelectVms, KeepsAllWithoutFilters) {
  fe::Assembly a({1.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 6);
  const ModeSet out = select_vms(ms, mpf(ms, a.uniform_pressure_load(1.0)),
                                 std::numeric_limits<double>::infinity(), 0.0);
  EXPECT_EQ(out.size(), 6);
}

TEST(SelectVms, MpfFilterDropsAntisymmetricMode) {
  fe::Assembly a({0.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 4);
  const VectorXd p = mpf(ms, a.uniform_pressure_load(1.0));
  const double f_max = 1.01 * ms.omega[2] / (2 * std::numbers::pi);
  const ModeSet out = select_vms(ms, p, f_max, 1e-6);
  ASSERT_EQ(out.size(), 2);
  EXPECT_EQ(out.mode_numbers, (std::vector<int>{1, 3}));
  EXPECT_EQ(out.phi.col(1), ms.phi.col(2));
}

TEST(ComputeSmd, LinearBlackBoxGivesZero) {
  std::mt19937_64 rng(1);
  const MatrixXd k = testing_support::random_spd(6, rng);
  testing_support::LinearModel lin(MatrixXd::Identity(6, 6), k);
  const ModeSet ms = solve_vms(MatrixXd::Identity(6, 6), k, 2);
  EXPECT_EQ(compute_smd(lin, ms.phi.col(0), ms.phi.col(1), 1e-8).norm(), 0.0);
  const CompanionSet cs = compute_smds(lin, ms, {{0, 0}, {0, 1}}, 1e-8);
  EXPECT_TRUE(cs.degenerate);
  EXPECT_EQ(cs.size(), 0);
}

TEST(ComputeSmd, SymmetricInModeOrder) {
  fe::Assembly a({1.5, 0.2}, beam());
  const ModeSet ms = beam_modes(a, 3);
  const double h = 1e-8;
  const VectorXd t12 = compute_smd(a, ms.phi.col(0), ms.phi.col(1), h);
  const VectorXd t21 = compute_smd(a, ms.phi.col(1), ms.phi.col(0), h);
  EXPECT_GT(t12.norm(), 0.0);
  EXPECT_LT((t12 - t21).norm() / t12.norm(), 1e-4);
}

TEST(ComputeSmd, StepIndependentForQuadraticTangent) {
  // The tangent is quadratic in q, so the central difference carries no
  // truncation error: results at h and h/10 agree to rounding.
  fe::Assembly a({0.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 2);
  const VectorXd ref = compute_smd(a, ms.phi.col(0), ms.phi.col(0), 1e-2);
  for (double h : {1e-3, 1e-4, 1e-5}) {
    const VectorXd t = compute_smd(a, ms.phi.col(0), ms.phi.col(0), h);
    EXPECT_LT((t - ref).norm() / ref.norm(), 1e-8) << "h = " << h;
  }
}

TEST(ComputeSmd, RejectsNonPositiveStep) {
  fe::Assembly a({1.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 1);
  EXPECT_THROW(compute_smd(a, ms.phi.col(0), ms.phi.col(0), 0.0), Error);
}

TEST(SelectSmds, SingleMode) {
  ModeSet ms;
  ms.phi = MatrixXd::Ones(3, 1);
  ms.omega = VectorXd::Ones(1);
  ms.mode_numbers = {1};
  EXPECT_EQ(select_smds(ms, VectorXd::Ones(1), 1), (std::vector<std::pair<int, int>>{{0, 0}}));
}

TEST(SelectSmds, HandRankedProducts) {
  ModeSet ms;
  ms.phi = MatrixXd::Ones(4, 3);
  ms.omega = VectorXd::LinSpaced(3, 1.0, 3.0);
  ms.mode_numbers = {1, 2, 3};
  VectorXd p(3);
  p << 3.0, 2.0, 0.0;
  const auto r = select_smds(ms, p, 6);
  EXPECT_EQ(r, (std::vector<std::pair<int, int>>{{0, 0}, {0, 1}, {1, 1}, {0, 2}, {1, 2}, {2, 2}}));
  EXPECT_THROW(select_smds(ms, p, 7), Error);
}

TEST(SelectSmds, ThreeModesAllPairs) {
  ModeSet ms;
  ms.phi = MatrixXd::Ones(4, 3);
  ms.omega = VectorXd::LinSpaced(3, 1.0, 3.0);
  ms.mode_numbers = {1, 2, 3};
  VectorXd p(3);
  p << -5.0, 4.0, 3.0;
  const auto r = select_smds(ms, p, 6);
  EXPECT_EQ(r.size(), 6u);
  EXPECT_EQ(r.front(), std::make_pair(0, 0));
}

TEST(DualModes, LinearBlackBoxIsFlaggedEmpty) {
  std::mt19937_64 rng(2);
  const MatrixXd k = testing_support::random_spd(5, rng);
  testing_support::LinearModel lin(MatrixXd::Identity(5, 5), k);
  const ModeSet ms = solve_vms(MatrixXd::Identity(5, 5), k, 2);
  const CompanionSet cs = compute_dual_modes(lin, ms, VectorXd::Ones(2));
  EXPECT_TRUE(cs.degenerate);
  EXPECT_EQ(cs.size(), 0);
}

TEST(DualModes, SingleModeTwoLoads) {
  fe::Assembly a({1.2, 0.1}, beam());
  const ModeSet ms = select_vms(beam_modes(a, 1), VectorXd::Ones(1), 1e9, 0.0);
  const CompanionSet cs = compute_dual_modes(a, ms, 2.0);
  EXPECT_FALSE(cs.degenerate);
  EXPECT_GE(cs.size(), 1);
  EXPECT_LE(cs.size(), 2);
  EXPECT_EQ(cs.kind, CompanionKind::kDualMode);
}

TEST(DualModes, CalibratedScaleActivatesNonlinearity) {
  fe::Assembly a({0.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 1);
  const VectorXd s = tensor_id::plan_scales(ms.phi, a, 2.0);
  const VectorXd qlin = s[0] * ms.phi.col(0);
  EXPECT_NEAR(qlin.cwiseProduct(a.transverse_mask()).cwiseAbs().maxCoeff(), 2.0 * a.spec().thickness, 1e-15);
  const VectorXd q = fe::static_solve(a, a.linear_stiffness() * qlin, VectorXd::Zero(a.dofs()));
  EXPECT_GT((q - qlin).norm() / qlin.norm(), 1e-3);
}

TEST(DualModes, PairLoadsAddSnapshots) {
  fe::Assembly a({1.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 2);
  DualModeOptions o;
  o.include_pairs = true;
  const CompanionSet cs = compute_dual_modes(a, ms, 1.0, o);
  EXPECT_GE(cs.size(), 2);
  EXPECT_LE(cs.size(), 6);
}

TEST(DualModes, NonConvergenceNamesTheLoad) {
  fe::Assembly a({1.0, 0.0}, beam());
  const ModeSet ms = beam_modes(a, 1);
  DualModeOptions o;
  o.newton.max_iterations = 1;
  o.newton.max_bisections = 0;
  try {
    compute_dual_modes(a, ms, 20.0, o);
    FAIL() << "expected NonConvergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonConvergence);
    EXPECT_NE(std::string(e.what()).find("+1"), std::string::npos);
  }
}
