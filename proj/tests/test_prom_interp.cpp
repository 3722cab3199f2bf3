#include "promforge/errors.hpp"
#include "promforge/prom_interp.hpp"
#include "promforge/sampling.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace promforge;
using namespace promforge::interp;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Smooth synthetic ROM family with m = 2, n = 5.
rom::RomOperators synthetic_rom(const Point& p) {
  rom::RomOperators r;
  r.p_hat = p;
  const double a = p[0], b = p[1];
  r.k1 = VectorXd(2);
  r.k1 << 1.0 + a * a, 4.0 + std::sin(b);
  r.k2 = SymmetricTensor(3, 2);
  for (int i = 0; i < r.k2.unique_count(); ++i) r.k2.values()[i] = std::cos(a + i * b);
  r.k3 = SymmetricTensor(4, 2);
  for (int i = 0; i < r.k3.unique_count(); ++i) r.k3.values()[i] = 2.0 + a * b + 0.1 * i;
  r.V.resize(5, 2);
  for (int i = 0; i < 5; ++i) {
    r.V(i, 0) = std::sin((i + 1) * (1.0 + 0.2 * a));
    r.V(i, 1) = std::cos((i + 1) * (1.0 + 0.1 * b));
  }
  r.alpha = 0.5 + 0.1 * a;
  r.beta = 1e-3 * (1.0 + b);
  return r;
}

std::vector<Point> lhs(int n, std::uint64_t seed) { return sampling::lhs_sample(n, 2, seed).points; }

std::vector<rom::RomOperators> family(const std::vector<Point>& pts) {
  std::vector<rom::RomOperators> out;
  for (const auto& p : pts) out.push_back(synthetic_rom(p));
  return out;
}

std::array<double, kOperatorCount> uniform_eps(double e) {
  std::array<double, kOperatorCount> a;
  a.fill(e);
  return a;
}

}  // namespace

TEST(Kernel, ValuesAtKnownPoints) {
  const RbfKernel imq{KernelKind::kInverseMultiquadric, 2.0};
  const RbfKernel gau{KernelKind::kGaussian, 2.0};
  EXPECT_DOUBLE_EQ(kernel_eval(imq, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(kernel_eval(gau, 0.0), 1.0);
  EXPECT_NEAR(kernel_eval(imq, 0.5), 1.0 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(kernel_eval(gau, 0.5), std::exp(-1.0), 1e-15);
  double prev = 1.0;
  for (double d = 0.1; d < 3.0; d += 0.1) {
    const double v = kernel_eval(imq, d);
    EXPECT_LT(v, prev);
    EXPECT_GT(v, 0.0);
    prev = v;
  }
}

TEST(Kernel, SlopeMatchesFiniteDifference) {
  for (KernelKind kind : {KernelKind::kInverseMultiquadric, KernelKind::kGaussian}) {
    const RbfKernel k{kind, 1.7};
    for (double d : {0.1, 0.4, 1.3}) {
      const double h = 1e-6;
      const double fd = (kernel_eval(k, d + h) - kernel_eval(k, d - h)) / (2 * h);
      EXPECT_NEAR(kernel_slope_over_delta(k, d) * d, fd, 1e-8);
    }
    EXPECT_TRUE(std::isfinite(kernel_slope_over_delta(k, 0.0)));
  }
  EXPECT_THROW(kernel_from_name("cubic"), Error);
  EXPECT_EQ(kernel_from_name("gaussian"), KernelKind::kGaussian);
}

TEST(RbfFit, SingleCenterGivesDataAndZeroGradient) {
  std::vector<Point> c = {Point::Constant(2, 0.3)};
  MatrixXd G(3, 1);
  G << 1.0, -2.0, 5.0;
  const auto s = fit_weights(G, c, {KernelKind::kInverseMultiquadric, 1.0});
  EXPECT_LT((s.W - G).norm(), 1e-15);
  EXPECT_LT(s.gradient(c[0]).norm(), 1e-15);
}

TEST(RbfFit, ReproducesDataAtCenters) {
  const auto c = lhs(10, 7);
  MatrixXd G(4, 10);
  for (int j = 0; j < 10; ++j) G.col(j) << std::sin(c[j][0]), c[j][1] * c[j][1], 1.0, c[j].sum();
  for (KernelKind kind : {KernelKind::kInverseMultiquadric, KernelKind::kGaussian}) {
    FitDiagnostics d;
    const auto s = fit_weights(G, c, {kind, 3.0}, &d);
    EXPECT_FALSE(d.ill_conditioned);
    for (int j = 0; j < 10; ++j) EXPECT_LT((s.evaluate(c[j]) - G.col(j)).norm() / G.col(j).norm(), 1e-10);
  }
}

TEST(RbfFit, IllConditioningIsFlaggedAndDuplicatesRejected) {
  const auto c = lhs(10, 3);
  MatrixXd G = MatrixXd::Ones(1, 10);
  FitDiagnostics d;
  fit_weights(G, c, {KernelKind::kGaussian, 0.05}, &d);
  EXPECT_TRUE(d.ill_conditioned);
  EXPECT_FALSE(d.warning.empty());
  auto dup = c;
  dup[1] = dup[0];
  try {
    fit_weights(G, dup, {KernelKind::kInverseMultiquadric, 1.0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNumeric);
  }
  EXPECT_THROW(fit_weights(MatrixXd::Ones(1, 3), c, {KernelKind::kGaussian, 1.0}), Error);
  EXPECT_THROW(fit_weights(G, c, {KernelKind::kGaussian, 0.0}), Error);
}

TEST(RbfFit, GradientMatchesFiniteDifference) {
  const auto c = lhs(8, 11);
  MatrixXd G(2, 8);
  for (int j = 0; j < 8; ++j) G.col(j) << std::exp(c[j][0]), c[j][0] * c[j][1];
  for (KernelKind kind : {KernelKind::kInverseMultiquadric, KernelKind::kGaussian}) {
    const auto s = fit_weights(G, c, {kind, 2.0});
    const Point p = (Point(2) << 0.37, 0.61).finished();
    const MatrixXd g = s.gradient(p);
    for (int d = 0; d < 2; ++d) {
      const double h = 1e-6;
      Point pp = p, pm = p;
      pp[d] += h;
      pm[d] -= h;
      const VectorXd fd = (s.evaluate(pp) - s.evaluate(pm)) / (2 * h);
      EXPECT_LT((g.col(d) - fd).norm(), 1e-6 * std::max(1.0, fd.norm()));
    }
  }
}

TEST(RbfFit, GradientIsRadialForOneActiveCenter) {
  std::vector<Point> c = {Point::Constant(2, 0.5)};
  const auto s = fit_weights(MatrixXd::Ones(1, 1), c, {KernelKind::kGaussian, 1.0});
  const Point p = (Point(2) << 0.9, 0.2).finished();
  const VectorXd g = s.gradient(p).row(0).transpose();
  const VectorXd d = p - c[0];
  EXPECT_NEAR(std::abs(g.dot(d)) / (g.norm() * d.norm()), 1.0, 1e-14);
  EXPECT_LT(g.dot(d), 0.0);
}

TEST(Operators, ValueLayout) {
  const auto r = synthetic_rom(Point::Constant(2, 0.2));
  EXPECT_EQ(operator_values(r, Operator::kK1).size(), 2);
  EXPECT_EQ(operator_values(r, Operator::kK2).size(), 4);
  EXPECT_EQ(operator_values(r, Operator::kK3).size(), 5);
  const VectorXd v = operator_values(r, Operator::kV);
  ASSERT_EQ(v.size(), 10);
  EXPECT_DOUBLE_EQ(v[6], r.V(1, 1));
  EXPECT_DOUBLE_EQ(operator_values(r, Operator::kBeta)[0], r.beta);
  EXPECT_STREQ(operator_name(Operator::kAlpha), "alpha");
}

TEST(Prom, ReproducesTrainingRoms) {
  const auto c = lhs(10, 5);
  const auto roms = family(c);
  std::vector<FitDiagnostics> diags;
  const PromModel model = fit_prom(roms, c, KernelKind::kInverseMultiquadric, uniform_eps(2.5), &diags);
  EXPECT_EQ(diags.size(), 6u);
  for (std::size_t s = 0; s < c.size(); ++s) {
    const auto r = evaluate(model, c[s]);
    EXPECT_LT((r.k1 - roms[s].k1).norm() / roms[s].k1.norm(), 1e-10);
    EXPECT_LT((r.k2.values() - roms[s].k2.values()).norm() / roms[s].k2.values().norm(), 1e-10);
    EXPECT_LT((r.k3.values() - roms[s].k3.values()).norm() / roms[s].k3.values().norm(), 1e-10);
    EXPECT_LT((r.V - roms[s].V).norm() / roms[s].V.norm(), 1e-10);
    EXPECT_NEAR(r.alpha, roms[s].alpha, 1e-10 * roms[s].alpha);
    EXPECT_NEAR(r.beta, roms[s].beta, 1e-10 * roms[s].beta);
  }
}

TEST(Prom, ConstantDataIsReproducedNearby) {
  const auto c = lhs(10, 9);
  std::vector<rom::RomOperators> roms(10, synthetic_rom(Point::Constant(2, 0.4)));
  for (std::size_t s = 0; s < c.size(); ++s) roms[s].p_hat = c[s];
  const PromModel model = fit_prom(roms, c, KernelKind::kGaussian, uniform_eps(3.0));
  // RBF without polynomial tail only approximates constants between centers
  const auto r = evaluate(model, Point::Constant(2, 0.5));
  EXPECT_LT((r.k1 - roms[0].k1).norm() / roms[0].k1.norm(), 0.05);
}

TEST(Prom, StructureViolationAndWarnings) {
  const auto c = lhs(6, 4);
  auto roms = family(c);
  roms[0].k1[0] = -5.0;
  const PromModel model = fit_prom(roms, c, KernelKind::kGaussian, uniform_eps(4.0));
  try {
    evaluate(model, c[0]);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStructureViolation);
  }
  std::vector<std::string> warnings;
  EvalOptions o;
  o.warn_on_structure_violation = true;
  o.warnings = &warnings;
  const auto r = evaluate(model, c[0], o);
  EXPECT_LT(r.k1[0], 0.0);
  ASSERT_EQ(warnings.size(), 1u);

  warnings.clear();
  const PromModel good = fit_prom(family(c), c, KernelKind::kGaussian, uniform_eps(4.0));
  evaluate(good, Point::Constant(2, 1.05), o);
  EXPECT_EQ(warnings.size(), 1u);  // extrapolation
  EXPECT_THROW(evaluate(good, Point::Constant(3, 0.5)), Error);
}

TEST(Prom, GradientShapes) {
  const auto c = lhs(6, 2);
  const PromModel model = fit_prom(family(c), c, KernelKind::kInverseMultiquadric, uniform_eps(2.0));
  const auto g = gradient(model, Point::Constant(2, 0.5));
  EXPECT_EQ(g[static_cast<int>(Operator::kV)].rows(), 10);
  EXPECT_EQ(g[static_cast<int>(Operator::kV)].cols(), 2);
  EXPECT_EQ(g[static_cast<int>(Operator::kAlpha)].rows(), 1);
}

TEST(Validation, GridAndErrorMeasure) {
  const VectorXd g = default_eps_grid();
  ASSERT_EQ(g.size(), 50);
  EXPECT_NEAR(g[0], 1e-2, 1e-16);
  EXPECT_NEAR(g[49], 10.0, 1e-13);
  for (int i = 1; i < 50; ++i) EXPECT_GT(g[i], g[i - 1]);

  MatrixXd ref(2, 2), pred(2, 2);
  ref << 1, 0, 0, 2;
  pred << 1.5, 0, 0, 2;  // r = (0.5, 0)
  EXPECT_NEAR(validation_error(ref, pred, ErrorMeasure::kVerbatim), std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(validation_error(ref, pred, ErrorMeasure::kSquared), 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(validation_error(MatrixXd::Zero(1, 2), MatrixXd::Zero(1, 2), ErrorMeasure::kVerbatim), 0.0);
}

TEST(Validation, TrainingSetAsValidationGivesZeroError) {
  const auto c = lhs(8, 21);
  const auto roms = family(c);
  VectorXd grid(3);
  grid << 2.0, 3.0, 5.0;
  const auto rep = validate_eps(roms, c, roms, c, KernelKind::kInverseMultiquadric, grid);
  for (int i = 0; i < kOperatorCount; ++i)
    for (int g = 0; g < 3; ++g) EXPECT_LT(rep.e_rel[i][g], 1e-4);
}

TEST(Validation, SelectsWellConditionedMinimizer) {
  const auto c = lhs(12, 31);
  const auto v = lhs(4, 32);
  const auto rep = validate_eps(family(c), c, family(v), v, KernelKind::kGaussian, default_eps_grid());
  for (int i = 0; i < kOperatorCount; ++i) {
    const int s = rep.selected_index[i];
    EXPECT_GE(rep.rcond[s], kMinRcond);
    EXPECT_DOUBLE_EQ(rep.selected[i], rep.eps_grid[s]);
    for (int g = 0; g < 50; ++g)
      if (rep.rcond[g] >= kMinRcond) EXPECT_LE(rep.e_rel[i][s], rep.e_rel[i][g]);
  }
  // a family that is smooth in p should be predicted well at the best eps
  EXPECT_LT(rep.e_rel[static_cast<int>(Operator::kK1)][rep.selected_index[0]], 0.1);
}
