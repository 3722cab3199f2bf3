#include "promforge/global_basis.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

using namespace promforge;
using namespace promforge::global;
using testing_support::beam;

namespace {

modal::ModeSet random_modes(int n, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  modal::ModeSet ms;
  ms.phi.resize(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) ms.phi(i, j) = d(rng);
  ms.omega = Eigen::VectorXd::LinSpaced(k, 1.0, k);
  for (int j = 0; j < k; ++j) ms.mode_numbers.push_back(j + 1);
  return ms;
}

modal::CompanionSet random_companions(int n, int k, std::mt19937_64& rng) {
  modal::CompanionSet cs;
  cs.theta = random_modes(n, k, rng).phi;
  cs.labels.assign(k, "c");
  return cs;
}

// Projector onto range(V) in the Euclidean inner product.
MatrixXd projector(const MatrixXd& v) { return v * v.completeOrthogonalDecomposition().pseudoInverse(); }

}  // namespace

TEST(AssembleSnapshots, ShapesAndUnitColumns) {
  std::mt19937_64 rng(1);
  const auto s = assemble_snapshots({random_modes(20, 3, rng)}, {random_companions(20, 2, rng)});
  EXPECT_EQ(s.phi_g.cols(), 3);
  EXPECT_EQ(s.theta_g.cols(), 2);
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(s.phi_g.col(c).norm(), 1.0, 1e-14);
  for (int c = 0; c < 2; ++c) EXPECT_NEAR(s.theta_g.col(c).norm(), 1.0, 1e-14);
}

TEST(AssembleSnapshots, SampleMajorStacking) {
  std::mt19937_64 rng(2);
  std::vector<modal::ModeSet> modes;
  std::vector<modal::CompanionSet> comps;
  for (int s = 0; s < 14; ++s) {
    modes.push_back(random_modes(30, 6, rng));
    comps.push_back(random_companions(30, 2, rng));
  }
  const auto s = assemble_snapshots(modes, comps);
  EXPECT_EQ(s.phi_g.cols(), 84);
  EXPECT_EQ(s.phi_sample[6], 1);
  EXPECT_EQ(s.theta_sample.back(), 13);
}

TEST(AssembleSnapshots, RejectsRowMismatch) {
  std::mt19937_64 rng(3);
  EXPECT_THROW(assemble_snapshots({random_modes(10, 2, rng), random_modes(11, 2, rng)},
                                  {random_companions(10, 1, rng), random_companions(11, 1, rng)}),
               Error);
}

TEST(PodTruncate, RankOneMatrix) {
  const Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(8, 1.0, 2.0);
  const MatrixXd a = u * Eigen::RowVectorXd::LinSpaced(5, -1.0, 3.0);
  for (double e : {0.1, 0.9, 1.0}) {
    const PodResult r = pod_truncate(a, e);
    EXPECT_EQ(r.m, 1);
    EXPECT_NEAR(r.energy[0], 1.0, 1e-15);
  }
}

TEST(PodTruncate, FullThresholdGivesRank) {
  std::mt19937_64 rng(4);
  const MatrixXd b = random_modes(12, 4, rng).phi;
  const MatrixXd a = b * random_modes(4, 9, rng).phi;  // rank 4, 9 columns
  const PodResult r = pod_truncate(a, 1.0);
  EXPECT_EQ(r.m, 4);
  for (int i = 1; i < r.energy.size(); ++i) EXPECT_GE(r.energy[i], r.energy[i - 1]);
  EXPECT_EQ(r.energy[r.energy.size() - 1], 1.0);
  EXPECT_LT((r.vectors.transpose() * r.vectors - MatrixXd::Identity(4, 4)).norm(), 1e-12);
}

TEST(PodTruncate, ErrorsOnZeroAndBadThreshold) {
  EXPECT_THROW(pod_truncate(MatrixXd::Zero(3, 3), 0.9), Error);
  EXPECT_THROW(pod_truncate(MatrixXd::Identity(3, 3), 0.0), Error);
  EXPECT_THROW(pod_truncate(MatrixXd::Identity(3, 3), 1.5), Error);
}

TEST(BuildGlobalRb, IdenticalSamplesCollapse) {
  std::mt19937_64 rng(5);
  const auto ms = random_modes(25, 3, rng);
  const auto cs = random_companions(25, 2, rng);
  const auto s = assemble_snapshots({ms, ms, ms, ms}, {cs, cs, cs, cs});
  const GlobalBasis gb = build_global_rb(s, 1.0, 1.0);
  EXPECT_EQ(gb.m_phi, 3);
  EXPECT_EQ(gb.m_theta, 2);
  EXPECT_EQ(gb.V.cols(), 5);
  EXPECT_LT((gb.V.leftCols(3).transpose() * gb.V.leftCols(3) - MatrixXd::Identity(3, 3)).norm(), 1e-10);
  EXPECT_LT((gb.V.rightCols(2).transpose() * gb.V.rightCols(2) - MatrixXd::Identity(2, 2)).norm(), 1e-10);
}

class MassOrthTest : public ::testing::Test {
 protected:
  void SetUp() override {
    a_ = std::make_unique<fe::Assembly>(fe::GeometryParams{1.4, 0.2}, beam());
    const auto ms = modal::solve_vms(a_->mass_matrix(), a_->linear_stiffness(), 4);
    const auto cs = modal::compute_smds(*a_, ms, {{0, 0}, {0, 1}}, 1e-8);
    gb_ = build_global_rb(assemble_snapshots({ms}, {cs}), 1.0, 1.0);
  }
  std::unique_ptr<fe::Assembly> a_;
  GlobalBasis gb_;
};

TEST_F(MassOrthTest, DiagonalizesReducedPencil) {
  const MatrixXd m = a_->mass_matrix(), k = a_->linear_stiffness();
  const LocalBasis lb = mass_orthogonalize(gb_.V, m, k);
  const int r = static_cast<int>(lb.V.cols());
  EXPECT_LT((lb.V.transpose() * m * lb.V - MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff(), 1e-10);
  const MatrixXd kr = lb.V.transpose() * k * lb.V;
  const MatrixXd w2 = lb.omega.array().square().matrix().asDiagonal();
  EXPECT_LT((kr - w2).norm(), 1e-8 * w2.norm());
  EXPECT_LT((projector(lb.V) - projector(gb_.V)).norm(), 1e-10);
  for (int i = 1; i < r; ++i) EXPECT_GE(lb.omega[i], lb.omega[i - 1]);
}

TEST_F(MassOrthTest, RejectsDegenerateBasis) {
  MatrixXd v(gb_.V.rows(), 2);
  v.col(0) = gb_.V.col(0);
  v.col(1) = gb_.V.col(0);
  EXPECT_THROW(mass_orthogonalize(v, a_->mass_matrix(), a_->linear_stiffness()), Error);
}

TEST(MacMatrix, SelfCorrelationAndSignBlindness) {
  std::mt19937_64 rng(6);
  const MatrixXd m = testing_support::random_spd(10, rng);
  const auto lb = mass_orthogonalize(random_modes(10, 4, rng).phi, m, testing_support::random_spd(10, rng));
  const MatrixXd mac = mac_matrix(lb.V, lb.V, m);
  for (int i = 0; i < 4; ++i) EXPECT_NEAR(mac(i, i), 1.0, 1e-14);
  EXPECT_LT((mac - MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-12);
  MatrixXd flipped = lb.V;
  flipped.col(2) *= -1.0;
  EXPECT_LT((mac_matrix(lb.V, flipped, m) - mac).norm(), 1e-15);
  EXPECT_GE(mac.minCoeff(), 0.0);
  EXPECT_LE(mac.maxCoeff(), 1.0);
}

TEST(MacMatrix, RejectsZeroColumn) {
  MatrixXd v = MatrixXd::Identity(3, 2);
  MatrixXd w = v;
  w.col(1).setZero();
  EXPECT_THROW(mac_matrix(v, w, MatrixXd::Identity(3, 3)), Error);
}

class ReorderTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(7);
    m_ = testing_support::random_spd(15, rng);
    base_ = mass_orthogonalize(random_modes(15, 5, rng).phi, m_, testing_support::random_spd(15, rng));
  }
  MatrixXd m_;
  LocalBasis base_;
};

TEST_F(ReorderTest, IdenticalBasesGiveIdentity) {
  std::vector<LocalBasis> bases(4, base_);
  std::vector<MatrixXd> masses(4, m_);
  std::vector<sampling::Point> pts = {sampling::Point::Constant(2, 0.1), sampling::Point::Constant(2, 0.5),
                                      sampling::Point::Constant(2, 0.7), sampling::Point::Constant(2, 0.9)};
  const auto order = reorder_all(bases, masses, pts);
  EXPECT_EQ(order.front(), 1);
  for (const auto& b : bases) {
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(b.permutation[i], i);
      EXPECT_EQ(b.signs[i], 1);
    }
  }
  EXPECT_EQ(bases[1].reference, -1);
  EXPECT_EQ(bases[2].reference, 1);
  EXPECT_EQ(bases[3].reference, 2);
  EXPECT_EQ(bases[0].reference, 1);
}

TEST_F(ReorderTest, RecoversShuffleSignsAndPerturbation) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> d(0.0, 1.0);
  for (double noise : {0.0, 1e-3}) {
    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    LocalBasis shuffled = base_;
    std::vector<int> flips(5);
    for (int c = 0; c < 5; ++c) {
      flips[c] = d(rng) < 0 ? -1 : 1;
      shuffled.V.col(c) = flips[c] * base_.V.col(perm[c]);
      shuffled.omega[c] = base_.omega[perm[c]];
      for (int r = 0; r < shuffled.V.rows(); ++r) shuffled.V(r, c) *= 1.0 + noise * d(rng);
    }
    std::vector<LocalBasis> bases = {base_, shuffled};
    std::vector<MatrixXd> masses(2, m_);
    std::vector<sampling::Point> pts = {sampling::Point::Constant(2, 0.5), sampling::Point::Constant(2, 0.6)};
    reorder_all(bases, masses, pts);
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(perm[bases[1].permutation[i]], i);
      EXPECT_EQ(bases[1].signs[i], flips[bases[1].permutation[i]]);
    }
    EXPECT_LT((bases[1].V - base_.V).norm(), 10 * noise * base_.V.norm() + 1e-14);
    EXPECT_LT((bases[1].omega - base_.omega).norm(), 1e-14);
  }
}

TEST_F(ReorderTest, DuplicateAssignmentIsReported) {
  // Reference columns 0 and 1 both correlate best with candidate column 0.
  LocalBasis dup = base_;
  const MatrixXd& b = base_.V;
  dup.V.col(0) = b.col(0) + b.col(1);
  dup.V.col(1) = b.col(2) + 0.5 * b.col(0);
  dup.V.col(2) = b.col(3);
  dup.V.col(3) = b.col(4);
  dup.V.col(4) = b.col(2) - 0.5 * b.col(0) - 0.5 * b.col(1);
  std::vector<LocalBasis> bases = {base_, dup};
  std::vector<MatrixXd> masses(2, m_);
  std::vector<sampling::Point> pts = {sampling::Point::Constant(2, 0.5), sampling::Point::Constant(2, 0.2)};
  try {
    reorder_all(bases, masses, pts);
    FAIL() << "expected DuplicateAssignment";
  } catch (const DuplicateAssignment& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateAssignment);
    EXPECT_EQ(e.reference(), 0);
    EXPECT_EQ(e.sample(), 1);
    EXPECT_EQ(e.mac().rows(), 5);
  }
}

TEST_F(ReorderTest, RejectsCountMismatch) {
  std::vector<LocalBasis> bases(2, base_);
  std::vector<MatrixXd> masses(1, m_);
  std::vector<sampling::Point> pts(2, sampling::Point::Zero(2));
  EXPECT_THROW(reorder_all(bases, masses, pts), Error);
}
