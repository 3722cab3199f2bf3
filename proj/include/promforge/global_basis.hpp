#pragma once

#include "promforge/errors.hpp"
#include "promforge/modal_basis.hpp"
#include "promforge/sampling.hpp"

#include <vector>

namespace promforge::global {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct SnapshotMatrices {
  MatrixXd phi_g;
  MatrixXd theta_g;
  std::vector<int> phi_sample;    // sample of origin per column
  std::vector<int> theta_sample;
};

struct PodResult {
  MatrixXd vectors;  // leading left singular vectors
  int m = 0;
  VectorXd sigma;
  VectorXd energy;   // cumulative energy fraction e_1 .. e_N
};

struct GlobalBasis {
  MatrixXd V;  // [L_phi, L_theta]
  int m_phi = 0;
  int m_theta = 0;
  PodResult pod_phi;
  PodResult pod_theta;

  int m() const { return m_phi + m_theta; }
};

/// Per-sample basis after mass orthogonalization and reordering.
struct LocalBasis {
  MatrixXd V;
  VectorXd omega;
  std::vector<int> permutation;  // delivered column i = mass-orthogonalized column permutation[i]
  std::vector<int> signs;        // +1 / -1 applied after permutation
  int reference = -1;            // sample the columns were matched against (-1: start basis)
  VectorXd matched_mac;          // MAC of each delivered column with its reference column
};

/// Thrown when MAC matching assigns two columns to the same reference column.
class DuplicateAssignment : public Error {
 public:
  DuplicateAssignment(int reference, int sample, MatrixXd mac, const std::string& what)
      : Error(ErrorCode::kDuplicateAssignment, what), reference_(reference), sample_(sample), mac_(std::move(mac)) {}
  int reference() const { return reference_; }
  int sample() const { return sample_; }
  const MatrixXd& mac() const { return mac_; }

 private:
  int reference_;
  int sample_;
  MatrixXd mac_;
};

/// Stacks the per-sample modes and companions (sample-major) and unit-normalizes every column.
SnapshotMatrices assemble_snapshots(const std::vector<modal::ModeSet>& modes,
                                    const std::vector<modal::CompanionSet>& companions);

/// Thin SVD, keeping the smallest m whose cumulative energy reaches the threshold.
PodResult pod_truncate(const MatrixXd& A, double e_threshold);

GlobalBasis build_global_rb(const SnapshotMatrices& s, double e_phi, double e_theta);

/// Solves the reduced pencil (V^T K1 V, V^T M V) and returns V Phi with
/// mass-normalized, frequency-ascending columns.
LocalBasis mass_orthogonalize(const MatrixXd& V, const MatrixXd& M, const MatrixXd& K1);

/// Mass-weighted MAC between the columns of VI (rows) and VJ (columns).
MatrixXd mac_matrix(const MatrixXd& VI, const MatrixXd& VJ, const MatrixXd& MI);

/// Permutes and sign-aligns `cand` against `ref` (mass matrix of the reference).
/// Throws DuplicateAssignment with (ref_id, cand_id) on repeated assignment.
void align_to_reference(LocalBasis& cand, const LocalBasis& ref, const MatrixXd& M_ref, int ref_id, int cand_id);

/// Index of the sample closest to the centre of the unit hypercube.
int center_sample(const std::vector<sampling::Point>& samples);

/// Greedy nearest-reference reordering of all bases. `start < 0` picks the
/// sample closest to the hypercube centre. Returns the processing order.
std::vector<int> reorder_all(std::vector<LocalBasis>& bases, const std::vector<MatrixXd>& masses,
                             const std::vector<sampling::Point>& samples, int start = -1);

}  // namespace promforge::global
