#include "promforge/global_basis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace promforge::global {

namespace {

void fix_sign(Eigen::Ref<VectorXd> col) {
  Eigen::Index imax = 0;
  col.cwiseAbs().maxCoeff(&imax);
  if (col[imax] < 0.0) col = -col;
}

}  // namespace

SnapshotMatrices assemble_snapshots(const std::vector<modal::ModeSet>& modes,
                                    const std::vector<modal::CompanionSet>& companions) {
  require(!modes.empty(), "assemble_snapshots: no samples");
  require(modes.size() == companions.size(), "assemble_snapshots: one companion set per sample is required");
  const Eigen::Index n = modes[0].phi.rows();
  Eigen::Index n_phi = 0, n_theta = 0;
  for (std::size_t s = 0; s < modes.size(); ++s) {
    require(modes[s].phi.rows() == n, "assemble_snapshots: samples have different DOF counts");
    require(companions[s].theta.rows() == n || companions[s].theta.cols() == 0,
            "assemble_snapshots: samples have different DOF counts");
    n_phi += modes[s].phi.cols();
    n_theta += companions[s].theta.cols();
  }

  SnapshotMatrices out;
  out.phi_g.resize(n, n_phi);
  out.theta_g.resize(n, n_theta);
  Eigen::Index cp = 0, ct = 0;
  for (std::size_t s = 0; s < modes.size(); ++s) {
    for (Eigen::Index c = 0; c < modes[s].phi.cols(); ++c) {
      const double nrm = modes[s].phi.col(c).norm();
      require(nrm > 0.0, "assemble_snapshots: zero mode column");
      out.phi_g.col(cp++) = modes[s].phi.col(c) / nrm;
      out.phi_sample.push_back(static_cast<int>(s));
    }
    for (Eigen::Index c = 0; c < companions[s].theta.cols(); ++c) {
      const double nrm = companions[s].theta.col(c).norm();
      require(nrm > 0.0, "assemble_snapshots: zero companion column");
      out.theta_g.col(ct++) = companions[s].theta.col(c) / nrm;
      out.theta_sample.push_back(static_cast<int>(s));
    }
  }
  return out;
}

PodResult pod_truncate(const MatrixXd& A, double e_threshold) {
  require(e_threshold > 0.0 && e_threshold <= 1.0, "pod_truncate: threshold must lie in (0, 1]");
  require(A.size() > 0 && A.norm() > 0.0, "pod_truncate: snapshot matrix is zero", ErrorCode::kNumeric);

  Eigen::BDCSVD<MatrixXd> svd(A, Eigen::ComputeThinU);
  PodResult out;
  out.sigma = svd.singularValues();
  const Eigen::Index k = out.sigma.size();
  out.energy.resize(k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) total += out.sigma[i] * out.sigma[i];
  double acc = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    acc += out.sigma[i] * out.sigma[i];
    out.energy[i] = acc / total;
  }
  out.energy[k - 1] = 1.0;

  const double eps = std::numeric_limits<double>::epsilon();
  const double rank_tol = out.sigma[0] * static_cast<double>(std::max(A.rows(), A.cols())) * eps;
  int rank = 0;
  while (rank < k && out.sigma[rank] > rank_tol) ++rank;
  int m = 1;
  while (m < k && out.energy[m - 1] < e_threshold * (1.0 - 4.0 * eps)) ++m;
  out.m = std::max(1, std::min(m, rank));
  out.vectors = svd.matrixU().leftCols(out.m);
  for (int c = 0; c < out.m; ++c) fix_sign(out.vectors.col(c));
  return out;
}

GlobalBasis build_global_rb(const SnapshotMatrices& s, double e_phi, double e_theta) {
  GlobalBasis gb;
  gb.pod_phi = pod_truncate(s.phi_g, e_phi);
  gb.m_phi = gb.pod_phi.m;
  if (s.theta_g.cols() > 0) {
    gb.pod_theta = pod_truncate(s.theta_g, e_theta);
    gb.m_theta = gb.pod_theta.m;
  }
  gb.V.resize(s.phi_g.rows(), gb.m());
  gb.V.leftCols(gb.m_phi) = gb.pod_phi.vectors;
  if (gb.m_theta > 0) gb.V.rightCols(gb.m_theta) = gb.pod_theta.vectors;
  return gb;
}

LocalBasis mass_orthogonalize(const MatrixXd& V, const MatrixXd& M, const MatrixXd& K1) {
  require(V.rows() == M.rows() && M.rows() == K1.rows(), "mass_orthogonalize: dimension mismatch");
  // Two Cholesky passes give an M-orthonormal Q to working precision; the
  // pencil then reduces to a standard symmetric problem on Q.
  MatrixXd Q = V;
  for (int pass = 0; pass < 2; ++pass) {
    const MatrixXd mr = Q.transpose() * M * Q;
    const Eigen::LLT<MatrixXd> llt(0.5 * (mr + mr.transpose()));
    require(llt.info() == Eigen::Success, "mass_orthogonalize: reduced mass is not positive definite",
            ErrorCode::kNumeric);
    Q = llt.matrixU().solve<Eigen::OnTheRight>(Q);
  }
  const MatrixXd kr = Q.transpose() * K1 * Q;
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (kr + kr.transpose()));
  require(es.info() == Eigen::Success, "mass_orthogonalize: reduced eigensolver failed", ErrorCode::kNumeric);
  require(es.eigenvalues().minCoeff() > 0.0,
          "mass_orthogonalize: reduced stiffness is not positive definite (degenerate global basis)",
          ErrorCode::kNumeric);

  LocalBasis out;
  out.V = Q * es.eigenvectors();
  out.omega = es.eigenvalues().cwiseSqrt();
  for (Eigen::Index c = 0; c < out.V.cols(); ++c) {
    auto col = out.V.col(c);
    col /= std::sqrt(col.dot(M * col));
    fix_sign(col);
  }
  out.permutation.resize(out.V.cols());
  std::iota(out.permutation.begin(), out.permutation.end(), 0);
  out.signs.assign(out.V.cols(), 1);
  out.matched_mac = VectorXd::Ones(out.V.cols());
  return out;
}

MatrixXd mac_matrix(const MatrixXd& VI, const MatrixXd& VJ, const MatrixXd& MI) {
  require(VI.rows() == VJ.rows() && VI.rows() == MI.rows(), "mac_matrix: dimension mismatch");
  const MatrixXd mvj = MI * VJ;
  const MatrixXd cross = VI.transpose() * mvj;
  const VectorXd ni = (VI.transpose() * MI * VI).diagonal();
  const VectorXd nj = (VJ.transpose() * mvj).diagonal();
  require((ni.array() > 0.0).all() && (nj.array() > 0.0).all(), "mac_matrix: zero-norm column");
  MatrixXd mac(VI.cols(), VJ.cols());
  for (Eigen::Index i = 0; i < VI.cols(); ++i)
    for (Eigen::Index j = 0; j < VJ.cols(); ++j)
      mac(i, j) = std::min(1.0, cross(i, j) * cross(i, j) / (ni[i] * nj[j]));
  return mac;
}

void align_to_reference(LocalBasis& cand, const LocalBasis& ref, const MatrixXd& M_ref, int ref_id, int cand_id) {
  require(cand.V.cols() == ref.V.cols(), "align_to_reference: basis sizes differ");
  const int m = static_cast<int>(cand.V.cols());
  const MatrixXd mac = mac_matrix(ref.V, cand.V, M_ref);
  std::vector<int> b(m);
  std::vector<int> used(m, -1);
  for (int i = 0; i < m; ++i) {
    Eigen::Index j = 0;
    mac.row(i).maxCoeff(&j);
    b[i] = static_cast<int>(j);
    if (used[j] >= 0) {
      std::ostringstream msg;
      msg << "duplicate MAC assignment: columns " << used[j] << " and " << i << " of reference sample " << ref_id
          << " both match column " << j << " of sample " << cand_id
          << "; the reordered basis would be rank deficient, refine the parameter sampling. MAC matrix:\n"
          << mac;
      throw DuplicateAssignment(ref_id, cand_id, mac, msg.str());
    }
    used[j] = i;
  }

  if (cand.permutation.size() != static_cast<std::size_t>(m)) {
    cand.permutation.resize(m);
    std::iota(cand.permutation.begin(), cand.permutation.end(), 0);
  }
  if (cand.signs.size() != static_cast<std::size_t>(m)) cand.signs.assign(m, 1);

  MatrixXd v(cand.V.rows(), m);
  VectorXd omega(m), matched(m);
  std::vector<int> perm(m), signs(m);
  const MatrixXd mref_v = M_ref * ref.V;
  for (int i = 0; i < m; ++i) {
    v.col(i) = cand.V.col(b[i]);
    const int s = mref_v.col(i).dot(v.col(i)) < 0.0 ? -1 : 1;
    if (s < 0) v.col(i) = -v.col(i);
    omega[i] = cand.omega.size() == m ? cand.omega[b[i]] : 0.0;
    matched[i] = mac(i, b[i]);
    perm[i] = cand.permutation[b[i]];
    signs[i] = cand.signs[b[i]] * s;
  }
  cand.V = std::move(v);
  if (cand.omega.size() == m) cand.omega = omega;
  cand.permutation = std::move(perm);
  cand.signs = std::move(signs);
  cand.reference = ref_id;
  cand.matched_mac = matched;
}

int center_sample(const std::vector<sampling::Point>& samples) {
  require(!samples.empty(), "center_sample: no samples");
  return sampling::nearest(samples, sampling::Point::Constant(samples[0].size(), 0.5));
}

std::vector<int> reorder_all(std::vector<LocalBasis>& bases, const std::vector<MatrixXd>& masses,
                             const std::vector<sampling::Point>& samples, int start) {
  const int n = static_cast<int>(bases.size());
  require(n >= 1, "reorder_all: at least one basis is required");
  require(static_cast<int>(masses.size()) == n && static_cast<int>(samples.size()) == n,
          "reorder_all: bases, mass matrices and samples must have equal counts");
  if (start < 0) start = center_sample(samples);
  require(start < n, "reorder_all: start index out of range");

  std::vector<int> order = {start};
  std::vector<char> done(n, 0);
  done[start] = 1;
  bases[start].reference = -1;
  while (static_cast<int>(order.size()) < n) {
    int best_u = -1, best_o = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int u = 0; u < n; ++u) {
      if (done[u]) continue;
      for (int o : order) {
        const double d = sampling::distance(samples[u], samples[o]);
        if (d < best_d || (d == best_d && (u < best_u || (u == best_u && o < best_o)))) {
          best_d = d;
          best_u = u;
          best_o = o;
        }
      }
    }
    align_to_reference(bases[best_u], bases[best_o], masses[best_o], best_o, best_u);
    done[best_u] = 1;
    order.push_back(best_u);
  }
  return order;
}

}  // namespace promforge::global
