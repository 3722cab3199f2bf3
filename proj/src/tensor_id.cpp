#include "promforge/tensor_id.hpp"

#include "promforge/errors.hpp"
#include "promforge/parallel.hpp"

#include <cmath>

namespace promforge::tensor_id {

const char* method_name(Method m) { return m == Method::kEed ? "eed" : "ed"; }

int eed_probe_count(int m) { return 2 * m + m * (m - 1) / 2; }

int ed_probe_count(int m) { return 2 * m + m * (m - 1) + m * (m - 1) * (m - 2) / 6; }

VectorXd plan_scales(const MatrixXd& V, const VectorXd& transverse_mask, double thickness, double target) {
  require(target > 0.0, "plan_scales: target must be positive");
  require(thickness > 0.0, "plan_scales: thickness must be positive");
  require(transverse_mask.size() == V.rows(), "plan_scales: mask length mismatch");
  VectorXd s(V.cols());
  for (Eigen::Index i = 0; i < V.cols(); ++i) {
    const double all = V.col(i).cwiseAbs().maxCoeff();
    require(all > 0.0, "plan_scales: basis column " + std::to_string(i) + " is zero");
    const double tr = V.col(i).cwiseProduct(transverse_mask).cwiseAbs().maxCoeff();
    // Membrane-dominated columns carry almost no transverse motion.
    const double ref = tr > 1e-6 * all ? tr : all;
    s[i] = target * thickness / ref;
  }
  return s;
}

VectorXd plan_scales(const MatrixXd& V, const fe::Assembly& a, double target) {
  return plan_scales(V, a.transverse_mask(), a.spec().thickness, target);
}

std::vector<Probe> eed_plan(const VectorXd& scales) {
  const int m = static_cast<int>(scales.size());
  std::vector<Probe> plan;
  plan.reserve(eed_probe_count(m));
  for (int i = 0; i < m; ++i) {
    VectorXd e = VectorXd::Zero(m);
    e[i] = scales[i];
    plan.push_back({e, "+" + std::to_string(i)});
    plan.push_back({-e, "-" + std::to_string(i)});
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      VectorXd e = VectorXd::Zero(m);
      e[i] = scales[i];
      e[j] = scales[j];
      plan.push_back({e, std::to_string(i) + "," + std::to_string(j)});
    }
  return plan;
}

std::vector<Probe> ed_plan(const VectorXd& scales) {
  const int m = static_cast<int>(scales.size());
  std::vector<Probe> plan;
  plan.reserve(ed_probe_count(m));
  for (int i = 0; i < m; ++i) {
    VectorXd e = VectorXd::Zero(m);
    e[i] = scales[i];
    plan.push_back({e, "+" + std::to_string(i)});
    plan.push_back({-e, "-" + std::to_string(i)});
  }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      VectorXd e = VectorXd::Zero(m);
      e[i] = scales[i];
      e[j] = scales[j];
      const std::string tag = std::to_string(i) + "," + std::to_string(j);
      plan.push_back({e, "+" + tag});
      plan.push_back({-e, "-" + tag});
    }
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int k = j + 1; k < m; ++k) {
        VectorXd e = VectorXd::Zero(m);
        e[i] = scales[i];
        e[j] = scales[j];
        e[k] = scales[k];
        plan.push_back({e, std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k)});
      }
  return plan;
}

namespace {

void check_inputs(const fe::StructuralModel& model, const MatrixXd& V, const VectorXd& scales) {
  require(V.rows() == model.dofs(), "identify: basis row count does not match the model");
  require(V.cols() >= 1, "identify: empty basis");
  require(scales.size() == V.cols(), "identify: one scale per basis vector is required");
  require((scales.array() > 0.0).all(), "identify: scales must be positive");
}

// Collects repeated determinations of unique tensor entries; the final value
// is their mean and the spread feeds the consistency diagnostic.
class EntryAccumulator {
 public:
  EntryAccumulator(int order, int m) : tensor_(order, m) {
    sum_ = VectorXd::Zero(tensor_.unique_count());
    sumsq_ = VectorXd::Zero(tensor_.unique_count());
    count_ = Eigen::VectorXi::Zero(tensor_.unique_count());
  }

  void add(std::array<int, 4> idx, double v) {
    const int u = tensor_.position(idx);
    sum_[u] += v;
    sumsq_[u] += v * v;
    ++count_[u];
  }

  double mean(std::array<int, 4> idx) const {
    const int u = tensor_.position(idx);
    require(count_[u] > 0, "identify: tensor entry used before it was determined", ErrorCode::kNumeric);
    return sum_[u] / count_[u];
  }

  SymmetricTensor finish(double* spread) const {
    SymmetricTensor t = tensor_;
    double dev = 0.0, total = 0.0;
    for (int u = 0; u < t.unique_count(); ++u) {
      require(count_[u] > 0, "identify: tensor entry left undetermined", ErrorCode::kNumeric);
      const double mu = sum_[u] / count_[u];
      t.values()[u] = mu;
      dev += std::max(0.0, sumsq_[u] - count_[u] * mu * mu);
      total += count_[u] * mu * mu;
    }
    *spread = total > 0.0 ? std::sqrt(dev / total) : 0.0;
    return t;
  }

  // Working copy with determined entries filled and the rest zero.
  SymmetricTensor partial() const {
    SymmetricTensor t = tensor_;
    for (int u = 0; u < t.unique_count(); ++u) t.values()[u] = count_[u] > 0 ? sum_[u] / count_[u] : 0.0;
    return t;
  }

 private:
  SymmetricTensor tensor_;
  VectorXd sum_, sumsq_;
  Eigen::VectorXi count_;
};

void require_finite(const MatrixXd& a, const std::string& label) {
  require(a.allFinite(), "identify: non-finite black-box evaluation at probe " + label, ErrorCode::kNumeric);
}

}  // namespace

IdentifiedTensors symmetrize_and_check(int m, const std::vector<double>& quadratic_dense,
                                       const std::vector<double>& cubic_dense) {
  IdentifiedTensors out;
  out.m = m;
  out.quadratic = SymmetricTensor::symmetrize(3, m, quadratic_dense, &out.asymmetry_quadratic);
  out.cubic = SymmetricTensor::symmetrize(4, m, cubic_dense, &out.asymmetry_cubic);
  return out;
}

IdentifiedTensors identify_eed(const fe::StructuralModel& model, const MatrixXd& V, const VectorXd& scales,
                               int workers) {
  check_inputs(model, V, scales);
  const int m = static_cast<int>(V.cols());
  const std::vector<Probe> plan = eed_plan(scales);
  std::vector<MatrixXd> a(plan.size());
  parallel_for(static_cast<int>(plan.size()), workers, [&](int p) {
    a[p] = V.transpose() * model.tangent_stiffness(V * plan[p].eta) * V;
    require_finite(a[p], plan[p].label);
  });
  const MatrixXd k1 = V.transpose() * model.linear_stiffness() * V;

  const std::size_t mm = static_cast<std::size_t>(m);
  std::vector<double> k2(mm * mm * mm), k3(mm * mm * mm * mm);
  auto at2 = [&](int x, int y, int z) -> double& { return k2[(x * mm + y) * mm + z]; };
  auto at3 = [&](int x, int y, int z, int w) -> double& { return k3[((x * mm + y) * mm + z) * mm + w]; };

  std::vector<MatrixXd> k2_slice(m), k3_diag(m);
  for (int i = 0; i < m; ++i) {
    const double s = scales[i];
    const MatrixXd& ap = a[2 * i];
    const MatrixXd& am = a[2 * i + 1];
    k2_slice[i] = (ap - am) / (4.0 * s);
    k3_diag[i] = (ap + am - 2.0 * k1) / (6.0 * s * s);
    for (int x = 0; x < m; ++x)
      for (int y = 0; y < m; ++y) {
        at2(x, y, i) = k2_slice[i](x, y);
        at3(x, y, i, i) = k3_diag[i](x, y);
      }
  }
  int p = 2 * m;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j, ++p) {
      const double si = scales[i], sj = scales[j];
      const MatrixXd cross = (a[p] - k1 - 2.0 * (si * k2_slice[i] + sj * k2_slice[j]) -
                              3.0 * (si * si * k3_diag[i] + sj * sj * k3_diag[j])) /
                             (6.0 * si * sj);
      for (int x = 0; x < m; ++x)
        for (int y = 0; y < m; ++y) {
          at3(x, y, i, j) = cross(x, y);
          at3(x, y, j, i) = cross(x, y);
        }
    }

  IdentifiedTensors out = symmetrize_and_check(m, k2, k3);
  out.method = Method::kEed;
  out.scales = scales;
  out.evaluations = static_cast<int>(plan.size());
  return out;
}

IdentifiedTensors identify_ed(const fe::StructuralModel& model, const MatrixXd& V, const VectorXd& scales,
                              int workers) {
  check_inputs(model, V, scales);
  const int m = static_cast<int>(V.cols());
  const std::vector<Probe> plan = ed_plan(scales);
  std::vector<VectorXd> f(plan.size());
  parallel_for(static_cast<int>(plan.size()), workers, [&](int p) {
    f[p] = V.transpose() * model.internal_force(V * plan[p].eta);
    require_finite(f[p], plan[p].label);
  });
  const MatrixXd k1 = V.transpose() * model.linear_stiffness() * V;

  EntryAccumulator q2(3, m), q3(4, m);

  // Single directions: K2{c,i,i} and K3{c,i,i,i} for every c.
  for (int i = 0; i < m; ++i) {
    const double s = scales[i];
    const VectorXd& fp = f[2 * i];
    const VectorXd& fm = f[2 * i + 1];
    const VectorXd even = (fp + fm) / (2.0 * s * s);
    const VectorXd odd = (fp - fm - 2.0 * s * k1.col(i)) / (2.0 * s * s * s);
    for (int c = 0; c < m; ++c) {
      q2.add({c, i, i, -1}, even[c]);
      q3.add({c, i, i, i}, odd[c]);
    }
  }

  // Pairs: the even part gives K2{c,i,j}; the odd part leaves
  // R_c = 3 a^2 b K3{c,i,i,j} + 3 a b^2 K3{c,i,j,j}.
  std::vector<VectorXd> residual(static_cast<std::size_t>(m) * m);
  int p = 2 * m;
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j, p += 2) {
      const double a = scales[i], b = scales[j];
      const VectorXd& fp = f[p];
      const VectorXd& fm = f[p + 1];
      const VectorXd even = 0.5 * (fp + fm);
      for (int c = 0; c < m; ++c) {
        const double v = (even[c] - a * a * q2.mean({c, i, i, -1}) - b * b * q2.mean({c, j, j, -1})) / (2.0 * a * b);
        q2.add({c, i, j, -1}, v);
      }
      VectorXd r = 0.5 * (fp - fm) - a * k1.col(i) - b * k1.col(j);
      for (int c = 0; c < m; ++c) r[c] -= a * a * a * q3.mean({c, i, i, i}) + b * b * b * q3.mean({c, j, j, j});
      // Components along the pair itself: one unknown each once the
      // single-direction entries are known.
      q3.add({i, i, j, j}, (r[i] - 3.0 * a * a * b * q3.mean({i, i, i, j})) / (3.0 * a * b * b));
      q3.add({i, i, j, j}, (r[j] - 3.0 * a * b * b * q3.mean({i, j, j, j})) / (3.0 * a * a * b));
      residual[static_cast<std::size_t>(i) * m + j] = r;
    }

  // Entries with three distinct indices: one 3x3 system per index triple.
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int k = j + 1; k < m; ++k) {
        const double si = scales[i], sj = scales[j], sk = scales[k];
        const double r1 = residual[static_cast<std::size_t>(i) * m + j][k] / (3.0 * si * sj);
        const double r2 = residual[static_cast<std::size_t>(i) * m + k][j] / (3.0 * si * sk);
        const double r3 = residual[static_cast<std::size_t>(j) * m + k][i] / (3.0 * sj * sk);
        q3.add({i, i, j, k}, 0.5 * (r1 + r2 - r3) / si);
        q3.add({i, j, j, k}, 0.5 * (r1 - r2 + r3) / sj);
        q3.add({i, j, k, k}, 0.5 * (-r1 + r2 + r3) / sk);
      }

  // Triples: whatever the known entries do not explain is 6 s_i s_j s_k K3{x,i,j,k}.
  const SymmetricTensor k2_work = q2.partial();
  const SymmetricTensor k3_work = q3.partial();
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      for (int k = j + 1; k < m; ++k, ++p) {
        const VectorXd& eta = plan[p].eta;
        const VectorXd r = f[p] - k1 * eta - k2_work.contract_vector(eta) - k3_work.contract_vector(eta);
        const double denom = 6.0 * scales[i] * scales[j] * scales[k];
        for (int x = 0; x < m; ++x)
          if (x != i && x != j && x != k) q3.add({x, i, j, k}, r[x] / denom);
      }

  IdentifiedTensors out;
  out.m = m;
  out.method = Method::kEd;
  out.scales = scales;
  out.quadratic = q2.finish(&out.asymmetry_quadratic);
  out.cubic = q3.finish(&out.asymmetry_cubic);
  out.evaluations = static_cast<int>(plan.size());
  return out;
}

}  // namespace promforge::tensor_id
