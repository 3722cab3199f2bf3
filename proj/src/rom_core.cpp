#include "promforge/rom_core.hpp"

#include "promforge/errors.hpp"

#include <cmath>
#include <sstream>

namespace promforge::rom {

void RomOperators::validate() const {
  const int mm = m();
  require(mm >= 1, "RomOperators: empty reduced model");
  require(V.cols() == mm, "RomOperators: basis column count differs from k1 length");
  require(k2.dim() == mm && k2.order() == 3, "RomOperators: quadratic tensor has the wrong shape");
  require(k3.dim() == mm && k3.order() == 4, "RomOperators: cubic tensor has the wrong shape");
}

VectorXd reduced_force(const RomOperators& ops, const VectorXd& eta) {
  require(eta.size() == ops.m(), "reduced_force: coordinate length mismatch");
  return ops.k1.cwiseProduct(eta) + ops.k2.contract_vector(eta) + ops.k3.contract_vector(eta);
}

MatrixXd reduced_tangent(const RomOperators& ops, const VectorXd& eta) {
  require(eta.size() == ops.m(), "reduced_tangent: coordinate length mismatch");
  MatrixXd j = 2.0 * ops.k2.contract_matrix(eta) + 3.0 * ops.k3.contract_matrix(eta);
  j.diagonal() += ops.k1;
  return j;
}

std::pair<double, double> rayleigh_params(double omega1, double omega2, double zeta) {
  require(omega1 > 0.0 && omega2 > 0.0, "rayleigh_params: frequencies must be positive");
  require(omega1 != omega2, "rayleigh_params: coincident frequencies");
  const double s = omega1 + omega2;
  return {2.0 * zeta * omega1 * omega2 / s, 2.0 * zeta / s};
}

double modal_damping_ratio(double alpha, double beta, double omega) { return 0.5 * (alpha / omega + beta * omega); }

VectorXd assemble_damping(const RomOperators& ops) {
  return (ops.alpha + ops.beta * ops.k1.array()).matrix();
}

RomOperators linearize(const RomOperators& ops) {
  RomOperators out = ops;
  out.k2.values().setZero();
  out.k3.values().setZero();
  return out;
}

MatrixXd reconstruct(const MatrixXd& V, const MatrixXd& eta_history) {
  require(V.cols() == eta_history.rows(), "reconstruct: basis and history dimensions differ");
  return V * eta_history;
}

FullOrderModel::FullOrderModel(const fe::StructuralModel& model, double alpha, double beta, fe::LoadDescriptor load)
    : model_(model), load_(std::move(load)) {
  require(load_.pattern.size() == model.dofs(), "FullOrderModel: load pattern length mismatch");
  m_ = model.mass_matrix();
  c_ = alpha * m_ + beta * model.linear_stiffness();
}

ReducedModel::ReducedModel(RomOperators ops, const fe::LoadDescriptor& full_load) : ops_(std::move(ops)) {
  ops_.validate();
  require(full_load.pattern.size() == ops_.n(), "ReducedModel: load pattern length mismatch");
  m_ = MatrixXd::Identity(ops_.m(), ops_.m());
  c_ = assemble_damping(ops_).asDiagonal();
  load_ = full_load;
  load_.pattern = ops_.V.transpose() * full_load.pattern;
}

TimeHistory newmark_integrate(const DynamicModel& model, double t_end, double dt, const NewmarkOptions& opts) {
  require(dt > 0.0, "newmark_integrate: time step must be positive");
  require(t_end >= 0.0, "newmark_integrate: end time must be non-negative");
  require(opts.beta > 0.0 && opts.gamma > 0.0, "newmark_integrate: Newmark parameters must be positive");
  const int n = model.dofs();
  const int steps = static_cast<int>(std::floor(t_end / dt + 1e-9)) + 1;
  const MatrixXd& M = model.mass();
  const MatrixXd& C = model.damping();
  const bool monitoring = opts.monitor.size() > 0;
  if (monitoring) require(opts.monitor.cols() == n, "newmark_integrate: monitor map has the wrong width");

  VectorXd q = opts.q0.size() ? opts.q0 : VectorXd::Zero(n);
  VectorXd v = opts.v0.size() ? opts.v0 : VectorXd::Zero(n);
  require(q.size() == n && v.size() == n, "newmark_integrate: initial condition length mismatch");
  const Eigen::LDLT<MatrixXd> mass_solver(M);
  VectorXd a = mass_solver.solve(model.load(0.0) - C * v - model.force(q));

  TimeHistory h;
  h.t.resize(steps);
  if (opts.store_states) {
    h.q.resize(n, steps);
    h.v.resize(n, steps);
    h.a.resize(n, steps);
  }
  if (monitoring) h.monitored.resize(steps, opts.monitor.rows());
  auto record = [&](int k) {
    h.t[k] = k * dt;
    if (opts.store_states) {
      h.q.col(k) = q;
      h.v.col(k) = v;
      h.a.col(k) = a;
    }
    if (monitoring) h.monitored.row(k) = (opts.monitor * q).transpose();
  };
  record(0);

  const double bdt2 = opts.beta * dt * dt;
  const MatrixXd lin = M / bdt2 + (opts.gamma / (opts.beta * dt)) * C;
  for (int k = 1; k < steps; ++k) {
    const double t = k * dt;
    const VectorXd f_ext = model.load(t);
    const VectorXd q_star = q + dt * v + (0.5 - opts.beta) * dt * dt * a;
    const VectorXd v_star = v + (1.0 - opts.gamma) * dt * a;
    VectorXd qn = q + dt * v + 0.5 * dt * dt * a;
    VectorXd an, vn;
    bool converged = false;
    double rn = 0.0;
    for (int it = 0; it <= opts.max_iterations; ++it) {
      an = (qn - q_star) / bdt2;
      vn = v_star + opts.gamma * dt * an;
      const VectorXd fi = model.force(qn);
      const VectorXd inertia = M * an, damp = C * vn;
      const VectorXd r = inertia + damp + fi - f_ext;
      rn = r.norm();
      const double scale = std::max({f_ext.norm(), fi.norm(), inertia.norm(), damp.norm()});
      if (!std::isfinite(rn)) break;
      if (rn <= opts.tol_rel * scale || rn == 0.0) {
        converged = true;
        break;
      }
      if (it == opts.max_iterations) break;
      const Eigen::LDLT<MatrixXd> solver(lin + model.tangent(qn));
      qn -= solver.solve(r);
      ++h.newton_iterations;
    }
    if (!converged) {
      std::ostringstream msg;
      msg << "newmark_integrate: Newton failed at step " << k << " (t = " << t << "), residual " << rn;
      throw Error(ErrorCode::kNonConvergence, msg.str());
    }
    q = qn;
    v = vn;
    a = an;
    record(k);
  }
  return h;
}

double dominant_period(const VectorXd& t, const VectorXd& signal, double t_start) {
  require(t.size() == signal.size(), "dominant_period: length mismatch");
  int first = 0;
  while (first < t.size() && t[first] < t_start) ++first;
  if (t.size() - first < 3) return 0.0;
  const double mean = signal.tail(t.size() - first).mean();
  std::vector<double> crossings;
  for (Eigen::Index k = first + 1; k < t.size(); ++k) {
    const double y0 = signal[k - 1] - mean, y1 = signal[k] - mean;
    if (y0 < 0.0 && y1 >= 0.0) crossings.push_back(t[k - 1] + (t[k] - t[k - 1]) * (-y0) / (y1 - y0));
  }
  if (crossings.size() < 2) return 0.0;
  return (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
}

double relative_l2(const VectorXd& a, const VectorXd& b) {
  require(a.size() == b.size(), "relative_l2: length mismatch");
  const double nb = b.norm();
  require(nb > 0.0, "relative_l2: reference history is zero");
  return (a - b).norm() / nb;
}

VectorXd resample(const VectorXd& t, const VectorXd& y, const VectorXd& t_new) {
  require(t.size() == y.size() && t.size() >= 1, "resample: bad input history");
  VectorXd out(t_new.size());
  Eigen::Index j = 0;
  for (Eigen::Index k = 0; k < t_new.size(); ++k) {
    const double x = t_new[k];
    if (x <= t[0]) {
      out[k] = y[0];
      continue;
    }
    if (x >= t[t.size() - 1]) {
      out[k] = y[y.size() - 1];
      continue;
    }
    while (j + 1 < t.size() && t[j + 1] < x) ++j;
    const double w = (x - t[j]) / (t[j + 1] - t[j]);
    out[k] = (1.0 - w) * y[j] + w * y[j + 1];
  }
  return out;
}

}  // namespace promforge::rom
