#include "promforge/fe_kernel.hpp"

#include "promforge/errors.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace promforge::fe {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr std::array<int, 4> kW = {1, 2, 4, 5};
constexpr std::array<int, 2> kU = {0, 3};

Vec6 gather(const Assembly::ElementGeometry& el, const VectorXd& q) {
  Vec6 qe;
  for (int a = 0; a < 6; ++a) qe[a] = el.free[a] >= 0 ? q[el.free[a]] : 0.0;
  return qe;
}

void scatter(const Assembly::ElementGeometry& el, const Vec6& fe, VectorXd& f) {
  for (int a = 0; a < 6; ++a)
    if (el.free[a] >= 0) f[el.free[a]] += fe[a];
}

void scatter(const Assembly::ElementGeometry& el, const Mat6& ke, MatrixXd& k) {
  for (int a = 0; a < 6; ++a) {
    if (el.free[a] < 0) continue;
    for (int b = 0; b < 6; ++b)
      if (el.free[b] >= 0) k(el.free[a], el.free[b]) += ke(a, b);
  }
}

}  // namespace

double initial_shape(const GeometryParams& p, const BeamSpec& spec, double x) {
  const double L = spec.length;
  return p.rise * spec.thickness * std::sin(std::numbers::pi * x / L) *
         (1.0 + p.skew * (2.0 * x / L - 1.0));
}

double initial_slope(const GeometryParams& p, const BeamSpec& spec, double x) {
  const double L = spec.length;
  const double k = std::numbers::pi / L;
  return p.rise * spec.thickness *
         (k * std::cos(k * x) * (1.0 + p.skew * (2.0 * x / L - 1.0)) +
          std::sin(k * x) * 2.0 * p.skew / L);
}

const GaussRule& gauss5() {
  static const GaussRule rule = [] {
    const double a = 0.5384693101056831, b = 0.9061798459386640;
    const double wa = 0.4786286704993665, wb = 0.2369268850561891, w0 = 0.5688888888888889;
    const std::array<double, 5> s = {-b, -a, 0.0, a, b};
    const std::array<double, 5> w = {wb, wa, w0, wa, wb};
    GaussRule r{};
    for (int i = 0; i < 5; ++i) {
      r.xi[i] = 0.5 * (s[i] + 1.0);
      r.weight[i] = 0.5 * w[i];
    }
    return r;
  }();
  return rule;
}

ShapeRows shape_rows(double xi, double le) {
  ShapeRows r;
  const double x2 = xi * xi, x3 = x2 * xi;
  r.du << -1.0 / le, 1.0 / le;
  r.nw << 1.0 - 3.0 * x2 + 2.0 * x3, le * (xi - 2.0 * x2 + x3), 3.0 * x2 - 2.0 * x3, le * (-x2 + x3);
  r.dw << (-6.0 * xi + 6.0 * x2) / le, 1.0 - 4.0 * xi + 3.0 * x2, (6.0 * xi - 6.0 * x2) / le,
      -2.0 * xi + 3.0 * x2;
  r.d2w << (-6.0 + 12.0 * xi) / (le * le), (-4.0 + 6.0 * xi) / le, (6.0 - 12.0 * xi) / (le * le),
      (-2.0 + 6.0 * xi) / le;
  return r;
}

Assembly::Assembly(const GeometryParams& params, const BeamSpec& spec) : params_(params), spec_(spec) {
  require(spec.length > 0 && spec.width > 0 && spec.thickness > 0 && spec.youngs_modulus > 0 &&
              spec.density > 0,
          "beam material and section constants must be positive");
  require(spec.n_elements >= 4, "at least 4 elements are needed to host clamped ends");

  const int ne = spec.n_elements;
  const int nn = ne + 1;
  x_.resize(nn);
  z0_.resize(nn);
  slope_.resize(nn);
  for (int i = 0; i < nn; ++i) {
    x_[i] = spec.length * static_cast<double>(i) / ne;
    z0_[i] = initial_shape(params, spec, x_[i]);
    slope_[i] = initial_slope(params, spec, x_[i]);
  }

  free_map_.assign(3 * nn, -1);
  for (int node = 0; node < nn; ++node) {
    const bool end = node == 0 || node == nn - 1;
    for (int k = 0; k < 3; ++k) {
      if (end) continue;
      if (spec.clamp_axial && k == static_cast<int>(DofKind::kAxial)) continue;
      free_map_[3 * node + k] = n_free_++;
      kinds_.push_back(static_cast<DofKind>(k));
    }
  }

  connectivity_.reserve(ne);
  elements_.reserve(ne);
  for (int e = 0; e < ne; ++e) {
    connectivity_.push_back({e, e + 1});
    ElementGeometry g{};
    g.length = x_[e + 1] - x_[e];
    g.shape_dofs = {z0_[e], slope_[e], z0_[e + 1], slope_[e + 1]};
    for (int k = 0; k < 3; ++k) {
      g.free[k] = free_map_[3 * e + k];
      g.free[3 + k] = free_map_[3 * (e + 1) + k];
    }
    elements_.push_back(g);
  }
}

double Assembly::axial_rigidity() const { return spec_.youngs_modulus * spec_.width * spec_.thickness; }

double Assembly::bending_rigidity() const {
  const double t = spec_.thickness;
  return spec_.youngs_modulus * spec_.width * t * t * t / 12.0;
}

MatrixXd Assembly::unconstrained_mass_matrix() const {
  const int nd = 3 * n_nodes();
  MatrixXd m = MatrixXd::Zero(nd, nd);
  const double rho_a = spec_.density * spec_.width * spec_.thickness;
  const auto& rule = gauss5();
  for (std::size_t e = 0; e < elements_.size(); ++e) {
    const double le = elements_[e].length;
    Mat6 me = Mat6::Zero();
    for (int g = 0; g < 5; ++g) {
      const double xi = rule.xi[g];
      const ShapeRows s = shape_rows(xi, le);
      const double nu[2] = {1.0 - xi, xi};
      const double w = rule.weight[g] * le * rho_a;
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) me(kU[a], kU[b]) += w * nu[a] * nu[b];
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) me(kW[a], kW[b]) += w * s.nw[a] * s.nw[b];
    }
    const int base = 3 * static_cast<int>(e);
    m.block<6, 6>(base, base) += 0.5 * (me + me.transpose());
  }
  return m;
}

MatrixXd Assembly::mass_matrix() const {
  const MatrixXd full = unconstrained_mass_matrix();
  std::vector<int> keep;
  for (int i = 0; i < static_cast<int>(free_map_.size()); ++i)
    if (free_map_[i] >= 0) keep.push_back(i);
  MatrixXd m(n_free_, n_free_);
  for (int a = 0; a < n_free_; ++a)
    for (int b = 0; b < n_free_; ++b) m(a, b) = full(keep[a], keep[b]);
  return m;
}

VectorXd Assembly::internal_force(const VectorXd& q) const {
  require(q.size() == n_free_, "state vector length does not match the assembly");
  VectorXd f = VectorXd::Zero(n_free_);
  const double ea = axial_rigidity(), ei = bending_rigidity();
  const auto& rule = gauss5();
  for (const auto& el : elements_) {
    const Vec6 qe = gather(el, q);
    const Eigen::Vector4d qw(qe[1], qe[2], qe[4], qe[5]);
    const Eigen::Vector4d z(el.shape_dofs.data());
    Vec6 fe = Vec6::Zero();
    for (int g = 0; g < 5; ++g) {
      const ShapeRows s = shape_rows(rule.xi[g], el.length);
      const double du = s.du[0] * qe[0] + s.du[1] * qe[3];
      const double dw = s.dw.dot(qw);
      const double z0p = s.dw.dot(z);
      const double strain = du + z0p * dw + 0.5 * dw * dw;
      const double curvature = s.d2w.dot(qw);
      const double w = rule.weight[g] * el.length;
      const double n = ea * strain, mom = ei * curvature;
      fe[0] += w * n * s.du[0];
      fe[3] += w * n * s.du[1];
      for (int a = 0; a < 4; ++a) fe[kW[a]] += w * (n * (z0p + dw) * s.dw[a] + mom * s.d2w[a]);
    }
    scatter(el, fe, f);
  }
  return f;
}

MatrixXd Assembly::tangent_stiffness(const VectorXd& q) const {
  require(q.size() == n_free_, "state vector length does not match the assembly");
  MatrixXd k = MatrixXd::Zero(n_free_, n_free_);
  const double ea = axial_rigidity(), ei = bending_rigidity();
  const auto& rule = gauss5();
  for (const auto& el : elements_) {
    const Vec6 qe = gather(el, q);
    const Eigen::Vector4d qw(qe[1], qe[2], qe[4], qe[5]);
    const Eigen::Vector4d z(el.shape_dofs.data());
    Mat6 ke = Mat6::Zero();
    for (int g = 0; g < 5; ++g) {
      const ShapeRows s = shape_rows(rule.xi[g], el.length);
      const double du = s.du[0] * qe[0] + s.du[1] * qe[3];
      const double dw = s.dw.dot(qw);
      const double z0p = s.dw.dot(z);
      const double strain = du + z0p * dw + 0.5 * dw * dw;
      Vec6 b = Vec6::Zero(), gw = Vec6::Zero(), bk = Vec6::Zero();
      b[0] = s.du[0];
      b[3] = s.du[1];
      for (int a = 0; a < 4; ++a) {
        b[kW[a]] = (z0p + dw) * s.dw[a];
        gw[kW[a]] = s.dw[a];
        bk[kW[a]] = s.d2w[a];
      }
      const double w = rule.weight[g] * el.length;
      ke.noalias() += (w * ea) * b * b.transpose() + (w * ea * strain) * gw * gw.transpose() +
                      (w * ei) * bk * bk.transpose();
    }
    const Mat6 sym = 0.5 * (ke + ke.transpose());
    scatter(el, sym, k);
  }
  return k;
}

MatrixXd Assembly::linear_stiffness() const { return tangent_stiffness(VectorXd::Zero(n_free_)); }

VectorXd Assembly::uniform_pressure_load(double pressure) const {
  VectorXd f = VectorXd::Zero(n_free_);
  const double line_load = pressure * spec_.width;
  const auto& rule = gauss5();
  for (const auto& el : elements_) {
    Vec6 fe = Vec6::Zero();
    for (int g = 0; g < 5; ++g) {
      const ShapeRows s = shape_rows(rule.xi[g], el.length);
      for (int a = 0; a < 4; ++a) fe[kW[a]] += rule.weight[g] * el.length * line_load * s.nw[a];
    }
    scatter(el, fe, f);
  }
  return f;
}

int Assembly::midspan_transverse_dof() const {
  require(spec_.n_elements % 2 == 0, "midspan node requires an even element count");
  return free_index(spec_.n_elements / 2, DofKind::kTransverse);
}

VectorXd Assembly::transverse_mask() const {
  VectorXd m = VectorXd::Zero(n_free_);
  for (int i = 0; i < n_free_; ++i)
    if (kinds_[i] == DofKind::kTransverse) m[i] = 1.0;
  return m;
}

double LoadDescriptor::time_factor(double t) const {
  if (t < 0.0 || t >= duration) return 0.0;
  return amplitude * std::sin(std::numbers::pi * t / duration);
}

VectorXd LoadDescriptor::at(double t) const { return pattern * time_factor(t); }

namespace {

// One Newton solve at fixed load; returns false on divergence.
bool newton(const StructuralModel& model, const VectorXd& load, VectorXd& q, const NewtonOptions& opts) {
  const double tol = opts.tol_abs + opts.tol_rel * load.norm();
  VectorXd r = model.internal_force(q) - load;
  double r0 = r.norm();
  for (int it = 0; it <= opts.max_iterations; ++it) {
    const double rn = r.norm();
    if (!std::isfinite(rn)) return false;
    if (rn <= tol) return true;
    if (it == opts.max_iterations || rn > 1e8 * std::max(r0, tol)) return false;
    const Eigen::LDLT<MatrixXd> solver(model.tangent_stiffness(q));
    if (solver.info() != Eigen::Success) return false;
    q -= solver.solve(r);
    r = model.internal_force(q) - load;
  }
  return false;
}

}  // namespace

VectorXd static_solve(const StructuralModel& model, const VectorXd& load, const VectorXd& q0,
                      const NewtonOptions& opts) {
  require(load.size() == model.dofs() && q0.size() == model.dofs(), "static_solve: dimension mismatch");
  require(load.allFinite(), "static_solve: load must be finite");
  VectorXd q = q0;
  double done = 0.0, step = 1.0;
  int bisections = 0;
  // The first stage starts from q0 at its own equilibrium load.
  const VectorXd base = model.internal_force(q0);
  while (done < 1.0) {
    const double target = std::min(1.0, done + step);
    VectorXd trial = q;
    const VectorXd stage = base + target * (load - base);
    if (newton(model, stage, trial, opts)) {
      q = trial;
      done = target;
    } else {
      if (++bisections > opts.max_bisections) {
        std::ostringstream msg;
        msg << "static_solve: no convergence after " << opts.max_bisections
            << " load-step bisections (reached load fraction " << done << ")";
        throw Error(ErrorCode::kNonConvergence, msg.str());
      }
      step *= 0.5;
    }
  }
  return q;
}

}  // namespace promforge::fe
