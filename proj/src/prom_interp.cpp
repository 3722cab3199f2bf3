#include "promforge/prom_interp.hpp"

#include "promforge/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace promforge::interp {

const char* kernel_name(KernelKind k) {
  return k == KernelKind::kGaussian ? "gaussian" : "imq";
}

KernelKind kernel_from_name(const std::string& s) {
  if (s == "imq" || s == "inverse_multiquadric") return KernelKind::kInverseMultiquadric;
  if (s == "gaussian") return KernelKind::kGaussian;
  throw Error(ErrorCode::kConfig, "unknown RBF kernel '" + s + "' (expected imq or gaussian)");
}

double kernel_eval(const RbfKernel& k, double delta) {
  const double r2 = k.eps * k.eps * delta * delta;
  return k.kind == KernelKind::kGaussian ? std::exp(-r2) : 1.0 / std::sqrt(1.0 + r2);
}

double kernel_slope_over_delta(const RbfKernel& k, double delta) {
  const double e2 = k.eps * k.eps;
  const double r2 = e2 * delta * delta;
  if (k.kind == KernelKind::kGaussian) return -2.0 * e2 * std::exp(-r2);
  return -e2 * std::pow(1.0 + r2, -1.5);
}

MatrixXd kernel_matrix(const std::vector<Point>& centers, const RbfKernel& k) {
  const int n = static_cast<int>(centers.size());
  MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    g(i, i) = 1.0;
    for (int j = 0; j < i; ++j) g(i, j) = g(j, i) = kernel_eval(k, (centers[i] - centers[j]).norm());
  }
  return g;
}

namespace {

VectorXd gamma_vector(const std::vector<Point>& centers, const RbfKernel& k, const Point& p) {
  VectorXd g(centers.size());
  for (std::size_t i = 0; i < centers.size(); ++i) g[i] = kernel_eval(k, (p - centers[i]).norm());
  return g;
}

void check_centers(const std::vector<Point>& centers, const RbfKernel& k) {
  require(!centers.empty(), "RBF fit: no centers");
  require(k.eps > 0.0 && std::isfinite(k.eps), "RBF fit: shape parameter must be positive");
  for (const auto& c : centers) require(c.size() == centers[0].size(), "RBF fit: centers differ in dimension");
}

struct Factor {
  Eigen::LDLT<MatrixXd> ldlt;
  FitDiagnostics diag;
};

Factor factorize(const std::vector<Point>& centers, const RbfKernel& k) {
  check_centers(centers, k);
  Factor f;
  f.ldlt.compute(kernel_matrix(centers, k));
  require(f.ldlt.info() == Eigen::Success, "RBF fit: kernel matrix factorization failed", ErrorCode::kNumeric);
  f.diag.rcond = f.ldlt.rcond();
  const double tiny = std::numeric_limits<double>::epsilon() * static_cast<double>(centers.size());
  if (!(f.diag.rcond > tiny)) {
    std::ostringstream msg;
    msg << "RBF fit: kernel matrix is singular for eps = " << k.eps << " (rcond " << f.diag.rcond
        << "); check for duplicate centers";
    throw Error(ErrorCode::kNumeric, msg.str());
  }
  if (f.diag.rcond < kMinRcond) {
    f.diag.ill_conditioned = true;
    std::ostringstream msg;
    msg << "kernel matrix condition estimate " << 1.0 / f.diag.rcond << " exceeds 1e12 at eps = " << k.eps;
    f.diag.warning = msg.str();
  }
  return f;
}

RbfInterpolant solve_with(const Factor& f, const MatrixXd& G, const std::vector<Point>& centers, const RbfKernel& k) {
  require(G.cols() == static_cast<Eigen::Index>(centers.size()), "RBF fit: one data column per center is required");
  RbfInterpolant out;
  out.centers = centers;
  out.kernel = k;
  out.W = f.ldlt.solve(G.transpose()).transpose();
  return out;
}

}  // namespace

VectorXd RbfInterpolant::evaluate(const Point& p) const {
  require(!centers.empty() && p.size() == centers[0].size(), "RbfInterpolant: point dimension mismatch");
  return W * gamma_vector(centers, kernel, p);
}

MatrixXd RbfInterpolant::gradient(const Point& p) const {
  require(!centers.empty() && p.size() == centers[0].size(), "RbfInterpolant: point dimension mismatch");
  // d gamma_i / d p = gamma'(delta) / delta (p - c_i)
  MatrixXd dg(centers.size(), p.size());
  for (std::size_t i = 0; i < centers.size(); ++i) {
    const VectorXd d = p - centers[i];
    dg.row(i) = kernel_slope_over_delta(kernel, d.norm()) * d.transpose();
  }
  return W * dg;
}

RbfInterpolant fit_weights(const MatrixXd& G, const std::vector<Point>& centers, const RbfKernel& k,
                           FitDiagnostics* diag) {
  const Factor f = factorize(centers, k);
  if (diag) *diag = f.diag;
  return solve_with(f, G, centers, k);
}

const char* operator_name(Operator op) {
  switch (op) {
    case Operator::kK1: return "K1";
    case Operator::kK2: return "K2";
    case Operator::kK3: return "K3";
    case Operator::kV: return "V";
    case Operator::kAlpha: return "alpha";
    case Operator::kBeta: return "beta";
  }
  return "?";
}

std::array<Operator, kOperatorCount> all_operators() {
  return {Operator::kK1, Operator::kK2, Operator::kK3, Operator::kV, Operator::kAlpha, Operator::kBeta};
}

VectorXd operator_values(const rom::RomOperators& ops, Operator op) {
  switch (op) {
    case Operator::kK1: return ops.k1;
    case Operator::kK2: return ops.k2.values();
    case Operator::kK3: return ops.k3.values();
    case Operator::kV: return Eigen::Map<const VectorXd>(ops.V.data(), ops.V.size());
    case Operator::kAlpha: return VectorXd::Constant(1, ops.alpha);
    case Operator::kBeta: return VectorXd::Constant(1, ops.beta);
  }
  return {};
}

MatrixXd operator_samples(const std::vector<rom::RomOperators>& roms, Operator op) {
  require(!roms.empty(), "operator_samples: no ROMs");
  const VectorXd first = operator_values(roms[0], op);
  MatrixXd G(first.size(), roms.size());
  G.col(0) = first;
  for (std::size_t s = 1; s < roms.size(); ++s) {
    const VectorXd v = operator_values(roms[s], op);
    require(v.size() == first.size(), std::string("operator_samples: ROMs differ in size for ") + operator_name(op));
    G.col(s) = v;
  }
  return G;
}

PromModel fit_prom(const std::vector<rom::RomOperators>& roms, const std::vector<Point>& centers, KernelKind kind,
                   const std::array<double, kOperatorCount>& eps, std::vector<FitDiagnostics>* diags) {
  require(roms.size() == centers.size(), "fit_prom: one center per ROM is required");
  require(!roms.empty(), "fit_prom: no training ROMs");
  PromModel model;
  model.n = roms[0].n();
  model.m = roms[0].m();
  bool all_damped = true;
  for (const auto& r : roms) {
    r.validate();
    require(r.n() == model.n && r.m() == model.m, "fit_prom: training ROMs differ in dimension");
    all_damped = all_damped && r.alpha > 0.0 && r.beta > 0.0;
  }
  model.damping_expected = all_damped;
  if (diags) diags->clear();
  for (Operator op : all_operators()) {
    const int i = static_cast<int>(op);
    FitDiagnostics d;
    model.interpolants[i] = fit_weights(operator_samples(roms, op), centers, {kind, eps[i]}, &d);
    model.interpolants[i].op = operator_name(op);
    if (diags) diags->push_back(d);
  }
  return model;
}

rom::RomOperators evaluate(const PromModel& model, const Point& p_hat, const EvalOptions& opts) {
  require(!model.centers().empty(), "evaluate: empty PROM");
  require(p_hat.size() == model.centers()[0].size(), "evaluate: parameter dimension mismatch");
  auto warn = [&](const std::string& w) {
    if (opts.warnings) opts.warnings->push_back(w);
  };
  if ((p_hat.array() < 0.0).any() || (p_hat.array() > 1.0).any()) {
    std::ostringstream msg;
    msg << "evaluation point (" << p_hat.transpose() << ") lies outside the training box; extrapolating";
    warn(msg.str());
  }

  const int m = model.m;
  rom::RomOperators out;
  out.p_hat = p_hat;
  out.k1 = model.at(Operator::kK1).evaluate(p_hat);
  out.k2 = SymmetricTensor(3, m);
  out.k2.values() = model.at(Operator::kK2).evaluate(p_hat);
  out.k3 = SymmetricTensor(4, m);
  out.k3.values() = model.at(Operator::kK3).evaluate(p_hat);
  const VectorXd v = model.at(Operator::kV).evaluate(p_hat);
  out.V = Eigen::Map<const MatrixXd>(v.data(), model.n, m);
  out.alpha = model.at(Operator::kAlpha).evaluate(p_hat)[0];
  out.beta = model.at(Operator::kBeta).evaluate(p_hat)[0];

  std::ostringstream bad;
  for (int i = 0; i < m; ++i)
    if (!(out.k1[i] > 0.0)) bad << " k1[" << i << "] = " << out.k1[i] << ";";
  if (model.damping_expected) {
    if (!(out.alpha > 0.0)) bad << " alpha = " << out.alpha << ";";
    if (!(out.beta > 0.0)) bad << " beta = " << out.beta << ";";
  }
  if (!bad.str().empty()) {
    std::ostringstream msg;
    msg << "interpolated ROM at (" << p_hat.transpose() << ") violates structure:" << bad.str();
    if (!opts.warn_on_structure_violation) throw Error(ErrorCode::kStructureViolation, msg.str());
    warn(msg.str());
  }
  return out;
}

std::array<MatrixXd, kOperatorCount> gradient(const PromModel& model, const Point& p_hat) {
  std::array<MatrixXd, kOperatorCount> out;
  for (int i = 0; i < kOperatorCount; ++i) out[i] = model.interpolants[i].gradient(p_hat);
  return out;
}

VectorXd default_eps_grid() {
  constexpr int n = 50;
  VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = std::pow(10.0, -2.0 + 3.0 * i / (n - 1));
  return g;
}

double validation_error(const MatrixXd& G_val, const MatrixXd& G_pred, ErrorMeasure measure) {
  require(G_val.rows() == G_pred.rows() && G_val.cols() == G_pred.cols(), "validation_error: shape mismatch");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < G_val.cols(); ++i) {
    const double ref = G_val.col(i).norm();
    const double diff = (G_val.col(i) - G_pred.col(i)).norm();
    // an operator that vanishes identically is reproduced exactly by W = 0
    const double r = ref > 0.0 ? diff / ref : (diff > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    sum += measure == ErrorMeasure::kSquared ? r * r : r;
  }
  return std::sqrt(sum);
}

ValidationReport validate_eps(const std::vector<rom::RomOperators>& train, const std::vector<Point>& train_centers,
                              const std::vector<rom::RomOperators>& validation,
                              const std::vector<Point>& validation_centers, KernelKind kind, const VectorXd& grid,
                              ErrorMeasure measure, double min_rcond) {
  require(train.size() == train_centers.size(), "validate_eps: one training center per ROM is required");
  require(validation.size() == validation_centers.size(), "validate_eps: one validation center per ROM is required");
  require(!validation.empty(), "validate_eps: empty validation set");
  require(grid.size() >= 1, "validate_eps: empty shape-parameter grid");

  ValidationReport rep;
  rep.eps_grid = grid;
  rep.kind = kind;
  rep.measure = measure;
  rep.rcond.resize(grid.size());
  std::array<MatrixXd, kOperatorCount> G_train, G_val;
  for (Operator op : all_operators()) {
    const int i = static_cast<int>(op);
    G_train[i] = operator_samples(train, op);
    G_val[i] = operator_samples(validation, op);
    require(G_train[i].rows() == G_val[i].rows(),
            std::string("validate_eps: training and validation ROMs differ in size for ") + operator_name(op));
    rep.e_rel[i].resize(grid.size());
  }

  for (Eigen::Index g = 0; g < grid.size(); ++g) {
    const RbfKernel k{kind, grid[g]};
    Factor f;
    try {
      f = factorize(train_centers, k);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNumeric) throw;
      // numerically singular at this eps: skipped by the selection
      rep.rcond[g] = 0.0;
      for (int i = 0; i < kOperatorCount; ++i) rep.e_rel[i][g] = std::numeric_limits<double>::infinity();
      continue;
    }
    rep.rcond[g] = f.diag.rcond;
    MatrixXd gamma_val(train_centers.size(), validation_centers.size());
    for (std::size_t v = 0; v < validation_centers.size(); ++v)
      gamma_val.col(v) = gamma_vector(train_centers, k, validation_centers[v]);
    for (int i = 0; i < kOperatorCount; ++i) {
      const RbfInterpolant s = solve_with(f, G_train[i], train_centers, k);
      rep.e_rel[i][g] = validation_error(G_val[i], s.W * gamma_val, measure);
    }
  }

  for (int i = 0; i < kOperatorCount; ++i) {
    int best = -1;
    for (int pass = 0; pass < 2 && best < 0; ++pass) {
      for (Eigen::Index g = 0; g < grid.size(); ++g) {
        if (pass == 0 && rep.rcond[g] < min_rcond) continue;
        if (!std::isfinite(rep.e_rel[i][g])) continue;
        if (best < 0 || rep.e_rel[i][g] < rep.e_rel[i][best]) best = static_cast<int>(g);
      }
    }
    require(best >= 0, std::string("validate_eps: no usable shape parameter for ") + operator_name(Operator(i)),
            ErrorCode::kNumeric);
    rep.selected_index[i] = best;
    rep.selected[i] = grid[best];
  }
  return rep;
}

}  // namespace promforge::interp
