#include "promforge/pipeline.hpp"

#include "promforge/errors.hpp"
#include "promforge/modal_basis.hpp"
#include "promforge/parallel.hpp"
#include "promforge/tensor_id.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

namespace promforge::pipeline {

using nlohmann::json;

namespace {

void note(const Progress& p, const std::string& msg) {
  if (p) p(msg);
}

std::string point_text(const Point& p) {
  std::ostringstream s;
  s << "(";
  for (Eigen::Index i = 0; i < p.size(); ++i) s << (i ? ", " : "") << p[i];
  s << ")";
  return s.str();
}

// Re-raises a stage failure with the sample it belongs to.
template <class Fn>
void with_sample(const char* role, int index, const Point& p, Fn&& fn) {
  try {
    fn();
  } catch (const global::DuplicateAssignment&) {
    throw;
  } catch (const Error& e) {
    std::ostringstream msg;
    msg << role << " sample " << index << " at p = " << point_text(p) << ": " << e.what();
    throw Error(e.code(), msg.str());
  }
}

// FE operators and the reduced-basis ingredients of one parameter point.
struct PointModel {
  std::unique_ptr<fe::Assembly> assembly;
  MatrixXd M, K1;
};

PointModel make_point_model(const config::RunConfig& cfg, const Point& p) {
  PointModel pm;
  pm.assembly = std::make_unique<fe::Assembly>(cfg.geometry(p), cfg.fe);
  pm.M = pm.assembly->mass_matrix();
  pm.K1 = pm.assembly->linear_stiffness();
  return pm;
}

struct SampleBasis {
  modal::ModeSet modes;
  modal::CompanionSet companions;
  VectorXd omega_fe;
};

SampleBasis sample_basis(const config::RunConfig& cfg, const PointModel& pm) {
  SampleBasis sb;
  const modal::ModeSet all = modal::solve_vms(pm.M, pm.K1, cfg.basis.n_candidate_modes);
  sb.omega_fe = all.omega;
  const VectorXd pattern = config::load_pattern(cfg, *pm.assembly);
  modal::ModeSet sel = modal::select_vms(all, modal::mpf(all, pattern), cfg.basis.f_max_hz, cfg.basis.mpf_tol);
  if (sel.size() > cfg.basis.max_vms) {
    const int k = cfg.basis.max_vms;
    sel.phi = sel.phi.leftCols(k).eval();
    sel.omega = sel.omega.head(k).eval();
    sel.mode_numbers.resize(k);
  }
  sb.modes = sel;
  if (cfg.basis.companion == modal::CompanionKind::kSmd) {
    const auto pairs = modal::select_smds(sel, modal::mpf(sel, pattern), cfg.basis.k_pairs);
    sb.companions = modal::compute_smds(*pm.assembly, sel, pairs, cfg.basis.smd_step);
  } else {
    modal::DualModeOptions o;
    o.include_pairs = cfg.basis.dual_mode_pairs;
    sb.companions = modal::compute_dual_modes(*pm.assembly, sel, cfg.basis.dual_mode_target, o);
  }
  return sb;
}

// Tensors, damping and audit numbers for an aligned mass-orthonormal basis.
void finish_record(const config::RunConfig& cfg, const PointModel& pm, const global::LocalBasis& lb,
                   const Point& p_hat, SampleRecord& rec) {
  const fe::Assembly& a = *pm.assembly;
  const VectorXd scales = tensor_id::plan_scales(lb.V, a, cfg.identification.probe_target);
  const tensor_id::IdentifiedTensors ids = cfg.identification.method == tensor_id::Method::kEed
                                               ? tensor_id::identify_eed(a, lb.V, scales)
                                               : tensor_id::identify_ed(a, lb.V, scales);
  rec.rom.V = lb.V;
  rec.rom.k1 = lb.omega.array().square().matrix();
  rec.rom.k2 = ids.quadratic;
  rec.rom.k3 = ids.cubic;
  rec.rom.p_hat = p_hat;
  if (cfg.zeta > 0.0) {
    require(rec.omega_fe.size() >= 2, "damping needs two FE frequencies (n_candidate_modes >= 2)",
            ErrorCode::kConfig);
    std::tie(rec.rom.alpha, rec.rom.beta) = rom::rayleigh_params(rec.omega_fe[0], rec.omega_fe[1], cfg.zeta);
  }
  rec.reference = lb.reference;
  rec.permutation = lb.permutation;
  rec.signs = lb.signs;
  rec.matched_mac = lb.matched_mac;
  rec.evaluations = ids.evaluations;
  rec.asymmetry = ids.asymmetry();

  const int m = static_cast<int>(lb.V.cols());
  const MatrixXd mr = lb.V.transpose() * pm.M * lb.V;
  const MatrixXd kr = lb.V.transpose() * pm.K1 * lb.V;
  rec.mass_offdiag = (mr - MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff();
  MatrixXd off = kr;
  off.diagonal().setZero();
  rec.stiffness_leakage = off.norm() / kr.diagonal().norm();
}

std::string pad(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%03d", i);
  return buf;
}

MatrixXd points_matrix(const std::vector<Point>& pts) {
  if (pts.empty()) return MatrixXd(0, 0);
  MatrixXd m(pts.size(), pts[0].size());
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(i) = pts[i].transpose();
  return m;
}

std::vector<Point> matrix_points(const MatrixXd& m) {
  std::vector<Point> out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).transpose());
  return out;
}

sampling::SampleRole role_from_name(const std::string& s) {
  if (s == sampling::role_name(sampling::SampleRole::kTrain)) return sampling::SampleRole::kTrain;
  if (s == sampling::role_name(sampling::SampleRole::kValidation)) return sampling::SampleRole::kValidation;
  if (s == sampling::role_name(sampling::SampleRole::kTest)) return sampling::SampleRole::kTest;
  throw Error(ErrorCode::kCorruptFile, "unknown sample role '" + s + "'");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::vector<rom::RomOperators> RomDatabase::roms() const {
  std::vector<rom::RomOperators> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.rom);
  return out;
}

void RomDatabase::check() const {
  auto bad = [](const std::string& m) { throw Error(ErrorCode::kCorruptFile, "database: " + m); };
  if (samples.size() != size()) bad("sample count differs from ROM count");
  if (static_cast<int>(physical.size()) != size()) bad("physical point count differs from ROM count");
  for (const auto& r : records) {
    if (r.rom.n() != n() || r.rom.m() != m()) bad("ROM dimensions differ from the global basis");
    if (r.rom.k2.dim() != m() || r.rom.k3.dim() != m()) bad("tensor dimensions differ from the global basis");
  }
  if (prom && (prom->model.m != m() || prom->model.n != n())) bad("PROM dimensions differ from the database");
}

RomDatabase build_database(const config::RunConfig& cfg, const Progress& progress) {
  cfg.validate();
  const int workers = cfg.resolved_workers();
  RomDatabase db;
  db.role = sampling::SampleRole::kTrain;
  db.config = config::to_json(cfg);
  db.samples = sampling::lhs_sample(cfg.sampling.n_train, cfg.bounds.dims(), cfg.sampling.seed_train,
                                    sampling::SampleRole::kTrain, cfg.sampling.lhs_candidates);
  const int N = db.samples.size();
  for (const auto& p : db.samples.points) db.physical.push_back(sampling::denormalize(p, cfg.bounds));

  note(progress, "vibration modes and companions for " + std::to_string(N) + " training samples");
  std::vector<PointModel> models(N);
  std::vector<SampleBasis> bases(N);
  parallel_for(N, workers, [&](int i) {
    with_sample("training", i, db.physical[i], [&] {
      models[i] = make_point_model(cfg, db.physical[i]);
      bases[i] = sample_basis(cfg, models[i]);
    });
  });

  std::vector<modal::ModeSet> modes;
  std::vector<modal::CompanionSet> companions;
  for (const auto& b : bases) {
    modes.push_back(b.modes);
    companions.push_back(b.companions);
  }
  const auto snaps = global::assemble_snapshots(modes, companions);
  const auto gb = global::build_global_rb(snaps, cfg.basis.e_phi, cfg.basis.e_theta);
  db.global_v = gb.V;
  db.m_phi = gb.m_phi;
  db.m_theta = gb.m_theta;
  db.sigma_phi = gb.pod_phi.sigma;
  db.energy_phi = gb.pod_phi.energy;
  db.sigma_theta = gb.pod_theta.sigma;
  db.energy_theta = gb.pod_theta.energy;
  note(progress, "global basis: " + std::to_string(gb.m_phi) + " mode + " + std::to_string(gb.m_theta) +
                     " companion vectors");

  std::vector<global::LocalBasis> local(N);
  std::vector<MatrixXd> masses(N);
  parallel_for(N, workers, [&](int i) {
    with_sample("training", i, db.physical[i],
                [&] { local[i] = global::mass_orthogonalize(gb.V, models[i].M, models[i].K1); });
    masses[i] = models[i].M;
  });
  db.order = global::reorder_all(local, masses, db.samples.points);

  note(progress, "tensor identification (" + std::string(tensor_id::method_name(cfg.identification.method)) + ")");
  db.records.resize(N);
  parallel_for(N, workers, [&](int i) {
    with_sample("training", i, db.physical[i], [&] {
      SampleRecord& rec = db.records[i];
      rec.omega_fe = bases[i].omega_fe;
      rec.n_vms = bases[i].modes.size();
      rec.mode_numbers = bases[i].modes.mode_numbers;
      rec.companion_labels = bases[i].companions.labels;
      rec.companions_degenerate = bases[i].companions.degenerate;
      finish_record(cfg, models[i], local[i], db.samples.points[i], rec);
    });
  });
  for (const auto& r : db.records) db.evaluations += r.evaluations;
  return db;
}

SampleRecord recompute_rom(const config::RunConfig& cfg, const RomDatabase& train, const Point& p_hat) {
  require(train.size() >= 1, "recompute_rom: empty training database");
  const Point p = sampling::denormalize(p_hat, cfg.bounds);
  const PointModel pm = make_point_model(cfg, p);
  SampleRecord rec;
  const modal::ModeSet all = modal::solve_vms(pm.M, pm.K1, cfg.basis.n_candidate_modes);
  rec.omega_fe = all.omega;

  global::LocalBasis lb = global::mass_orthogonalize(train.global_v, pm.M, pm.K1);
  const int j = sampling::nearest(train.samples.points, p_hat);
  global::LocalBasis ref;
  ref.V = train.records[j].rom.V;
  const MatrixXd m_ref = fe::Assembly(cfg.geometry(train.physical[j]), cfg.fe).mass_matrix();
  global::align_to_reference(lb, ref, m_ref, j, -1);
  finish_record(cfg, pm, lb, p_hat, rec);
  return rec;
}

RomDatabase build_companion_database(const config::RunConfig& cfg, const RomDatabase& train,
                                     sampling::SampleRole role, const Progress& progress) {
  require(role != sampling::SampleRole::kTrain, "build_companion_database: role must be validation or test");
  RomDatabase db;
  db.role = role;
  db.config = config::to_json(cfg);
  const bool val = role == sampling::SampleRole::kValidation;
  db.samples = sampling::lhs_sample(val ? cfg.sampling.n_validation : cfg.sampling.n_test, cfg.bounds.dims(),
                                    val ? cfg.sampling.seed_validation : cfg.sampling.seed_test, role,
                                    cfg.sampling.lhs_candidates);
  for (const auto& p : db.samples.points) db.physical.push_back(sampling::denormalize(p, cfg.bounds));
  db.global_v = train.global_v;
  db.m_phi = train.m_phi;
  db.m_theta = train.m_theta;
  note(progress, std::string(sampling::role_name(role)) + " ROMs at " + std::to_string(db.samples.size()) +
                     " points");
  db.records.resize(db.samples.size());
  parallel_for(db.samples.size(), cfg.resolved_workers(), [&](int i) {
    with_sample(sampling::role_name(role), i, db.physical[i],
                [&] { db.records[i] = recompute_rom(cfg, train, db.samples.points[i]); });
  });
  for (const auto& r : db.records) db.evaluations += r.evaluations;
  return db;
}

PromBundle fit_prom(const RomDatabase& train, const RomDatabase& validation, const config::RunConfig& cfg) {
  require(train.size() >= 1 && validation.size() >= 1, "fit_prom: empty training or validation database");
  require(train.m() == validation.m() && train.n() == validation.n(),
          "fit_prom: training and validation databases differ in dimension");
  const auto& ic = cfg.interpolation;
  PromBundle b;
  const auto train_roms = train.roms();
  b.validation = interp::validate_eps(train_roms, train.samples.points, validation.roms(), validation.samples.points,
                                      ic.kernel, ic.grid(), ic.error_measure, ic.min_rcond);
  b.model = interp::fit_prom(train_roms, train.samples.points, ic.kernel, b.validation.selected, &b.diagnostics);

  // operator row counts follow from m and n
  const int m = train.m();
  const std::array<Eigen::Index, interp::kOperatorCount> rows = {
      m, m * (m + 1) * (m + 2) / 6, m * (m + 1) * (m + 2) * (m + 3) / 24, Eigen::Index(train.n()) * m, 1, 1};
  for (int i = 0; i < interp::kOperatorCount; ++i)
    require(b.model.interpolants[i].W.rows() == rows[i], "fit_prom: unexpected operator size", ErrorCode::kNumeric);
  return b;
}

int structure_scan(const interp::PromModel& model, int n_points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int dims = static_cast<int>(model.centers()[0].size());
  int violations = 0;
  for (int k = 0; k < n_points; ++k) {
    Point p(dims);
    for (int d = 0; d < dims; ++d) p[d] = u(rng);
    try {
      interp::evaluate(model, p);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kStructureViolation) throw;
      ++violations;
    }
  }
  return violations;
}

const char* model_name(ModelKind k) {
  switch (k) {
    case ModelKind::kHfm: return "hfm";
    case ModelKind::kInterpolated: return "interpolated";
    case ModelKind::kClosest: return "closest";
    case ModelKind::kRecomputed: return "recomputed";
    case ModelKind::kLinearized: return "linearized";
  }
  return "?";
}

std::vector<Point> test_points(const config::RunConfig& cfg) {
  return sampling::lhs_sample(cfg.sampling.n_test, cfg.bounds.dims(), cfg.sampling.seed_test,
                              sampling::SampleRole::kTest, cfg.sampling.lhs_candidates)
      .points;
}

namespace {

rom::NewmarkOptions newmark_options(const config::RunConfig& cfg, MatrixXd monitor) {
  rom::NewmarkOptions o;
  o.gamma = cfg.integration.gamma;
  o.beta = cfg.integration.beta;
  o.tol_rel = cfg.integration.tol_rel;
  o.max_iterations = cfg.integration.max_iterations;
  o.monitor = std::move(monitor);
  o.store_states = false;
  return o;
}

void run_rom(ModelRun& run, const rom::RomOperators& ops, const fe::LoadDescriptor& load, const MatrixXd& map,
             const config::RunConfig& cfg) {
  const rom::ReducedModel model(ops, load);
  const auto h = rom::newmark_integrate(model, cfg.integration.t_end, cfg.integration.dt_rom,
                                        newmark_options(cfg, map * ops.V));
  run.t = h.t;
  run.monitored = h.monitored;
  run.newton_iterations = h.newton_iterations;
}

TestPointResult bench_point(const RomDatabase& train, const config::RunConfig& cfg, const Point& p_hat) {
  TestPointResult res;
  res.p_hat = p_hat;
  res.p = sampling::denormalize(p_hat, cfg.bounds);
  res.closest = sampling::nearest(train.samples.points, p_hat);
  for (int k = 0; k < kModelCount; ++k) res.runs[k].kind = static_cast<ModelKind>(k);

  const PointModel pm = make_point_model(cfg, res.p);
  const fe::LoadDescriptor load = config::load_descriptor(cfg, *pm.assembly);
  const MatrixXd map = config::monitor_map(cfg, *pm.assembly);

  auto guarded = [&](ModelKind kind, const std::function<void(ModelRun&)>& fn) {
    ModelRun& run = res.runs[static_cast<int>(kind)];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      fn(run);
      run.ok = true;
    } catch (const std::exception& e) {
      run.ok = false;
      run.failure = e.what();
    }
    run.seconds = seconds_since(t0);
  };

  guarded(ModelKind::kHfm, [&](ModelRun& run) {
    const modal::ModeSet low = modal::solve_vms(pm.M, pm.K1, 2);
    double alpha = 0.0, beta = 0.0;
    if (cfg.zeta > 0.0) std::tie(alpha, beta) = rom::rayleigh_params(low.omega[0], low.omega[1], cfg.zeta);
    const rom::FullOrderModel hfm(*pm.assembly, alpha, beta, load);
    const auto h = rom::newmark_integrate(hfm, cfg.integration.t_end, cfg.integration.dt_hfm, newmark_options(cfg, map));
    run.t = h.t;
    run.monitored = h.monitored;
    run.newton_iterations = h.newton_iterations;
  });

  rom::RomOperators recomputed;
  bool have_recomputed = false;
  guarded(ModelKind::kInterpolated, [&](ModelRun& run) {
    require(train.prom.has_value(), "training database carries no PROM (run fit first)");
    interp::EvalOptions eo;
    eo.warn_on_structure_violation = cfg.interpolation.warn_on_structure_violation;
    eo.warnings = &res.warnings;
    run_rom(run, interp::evaluate(train.prom->model, p_hat, eo), load, map, cfg);
  });
  guarded(ModelKind::kClosest,
          [&](ModelRun& run) { run_rom(run, train.records[res.closest].rom, load, map, cfg); });
  guarded(ModelKind::kRecomputed, [&](ModelRun& run) {
    recomputed = recompute_rom(cfg, train, p_hat).rom;
    have_recomputed = true;
    run_rom(run, recomputed, load, map, cfg);
  });
  guarded(ModelKind::kLinearized, [&](ModelRun& run) {
    require(have_recomputed, "linearized model needs the recomputed ROM, which failed");
    run_rom(run, rom::linearize(recomputed), load, map, cfg);
  });

  const ModelRun& hfm = res.run(ModelKind::kHfm);
  if (hfm.ok) res.max_abs_first = hfm.monitored.col(0).cwiseAbs().maxCoeff();
  for (auto& run : res.runs) {
    if (!run.ok) {
      run.error = std::numeric_limits<double>::quiet_NaN();
      run.period = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    run.period = rom::dominant_period(run.t, run.monitored.col(0), cfg.load.duration);
    if (run.kind == ModelKind::kHfm) {
      run.error = 0.0;
    } else if (!hfm.ok) {
      run.error = std::numeric_limits<double>::quiet_NaN();
    } else {
      MatrixXd ref(run.t.size(), hfm.monitored.cols());
      for (Eigen::Index c = 0; c < ref.cols(); ++c) ref.col(c) = rom::resample(hfm.t, hfm.monitored.col(c), run.t);
      const Eigen::Map<const VectorXd> a(run.monitored.data(), run.monitored.size());
      const Eigen::Map<const VectorXd> b(ref.data(), ref.size());
      run.error = rom::relative_l2(a, b);
    }
  }
  return res;
}

}  // namespace

BenchmarkReport run_benchmark(const RomDatabase& train, const config::RunConfig& cfg,
                              const std::vector<Point>& test_hat, const Progress& progress) {
  cfg.validate();
  require(!test_hat.empty(), "run_benchmark: no test points");
  for (const auto& p : test_hat) {
    require(p.size() == cfg.bounds.dims(), "run_benchmark: test point dimension mismatch");
    require((p.array() >= 0.0).all() && (p.array() <= 1.0).all(), "run_benchmark: test point outside the bounds");
  }
  BenchmarkReport r;
  r.config = config::to_json(cfg);
  r.channels = config::monitor_labels(cfg);
  r.points.resize(test_hat.size());
  note(progress, "benchmark at " + std::to_string(test_hat.size()) + " test points");
  parallel_for(static_cast<int>(test_hat.size()), cfg.resolved_workers(),
               [&](int i) { r.points[i] = bench_point(train, cfg, test_hat[i]); });

  r.eps_table = json::object();
  if (train.prom)
    for (auto op : interp::all_operators())
      r.eps_table[interp::operator_name(op)] = train.prom->validation.selected[static_cast<int>(op)];
  r.evaluations = {{"identification_method", train.run_config().identification.method == tensor_id::Method::kEed
                                                 ? "eed"
                                                 : "ed"},
                   {"per_sample", train.records.empty() ? 0 : train.records[0].evaluations},
                   {"training_total", train.evaluations},
                   {"m", train.m()}};
  return r;
}

io::Container to_container(const RomDatabase& db) {
  db.check();
  io::Container c;
  json& meta = c.meta;
  meta["kind"] = "rom_database";
  meta["role"] = sampling::role_name(db.role);
  meta["config"] = db.config;
  meta["seed"] = db.samples.seed;
  meta["n"] = db.n();
  meta["m"] = db.m();
  meta["m_phi"] = db.m_phi;
  meta["m_theta"] = db.m_theta;
  meta["evaluations"] = db.evaluations;
  meta["order"] = db.order;
  c.put("samples", points_matrix(db.samples.points));
  c.put("physical", points_matrix(db.physical));
  c.put("global_v", db.global_v);
  c.put("pod/sigma_phi", db.sigma_phi);
  c.put("pod/energy_phi", db.energy_phi);
  c.put("pod/sigma_theta", db.sigma_theta);
  c.put("pod/energy_theta", db.energy_theta);

  json recs = json::array();
  for (int i = 0; i < db.size(); ++i) {
    const SampleRecord& r = db.records[i];
    const std::string pre = "rec/" + pad(i) + "/";
    recs.push_back({{"n_vms", r.n_vms},
                    {"mode_numbers", r.mode_numbers},
                    {"companion_labels", r.companion_labels},
                    {"companions_degenerate", r.companions_degenerate},
                    {"reference", r.reference},
                    {"permutation", r.permutation},
                    {"signs", r.signs},
                    {"evaluations", r.evaluations}});
    c.put(pre + "V", r.rom.V);
    c.put(pre + "k1", r.rom.k1);
    c.put(pre + "k2", r.rom.k2.values());
    c.put(pre + "k3", r.rom.k3.values());
    c.put(pre + "omega_fe", r.omega_fe);
    c.put(pre + "matched_mac", r.matched_mac);
    c.put(pre + "scalars",
          VectorXd((VectorXd(5) << r.rom.alpha, r.rom.beta, r.asymmetry, r.mass_offdiag, r.stiffness_leakage)
                       .finished()));
  }
  meta["records"] = recs;

  if (db.prom) {
    const PromBundle& b = *db.prom;
    json p;
    p["kernel"] = interp::kernel_name(b.model.interpolants[0].kernel.kind);
    p["damping_expected"] = b.model.damping_expected;
    p["measure"] = b.validation.measure == interp::ErrorMeasure::kSquared ? "squared" : "verbatim";
    p["selected_index"] = b.validation.selected_index;
    json diags = json::array();
    for (const auto& d : b.diagnostics) diags.push_back({{"ill_conditioned", d.ill_conditioned}, {"warning", d.warning}});
    p["diagnostics"] = diags;
    meta["prom"] = p;
    c.put("prom/centers", points_matrix(b.model.centers()));
    VectorXd eps(interp::kOperatorCount), rcond(b.diagnostics.size());
    for (int i = 0; i < interp::kOperatorCount; ++i) eps[i] = b.model.interpolants[i].kernel.eps;
    for (std::size_t i = 0; i < b.diagnostics.size(); ++i) rcond[i] = b.diagnostics[i].rcond;
    c.put("prom/eps", eps);
    c.put("prom/rcond", rcond);
    c.put("prom/grid", b.validation.eps_grid);
    c.put("prom/grid_rcond", b.validation.rcond);
    for (auto op : interp::all_operators()) {
      const int i = static_cast<int>(op);
      c.put(std::string("prom/W/") + interp::operator_name(op), b.model.interpolants[i].W);
      c.put(std::string("prom/e_rel/") + interp::operator_name(op), b.validation.e_rel[i]);
    }
  }
  return c;
}

RomDatabase database_from_container(const io::Container& c) {
  try {
    const json& meta = c.meta;
    if (meta.value("kind", "") != "rom_database") throw Error(ErrorCode::kCorruptFile, "file is not a ROM database");
    RomDatabase db;
    db.role = role_from_name(meta.at("role").get<std::string>());
    db.config = meta.at("config");
    db.samples.points = matrix_points(c.matrix("samples"));
    db.samples.role = db.role;
    db.samples.seed = meta.at("seed").get<std::uint64_t>();
    db.physical = matrix_points(c.matrix("physical"));
    db.global_v = c.matrix("global_v");
    db.m_phi = meta.at("m_phi").get<int>();
    db.m_theta = meta.at("m_theta").get<int>();
    db.evaluations = meta.at("evaluations").get<long>();
    db.order = meta.at("order").get<std::vector<int>>();
    db.sigma_phi = c.vector("pod/sigma_phi");
    db.energy_phi = c.vector("pod/energy_phi");
    db.sigma_theta = c.vector("pod/sigma_theta");
    db.energy_theta = c.vector("pod/energy_theta");
    const int m = db.m();
    const json& recs = meta.at("records");
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const json& jr = recs[i];
      const std::string pre = "rec/" + pad(static_cast<int>(i)) + "/";
      SampleRecord r;
      r.n_vms = jr.at("n_vms").get<int>();
      r.mode_numbers = jr.at("mode_numbers").get<std::vector<int>>();
      r.companion_labels = jr.at("companion_labels").get<std::vector<std::string>>();
      r.companions_degenerate = jr.at("companions_degenerate").get<bool>();
      r.reference = jr.at("reference").get<int>();
      r.permutation = jr.at("permutation").get<std::vector<int>>();
      r.signs = jr.at("signs").get<std::vector<int>>();
      r.evaluations = jr.at("evaluations").get<int>();
      r.rom.V = c.matrix(pre + "V");
      r.rom.k1 = c.vector(pre + "k1");
      r.rom.k2 = SymmetricTensor(3, m);
      r.rom.k3 = SymmetricTensor(4, m);
      const VectorXd k2 = c.vector(pre + "k2"), k3 = c.vector(pre + "k3");
      if (k2.size() != r.rom.k2.unique_count() || k3.size() != r.rom.k3.unique_count())
        throw Error(ErrorCode::kCorruptFile, "tensor entry counts do not match m");
      r.rom.k2.values() = k2;
      r.rom.k3.values() = k3;
      r.rom.p_hat = db.samples.points.at(i);
      r.omega_fe = c.vector(pre + "omega_fe");
      r.matched_mac = c.vector(pre + "matched_mac");
      const VectorXd s = c.vector(pre + "scalars");
      if (s.size() != 5) throw Error(ErrorCode::kCorruptFile, "record scalars have the wrong length");
      r.rom.alpha = s[0];
      r.rom.beta = s[1];
      r.asymmetry = s[2];
      r.mass_offdiag = s[3];
      r.stiffness_leakage = s[4];
      db.records.push_back(std::move(r));
    }
    if (meta.contains("prom")) {
      const json& p = meta.at("prom");
      PromBundle b;
      const auto kind = interp::kernel_from_name(p.at("kernel").get<std::string>());
      const auto centers = matrix_points(c.matrix("prom/centers"));
      const VectorXd eps = c.vector("prom/eps"), rcond = c.vector("prom/rcond");
      b.model.n = db.n();
      b.model.m = m;
      b.model.damping_expected = p.at("damping_expected").get<bool>();
      b.validation.kind = kind;
      b.validation.measure = p.at("measure").get<std::string>() == "squared" ? interp::ErrorMeasure::kSquared
                                                                             : interp::ErrorMeasure::kVerbatim;
      b.validation.eps_grid = c.vector("prom/grid");
      b.validation.rcond = c.vector("prom/grid_rcond");
      const auto idx = p.at("selected_index").get<std::vector<int>>();
      if (eps.size() != interp::kOperatorCount || idx.size() != interp::kOperatorCount)
        throw Error(ErrorCode::kCorruptFile, "PROM operator table has the wrong length");
      const json& diags = p.at("diagnostics");
      for (std::size_t i = 0; i < diags.size(); ++i) {
        interp::FitDiagnostics d;
        d.rcond = rcond[static_cast<Eigen::Index>(i)];
        d.ill_conditioned = diags[i].at("ill_conditioned").get<bool>();
        d.warning = diags[i].at("warning").get<std::string>();
        b.diagnostics.push_back(d);
      }
      for (auto op : interp::all_operators()) {
        const int i = static_cast<int>(op);
        auto& s = b.model.interpolants[i];
        s.centers = centers;
        s.kernel = {kind, eps[i]};
        s.op = interp::operator_name(op);
        s.W = c.matrix(std::string("prom/W/") + interp::operator_name(op));
        b.validation.e_rel[i] = c.vector(std::string("prom/e_rel/") + interp::operator_name(op));
        b.validation.selected[i] = eps[i];
        b.validation.selected_index[i] = idx[i];
      }
      db.prom = std::move(b);
    }
    db.check();
    return db;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("database manifest is malformed: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("database manifest is inconsistent: ") + e.what());
  }
}

void save_database(const RomDatabase& db, const std::string& path) { to_container(db).save(path); }

RomDatabase load_database(const std::string& path) { return database_from_container(io::Container::load(path)); }

io::Container to_container(const BenchmarkReport& r) {
  io::Container c;
  json& meta = c.meta;
  meta["kind"] = "benchmark_report";
  meta["config"] = r.config;
  meta["channels"] = r.channels;
  meta["eps_table"] = r.eps_table;
  meta["evaluations"] = r.evaluations;
  json pts = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const TestPointResult& tp = r.points[i];
    const std::string pre = "pt/" + pad(static_cast<int>(i)) + "/";
    json runs = json::array();
    for (const auto& run : tp.runs) {
      runs.push_back({{"model", model_name(run.kind)},
                      {"ok", run.ok},
                      {"failure", run.failure},
                      {"newton_iterations", run.newton_iterations}});
      const std::string mp = pre + model_name(run.kind) + "/";
      c.put(mp + "t", run.t);
      c.put(mp + "monitored", run.monitored);
      c.put(mp + "stats", VectorXd((VectorXd(2) << run.error, run.period).finished()));
    }
    pts.push_back({{"closest", tp.closest}, {"warnings", tp.warnings}, {"runs", runs}});
    c.put(pre + "p_hat", tp.p_hat);
    c.put(pre + "p", tp.p);
    c.put(pre + "max_abs_first", VectorXd(VectorXd::Constant(1, tp.max_abs_first)));
  }
  meta["points"] = pts;
  return c;
}

BenchmarkReport report_from_container(const io::Container& c) {
  try {
    const json& meta = c.meta;
    if (meta.value("kind", "") != "benchmark_report")
      throw Error(ErrorCode::kCorruptFile, "file is not a benchmark report");
    BenchmarkReport r;
    r.config = meta.at("config");
    r.channels = meta.at("channels").get<std::vector<std::string>>();
    r.eps_table = meta.at("eps_table");
    r.evaluations = meta.at("evaluations");
    const json& pts = meta.at("points");
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const std::string pre = "pt/" + pad(static_cast<int>(i)) + "/";
      TestPointResult tp;
      tp.closest = pts[i].at("closest").get<int>();
      tp.warnings = pts[i].at("warnings").get<std::vector<std::string>>();
      tp.p_hat = c.vector(pre + "p_hat");
      tp.p = c.vector(pre + "p");
      tp.max_abs_first = c.vector(pre + "max_abs_first")[0];
      const json& runs = pts[i].at("runs");
      if (runs.size() != kModelCount) throw Error(ErrorCode::kCorruptFile, "report point lacks a model");
      for (int k = 0; k < kModelCount; ++k) {
        ModelRun& run = tp.runs[k];
        run.kind = static_cast<ModelKind>(k);
        run.ok = runs[k].at("ok").get<bool>();
        run.failure = runs[k].at("failure").get<std::string>();
        run.newton_iterations = runs[k].at("newton_iterations").get<long>();
        const std::string mp = pre + model_name(run.kind) + "/";
        run.t = c.vector(mp + "t");
        run.monitored = c.matrix(mp + "monitored");
        const VectorXd s = c.vector(mp + "stats");
        run.error = s[0];
        run.period = s[1];
      }
      r.points.push_back(std::move(tp));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptFile, std::string("report manifest is malformed: ") + e.what());
  }
}

void save_report(const BenchmarkReport& r, const std::string& path) { to_container(r).save(path); }

BenchmarkReport load_report(const std::string& path) { return report_from_container(io::Container::load(path)); }

namespace {

void append_number(std::string& out, double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.append(buf, res.ptr);
}

}  // namespace

json summary_json(const BenchmarkReport& r) {
  json s;
  s["channels"] = r.channels;
  s["eps_table"] = r.eps_table;
  s["evaluations"] = r.evaluations;
  json pts = json::array();
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& tp = r.points[i];
    json models = json::object();
    for (const auto& run : tp.runs) {
      json jm = {{"ok", run.ok},
                 {"relative_l2_error", finite_or_null(run.error)},
                 {"dominant_period", finite_or_null(run.period)},
                 {"newton_iterations", run.newton_iterations},
                 {"steps", run.t.size()}};
      if (!run.ok) jm["failure"] = run.failure;
      models[model_name(run.kind)] = jm;
    }
    pts.push_back({{"index", i},
                   {"p_hat", std::vector<double>(tp.p_hat.data(), tp.p_hat.data() + tp.p_hat.size())},
                   {"p", std::vector<double>(tp.p.data(), tp.p.data() + tp.p.size())},
                   {"closest_training_sample", tp.closest},
                   {"hfm_peak_first_channel", tp.max_abs_first},
                   {"warnings", tp.warnings},
                   {"models", models}});
  }
  s["test_points"] = pts;
  s["timings"] = "timings.json";
  return s;
}

json timings_json(const BenchmarkReport& r) {
  json pts = json::array();
  for (const auto& tp : r.points) {
    json models = json::object();
    for (const auto& run : tp.runs) models[model_name(run.kind)] = run.seconds;
    pts.push_back(models);
  }
  return {{"wall_clock_seconds", pts}};
}

std::vector<std::string> export_histories(const BenchmarkReport& r, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create '" + dir + "': " + ec.message());
  std::vector<std::string> files;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    for (const auto& run : r.points[i].runs) {
      if (!run.ok) continue;
      std::string text = "time";
      for (const auto& ch : r.channels) text += "," + ch;
      text += "\n";
      for (Eigen::Index k = 0; k < run.t.size(); ++k) {
        append_number(text, run.t[k]);
        for (Eigen::Index c = 0; c < run.monitored.cols(); ++c) {
          text += ",";
          append_number(text, run.monitored(k, c));
        }
        text += "\n";
      }
      char name[64];
      std::snprintf(name, sizeof(name), "tp%02zu_%s.csv", i, model_name(run.kind));
      const std::string path = (std::filesystem::path(dir) / name).string();
      io::write_file(path, text);
      files.push_back(path);
    }
  }
  const std::string summary = (std::filesystem::path(dir) / "summary.json").string();
  io::write_file(summary, summary_json(r).dump(2) + "\n");
  files.push_back(summary);
  return files;
}

}  // namespace promforge::pipeline
