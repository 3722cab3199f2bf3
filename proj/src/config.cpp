#include "promforge/config.hpp"

#include "promforge/errors.hpp"
#include "promforge/parallel.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace promforge::config {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& msg) { throw Error(ErrorCode::kConfig, "config: " + msg); }

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!ok.count(it.key())) fail("unknown key '" + where + "." + it.key() + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    fail("'" + where + "." + key + "' has the wrong type");
  }
}

const json& section(const json& root, const char* key) {
  static const json empty = json::object();
  return root.contains(key) ? root.at(key) : empty;
}

const char* dof_name(fe::DofKind k) {
  switch (k) {
    case fe::DofKind::kAxial: return "u";
    case fe::DofKind::kTransverse: return "w";
    case fe::DofKind::kRotation: return "theta";
  }
  return "?";
}

fe::DofKind dof_from_name(const std::string& s) {
  if (s == "u") return fe::DofKind::kAxial;
  if (s == "w") return fe::DofKind::kTransverse;
  if (s == "theta") return fe::DofKind::kRotation;
  fail("unknown monitored dof '" + s + "' (expected u, w or theta)");
}

const char* pattern_name(LoadPattern p) {
  return p == LoadPattern::kMidspanPoint ? "midspan_point" : "uniform_pressure";
}

}  // namespace

Eigen::VectorXd InterpolationSettings::grid() const {
  Eigen::VectorXd g(eps_count);
  if (eps_count == 1) {
    g[0] = eps_min;
    return g;
  }
  const double a = std::log10(eps_min), b = std::log10(eps_max);
  for (int i = 0; i < eps_count; ++i) g[i] = std::pow(10.0, a + (b - a) * i / (eps_count - 1));
  return g;
}

void RunConfig::validate() const {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) fail(msg);
  };
  bounds.validate();
  need(bounds.dims() >= 1 && bounds.dims() <= 2, "between one and two parameters are supported");
  need(static_cast<int>(param_names.size()) == bounds.dims(), "parameter names and bounds differ in count");
  std::set<std::string> seen;
  for (const auto& n : param_names) {
    need(n == "rise" || n == "skew", "parameter '" + n + "' is not one of rise, skew");
    need(seen.insert(n).second, "parameter '" + n + "' listed twice");
  }
  need(sampling.n_train >= 1 && sampling.n_validation >= 1 && sampling.n_test >= 1, "sample counts must be >= 1");
  need(sampling.lhs_candidates >= 1, "sampling.lhs_candidates must be >= 1");
  need(fe.n_elements >= 2 && fe.n_elements % 2 == 0, "fe.n_elements must be even and >= 2");
  need(fe.length > 0 && fe.width > 0 && fe.thickness > 0 && fe.youngs_modulus > 0 && fe.density > 0,
       "fe dimensions and material constants must be positive");
  need(basis.n_candidate_modes >= 1 && basis.max_vms >= 1, "basis mode counts must be >= 1");
  need(basis.max_vms <= basis.n_candidate_modes, "basis.max_vms exceeds basis.n_candidate_modes");
  need(basis.f_max_hz > 0, "basis.f_max_hz must be positive");
  need(basis.mpf_tol >= 0 && basis.mpf_tol < 1, "basis.mpf_tol must lie in [0, 1)");
  need(basis.k_pairs >= 0, "basis.k_pairs must be >= 0");
  need(basis.smd_step > 0 && basis.dual_mode_target > 0, "basis steps must be positive");
  need(basis.e_phi > 0 && basis.e_phi <= 1 && basis.e_theta > 0 && basis.e_theta <= 1,
       "POD thresholds must lie in (0, 1]");
  need(identification.probe_target > 0, "identification.probe_target must be positive");
  need(interpolation.eps_min > 0 && interpolation.eps_max >= interpolation.eps_min, "bad eps range");
  need(interpolation.eps_count >= 1, "interpolation.eps_count must be >= 1");
  need(interpolation.min_rcond >= 0 && interpolation.min_rcond < 1, "interpolation.min_rcond must lie in [0, 1)");
  need(zeta >= 0 && zeta < 1, "damping.zeta must lie in [0, 1)");
  need(load.duration > 0 && std::isfinite(load.amplitude), "load.duration must be positive");
  need(integration.t_end > 0 && integration.dt_rom > 0 && integration.dt_hfm > 0, "integration times must be positive");
  need(integration.dt_rom <= integration.t_end && integration.dt_hfm <= integration.t_end,
       "integration steps exceed the time span");
  need(integration.gamma > 0 && integration.beta > 0, "Newmark parameters must be positive");
  need(integration.tol_rel > 0 && integration.max_iterations >= 1, "bad Newton settings");
  need(!monitor.empty(), "at least one monitored dof is required");
  for (const auto& mp : monitor) need(mp.x >= 0 && mp.x <= 1, "monitor positions must lie in [0, 1]");
  need(workers >= 0, "workers must be >= 0");
}

fe::GeometryParams RunConfig::geometry(const sampling::Point& p) const {
  require(p.size() == static_cast<Eigen::Index>(param_names.size()), "geometry: parameter dimension mismatch");
  fe::GeometryParams g = fixed_geometry;
  for (std::size_t i = 0; i < param_names.size(); ++i) (param_names[i] == "rise" ? g.rise : g.skew) = p[i];
  return g;
}

int RunConfig::resolved_workers() const { return workers > 0 ? workers : default_workers(); }

RunConfig from_json(const json& j) {
  check_keys(j, "", {"schema_version", "parameters", "fixed_geometry", "sampling", "fe", "basis", "identification",
                     "interpolation", "damping", "load", "integration", "monitor", "workers", "output_dir"});
  RunConfig c;
  int version = kSchemaVersion;
  read(j, "schema_version", version, "");
  if (version != kSchemaVersion) fail("unsupported schema_version " + std::to_string(version));

  if (!j.contains("parameters") || !j.at("parameters").is_array() || j.at("parameters").empty())
    fail("'parameters' must be a non-empty array");
  for (const auto& p : j.at("parameters")) {
    check_keys(p, "parameters[]", {"name", "min", "max", "unit"});
    std::string name;
    sampling::ParamRange r;
    read(p, "name", name, "parameters[]");
    read(p, "min", r.min, "parameters[]");
    read(p, "max", r.max, "parameters[]");
    read(p, "unit", r.unit, "parameters[]");
    c.param_names.push_back(name);
    c.bounds.ranges.push_back(r);
  }

  const json& g = section(j, "fixed_geometry");
  check_keys(g, "fixed_geometry", {"rise", "skew"});
  read(g, "rise", c.fixed_geometry.rise, "fixed_geometry");
  read(g, "skew", c.fixed_geometry.skew, "fixed_geometry");

  const json& s = section(j, "sampling");
  check_keys(s, "sampling", {"n_train", "n_validation", "n_test", "seed_train", "seed_validation", "seed_test",
                             "lhs_candidates"});
  read(s, "n_train", c.sampling.n_train, "sampling");
  read(s, "n_validation", c.sampling.n_validation, "sampling");
  read(s, "n_test", c.sampling.n_test, "sampling");
  read(s, "seed_train", c.sampling.seed_train, "sampling");
  read(s, "seed_validation", c.sampling.seed_validation, "sampling");
  read(s, "seed_test", c.sampling.seed_test, "sampling");
  read(s, "lhs_candidates", c.sampling.lhs_candidates, "sampling");

  const json& f = section(j, "fe");
  check_keys(f, "fe", {"n_elements", "length", "width", "thickness", "youngs_modulus", "density"});
  read(f, "n_elements", c.fe.n_elements, "fe");
  read(f, "length", c.fe.length, "fe");
  read(f, "width", c.fe.width, "fe");
  read(f, "thickness", c.fe.thickness, "fe");
  read(f, "youngs_modulus", c.fe.youngs_modulus, "fe");
  read(f, "density", c.fe.density, "fe");

  const json& b = section(j, "basis");
  check_keys(b, "basis", {"n_candidate_modes", "max_vms", "f_max_hz", "mpf_tol", "companion", "k_pairs", "smd_step",
                          "dual_mode_target", "dual_mode_pairs", "e_phi", "e_theta"});
  read(b, "n_candidate_modes", c.basis.n_candidate_modes, "basis");
  read(b, "max_vms", c.basis.max_vms, "basis");
  read(b, "f_max_hz", c.basis.f_max_hz, "basis");
  read(b, "mpf_tol", c.basis.mpf_tol, "basis");
  std::string companion = modal::companion_name(c.basis.companion);
  read(b, "companion", companion, "basis");
  if (companion == "smd")
    c.basis.companion = modal::CompanionKind::kSmd;
  else if (companion == "dual_mode")
    c.basis.companion = modal::CompanionKind::kDualMode;
  else
    fail("basis.companion must be smd or dual_mode");
  read(b, "k_pairs", c.basis.k_pairs, "basis");
  read(b, "smd_step", c.basis.smd_step, "basis");
  read(b, "dual_mode_target", c.basis.dual_mode_target, "basis");
  read(b, "dual_mode_pairs", c.basis.dual_mode_pairs, "basis");
  read(b, "e_phi", c.basis.e_phi, "basis");
  read(b, "e_theta", c.basis.e_theta, "basis");

  const json& id = section(j, "identification");
  check_keys(id, "identification", {"method", "probe_target"});
  std::string method = tensor_id::method_name(c.identification.method);
  read(id, "method", method, "identification");
  if (method == "eed")
    c.identification.method = tensor_id::Method::kEed;
  else if (method == "ed")
    c.identification.method = tensor_id::Method::kEd;
  else
    fail("identification.method must be eed or ed");
  read(id, "probe_target", c.identification.probe_target, "identification");

  const json& in = section(j, "interpolation");
  check_keys(in, "interpolation", {"kernel", "eps_min", "eps_max", "eps_count", "error_measure", "min_rcond",
                                   "warn_on_structure_violation"});
  std::string kernel = interp::kernel_name(c.interpolation.kernel);
  read(in, "kernel", kernel, "interpolation");
  try {
    c.interpolation.kernel = interp::kernel_from_name(kernel);
  } catch (const Error& e) {
    fail(e.what());
  }
  read(in, "eps_min", c.interpolation.eps_min, "interpolation");
  read(in, "eps_max", c.interpolation.eps_max, "interpolation");
  read(in, "eps_count", c.interpolation.eps_count, "interpolation");
  std::string measure = "verbatim";
  read(in, "error_measure", measure, "interpolation");
  if (measure == "verbatim")
    c.interpolation.error_measure = interp::ErrorMeasure::kVerbatim;
  else if (measure == "squared")
    c.interpolation.error_measure = interp::ErrorMeasure::kSquared;
  else
    fail("interpolation.error_measure must be verbatim or squared");
  read(in, "min_rcond", c.interpolation.min_rcond, "interpolation");
  read(in, "warn_on_structure_violation", c.interpolation.warn_on_structure_violation, "interpolation");

  const json& d = section(j, "damping");
  check_keys(d, "damping", {"zeta"});
  read(d, "zeta", c.zeta, "damping");

  const json& l = section(j, "load");
  check_keys(l, "load", {"pattern", "amplitude", "duration"});
  std::string pattern = pattern_name(c.load.pattern);
  read(l, "pattern", pattern, "load");
  if (pattern == "uniform_pressure")
    c.load.pattern = LoadPattern::kUniformPressure;
  else if (pattern == "midspan_point")
    c.load.pattern = LoadPattern::kMidspanPoint;
  else
    fail("load.pattern must be uniform_pressure or midspan_point");
  read(l, "amplitude", c.load.amplitude, "load");
  read(l, "duration", c.load.duration, "load");

  const json& t = section(j, "integration");
  check_keys(t, "integration", {"t_end", "dt_rom", "dt_hfm", "gamma", "beta", "tol_rel", "max_iterations"});
  read(t, "t_end", c.integration.t_end, "integration");
  read(t, "dt_rom", c.integration.dt_rom, "integration");
  read(t, "dt_hfm", c.integration.dt_hfm, "integration");
  read(t, "gamma", c.integration.gamma, "integration");
  read(t, "beta", c.integration.beta, "integration");
  read(t, "tol_rel", c.integration.tol_rel, "integration");
  read(t, "max_iterations", c.integration.max_iterations, "integration");

  if (j.contains("monitor")) {
    if (!j.at("monitor").is_array()) fail("'monitor' must be an array");
    c.monitor.clear();
    for (const auto& m : j.at("monitor")) {
      check_keys(m, "monitor[]", {"x", "dof"});
      MonitorPoint mp;
      std::string dof = "w";
      read(m, "x", mp.x, "monitor[]");
      read(m, "dof", dof, "monitor[]");
      mp.dof = dof_from_name(dof);
      c.monitor.push_back(mp);
    }
  }
  read(j, "workers", c.workers, "");
  read(j, "output_dir", c.output_dir, "");
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["parameters"] = json::array();
  for (std::size_t i = 0; i < c.param_names.size(); ++i)
    j["parameters"].push_back({{"name", c.param_names[i]},
                               {"min", c.bounds.ranges[i].min},
                               {"max", c.bounds.ranges[i].max},
                               {"unit", c.bounds.ranges[i].unit}});
  j["fixed_geometry"] = {{"rise", c.fixed_geometry.rise}, {"skew", c.fixed_geometry.skew}};
  j["sampling"] = {{"n_train", c.sampling.n_train},
                   {"n_validation", c.sampling.n_validation},
                   {"n_test", c.sampling.n_test},
                   {"seed_train", c.sampling.seed_train},
                   {"seed_validation", c.sampling.seed_validation},
                   {"seed_test", c.sampling.seed_test},
                   {"lhs_candidates", c.sampling.lhs_candidates}};
  j["fe"] = {{"n_elements", c.fe.n_elements}, {"length", c.fe.length},
             {"width", c.fe.width},           {"thickness", c.fe.thickness},
             {"youngs_modulus", c.fe.youngs_modulus}, {"density", c.fe.density}};
  j["basis"] = {{"n_candidate_modes", c.basis.n_candidate_modes},
                {"max_vms", c.basis.max_vms},
                {"f_max_hz", c.basis.f_max_hz},
                {"mpf_tol", c.basis.mpf_tol},
                {"companion", modal::companion_name(c.basis.companion)},
                {"k_pairs", c.basis.k_pairs},
                {"smd_step", c.basis.smd_step},
                {"dual_mode_target", c.basis.dual_mode_target},
                {"dual_mode_pairs", c.basis.dual_mode_pairs},
                {"e_phi", c.basis.e_phi},
                {"e_theta", c.basis.e_theta}};
  j["identification"] = {{"method", tensor_id::method_name(c.identification.method)},
                         {"probe_target", c.identification.probe_target}};
  j["interpolation"] = {
      {"kernel", interp::kernel_name(c.interpolation.kernel)},
      {"eps_min", c.interpolation.eps_min},
      {"eps_max", c.interpolation.eps_max},
      {"eps_count", c.interpolation.eps_count},
      {"error_measure", c.interpolation.error_measure == interp::ErrorMeasure::kSquared ? "squared" : "verbatim"},
      {"min_rcond", c.interpolation.min_rcond},
      {"warn_on_structure_violation", c.interpolation.warn_on_structure_violation}};
  j["damping"] = {{"zeta", c.zeta}};
  j["load"] = {{"pattern", pattern_name(c.load.pattern)}, {"amplitude", c.load.amplitude},
               {"duration", c.load.duration}};
  j["integration"] = {{"t_end", c.integration.t_end},
                      {"dt_rom", c.integration.dt_rom},
                      {"dt_hfm", c.integration.dt_hfm},
                      {"gamma", c.integration.gamma},
                      {"beta", c.integration.beta},
                      {"tol_rel", c.integration.tol_rel},
                      {"max_iterations", c.integration.max_iterations}};
  j["monitor"] = json::array();
  for (const auto& m : c.monitor) j["monitor"].push_back({{"x", m.x}, {"dof", dof_name(m.dof)}});
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  return j;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    fail("'" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) fail("override '" + assignment + "' is not of the form key=value");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json* node = &doc;
  std::stringstream ks(key);
  std::string part;
  while (std::getline(ks, part, '.')) {
    if (!node->is_object() || !node->contains(part)) fail("override key '" + key + "' does not exist");
    node = &(*node)[part];
  }
  if (node->is_object() || node->is_array()) fail("override key '" + key + "' is not a scalar setting");
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = value;
}

Eigen::VectorXd load_pattern(const RunConfig& cfg, const fe::Assembly& a) {
  if (cfg.load.pattern == LoadPattern::kUniformPressure) return a.uniform_pressure_load(1.0);
  Eigen::VectorXd p = Eigen::VectorXd::Zero(a.dofs());
  p[a.midspan_transverse_dof()] = 1.0;
  return p;
}

fe::LoadDescriptor load_descriptor(const RunConfig& cfg, const fe::Assembly& a) {
  fe::LoadDescriptor d;
  d.pattern = load_pattern(cfg, a);
  d.amplitude = cfg.load.amplitude;
  d.duration = cfg.load.duration;
  return d;
}

Eigen::MatrixXd monitor_map(const RunConfig& cfg, const fe::Assembly& a) {
  Eigen::MatrixXd map = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cfg.monitor.size()), a.dofs());
  for (std::size_t r = 0; r < cfg.monitor.size(); ++r) {
    const int node = static_cast<int>(std::lround(cfg.monitor[r].x * cfg.fe.n_elements));
    const int dof = a.free_index(node, cfg.monitor[r].dof);
    require(dof >= 0, "monitor point at x = " + std::to_string(cfg.monitor[r].x) + " sits on a clamped dof",
            ErrorCode::kConfig);
    map(static_cast<Eigen::Index>(r), dof) = 1.0;
  }
  return map;
}

std::vector<std::string> monitor_labels(const RunConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& m : cfg.monitor) {
    std::ostringstream s;
    s << dof_name(m.dof) << "@" << m.x;
    out.push_back(s.str());
  }
  return out;
}

}  // namespace promforge::config
