#pragma once

#include "promforge/fe_kernel.hpp"
#include "promforge/modal_basis.hpp"
#include "promforge/prom_interp.hpp"
#include "promforge/sampling.hpp"
#include "promforge/tensor_id.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace promforge::config {

constexpr int kSchemaVersion = 1;

struct SamplingSettings {
  int n_train = 10;
  int n_validation = 3;
  int n_test = 3;
  std::uint64_t seed_train = 1;
  std::uint64_t seed_validation = 2;
  std::uint64_t seed_test = 3;
  int lhs_candidates = 50;
};

struct BasisSettings {
  int n_candidate_modes = 12;
  int max_vms = 4;
  double f_max_hz = 1e4;
  double mpf_tol = 1e-3;
  modal::CompanionKind companion = modal::CompanionKind::kSmd;
  int k_pairs = 3;
  double smd_step = 1e-4;
  double dual_mode_target = 1.0;  // thicknesses
  bool dual_mode_pairs = false;
  double e_phi = 0.9999;
  double e_theta = 0.9999;
};

struct IdentificationSettings {
  tensor_id::Method method = tensor_id::Method::kEed;
  double probe_target = 1.0;  // thicknesses
};

struct InterpolationSettings {
  interp::KernelKind kernel = interp::KernelKind::kInverseMultiquadric;
  double eps_min = 1e-2;
  double eps_max = 10.0;
  int eps_count = 50;
  interp::ErrorMeasure error_measure = interp::ErrorMeasure::kVerbatim;
  double min_rcond = interp::kMinRcond;
  bool warn_on_structure_violation = false;

  Eigen::VectorXd grid() const;
};

enum class LoadPattern { kUniformPressure, kMidspanPoint };

struct LoadSettings {
  LoadPattern pattern = LoadPattern::kUniformPressure;
  double amplitude = 1000.0;  // Pa or N
  double duration = 0.01;     // s
};

struct IntegrationSettings {
  double t_end = 0.1;
  double dt_rom = 1e-4;
  double dt_hfm = 5e-5;
  double gamma = 0.5;
  double beta = 0.25;
  double tol_rel = 1e-8;
  int max_iterations = 20;
};

struct MonitorPoint {
  double x = 0.5;  // fraction of the span
  fe::DofKind dof = fe::DofKind::kTransverse;
};

struct RunConfig {
  sampling::ParamBounds bounds;
  std::vector<std::string> param_names;  // each "rise" or "skew"
  fe::GeometryParams fixed_geometry;     // values of parameters that are not sampled
  SamplingSettings sampling;
  fe::BeamSpec fe;
  BasisSettings basis;
  IdentificationSettings identification;
  InterpolationSettings interpolation;
  double zeta = 0.01;
  LoadSettings load;
  IntegrationSettings integration;
  std::vector<MonitorPoint> monitor = {MonitorPoint{}};
  int workers = 0;  // 0: hardware concurrency
  std::string output_dir = "out";

  /// Throws Config on any schema violation.
  void validate() const;
  /// Geometry of the beam at a physical parameter point.
  fe::GeometryParams geometry(const sampling::Point& p) const;
  int resolved_workers() const;
};

RunConfig from_json(const nlohmann::json& j);
/// Canonical snapshot with every default filled in.
nlohmann::json to_json(const RunConfig& cfg);

RunConfig load_config(const std::string& path);

/// Applies "a.b.c=value" to a JSON document; the value is parsed as JSON when
/// possible and kept as a string otherwise. Only existing scalar leaves may be set.
void apply_override(nlohmann::json& doc, const std::string& assignment);

/// Load pattern of the configured type on one beam.
Eigen::VectorXd load_pattern(const RunConfig& cfg, const fe::Assembly& a);
fe::LoadDescriptor load_descriptor(const RunConfig& cfg, const fe::Assembly& a);

/// Rows select the monitored free DOFs (nearest node to each monitor point).
Eigen::MatrixXd monitor_map(const RunConfig& cfg, const fe::Assembly& a);
std::vector<std::string> monitor_labels(const RunConfig& cfg);

}  // namespace promforge::config
