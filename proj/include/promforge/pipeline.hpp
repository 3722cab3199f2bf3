#pragma once

#include "promforge/config.hpp"
#include "promforge/container.hpp"
#include "promforge/global_basis.hpp"
#include "promforge/prom_interp.hpp"
#include "promforge/rom_core.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace promforge::pipeline {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using sampling::Point;

/// One stored ROM with its lineage and audit numbers.
struct SampleRecord {
  rom::RomOperators rom;
  VectorXd omega_fe;  // lowest FE frequencies, rad/s
  int n_vms = 0;
  std::vector<int> mode_numbers;
  std::vector<std::string> companion_labels;
  bool companions_degenerate = false;
  int reference = -1;  // training sample the basis was aligned to
  std::vector<int> permutation;
  std::vector<int> signs;
  VectorXd matched_mac;
  int evaluations = 0;
  double asymmetry = 0.0;
  double mass_offdiag = 0.0;        // max |V^T M V - I|
  double stiffness_leakage = 0.0;   // |offdiag(V^T K1 V)| / |diag(V^T K1 V)|
};

struct PromBundle {
  interp::PromModel model;
  interp::ValidationReport validation;
  std::vector<interp::FitDiagnostics> diagnostics;
};

struct RomDatabase {
  sampling::SampleRole role = sampling::SampleRole::kTrain;
  nlohmann::json config;  // canonical RunConfig snapshot
  sampling::SampleSet samples;
  std::vector<Point> physical;
  std::vector<SampleRecord> records;
  MatrixXd global_v;
  int m_phi = 0;
  int m_theta = 0;
  VectorXd sigma_phi, energy_phi, sigma_theta, energy_theta;
  std::vector<int> order;  // reordering sequence (training set)
  long evaluations = 0;    // black-box calls spent on identification
  std::optional<PromBundle> prom;

  int size() const { return static_cast<int>(records.size()); }
  int m() const { return static_cast<int>(global_v.cols()); }
  int n() const { return static_cast<int>(global_v.rows()); }
  std::vector<rom::RomOperators> roms() const;
  config::RunConfig run_config() const { return config::from_json(config); }
  /// Throws CorruptFile when counts or dimensions disagree.
  void check() const;
};

using Progress = std::function<void(const std::string&)>;

/// Sampling, per-sample FE + modes + companions, global basis, mass
/// orthogonalization, reordering, tensor identification and damping.
RomDatabase build_database(const config::RunConfig& cfg, const Progress& progress = {});

/// ROM at an unseen point: the training global basis is mass-orthogonalized
/// with that point's FE operators and aligned to the nearest training basis.
SampleRecord recompute_rom(const config::RunConfig& cfg, const RomDatabase& train, const Point& p_hat);

/// Validation or test set built the same way as recompute_rom.
RomDatabase build_companion_database(const config::RunConfig& cfg, const RomDatabase& train,
                                     sampling::SampleRole role, const Progress& progress = {});

/// Shape-parameter selection on the validation set, then final fit.
PromBundle fit_prom(const RomDatabase& train, const RomDatabase& validation, const config::RunConfig& cfg);

/// Counts interpolated ROMs that violate structure at random points of the box.
int structure_scan(const interp::PromModel& model, int n_points, std::uint64_t seed);

enum class ModelKind { kHfm = 0, kInterpolated, kClosest, kRecomputed, kLinearized };
constexpr int kModelCount = 5;
const char* model_name(ModelKind k);

struct ModelRun {
  ModelKind kind = ModelKind::kHfm;
  bool ok = false;
  std::string failure;
  VectorXd t;
  MatrixXd monitored;  // steps x channels
  double error = 0.0;  // relative L2 vs HFM on the ROM time grid
  double period = 0.0; // dominant period after the pulse
  double seconds = 0.0;
  long newton_iterations = 0;
};

struct TestPointResult {
  Point p_hat;
  Point p;
  int closest = -1;
  double max_abs_first = 0.0;  // HFM peak of the first monitored channel
  std::array<ModelRun, kModelCount> runs;
  std::vector<std::string> warnings;

  const ModelRun& run(ModelKind k) const { return runs[static_cast<int>(k)]; }
};

struct BenchmarkReport {
  nlohmann::json config;
  std::vector<std::string> channels;
  std::vector<TestPointResult> points;
  nlohmann::json eps_table;    // operator -> selected eps
  nlohmann::json evaluations;  // per-stage evaluation counts
};

/// Five-model comparison at the test points. A failing model is recorded and
/// the remaining models still run.
BenchmarkReport run_benchmark(const RomDatabase& train, const config::RunConfig& cfg,
                              const std::vector<Point>& test_hat, const Progress& progress = {});

/// Test points drawn with the configured seed.
std::vector<Point> test_points(const config::RunConfig& cfg);

io::Container to_container(const RomDatabase& db);
RomDatabase database_from_container(const io::Container& c);
void save_database(const RomDatabase& db, const std::string& path);
RomDatabase load_database(const std::string& path);

io::Container to_container(const BenchmarkReport& r);
BenchmarkReport report_from_container(const io::Container& c);
void save_report(const BenchmarkReport& r, const std::string& path);
BenchmarkReport load_report(const std::string& path);

/// One CSV per (test point, model) plus summary.json; returns the files written.
std::vector<std::string> export_histories(const BenchmarkReport& r, const std::string& dir);
/// Deterministic summary (no wall-clock data).
nlohmann::json summary_json(const BenchmarkReport& r);
/// Wall-clock figures kept apart from the deterministic outputs.
nlohmann::json timings_json(const BenchmarkReport& r);

}  // namespace promforge::pipeline
