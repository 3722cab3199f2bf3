#include "promforge/promforge.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Failure {
  pf_status status;
  std::string what;
};

void check(pf_status s, const std::string& what) {
  if (s != PF_OK) throw Failure{s, what + ": " + pf_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  pf_string_free(s);
  return out;
}

void on_progress(const char* msg, void*) { std::fprintf(stderr, "[promforge] %s\n", msg); }

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Config = Handle<pf_config, pf_config_free>;
using Database = Handle<pf_database, pf_database_free>;
using Report = Handle<pf_report, pf_report_free>;

std::string path_in(const std::string& dir, const char* name) { return (fs::path(dir) / name).string(); }

// Wall-clock figures live apart from the deterministic outputs.
void record_timing(const std::string& dir, const std::string& key, const nlohmann::json& value) {
  const std::string path = path_in(dir, "timings.json");
  nlohmann::json j = nlohmann::json::object();
  if (std::ifstream in(path); in) {
    j = nlohmann::json::parse(in, nullptr, false);
    if (!j.is_object()) j = nlohmann::json::object();
  }
  j[key] = value;
  std::ofstream(path) << j.dump(2) << "\n";
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void apply_sets(pf_config* cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) check(pf_config_set(cfg, s.c_str()), "--set " + s);
}

void config_from_db(const pf_database* db, const std::vector<std::string>& sets, Config& cfg) {
  check(pf_database_config(db, &cfg.p), "reading stored config");
  apply_sets(cfg.p, sets);
}

void cmd_build(const std::string& config_path, std::string out, const std::vector<std::string>& sets) {
  Config cfg;
  check(pf_config_load(config_path.c_str(), &cfg.p), "loading config");
  apply_sets(cfg.p, sets);
  if (out.empty()) {
    const auto j = nlohmann::json::parse(take([&] {
      char* s = nullptr;
      check(pf_config_to_json(cfg.p, &s), "config");
      return s;
    }()));
    out = j.at("output_dir").get<std::string>();
  }
  fs::create_directories(out);
  const auto t0 = std::chrono::steady_clock::now();
  Database train, validation;
  check(pf_build(cfg.p, on_progress, nullptr, &train.p, &validation.p), "build");
  check(pf_database_save(train.p, path_in(out, "train.pfdb").c_str()), "saving training database");
  check(pf_database_save(validation.p, path_in(out, "validation.pfdb").c_str()), "saving validation database");
  record_timing(out, "build_seconds", since(t0));
  int n = 0, m = 0, count = 0;
  check(pf_database_dims(train.p, &n, &m, &count, nullptr), "dims");
  std::printf("built %d training ROMs (n = %d, m = %d) in %s\n", count, n, m, out.c_str());
}

void cmd_fit(const std::string& out, const std::vector<std::string>& sets) {
  const auto t0 = std::chrono::steady_clock::now();
  Database train, validation;
  check(pf_database_load(path_in(out, "train.pfdb").c_str(), &train.p), "loading training database");
  check(pf_database_load(path_in(out, "validation.pfdb").c_str(), &validation.p), "loading validation database");
  Config cfg;
  config_from_db(train.p, sets, cfg);
  check(pf_fit(train.p, validation.p, cfg.p), "fit");
  check(pf_database_save(train.p, path_in(out, "train.pfdb").c_str()), "saving training database");
  record_timing(out, "fit_seconds", since(t0));
  const auto info = nlohmann::json::parse(take([&] {
    char* s = nullptr;
    check(pf_database_info(train.p, &s), "info");
    return s;
  }()));
  std::printf("%-6s %-12s %-12s\n", "op", "eps", "e_rel");
  for (const auto& [op, v] : info.at("prom").at("operators").items())
    std::printf("%-6s %-12.5g %-12.5g\n", op.c_str(), v.at("eps").get<double>(), v.at("e_rel").get<double>());
}

void cmd_bench(const std::string& out, const std::vector<std::string>& sets) {
  const auto t0 = std::chrono::steady_clock::now();
  Database train;
  check(pf_database_load(path_in(out, "train.pfdb").c_str(), &train.p), "loading training database");
  Config cfg;
  config_from_db(train.p, sets, cfg);
  Report rep;
  check(pf_bench(train.p, cfg.p, on_progress, nullptr, &rep.p), "bench");
  check(pf_report_save(rep.p, path_in(out, "bench.pfrep").c_str()), "saving report");
  const auto timings = nlohmann::json::parse(take([&] {
    char* s = nullptr;
    check(pf_report_timings(rep.p, &s), "timings");
    return s;
  }()));
  record_timing(out, "bench", timings);
  record_timing(out, "bench_seconds", since(t0));
  const auto summary = nlohmann::json::parse(take([&] {
    char* s = nullptr;
    check(pf_report_summary(rep.p, &s), "summary");
    return s;
  }()));
  std::printf("%-4s %-14s %-14s %-14s %-14s\n", "pt", "interpolated", "closest", "recomputed", "linearized");
  for (const auto& tp : summary.at("test_points")) {
    std::printf("%-4d", tp.at("index").get<int>());
    for (const char* k : {"interpolated", "closest", "recomputed", "linearized"}) {
      const auto& e = tp.at("models").at(k).at("relative_l2_error");
      if (e.is_null())
        std::printf(" %-14s", "failed");
      else
        std::printf(" %-14.4e", e.get<double>());
    }
    std::printf("\n");
  }
}

void cmd_export(const std::string& out, std::string dir) {
  if (dir.empty()) dir = path_in(out, "export");
  Report rep;
  check(pf_report_load(path_in(out, "bench.pfrep").c_str(), &rep.p), "loading report");
  check(pf_report_export(rep.p, dir.c_str()), "export");
  std::printf("exported histories and summary.json to %s\n", dir.c_str());
}

void cmd_inspect(const std::string& path) {
  Database db;
  check(pf_database_load(path.c_str(), &db.p), "loading " + path);
  std::printf("%s\n", take([&] {
                        char* s = nullptr;
                        check(pf_database_info(db.p, &s), "info");
                        return s;
                      }())
                          .c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Parametric reduced-order models for geometrically nonlinear beams"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pf_version());

  std::string config_path, out, export_dir, db_path;
  std::vector<std::string> sets;

  auto* build = app.add_subcommand("build", "build the training and validation ROM databases");
  build->add_option("--config", config_path, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
  build->add_option("--out", out, "output directory (default: output_dir of the config)");
  build->add_option("--set", sets, "override a scalar setting, e.g. --set sampling.n_train=12");

  auto* fit = app.add_subcommand("fit", "select RBF shape parameters and attach the PROM");
  fit->add_option("--out", out, "directory holding train.pfdb and validation.pfdb")->required();
  fit->add_option("--set", sets, "override a scalar setting (interpolation.*)");

  auto* bench = app.add_subcommand("bench", "five-model benchmark at the test points");
  bench->add_option("--out", out, "directory holding train.pfdb")->required();
  bench->add_option("--set", sets, "override a scalar setting (integration.*, load.*)");

  auto* exp = app.add_subcommand("export", "write CSV histories and summary.json from bench.pfrep");
  exp->add_option("--out", out, "directory holding bench.pfrep")->required();
  exp->add_option("--dir", export_dir, "export directory (default: <out>/export)");

  auto* inspect = app.add_subcommand("inspect", "print a database description as JSON");
  inspect->add_option("db", db_path, "database file")->required();

  CLI11_PARSE(app, argc, argv);
  try {
    if (*build) cmd_build(config_path, out, sets);
    if (*fit) cmd_fit(out, sets);
    if (*bench) cmd_bench(out, sets);
    if (*exp) cmd_export(out, export_dir);
    if (*inspect) cmd_inspect(db_path);
  } catch (const Failure& f) {
    std::fprintf(stderr, "promforge: %s (%s)\n", f.what.c_str(), pf_status_name(f.status));
    return static_cast<int>(f.status) == 0 ? 1 : static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "promforge: %s\n", e.what());
    return 1;
  }
  return 0;
}
