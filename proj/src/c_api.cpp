#include "promforge/promforge.h"

#include "promforge/errors.hpp"
#include "promforge/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

struct pf_config {
  promforge::config::RunConfig cfg;
};

struct pf_database {
  promforge::pipeline::RomDatabase db;
};

struct pf_report {
  promforge::pipeline::BenchmarkReport report;
};

namespace {

using namespace promforge;

thread_local std::string g_last_error;

pf_status status_of(ErrorCode c) { return static_cast<pf_status>(static_cast<int>(c)); }

template <class Fn>
pf_status guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return PF_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PF_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return PF_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) throw Error(ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pipeline::Progress progress_of(pf_progress_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& m) { fn(m.c_str(), user); };
}

nlohmann::json database_info(const pipeline::RomDatabase& db) {
  nlohmann::json j;
  j["format_version"] = io::kFormatVersion;
  j["role"] = sampling::role_name(db.role);
  j["n_dofs"] = db.n();
  j["m"] = db.m();
  j["m_phi"] = db.m_phi;
  j["m_theta"] = db.m_theta;
  j["n_samples"] = db.size();
  j["identification_evaluations"] = db.evaluations;
  double mass = 0.0, leak = 0.0, asym = 0.0;
  nlohmann::json samples = nlohmann::json::array();
  for (int i = 0; i < db.size(); ++i) {
    const auto& r = db.records[i];
    mass = std::max(mass, r.mass_offdiag);
    leak = std::max(leak, r.stiffness_leakage);
    asym = std::max(asym, r.asymmetry);
    const auto& p = db.physical[i];
    samples.push_back({{"p", std::vector<double>(p.data(), p.data() + p.size())},
                       {"omega", std::vector<double>(r.rom.k1.data(), r.rom.k1.data() + r.rom.k1.size())},
                       {"alpha", r.rom.alpha},
                       {"beta", r.rom.beta},
                       {"reference", r.reference},
                       {"evaluations", r.evaluations}});
    auto& om = samples.back()["omega"];
    for (auto& v : om) v = std::sqrt(v.get<double>());
  }
  j["samples"] = samples;
  j["audit"] = {{"max_mass_deviation", mass}, {"max_stiffness_leakage", leak}, {"max_tensor_asymmetry", asym}};
  if (db.prom) {
    nlohmann::json eps;
    for (auto op : interp::all_operators()) {
      const int i = static_cast<int>(op);
      eps[interp::operator_name(op)] = {{"eps", db.prom->validation.selected[i]},
                                        {"e_rel", db.prom->validation.e_rel[i][db.prom->validation.selected_index[i]]}};
    }
    j["prom"] = {{"kernel", interp::kernel_name(db.prom->validation.kind)}, {"operators", eps}};
  }
  return j;
}

}  // namespace

extern "C" {

const char* pf_last_error(void) { return g_last_error.c_str(); }

const char* pf_status_name(pf_status s) {
  switch (s) {
    case PF_OK: return "ok";
    case PF_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case PF_ERR_CONFIG: return "config";
    case PF_ERR_IO: return "io";
    case PF_ERR_CORRUPT_FILE: return "corrupt_file";
    case PF_ERR_VERSION_MISMATCH: return "version_mismatch";
    case PF_ERR_CHECKSUM: return "checksum";
    case PF_ERR_NON_CONVERGENCE: return "non_convergence";
    case PF_ERR_EMPTY_SELECTION: return "empty_selection";
    case PF_ERR_DUPLICATE_ASSIGNMENT: return "duplicate_assignment";
    case PF_ERR_STRUCTURE_VIOLATION: return "structure_violation";
    case PF_ERR_NUMERIC: return "numeric";
    case PF_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* pf_version(void) { return "1.0.0"; }

void pf_string_free(char* s) { std::free(s); }

pf_status pf_config_load(const char* path, pf_config** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new pf_config{config::load_config(path)};
  });
}

pf_status pf_config_parse(const char* json_text, pf_config** out) {
  return guard([&] {
    need(json_text, "json_text");
    need(out, "out");
    const auto j = nlohmann::json::parse(json_text, nullptr, false, true);
    if (j.is_discarded()) throw Error(ErrorCode::kConfig, "config: text is not valid JSON");
    *out = new pf_config{config::from_json(j)};
  });
}

pf_status pf_config_set(pf_config* cfg, const char* assignment) {
  return guard([&] {
    need(cfg, "cfg");
    need(assignment, "assignment");
    auto j = config::to_json(cfg->cfg);
    config::apply_override(j, assignment);
    cfg->cfg = config::from_json(j);
  });
}

pf_status pf_config_to_json(const pf_config* cfg, char** out) {
  return guard([&] {
    need(cfg, "cfg");
    need(out, "out");
    *out = dup_string(config::to_json(cfg->cfg).dump(2));
  });
}

void pf_config_free(pf_config* cfg) { delete cfg; }

pf_status pf_build(const pf_config* cfg, pf_progress_fn progress, void* user, pf_database** train,
                   pf_database** validation) {
  return guard([&] {
    need(cfg, "cfg");
    need(train, "train");
    need(validation, "validation");
    const auto p = progress_of(progress, user);
    auto t = std::make_unique<pf_database>(pf_database{pipeline::build_database(cfg->cfg, p)});
    auto v = std::make_unique<pf_database>(
        pf_database{pipeline::build_companion_database(cfg->cfg, t->db, sampling::SampleRole::kValidation, p)});
    *train = t.release();
    *validation = v.release();
  });
}

pf_status pf_fit(pf_database* train, const pf_database* validation, const pf_config* cfg) {
  return guard([&] {
    need(train, "train");
    need(validation, "validation");
    const config::RunConfig c = cfg ? cfg->cfg : train->db.run_config();
    train->db.prom = pipeline::fit_prom(train->db, validation->db, c);
  });
}

pf_status pf_bench(const pf_database* train, const pf_config* cfg, pf_progress_fn progress, void* user,
                   pf_report** out) {
  return guard([&] {
    need(train, "train");
    need(out, "out");
    const config::RunConfig c = cfg ? cfg->cfg : train->db.run_config();
    *out = new pf_report{
        pipeline::run_benchmark(train->db, c, pipeline::test_points(c), progress_of(progress, user))};
  });
}

pf_status pf_database_save(const pf_database* db, const char* path) {
  return guard([&] {
    need(db, "db");
    need(path, "path");
    pipeline::save_database(db->db, path);
  });
}

pf_status pf_database_load(const char* path, pf_database** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new pf_database{pipeline::load_database(path)};
  });
}

pf_status pf_database_info(const pf_database* db, char** out) {
  return guard([&] {
    need(db, "db");
    need(out, "out");
    *out = dup_string(database_info(db->db).dump(2));
  });
}

pf_status pf_database_config(const pf_database* db, pf_config** out) {
  return guard([&] {
    need(db, "db");
    need(out, "out");
    *out = new pf_config{db->db.run_config()};
  });
}

pf_status pf_database_dims(const pf_database* db, int* n_dofs, int* m, int* n_samples, int* has_prom) {
  return guard([&] {
    need(db, "db");
    if (n_dofs) *n_dofs = db->db.n();
    if (m) *m = db->db.m();
    if (n_samples) *n_samples = db->db.size();
    if (has_prom) *has_prom = db->db.prom.has_value() ? 1 : 0;
  });
}

pf_status pf_prom_evaluate_k1(const pf_database* db, const double* p_hat, int n_p, double* k1, int m) {
  return guard([&] {
    need(db, "db");
    need(p_hat, "p_hat");
    need(k1, "k1");
    require(db->db.prom.has_value(), "database carries no PROM");
    require(m == db->db.m(), "k1 buffer length differs from m");
    const sampling::Point p = Eigen::Map<const Eigen::VectorXd>(p_hat, n_p);
    const auto ops = interp::evaluate(db->db.prom->model, p);
    Eigen::Map<Eigen::VectorXd>(k1, m) = ops.k1;
  });
}

void pf_database_free(pf_database* db) { delete db; }

pf_status pf_report_save(const pf_report* r, const char* path) {
  return guard([&] {
    need(r, "report");
    need(path, "path");
    pipeline::save_report(r->report, path);
  });
}

pf_status pf_report_load(const char* path, pf_report** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = new pf_report{pipeline::load_report(path)};
  });
}

pf_status pf_report_export(const pf_report* r, const char* dir) {
  return guard([&] {
    need(r, "report");
    need(dir, "dir");
    pipeline::export_histories(r->report, dir);
  });
}

pf_status pf_report_summary(const pf_report* r, char** out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    *out = dup_string(pipeline::summary_json(r->report).dump(2));
  });
}

pf_status pf_report_timings(const pf_report* r, char** out) {
  return guard([&] {
    need(r, "report");
    need(out, "out");
    *out = dup_string(pipeline::timings_json(r->report).dump(2));
  });
}

void pf_report_free(pf_report* r) { delete r; }

}  // extern "C"
