#ifndef PROMFORGE_H
#define PROMFORGE_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define PF_API __declspec(dllexport)
#else
#define PF_API __attribute__((visibility("default")))
#endif

typedef struct pf_config pf_config;
typedef struct pf_database pf_database;
typedef struct pf_report pf_report;

typedef enum pf_status {
  PF_OK = 0,
  PF_ERR_INVALID_ARGUMENT = 1,
  PF_ERR_CONFIG = 2,
  PF_ERR_IO = 3,
  PF_ERR_CORRUPT_FILE = 4,
  PF_ERR_VERSION_MISMATCH = 5,
  PF_ERR_CHECKSUM = 6,
  PF_ERR_NON_CONVERGENCE = 7,
  PF_ERR_EMPTY_SELECTION = 8,
  PF_ERR_DUPLICATE_ASSIGNMENT = 9,
  PF_ERR_STRUCTURE_VIOLATION = 10,
  PF_ERR_NUMERIC = 11,
  PF_ERR_INTERNAL = 99
} pf_status;

/* Progress callback; `message` is valid only during the call. */
typedef void (*pf_progress_fn)(const char* message, void* user);

/* Message of the last failing call on this thread ("" if none). */
PF_API const char* pf_last_error(void);
PF_API const char* pf_status_name(pf_status s);
PF_API const char* pf_version(void);
/* Strings returned through char** out-parameters are released with this. */
PF_API void pf_string_free(char* s);

/* Run configuration (JSON text, schema in docs/config.md). */
PF_API pf_status pf_config_load(const char* path, pf_config** out);
PF_API pf_status pf_config_parse(const char* json_text, pf_config** out);
/* "section.key=value" on a scalar setting. */
PF_API pf_status pf_config_set(pf_config* cfg, const char* assignment);
PF_API pf_status pf_config_to_json(const pf_config* cfg, char** out);
PF_API void pf_config_free(pf_config* cfg);

/* Training database plus the validation database built with its global basis. */
PF_API pf_status pf_build(const pf_config* cfg, pf_progress_fn progress, void* user, pf_database** train,
                          pf_database** validation);
/* Selects shape parameters on `validation` and attaches the PROM to `train`.
   `cfg` may be NULL to use the configuration stored in `train`. */
PF_API pf_status pf_fit(pf_database* train, const pf_database* validation, const pf_config* cfg);
/* Five-model benchmark at the configured test points. `cfg` may be NULL. */
PF_API pf_status pf_bench(const pf_database* train, const pf_config* cfg, pf_progress_fn progress, void* user,
                          pf_report** out);

PF_API pf_status pf_database_save(const pf_database* db, const char* path);
PF_API pf_status pf_database_load(const char* path, pf_database** out);
/* JSON description: role, dimensions, samples, audit figures, PROM table. */
PF_API pf_status pf_database_info(const pf_database* db, char** out);
PF_API pf_status pf_database_config(const pf_database* db, pf_config** out);
PF_API pf_status pf_database_dims(const pf_database* db, int* n_dofs, int* m, int* n_samples, int* has_prom);
/* Interpolated reduced stiffness diagonal (length m) at a normalized point. */
PF_API pf_status pf_prom_evaluate_k1(const pf_database* db, const double* p_hat, int n_p, double* k1, int m);
PF_API void pf_database_free(pf_database* db);

PF_API pf_status pf_report_save(const pf_report* r, const char* path);
PF_API pf_status pf_report_load(const char* path, pf_report** out);
/* One CSV per (test point, model) and summary.json in `dir`. */
PF_API pf_status pf_report_export(const pf_report* r, const char* dir);
PF_API pf_status pf_report_summary(const pf_report* r, char** out);
PF_API pf_status pf_report_timings(const pf_report* r, char** out);
PF_API void pf_report_free(pf_report* r);

#ifdef __cplusplus
}
#endif

#endif
