/* C interface to the iwalk numerics library.
 *
 * Objects are opaque handles released with the matching *_free function.
 * Every fallible call returns an iwalk_status; on failure the message is
 * available from iwalk_last_error() on the same thread until the next call.
 * Status values double as the command-line exit codes. */
#ifndef IWALK_IWALK_H
#define IWALK_IWALK_H

#include <stddef.h>
#include <stdint.h>

#if defined(IWALK_BUILDING_LIBRARY)
#define IWALK_API __attribute__((visibility("default")))
#else
#define IWALK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum iwalk_status {
  IWALK_OK = 0,
  IWALK_E_VALIDATION = 2, /* bad parameters or input */
  IWALK_E_NUMERIC = 3,    /* deficit budget exceeded, fit rejected, solver failure */
  IWALK_E_IO = 4,
  IWALK_E_INTERNAL = 5
} iwalk_status;

typedef struct iwalk_env iwalk_env;
typedef struct iwalk_report iwalk_report;

IWALK_API const char* iwalk_last_error(void);
IWALK_API const char* iwalk_version(void);
IWALK_API void iwalk_string_free(char* s);

/* ---- environments ---------------------------------------------------- */

typedef struct iwalk_truncation {
  size_t sites;    /* materialized sites 0..sites-1 */
  size_t n_cap;    /* largest stored tail index */
  double tail_tol; /* stop the tail once omega_N <= tail_tol */
} iwalk_truncation;

IWALK_API iwalk_truncation iwalk_truncation_default(void);

/* omega_n = r^n */
IWALK_API iwalk_status iwalk_env_geometric(double r, const iwalk_truncation* t, iwalk_env** out);
/* omega_n = (n + 1)^-beta */
IWALK_API iwalk_status iwalk_env_powerlaw(double beta, const iwalk_truncation* t, iwalk_env** out);
/* omega_n = c_n of the intermittent map with exponent alpha. Pass exactly
 * one of c and kappa; the other as NaN. */
IWALK_API iwalk_status iwalk_env_lsv(double alpha, double c, double kappa,
                                     const iwalk_truncation* t, iwalk_env** out);
/* Every sojourn lasts one step. */
IWALK_API iwalk_status iwalk_env_degenerate(size_t sites, iwalk_env** out);
/* Quenched sample of a random model given as JSON text. */
IWALK_API iwalk_status iwalk_env_random(const char* model_json, uint64_t seed,
                                        const iwalk_truncation* t, iwalk_env** out);
IWALK_API iwalk_status iwalk_env_parse(const char* json_text, iwalk_env** out);
IWALK_API iwalk_status iwalk_env_read(const char* path, iwalk_env** out);
/* Environment file text; release with iwalk_string_free. */
IWALK_API iwalk_status iwalk_env_to_json(const iwalk_env* env, char** out);
IWALK_API size_t iwalk_env_size(const iwalk_env* env);
/* omega^x_n; 0 beyond the stored tail. */
IWALK_API iwalk_status iwalk_env_omega(const iwalk_env* env, size_t x, size_t n, double* out);
IWALK_API iwalk_status iwalk_env_deficit(const iwalk_env* env, size_t x, double* out);
IWALK_API void iwalk_env_free(iwalk_env* env);

/* ---- reports ----------------------------------------------------------- */

/* A report is a list of named text artifacts (CSV or JSON) plus named
 * scalar results. */
IWALK_API size_t iwalk_report_artifact_count(const iwalk_report* r);
IWALK_API const char* iwalk_report_artifact_name(const iwalk_report* r, size_t i);
IWALK_API const char* iwalk_report_artifact_text(const iwalk_report* r, size_t i);
IWALK_API size_t iwalk_report_scalar_count(const iwalk_report* r);
IWALK_API const char* iwalk_report_scalar_name(const iwalk_report* r, size_t i);
IWALK_API double iwalk_report_scalar_value(const iwalk_report* r, size_t i);
/* Looks a scalar up by name. */
IWALK_API iwalk_status iwalk_report_scalar(const iwalk_report* r, const char* name, double* out);
/* Human-readable summary lines. */
IWALK_API const char* iwalk_report_summary(const iwalk_report* r);
/* Writes every artifact into dir (created if missing). Existing files are
 * only replaced when overwrite is non-zero. */
IWALK_API iwalk_status iwalk_report_write(const iwalk_report* r, const char* dir, int overwrite);
IWALK_API void iwalk_report_free(iwalk_report* r);

/* ---- pipelines --------------------------------------------------------- */

/* Shared numeric knobs. beta = NaN uses the site family's own exponent and
 * falls back to default_beta where the family has none. */
typedef struct iwalk_numeric_options {
  double beta;
  double default_beta;
  double trunc_tol;      /* per-convolution trimming */
  double deficit_budget; /* fail beyond this much untracked mass */
} iwalk_numeric_options;

IWALK_API iwalk_numeric_options iwalk_numeric_options_default(void);

/* diagnostics.csv, generalized_inverse.csv, fit.json, fit_residuals.csv and,
 * for random environments, model.json with the moment report. */
IWALK_API iwalk_status iwalk_run_env_tables(const iwalk_env* env, const iwalk_numeric_options* o,
                                            double q, iwalk_report** out);

/* exact_n<N>.csv (x,prob,deficit_bound) per grid point. */
IWALK_API iwalk_status iwalk_run_exact(const iwalk_env* env, const size_t* n_grid, size_t count,
                                       const iwalk_numeric_options* o, iwalk_report** out);

typedef enum iwalk_record { IWALK_RECORD_ENDPOINT = 0, IWALK_RECORD_FULL_PATH = 1,
                            IWALK_RECORD_HITTING_TIMES = 2 } iwalk_record;
typedef enum iwalk_engine { IWALK_ENGINE_CHAIN = 0, IWALK_ENGINE_RENEWAL = 1 } iwalk_engine;

typedef struct iwalk_mc_options {
  size_t paths;
  size_t horizon;
  uint64_t seed;
  iwalk_record record;
  iwalk_engine engine;
  size_t hit_sites; /* hitting-times mode */
} iwalk_mc_options;

IWALK_API iwalk_mc_options iwalk_mc_options_default(void);

/* mc_endpoint.csv (+ exact comparison and TV distance), mc_paths.csv or
 * mc_hitting.csv depending on the record mode. */
IWALK_API iwalk_status iwalk_run_mc(const iwalk_env* env, const iwalk_mc_options* mc,
                                    const iwalk_numeric_options* o, iwalk_report** out);

typedef struct iwalk_dynsys_options {
  size_t paths;
  size_t horizon;
  uint64_t seed;
  int extended_precision; /* non-zero: 113-bit fractional state */
  const size_t* times;    /* record times; NULL means {horizon} */
  size_t time_count;
} iwalk_dynsys_options;

IWALK_API iwalk_dynsys_options iwalk_dynsys_options_default(void);

/* dynsys_cells.csv, dynsys_levels.csv, dynsys_exact.csv, dynsys_tv.csv */
IWALK_API iwalk_status iwalk_run_dynsys(const iwalk_env* env, const iwalk_dynsys_options* d,
                                        const iwalk_numeric_options* o, iwalk_report** out);

/* Limit parameters: mu/sigma2 = NaN fits them from diagnostics. */
typedef struct iwalk_limit_options {
  double mu;
  double sigma2;
  double eta;
} iwalk_limit_options;

IWALK_API iwalk_limit_options iwalk_limit_options_default(void);

/* llt_n<N>.json per grid point, llt_summary.csv, and llt_decomposition.csv
 * when decomposition sites are given. */
IWALK_API iwalk_status iwalk_run_llt(const iwalk_env* env, const size_t* n_grid, size_t count,
                                     const size_t* decomposition_x, size_t x_count,
                                     const iwalk_limit_options* l, const iwalk_numeric_options* o,
                                     iwalk_report** out);

/* clt.csv */
IWALK_API iwalk_status iwalk_run_clt(const iwalk_env* env, const size_t* n_grid, size_t count,
                                     const iwalk_limit_options* l, const iwalk_numeric_options* o,
                                     iwalk_report** out);

typedef struct iwalk_slln_options {
  size_t paths;
  size_t horizon;
  uint64_t seed;
  size_t checkpoints; /* evenly spaced observation times */
  double band;
} iwalk_slln_options;

IWALK_API iwalk_slln_options iwalk_slln_options_default(void);

/* slln.csv, slln_paths.csv */
IWALK_API iwalk_status iwalk_run_slln(const iwalk_env* env, const iwalk_slln_options* s,
                                      const iwalk_limit_options* l, const iwalk_numeric_options* o,
                                      iwalk_report** out);

#ifdef __cplusplus
}
#endif

#endif
