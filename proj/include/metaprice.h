/* C interface to the meta-pricing simulation library.
 *
 * Every function returns a status code (MP_OK on success); constructors
 * store their result through an out-parameter. On failure the thread-local
 * message from mp_last_error() describes the problem. Handles are opaque
 * and must be released with the matching *_free function.
 */
#ifndef METAPRICE_H
#define METAPRICE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; the CLI uses them verbatim as exit codes. */
enum {
  MP_OK = 0,
  MP_ERR_INTERNAL = 1,   /* unexpected failure */
  MP_ERR_CONFIG = 2,     /* invalid configuration or arguments */
  MP_ERR_DATA = 3,       /* malformed or insufficient input data */
  MP_ERR_INFEASIBLE = 4  /* structurally infeasible experiment */
};

typedef struct mp_config mp_config;  /* experiment declaration */
typedef struct mp_result mp_result;  /* finished experiment */
typedef struct mp_fitted mp_fitted;  /* fitted historical models */
typedef struct mp_replay mp_replay;  /* finished replay */

/* Library version string, e.g. "0.1.0". */
const char* mp_version(void);

/* Message for this thread's most recent failing call ("" if none). The
 * pointer stays valid until the next failing call on the same thread. */
const char* mp_last_error(void);

/* Frees strings returned through char** out-parameters. */
void mp_string_free(char* s);

/* --- Experiment configuration ------------------------------------- */

/* Built-in scenario by name: fig1, fig2a, fig2b, fig3, desk. */
int mp_config_preset(const char* name, mp_config** out);
/* Reads a JSON config file. */
int mp_config_load(const char* path, mp_config** out);
/* Parses a JSON config from memory. */
int mp_config_parse(const char* json_text, mp_config** out);
/* Serializes the config back to JSON (round-trips losslessly). */
int mp_config_dump(const mp_config* config, char** json_out);

int mp_config_set_trials(mp_config* config, int trials);
int mp_config_set_seed(mp_config* config, uint64_t seed);
int mp_config_set_threads(mp_config* config, int threads);
int mp_config_set_rho(mp_config* config, double rho);
/* "paper" or "theory". */
int mp_config_set_ucb_mode(mp_config* config, const char* mode);
/* Comma-separated policy names, e.g. "meta-dp,greedy,prior-free". */
int mp_config_set_policies(mp_config* config, const char* names);

void mp_config_free(mp_config* config);

/* --- Running ------------------------------------------------------ */

int mp_run(const mp_config* config, mp_result** out);

/* CSV columns: epoch,policy,mean_cum_meta_regret,stderr,trials. */
int mp_result_write_csv(const mp_result* result, const char* path);
int mp_result_write_manifest(const mp_result* result,
                             const mp_config* config, const char* path);

/* Copies up to `cap` entries of the named policy's mean cumulative-regret
 * curve into `mean_out` and stores the full length in `len_out`. Call with
 * cap = 0 to query the length. */
int mp_result_curve(const mp_result* result, const char* policy,
                    double* mean_out, size_t cap, size_t* len_out);

void mp_result_free(mp_result* result);

/* Derived schedule constants for a config, as a JSON report. */
int mp_constants_json(const mp_config* config, char** json_out);

/* --- Historical data ---------------------------------------------- */

/* Reads a CSV with the given JSON schema file, fits per-epoch demand
 * models, and writes the fitted-model archive to fitted_out_path. When
 * log_json_out is non-NULL it receives a JSON array of log lines. */
int mp_ingest(const char* csv_path, const char* schema_path,
              const char* fitted_out_path, char** log_json_out);

int mp_fitted_load(const char* path, mp_fitted** out);
void mp_fitted_free(mp_fitted* fitted);

/* Replays the requested policies against the fitted models.
 * policies: comma-separated names. permutations: number of trials, each
 * re-ordering rounds within every epoch. shuffle_epochs: 0 keeps the
 * lexicographic epoch order, 1 shuffles it once (seeded). The three
 * phase-length arguments replace the run-sized defaults when > 0. */
int mp_replay_run(const mp_fitted* fitted, const char* policies,
                  int permutations, uint64_t seed, int shuffle_epochs,
                  double rho, long long exploration_epochs,
                  long long cov_exploration_epochs, long long forced_rounds,
                  mp_replay** out);

int mp_replay_write_csv(const mp_replay* replay, const char* path);
int mp_replay_write_manifest(const mp_replay* replay,
                             const mp_fitted* fitted, const char* path);
void mp_replay_free(mp_replay* replay);

/* --- Small computational entry points ------------------------------ */

/* Revenue-optimal price for demand <alpha,x> + p <beta,x> on
 * [p_min, p_max]; alpha, beta, x have length dim. */
int mp_optimal_price(const double* alpha, const double* beta,
                     const double* x, int dim, double p_min, double p_max,
                     double* price_out, double* revenue_out);

#ifdef __cplusplus
}
#endif

#endif /* METAPRICE_H */
