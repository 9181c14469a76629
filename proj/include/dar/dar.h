/* C interface to the rationalization toolkit. All functions return a
 * dar_status; on failure the thread-local message from dar_last_error()
 * describes what went wrong. Strings returned through out-parameters are
 * heap-allocated and must be released with dar_string_free(). */

#ifndef DAR_DAR_H
#define DAR_DAR_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dar_status {
  DAR_OK = 0,
  DAR_ERR_INVALID_ARGUMENT = 1,
  DAR_ERR_IO = 2,
  DAR_ERR_CONFIG = 3,
  DAR_ERR_RUNTIME = 4
} dar_status;

/* Opaque toolkit context. Holds the output root and thread count used by
 * subsequent commands. */
typedef struct dar_ctx dar_ctx;

const char* dar_version(void);

/* out_root may be NULL: the DAR_OUT_ROOT environment variable is used,
 * falling back to "runs". threads must be >= 1. */
dar_status dar_ctx_create(const char* out_root, int threads, dar_ctx** out);
void dar_ctx_destroy(dar_ctx* ctx);

/* Message describing the most recent failure on this thread. */
const char* dar_last_error(void);

void dar_string_free(char* s);

/* Returns the full JSON config document of a named preset. */
dar_status dar_preset_config(const char* name, char** out_json);

/* Newline-separated list of preset names. */
dar_status dar_preset_names(char** out_text);

/* Train + evaluate one run from a JSON config document. seed_override < 0
 * keeps the seed from the config. On success *out_run_dir is the created
 * run directory and *out_metrics_json the metrics document. Either
 * out-parameter may be NULL. */
dar_status dar_run(dar_ctx* ctx, const char* config_json, int64_t seed_override,
                   char** out_run_dir, char** out_metrics_json);

/* Generate a synthetic planted-rationale corpus into out_dir.
 * spec_json may be NULL or "{}" for the defaults. seed_override as above. */
dar_status dar_synth(dar_ctx* ctx, const char* spec_json, int64_t seed_override,
                     const char* out_dir, char** out_dir_used);

/* Randomized verification of the information-theoretic identities by exact
 * enumeration. Fails (DAR_ERR_RUNTIME) if any trial violates its bound;
 * the JSON summary is produced either way when out_json is non-NULL. */
dar_status dar_verify(dar_ctx* ctx, long trials_per_suite, uint64_t seed,
                      char** out_json);

/* Assemble a metrics CSV across finished run directories. run_dirs is an
 * array of n directory paths. */
dar_status dar_report(dar_ctx* ctx, const char* const* run_dirs, int n,
                      char** out_csv);

#ifdef __cplusplus
}
#endif

#endif /* DAR_DAR_H */
