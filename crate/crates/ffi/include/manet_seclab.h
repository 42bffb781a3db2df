#ifndef MANET_SECLAB_H
#define MANET_SECLAB_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsAh {
  MS_AH_NONE = 0,
  MS_AH_MD5 = 1,
  MS_AH_SHA1 = 2,
} MsAh;

typedef enum MsEsp {
  MS_ESP_NONE = 0,
  MS_ESP_AES = 1,
  MS_ESP_TDES = 2,
} MsEsp;

typedef enum MsScenario {
  MS_SCENARIO_SINGLE_HOP = 0,
  MS_SCENARIO_MULTI_HOP = 1,
} MsScenario;

typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_UTF8 = 2,
  MS_STATUS_PARSE = 3,
  MS_STATUS_CONFIG = 4,
  MS_STATUS_INVARIANT = 5,
  MS_STATUS_CRYPTO = 6,
  MS_STATUS_PANIC = 7,
} MsStatus;

/**
 * Parsed SAD and SPD.
 */
typedef struct MsDatabases MsDatabases;

/**
 * Parameters of one simulation run.
 */
typedef struct MsRunConfig MsRunConfig;

/**
 * Results of one simulation run.
 */
typedef struct MsRunResult MsRunResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *ms_last_error(void);

/**
 * Library version, static.
 */
const char *ms_version(void);

/**
 * The bundled reference setkey configuration, static.
 */
const char *ms_reference_setkey(void);

/**
 * # Safety
 * `s` must be NULL or a string previously returned through an `out`
 * pointer of this library.
 */
void ms_string_free(char *s);

/**
 * Parses setkey text into a new database handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum MsStatus ms_setkey_parse(const char *text, struct MsDatabases **out);

/**
 * # Safety
 * `dbs` must be NULL or a handle from `ms_setkey_parse`, not yet freed.
 */
void ms_databases_free(struct MsDatabases *dbs);

/**
 * Number of security associations; 0 for NULL.
 *
 * # Safety
 * `dbs` must be NULL or a live handle.
 */
size_t ms_databases_sa_count(const struct MsDatabases *dbs);

/**
 * Number of policies; 0 for NULL.
 *
 * # Safety
 * `dbs` must be NULL or a live handle.
 */
size_t ms_databases_policy_count(const struct MsDatabases *dbs);

/**
 * Renders the databases back to setkey text.
 *
 * # Safety
 * `dbs` must be a live handle; `out` must be writable.
 */
enum MsStatus ms_setkey_render(const struct MsDatabases *dbs, char **out);

/**
 * HMAC-96 of `data` into `icv` (12 bytes).
 *
 * # Safety
 * `key` and `data` must point to `key_len` and `data_len` readable bytes
 * (either may be NULL when its length is 0); `icv` must have room for 12.
 */
enum MsStatus ms_hmac96(enum MsAh ah,
                        const uint8_t *key,
                        size_t key_len,
                        const uint8_t *data,
                        size_t data_len,
                        uint8_t *icv);

/**
 * Defaults: single hop, plain, seed 1, 300 s at 25 packets/s of 1316
 * bytes, parametric delays.
 */
struct MsRunConfig *ms_run_config_new(void);

/**
 * # Safety
 * `cfg` must be NULL or a handle from `ms_run_config_new`, not yet freed.
 */
void ms_run_config_free(struct MsRunConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum MsStatus ms_run_config_set_scenario(struct MsRunConfig *cfg, enum MsScenario scenario);

/**
 * # Safety
 * `cfg` must be a live handle.
 */
enum MsStatus ms_run_config_set_scheme(struct MsRunConfig *cfg, enum MsEsp esp, enum MsAh ah);

/**
 * Sets the seed, stream shape and delay mode in one call. Zero rate or
 * duration is rejected by `ms_run`.
 *
 * # Safety
 * `cfg` must be a live handle.
 */
enum MsStatus ms_run_config_set_traffic(struct MsRunConfig *cfg,
                                        uint64_t seed,
                                        uint64_t duration_us,
                                        uint32_t rate_pps,
                                        size_t payload_bytes,
                                        bool measured);

/**
 * Runs the simulation. Nothing is written to disk.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum MsStatus ms_run(const struct MsRunConfig *cfg, struct MsRunResult **out);

/**
 * # Safety
 * `res` must be NULL or a handle from `ms_run`, not yet freed.
 */
void ms_run_result_free(struct MsRunResult *res);

/**
 * Stream packets emitted; 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live handle.
 */
uint64_t ms_run_result_sent(const struct MsRunResult *res);

/**
 * Stream packets delivered to the receiver; 0 for NULL.
 *
 * # Safety
 * `res` must be NULL or a live handle.
 */
uint64_t ms_run_result_received(const struct MsRunResult *res);

/**
 * Mean sampled end-to-end delay in microseconds. `Config` when nothing was
 * delivered.
 *
 * # Safety
 * `res` must be a live handle; `out` must be writable.
 */
enum MsStatus ms_run_result_avg_delay_us(const struct MsRunResult *res, double *out);

/**
 * Hex SHA-256 of the trace, borrowed from the handle.
 *
 * # Safety
 * `res` must be NULL or a live handle.
 */
const char *ms_run_result_trace_hash(const struct MsRunResult *res);

/**
 * The per-node report as CSV, header included.
 *
 * # Safety
 * `res` must be a live handle; `out` must be writable.
 */
enum MsStatus ms_run_result_csv(const struct MsRunResult *res, char **out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MANET_SECLAB_H */
