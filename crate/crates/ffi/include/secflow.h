#ifndef SECFLOW_H
#define SECFLOW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SecflowStatus {
  SecflowStatus_Ok = 0,
  SecflowStatus_NullArgument = 1,
  SecflowStatus_InvalidUtf8 = 2,
  SecflowStatus_Io = 3,
  SecflowStatus_Parse = 4,
  /**
   * Ledger verification found an inconsistency.
   */
  SecflowStatus_Tampered = 5,
  SecflowStatus_Runtime = 6,
} SecflowStatus;

/**
 * A loaded detection ensemble (opaque).
 */
typedef struct SecflowDetector SecflowDetector;

/**
 * A loaded ledger with its submitter directory (opaque).
 */
typedef struct SecflowLedger SecflowLedger;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *secflow_version(void);

/**
 * Message for the most recent error on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *secflow_last_error(void);

/**
 * Release a string returned through an out parameter.
 *
 * # Safety
 * `s` must be a pointer previously returned by this library, or NULL.
 */
void secflow_string_free(char *s);

/**
 * Load a detector bundle (ensemble model file) from `path`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SecflowStatus secflow_detector_load(const char *path, struct SecflowDetector **out);

/**
 * Number of features the detector expects.
 *
 * # Safety
 * `detector` must be a live handle from [`secflow_detector_load`].
 */
uintptr_t secflow_detector_feature_count(const struct SecflowDetector *detector);

/**
 * Score one raw (unnormalized) feature vector. On success writes the fused
 * score to `out_score` and the winning label name to `out_label`
 * (caller frees with [`secflow_string_free`]).
 *
 * # Safety
 * `features` must point to `len` doubles; out pointers must be valid.
 */
enum SecflowStatus secflow_detector_score(const struct SecflowDetector *detector,
                                          const double *features,
                                          uintptr_t len,
                                          double *out_score,
                                          char **out_label);

/**
 * # Safety
 * `detector` must come from [`secflow_detector_load`]; not reused after.
 */
void secflow_detector_free(struct SecflowDetector *detector);

/**
 * Open a persisted ledger file.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` valid.
 */
enum SecflowStatus secflow_ledger_open(const char *path, struct SecflowLedger **out);

/**
 * Verify digests, signatures, block hashes, and linkage. Returns `Ok` for
 * an intact chain; `Tampered` with the earliest fault position written to
 * `out_block` / `out_txn` (-1 when not applicable) otherwise.
 *
 * # Safety
 * `ledger` must be a live handle; out pointers may be NULL if unwanted.
 */
enum SecflowStatus secflow_ledger_verify(const struct SecflowLedger *ledger,
                                         int64_t *out_block,
                                         int64_t *out_txn);

/**
 * Committed records for one flow id as a JSON array string (caller frees
 * with [`secflow_string_free`]).
 *
 * # Safety
 * All pointers must be valid; `flow_id` NUL-terminated.
 */
enum SecflowStatus secflow_ledger_query(const struct SecflowLedger *ledger,
                                        const char *flow_id,
                                        char **out_json);

/**
 * Number of blocks in the chain (including genesis).
 *
 * # Safety
 * `ledger` must be a live handle.
 */
uint64_t secflow_ledger_block_count(const struct SecflowLedger *ledger);

/**
 * # Safety
 * `ledger` must come from [`secflow_ledger_open`]; not reused after.
 */
void secflow_ledger_free(struct SecflowLedger *ledger);

/**
 * Run a scenario end to end with the ground-truth oracle detector and write
 * every artifact (events.jsonl, ledger.chain, ledger.jsonl, report.json)
 * under `out_dir`. `seed` overrides the scenario seed when >= 0.
 *
 * # Safety
 * `scenario_path` and `out_dir` must be NUL-terminated strings.
 */
enum SecflowStatus secflow_simulate(const char *scenario_path,
                                    int64_t seed,
                                    bool enforce,
                                    const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SECFLOW_H */
