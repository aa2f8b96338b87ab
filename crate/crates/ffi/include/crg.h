#ifndef CRG_H
#define CRG_H

/* Generated from the crg-ffi crate. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Call outcome. Zero is success; any other value leaves a message
// readable through `crg_last_error_message`.
typedef enum CrgStatus {
  CRG_STATUS_OK = 0,
  // A required pointer argument was null.
  CRG_STATUS_NULL_ARGUMENT = 1,
  // Inputs violate a documented precondition.
  CRG_STATUS_INVALID_ARGUMENT = 2,
  // The reference distribution has no positives or no negatives.
  CRG_STATUS_DEGENERATE = 3,
  // An input file or response body could not be parsed.
  CRG_STATUS_PARSE_ERROR = 4,
  // A file could not be read or written.
  CRG_STATUS_IO = 5,
  // Unexpected internal failure.
  CRG_STATUS_INTERNAL = 6,
} CrgStatus;

// Opaque handle to a loaded label matrix.
typedef struct CrgLabelMatrix CrgLabelMatrix;

// Scoring weights derived from a reference label distribution,
// flattened for C callers.
typedef struct CrgWeights {
  // Weight of a true positive (equals the false-negative weight).
  double w_tp;
  double w_fn;
  // Always 1.
  double w_fp;
  // Maximum achievable raw score under these weights.
  double s_max;
} CrgWeights;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string; never freed by
// the caller.
const char *crg_version(void);

// Message from the most recent failing call on this thread, or null if
// nothing has failed yet. The pointer stays valid until the next
// failing call on the same thread; do not free it.
const char *crg_last_error_message(void);

// Releases a string previously returned through an out-pointer.
// Passing null is a no-op.
//
// # Safety
// `s` must have been produced by this library and not freed before.
void crg_string_free(char *s);

// Derives the scoring weights for a reference distribution with
// `total` cells of which `positives` are positive.
//
// # Safety
// `out` must point to writable memory for one `CrgWeights`.
enum CrgStatus crg_weights_derive(uint64_t total, uint64_t positives, struct CrgWeights *out);

// Scores one confusion table. The result lands in [0.2, 1.0]; a
// trivial all-negative or all-positive predictor scores exactly 1/3.
//
// # Safety
// `out_score` must point to writable memory for one `double`.
enum CrgStatus crg_score_from_counts(uint64_t true_positives,
                                     uint64_t false_negatives,
                                     uint64_t false_positives,
                                     uint64_t true_negatives,
                                     double *out_score);

// Loads a label matrix from a JSONL file (header line with the schema
// level, then one record per sample). On success `*out` owns the
// matrix; release it with `crg_label_matrix_free`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` must point to
// writable memory for one pointer.
enum CrgStatus crg_label_matrix_load(const char *path, struct CrgLabelMatrix **out);

// Number of samples in the matrix; 0 for a null handle.
//
// # Safety
// `matrix` must be a live handle from `crg_label_matrix_load` or null.
uint64_t crg_label_matrix_samples(const struct CrgLabelMatrix *matrix);

// 1-based schema level the matrix targets; 0 for a null handle.
//
// # Safety
// `matrix` must be a live handle from `crg_label_matrix_load` or null.
uint64_t crg_label_matrix_level(const struct CrgLabelMatrix *matrix);

// Releases a matrix handle. Passing null is a no-op.
//
// # Safety
// `matrix` must have come from `crg_label_matrix_load` and not been
// freed before.
void crg_label_matrix_free(struct CrgLabelMatrix *matrix);

// Scores predictions against references and writes the full evaluation
// report as a JSON string to `*out_json` (release it with
// `crg_string_free`). With `lenient` set, samples present on only one
// side are dropped with a warning instead of failing the run.
//
// # Safety
// `predictions` and `references` must be live handles from
// `crg_label_matrix_load`; `out_json` must point to writable memory
// for one pointer.
enum CrgStatus crg_evaluate_to_json(const struct CrgLabelMatrix *predictions,
                                    const struct CrgLabelMatrix *references,
                                    bool lenient,
                                    char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CRG_H */
