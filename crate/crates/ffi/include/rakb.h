#ifndef RAKB_H
#define RAKB_H

/* Generated by cbindgen. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum RakbEnsemble {
  RAKB_ENSEMBLE_MAJORITY_VOTE = 0,
  RAKB_ENSEMBLE_RATIO = 1,
  RAKB_ENSEMBLE_AVERAGE = 2,
} RakbEnsemble;

typedef enum RakbRetrieval {
  /**
   * No retrieval: the query's own CM score is the prediction.
   */
  RAKB_RETRIEVAL_NONE = 0,
  RAKB_RETRIEVAL_CM = 1,
  RAKB_RETRIEVAL_PROFILE = 2,
  RAKB_RETRIEVAL_HYBRID = 3,
} RakbRetrieval;

/**
 * Result codes.
 */
typedef enum RakbStatus {
  RAKB_STATUS_OK = 0,
  RAKB_STATUS_NULL_POINTER = 1,
  RAKB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Malformed input files or invalid configuration.
   */
  RAKB_STATUS_INPUT_ERROR = 3,
  /**
   * Well-formed input that cannot be used, e.g. a corrupt knowledge base
   * or a dimension mismatch.
   */
  RAKB_STATUS_DATA_ERROR = 4,
  RAKB_STATUS_BUFFER_TOO_SMALL = 5,
  RAKB_STATUS_INTERNAL_ERROR = 6,
  RAKB_STATUS_PANIC = 7,
} RakbStatus;

/**
 * Loaded knowledge base.
 */
typedef struct RakbBase RakbBase;

/**
 * Loaded query set.
 */
typedef struct RakbQueries RakbQueries;

typedef struct RakbMethod {
  /**
   * A `RakbRetrieval` value.
   */
  uint32_t retrieval;
  /**
   * A `RakbEnsemble` value.
   */
  uint32_t ensemble;
  /**
   * Ignored when `retrieval` is `None`.
   */
  size_t k;
} RakbMethod;

typedef struct RakbReport {
  /**
   * NaN when `eer_available` is false (one class absent).
   */
  double eer;
  bool eer_available;
  double accuracy;
  size_t n_queries;
  size_t n_real;
  size_t n_fake;
  size_t true_fake;
  size_t false_fake;
  size_t true_real;
  size_t false_real;
} RakbReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rakb_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * including the terminator; pass a null `buf` to query it.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t rakb_last_error_message(char *buf, size_t len);

/**
 * Opens a binary knowledge base.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be valid for a write.
 */
enum RakbStatus rakb_base_load(const char *path, struct RakbBase **out);

/**
 * Builds a knowledge base from a JSONL file. `layout` may be null for the
 * default voice profile layout.
 *
 * # Safety
 * `path` and non-null `layout` must be NUL-terminated strings; `out` must be
 * valid for a write.
 */
enum RakbStatus rakb_base_build_jsonl(const char *path, const char *layout, struct RakbBase **out);

/**
 * Writes `base` in the binary format.
 *
 * # Safety
 * `base` must come from this library; `path` must be NUL-terminated.
 */
enum RakbStatus rakb_base_save(const struct RakbBase *base, const char *path);

/**
 * # Safety
 * `base` must be null or a handle from this library not yet freed.
 */
void rakb_base_free(struct RakbBase *base);

/**
 * Number of rows; 0 for a null handle.
 *
 * # Safety
 * `base` must be null or a live handle.
 */
size_t rakb_base_len(const struct RakbBase *base);

/**
 * # Safety
 * `base` must be null or a live handle.
 */
size_t rakb_base_d_cm(const struct RakbBase *base);

/**
 * # Safety
 * `base` must be null or a live handle.
 */
size_t rakb_base_d_prof(const struct RakbBase *base);

/**
 * Reads a JSONL query file using `base`'s profile layout. Labels are
 * optional.
 *
 * # Safety
 * `base` must be a live handle, `path` NUL-terminated, `out` writable.
 */
enum RakbStatus rakb_queries_load_jsonl(const struct RakbBase *base,
                                        const char *path,
                                        struct RakbQueries **out);

/**
 * # Safety
 * `queries` must be null or a handle from this library not yet freed.
 */
void rakb_queries_free(struct RakbQueries *queries);

/**
 * # Safety
 * `queries` must be null or a live handle.
 */
size_t rakb_queries_len(const struct RakbQueries *queries);

/**
 * Retrieves neighbors of one query; `retrieval` is a `RakbRetrieval` value. Writes up to `capacity` row indices and
 * similarities, best first, and stores the neighbor count in `out_count`.
 * Returns `BufferTooSmall` (with `out_count` set) when `capacity` is short.
 * `prof` may be null for `Cm` retrieval.
 *
 * # Safety
 * `cm` must hold `d_cm` floats, `prof` `d_prof` floats; output buffers must
 * hold `capacity` elements; `out_count` must be writable.
 */
enum RakbStatus rakb_retrieve(const struct RakbBase *base,
                              const float *cm,
                              size_t d_cm,
                              const float *prof,
                              size_t d_prof,
                              uint32_t retrieval,
                              size_t k,
                              size_t *out_indices,
                              double *out_similarities,
                              size_t capacity,
                              size_t *out_count);

/**
 * Scores every query. `out_scores` must hold `rakb_queries_len(queries)`
 * values; they follow input order.
 *
 * # Safety
 * Handles must be live; `method` readable; `out_scores` writable for
 * `capacity` values.
 */
enum RakbStatus rakb_predict(const struct RakbBase *base,
                             const struct RakbQueries *queries,
                             const struct RakbMethod *method,
                             size_t parallelism,
                             double *out_scores,
                             size_t capacity);

/**
 * Evaluates a labeled query set.
 *
 * # Safety
 * Handles must be live; `method` readable; `out` writable.
 */
enum RakbStatus rakb_evaluate(const struct RakbBase *base,
                              const struct RakbQueries *queries,
                              const struct RakbMethod *method,
                              size_t parallelism,
                              struct RakbReport *out);

/**
 * Equal error rate of `n` scored samples; labels are 0 (real) or 1 (fake).
 *
 * # Safety
 * `scores` and `labels` must hold `n` elements; `out` must be writable.
 */
enum RakbStatus rakb_eer(const double *scores, const uint8_t *labels, size_t n, double *out);

/**
 * Accuracy at threshold 0.5.
 *
 * # Safety
 * As for [`rakb_eer`].
 */
enum RakbStatus rakb_accuracy(const double *scores, const uint8_t *labels, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RAKB_H */
