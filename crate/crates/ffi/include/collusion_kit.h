#ifndef COLLUSION_KIT_H
#define COLLUSION_KIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Library errors keep the numeric codes the
 * command-line tool uses as exit statuses.
 */
typedef enum CkStatus {
  CK_STATUS_OK = 0,
  CK_STATUS_NULL_POINTER = 1,
  CK_STATUS_INVALID_UTF8 = 2,
  CK_STATUS_PANIC = 3,
  CK_STATUS_OUT_OF_RANGE = 4,
  CK_STATUS_IO = 10,
  CK_STATUS_EMPTY_CORPUS = 11,
  CK_STATUS_UNKNOWN_HASHTAG = 12,
  CK_STATUS_INVALID_ARGUMENT = 13,
  CK_STATUS_EMPTY_INPUT = 14,
  CK_STATUS_UNCOVERED = 15,
  CK_STATUS_SCHEMA_MISMATCH = 16,
  CK_STATUS_UNSUPPORTED = 17,
  CK_STATUS_DEGENERATE = 18,
  CK_STATUS_WIDTH_MISMATCH = 19,
  CK_STATUS_CONTAINER = 20,
  CK_STATUS_JSON = 21,
  CK_STATUS_CSV = 22,
} CkStatus;

/**
 * Seed and expanded tweet sets of one traced hashtag.
 */
typedef struct CkCollection CkCollection;

/**
 * A saved model.
 */
typedef struct CkModel CkModel;

/**
 * One collection's feature row under the built-in schema.
 */
typedef struct CkRow CkRow;

/**
 * Loaded, indexed corpus.
 */
typedef struct CkStore CkStore;

/**
 * Descriptive statistics of a collection's seed tweets.
 */
typedef struct CkInspection {
  size_t tweet_count;
  double distinct_word_pct;
  double tweets_per_user_mean;
  double retweet_pct;
  double hashtags_per_tweet_var;
  double hashtags_per_tweet_std;
} CkInspection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failing call on this thread; empty if none. The
 * pointer stays valid until the next failing call on this thread.
 */
const char *ck_last_error(void);

/**
 * Library version as a static string.
 */
const char *ck_version(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void ck_string_free(char *s);

/**
 * Loads a JSONL file or a directory of JSONL files.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum CkStatus ck_store_load(const char *path, struct CkStore **out);

/**
 * Number of distinct tweets in the store; 0 for a null handle.
 *
 * # Safety
 * `store` must be null or a live handle.
 */
size_t ck_store_len(const struct CkStore *store);

/**
 * # Safety
 * `store` must be null or a live handle, and not used afterwards.
 */
void ck_store_free(struct CkStore *store);

/**
 * Builds the collection of `hashtag`, expanding by `window_days` days.
 *
 * # Safety
 * `store` must be a live handle, `hashtag` a valid C string and `out` a
 * valid pointer.
 */
enum CkStatus ck_collection_build(const struct CkStore *store,
                                  const char *hashtag,
                                  uint32_t window_days,
                                  struct CkCollection **out);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
size_t ck_collection_seed_count(const struct CkCollection *c);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
size_t ck_collection_expanded_count(const struct CkCollection *c);

/**
 * # Safety
 * `c` must be null or a live handle.
 */
size_t ck_collection_user_count(const struct CkCollection *c);

/**
 * # Safety
 * `c` must be null or a live handle, and not used afterwards.
 */
void ck_collection_free(struct CkCollection *c);

/**
 * Fills `out` with statistics of the collection's seed tweets.
 *
 * # Safety
 * `c` must be a live handle and `out` a valid pointer.
 */
enum CkStatus ck_collection_inspect(const struct CkCollection *c, struct CkInspection *out);

/**
 * Extracts the collection's feature row with the built-in schema, slices
 * of `interval_mins` minutes, and the store's latest timestamp as today.
 *
 * # Safety
 * `store` and `c` must be live handles and `out` a valid pointer.
 */
enum CkStatus ck_row_extract(const struct CkStore *store,
                             const struct CkCollection *c,
                             uint32_t interval_mins,
                             struct CkRow **out);

/**
 * # Safety
 * `row` must be null or a live handle.
 */
size_t ck_row_width(const struct CkRow *row);

/**
 * Copies the row's values into `buf`, which must hold `ck_row_width` values.
 *
 * # Safety
 * `row` must be a live handle and `buf` valid for `len` writes.
 */
enum CkStatus ck_row_values(const struct CkRow *row, double *buf, size_t len);

/**
 * Name of column `idx`, borrowed from the row; null when out of range.
 *
 * # Safety
 * `row` must be null or a live handle. The pointer dies with the row.
 */
const char *ck_row_column_name(const struct CkRow *row, size_t idx);

/**
 * Hash of the schema the row was built with; free with `ck_string_free`.
 *
 * # Safety
 * `row` must be null or a live handle.
 */
char *ck_row_schema_hash(const struct CkRow *row);

/**
 * # Safety
 * `row` must be null or a live handle, and not used afterwards.
 */
void ck_row_free(struct CkRow *row);

/**
 * Loads a model container written by `collusion-kit train`.
 *
 * # Safety
 * `path` must be a valid C string and `out` a valid pointer.
 */
enum CkStatus ck_model_load(const char *path, struct CkModel **out);

/**
 * Number of classes the model scores; 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t ck_model_class_count(const struct CkModel *model);

/**
 * Scores the feature row `row` of the model's source width. Rows built under
 * a different schema are refused with `SchemaMismatch`. Writes the predicted
 * class and, when `scores` is not null, `ck_model_class_count` scores.
 *
 * # Safety
 * `model` and `row` must be live handles, `class_out` a valid pointer, and
 * `scores` null or valid for `scores_len` writes.
 */
enum CkStatus ck_model_predict(const struct CkModel *model,
                               const struct CkRow *row,
                               size_t *class_out,
                               double *scores,
                               size_t scores_len);

/**
 * # Safety
 * `model` must be null or a live handle, and not used afterwards.
 */
void ck_model_free(struct CkModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLLUSION_KIT_H */
