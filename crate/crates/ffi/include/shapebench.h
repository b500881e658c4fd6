#ifndef SHAPEBENCH_H
#define SHAPEBENCH_H

#include <stddef.h>
#include <stdint.h>

typedef enum SbStatus {
  SB_STATUS_OK = 0,
  SB_STATUS_NULL_POINTER = 1,
  SB_STATUS_INVALID_UTF8 = 2,
  SB_STATUS_INVALID_ARGUMENT = 3,
  SB_STATUS_IO = 4,
  SB_STATUS_PARSE = 5,
  SB_STATUS_GENERATION_FAILED = 6,
  SB_STATUS_OUT_OF_RANGE = 7,
  SB_STATUS_PANIC = 8,
} SbStatus;

typedef enum SbFormat {
  SB_FORMAT_SENTENCE = 0,
  SB_FORMAT_TUPLE = 1,
} SbFormat;

/**
 * Scenes of one split, loaded or generated.
 */
typedef struct SbDataset SbDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *sb_last_error_message(void);

/**
 * # Safety
 * `s` must be null or a pointer returned by this library.
 */
void sb_string_free(char *s);

/**
 * Character-level Levenshtein distance of two UTF-8 strings.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated; `out` must be writable.
 */
enum SbStatus sb_edit_distance(const char *a, const char *b, size_t *out);

/**
 * Minimum-cost assignment of a row-major `rows x cols` cost matrix.
 * `row_to_col` receives `rows` entries, `-1` for unmatched rows.
 *
 * # Safety
 * `costs` must hold `rows * cols` values and `row_to_col` `rows` slots.
 */
enum SbStatus sb_lap_solve(const double *costs,
                           size_t rows,
                           size_t cols,
                           ptrdiff_t *row_to_col,
                           double *total_cost);

/**
 * Weights for `n` tokens: `scale` for plain integers in `[min, max]`,
 * `1.0` otherwise.
 *
 * # Safety
 * `tokens` must hold `n` NUL-terminated strings and `out` `n` slots.
 */
enum SbStatus sb_numeric_mask(const char *const *tokens,
                              size_t n,
                              uint64_t min,
                              uint64_t max,
                              double scale,
                              double *out);

/**
 * Generates one built-in split. `n_samples == 0` keeps the default size.
 *
 * # Safety
 * `split` must be NUL-terminated; `out` must be writable.
 */
enum SbStatus sb_dataset_generate(const char *split,
                                  size_t n_samples,
                                  uint64_t seed,
                                  struct SbDataset **out);

/**
 * Loads scenes from a JSONL file written by `shapebench generate`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum SbStatus sb_dataset_load(const char *path, struct SbDataset **out);

/**
 * # Safety
 * `ds` must be null or a live dataset handle; it is invalid afterwards.
 */
void sb_dataset_free(struct SbDataset *ds);

/**
 * Number of scenes, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t sb_dataset_len(const struct SbDataset *ds);

/**
 * Id of scene `index`.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
enum SbStatus sb_dataset_id(const struct SbDataset *ds, size_t index, char **out);

/**
 * Text target of scene `index`.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
enum SbStatus sb_dataset_serialize(const struct SbDataset *ds,
                                   size_t index,
                                   enum SbFormat format,
                                   char **out);

/**
 * Renders scene `index` to a PNG file.
 *
 * # Safety
 * `ds` must be a live handle; `path` must be NUL-terminated.
 */
enum SbStatus sb_dataset_render_png(const struct SbDataset *ds, size_t index, const char *path);

/**
 * Writes the dataset as scene JSONL.
 *
 * # Safety
 * `ds` must be a live handle; `path` must be NUL-terminated.
 */
enum SbStatus sb_dataset_save(const struct SbDataset *ds, const char *path);

/**
 * Scores `n` prediction texts, one per scene in dataset order (null
 * entries count as empty), and returns the report as JSON.
 *
 * # Safety
 * `ds` must be a live handle, `predictions` must hold `n` entries and
 * `out_json` must be writable.
 */
enum SbStatus sb_evaluate(const struct SbDataset *ds,
                          const char *const *predictions,
                          size_t n,
                          enum SbFormat format,
                          char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAPEBENCH_H */
