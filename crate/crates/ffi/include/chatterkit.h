#ifndef CHATTERKIT_H
#define CHATTERKIT_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum CkStatus {
  CK_STATUS_OK = 0,
  CK_STATUS_NULL_POINTER = 1,
  CK_STATUS_INVALID_ARGUMENT = 2,
  CK_STATUS_IO = 3,
  CK_STATUS_PARSE = 4,
  /**
   * Input data unusable: too short, constant, single class, mismatched.
   */
  CK_STATUS_DATA = 5,
  /**
   * No warping path satisfies the window or slope constraint.
   */
  CK_STATUS_INFEASIBLE = 6,
  /**
   * Caller buffer too small; the needed length was written.
   */
  CK_STATUS_BUFFER_TOO_SMALL = 7,
  CK_STATUS_PANIC = 99,
} CkStatus;

/**
 * Opaque H1 persistence diagram.
 */
typedef struct CkDiagram CkDiagram;

/**
 * Opaque labelled feature table.
 */
typedef struct CkFeatures CkFeatures;

/**
 * Opaque trained classifier.
 */
typedef struct CkModel CkModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ck_version(void);

/**
 * Copies the calling thread's last error message into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * without the terminator, or 0 when there is no error.
 *
 * # Safety
 * `buf` must be valid for `len` bytes or null.
 */
uintptr_t ck_last_error(char *buf, uintptr_t len);

/**
 * DTW distance between two series. `slope_p <= 0` disables the slope
 * constraint.
 *
 * # Safety
 * `x` and `y` must hold `nx` and `ny` values; `out` must be writable.
 */
enum CkStatus ck_dtw_distance(const double *x,
                              uintptr_t nx,
                              const double *y,
                              uintptr_t ny,
                              double window_fraction,
                              double slope_p,
                              bool z_normalize,
                              double *out);

/**
 * Number of values written by [`ck_fpa_features`] for `n_peaks`.
 */
uintptr_t ck_fpa_feature_count(uintptr_t n_peaks);

/**
 * Peak-picking features of one signal with default thresholds and
 * `n_peaks` peaks per spectrum.
 *
 * # Safety
 * `x` must hold `n` values; `out` must be valid for `cap` values;
 * `len_out` may be null.
 */
enum CkStatus ck_fpa_features(const double *x,
                              uintptr_t n,
                              double fs,
                              uintptr_t n_peaks,
                              double *out,
                              uintptr_t cap,
                              uintptr_t *len_out);

/**
 * Number of values written by [`ck_wpt_features`].
 */
uintptr_t ck_wpt_feature_count(void);

/**
 * Wavelet packet features of one signal: decompose to `level`,
 * reconstruct packet `packet` (1-based, frequency order) and featurize.
 *
 * # Safety
 * `x` must hold `n` values; `wavelet` must be a NUL-terminated name such
 * as "db10"; `out` must be valid for `cap` values; `len_out` may be null.
 */
enum CkStatus ck_wpt_features(const double *x,
                              uintptr_t n,
                              double fs,
                              uintptr_t level,
                              uintptr_t packet,
                              const char *wavelet,
                              double *out,
                              uintptr_t cap,
                              uintptr_t *len_out);

/**
 * H1 persistence of a Vietoris-Rips filtration over `n_points` points of
 * dimension `dim`, stored row-major. Clouds larger than `max_points` are
 * subsampled with `seed`; `max_points == 0` keeps every point.
 *
 * # Safety
 * `points` must hold `n_points * dim` values; `out` must be writable.
 */
enum CkStatus ck_persistence_h1(const double *points,
                                uintptr_t n_points,
                                uintptr_t dim,
                                uintptr_t max_points,
                                uint64_t seed,
                                struct CkDiagram **out);

/**
 * Number of (birth, death) pairs in the diagram; 0 for null.
 *
 * # Safety
 * `d` must be a live diagram or null.
 */
uintptr_t ck_diagram_len(const struct CkDiagram *d);

/**
 * Writes births and deaths interleaved, `2 * len` values.
 *
 * # Safety
 * `d` must be a live diagram; `out` must be valid for `cap` values;
 * `len_out` may be null.
 */
enum CkStatus ck_diagram_pairs(const struct CkDiagram *d,
                               double *out,
                               uintptr_t cap,
                               uintptr_t *len_out);

/**
 * The five Carlsson coordinates of the diagram.
 *
 * # Safety
 * `d` must be a live diagram; `out` must be valid for 5 values.
 */
enum CkStatus ck_diagram_carlsson(const struct CkDiagram *d, double *out);

/**
 * # Safety
 * `d` must come from `ck_persistence_h1` and not be used afterwards.
 */
void ck_diagram_free(struct CkDiagram *d);

/**
 * Reads a feature CSV as written by `chatterkit featurize`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum CkStatus ck_features_read_csv(const char *path, struct CkFeatures **out);

/**
 * Builds a table from `rows * cols` row-major values and one label per
 * row (nonzero = chatter).
 *
 * # Safety
 * `values` must hold `rows * cols` values, `labels` `rows` bytes; `out`
 * must be writable.
 */
enum CkStatus ck_features_new(const double *values,
                              uintptr_t rows,
                              uintptr_t cols,
                              const uint8_t *labels,
                              struct CkFeatures **out);

/**
 * # Safety
 * `f` must be a live table or null.
 */
uintptr_t ck_features_rows(const struct CkFeatures *f);

/**
 * # Safety
 * `f` must be a live table or null.
 */
uintptr_t ck_features_cols(const struct CkFeatures *f);

/**
 * Copies row `row` into `out`.
 *
 * # Safety
 * `f` must be a live table; `out` must be valid for `cap` values.
 */
enum CkStatus ck_features_row(const struct CkFeatures *f,
                              uintptr_t row,
                              double *out,
                              uintptr_t cap);

/**
 * Chatter label of row `row`.
 *
 * # Safety
 * `f` must be a live table; `out` must be writable.
 */
enum CkStatus ck_features_label(const struct CkFeatures *f, uintptr_t row, bool *out);

/**
 * # Safety
 * `f` must come from a `ck_features_*` constructor and not be used
 * afterwards.
 */
void ck_features_free(struct CkFeatures *f);

/**
 * Trains `classifier` ("lr", "svm", "rf", "gb", "mlp" or "knn<k>") on
 * every row of `features`.
 *
 * # Safety
 * `classifier` must be NUL-terminated; `features` live; `out` writable.
 */
enum CkStatus ck_model_train(const char *classifier,
                             const struct CkFeatures *features,
                             uint64_t seed,
                             struct CkModel **out);

/**
 * Predicts one feature row; `out` receives true for chatter.
 *
 * # Safety
 * `m` must be a live model; `row` must hold `n` values; `out` writable.
 */
enum CkStatus ck_model_predict(const struct CkModel *m, const double *row, uintptr_t n, bool *out);

/**
 * # Safety
 * `m` must come from `ck_model_train` and not be used afterwards.
 */
void ck_model_free(struct CkModel *m);

/**
 * Runs a transfer configuration file and writes the report to `out_dir`.
 *
 * # Safety
 * Both arguments must be NUL-terminated paths.
 */
enum CkStatus ck_transfer_run(const char *config_path, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHATTERKIT_H */
