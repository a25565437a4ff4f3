#ifndef PARC_H
#define PARC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum ParcStatus {
  PARC_STATUS_OK = 0,
  PARC_STATUS_NULL_POINTER = 1,
  PARC_STATUS_INVALID_ARGUMENT = 2,
  PARC_STATUS_DIMENSION = 3,
  // Bad input data: unknown column or category, missing or non-numeric cell.
  PARC_STATUS_DATA = 4,
  PARC_STATUS_IO = 5,
  // Malformed CSV, JSON, TOML or LP text.
  PARC_STATUS_PARSE = 6,
  // Training could not produce a model.
  PARC_STATUS_TRAINING = 7,
  PARC_STATUS_NUMERICAL = 8,
  // The optimizer stopped at its node limit; outputs hold the incumbent.
  PARC_STATUS_NODE_LIMIT = 9,
  PARC_STATUS_PANIC = 10,
} ParcStatus;

typedef enum ParcSeparation {
  PARC_SEPARATION_SOFTMAX = 0,
  PARC_SEPARATION_VORONOI = 1,
} ParcSeparation;

// Encoded training data.
typedef struct ParcDataset ParcDataset;

// Training options; starts from the library defaults.
typedef struct ParcFitOptions ParcFitOptions;

// A fitted model.
typedef struct ParcModel ParcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer is
// valid until the next failing call on the same thread.
const char *parc_last_error_message(void);

// Library version as a static string.
const char *parc_version(void);

// Reads a CSV file. `targets` names the target columns; feature and target
// kinds are inferred as in the command line tool.
//
// # Safety
// `path` and each of the `n_targets` entries of `targets` must be valid
// nul-terminated strings; `out` must be writable.
enum ParcStatus parc_dataset_from_csv(const char *path,
                                      const char *const *targets,
                                      size_t n_targets,
                                      struct ParcDataset **out);

// Builds a numeric dataset from row-major arrays: `x` is
// `n_samples * n_features`, `y` is `n_samples * n_targets`.
//
// # Safety
// The arrays must hold the stated number of doubles; `out` must be writable.
enum ParcStatus parc_dataset_from_arrays(const double *x,
                                         const double *y,
                                         size_t n_samples,
                                         size_t n_features,
                                         size_t n_targets,
                                         struct ParcDataset **out);

// Number of rows, or 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
size_t parc_dataset_n_samples(const struct ParcDataset *ds);

// Number of encoded feature columns, or 0 for a null handle.
//
// # Safety
// `ds` must be null or a live dataset handle.
size_t parc_dataset_n_features(const struct ParcDataset *ds);

// # Safety
// `ds` must be null or a handle not freed before.
void parc_dataset_free(struct ParcDataset *ds);

// New options with the library defaults.
struct ParcFitOptions *parc_fit_options_new(void);

// Options from the `[parc]` table and top-level `seed` of a TOML run
// configuration.
//
// # Safety
// `toml` must be a valid nul-terminated string; `out` must be writable.
enum ParcStatus parc_fit_options_from_toml(const char *toml, struct ParcFitOptions **out);

// # Safety
// `opts` must be null or a handle not freed before.
void parc_fit_options_free(struct ParcFitOptions *opts);

// Number of clusters `K`. Values are checked by `parc_fit`.
//
// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_k(struct ParcFitOptions *opts, size_t k);

// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_alpha(struct ParcFitOptions *opts, double alpha);

// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_beta(struct ParcFitOptions *opts, double beta);

// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_sigma(struct ParcFitOptions *opts, double sigma);

// `separation` is a `ParcSeparation` value.
//
// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_separation(struct ParcFitOptions *opts, uint32_t separation);

// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_seed(struct ParcFitOptions *opts, uint64_t seed);

// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_max_iters(struct ParcFitOptions *opts, size_t max_iters);

// # Safety
// `opts` must be a live options handle.
enum ParcStatus parc_fit_options_set_standardize(struct ParcFitOptions *opts, bool standardize);

// Trains a model. `opts` may be null for the defaults.
//
// # Safety
// `ds` must be a live dataset, `opts` null or live, `out` writable.
enum ParcStatus parc_fit(const struct ParcDataset *ds,
                         const struct ParcFitOptions *opts,
                         struct ParcModel **out);

// Writes the model as JSON.
//
// # Safety
// `model` must be live and `path` a valid nul-terminated string.
enum ParcStatus parc_model_save(const struct ParcModel *model, const char *path);

// # Safety
// `path` must be a valid nul-terminated string; `out` must be writable.
enum ParcStatus parc_model_load(const char *path, struct ParcModel **out);

// # Safety
// `model` must be null or a handle not freed before.
void parc_model_free(struct ParcModel *model);

// Number of regions, or 0 for a null handle.
//
// # Safety
// `model` must be null or live.
size_t parc_model_n_regions(const struct ParcModel *model);

// Number of encoded features the model expects, or 0 for a null handle.
//
// # Safety
// `model` must be null or live.
size_t parc_model_n_features(const struct ParcModel *model);

// Number of numeric targets, or 0 for a null handle.
//
// # Safety
// `model` must be null or live.
size_t parc_model_n_numeric_targets(const struct ParcModel *model);

// Number of categorical targets, or 0 for a null handle.
//
// # Safety
// `model` must be null or live.
size_t parc_model_n_categorical_targets(const struct ParcModel *model);

// Region (0-based) of the encoded feature vector `x`.
//
// # Safety
// `x` must hold `n` doubles and `region` must be writable.
enum ParcStatus parc_model_region_of(const struct ParcModel *model,
                                     const double *x,
                                     size_t n,
                                     size_t *region);

// Numeric predictions at `x`, in target units. `out` holds one value per
// numeric target.
//
// # Safety
// `x` must hold `n` doubles and `out` `out_len` doubles.
enum ParcStatus parc_model_predict_numeric(const struct ParcModel *model,
                                           const double *x,
                                           size_t n,
                                           double *out,
                                           size_t out_len);

// Category indices (in the order categories were first seen in the
// training data) predicted at `x`, one per categorical target.
//
// # Safety
// `x` must hold `n` doubles and `out` `out_len` entries.
enum ParcStatus parc_model_predict_categorical(const struct ParcModel *model,
                                               const double *x,
                                               size_t n,
                                               size_t *out,
                                               size_t out_len);

// R^2 of every numeric target on `ds` (NaN for a constant target).
//
// # Safety
// `model` and `ds` must be live; `out` must hold `out_len` doubles.
enum ParcStatus parc_model_r2(const struct ParcModel *model,
                              const struct ParcDataset *ds,
                              double *out,
                              size_t out_len);

// Solves `min ||f(x) - y_ref||_inf` over the training box expanded by
// `box_expand` per side. Writes `x*` (length `n`), the optimal error and
// the region of `x*`. `node_limit` 0 means the default.
//
// Returns `PARC_STATUS_NODE_LIMIT` when the search was cut short; the
// outputs then hold the best point found.
//
// # Safety
// `y_ref` must hold `m` doubles, `x_out` `n` doubles; `epsilon` and
// `region` must be writable.
enum ParcStatus parc_optimize_tracking(const struct ParcModel *model,
                                       const double *y_ref,
                                       size_t m,
                                       double box_expand,
                                       double gap,
                                       size_t node_limit,
                                       double *x_out,
                                       size_t n,
                                       double *epsilon,
                                       size_t *region);

// Tracking MILP in CPLEX LP format as a newly allocated string, released
// with `parc_string_free`.
//
// # Safety
// `y_ref` must hold `m` doubles and `out` must be writable.
enum ParcStatus parc_export_lp(const struct ParcModel *model,
                               const double *y_ref,
                               size_t m,
                               double box_expand,
                               char **out);

// # Safety
// `s` must be null or a string returned by this library, not freed before.
void parc_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PARC_H */
