#ifndef TSGBM_H
#define TSGBM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result codes shared by all functions.
 */
typedef enum TsgbmStatus {
  TSGBM_STATUS_OK = 0,
  TSGBM_STATUS_NULL_POINTER = 1,
  TSGBM_STATUS_INVALID_UTF8 = 2,
  TSGBM_STATUS_DOMAIN = 3,
  TSGBM_STATUS_CONFIG = 4,
  TSGBM_STATUS_DEGENERATE_FIT = 5,
  TSGBM_STATUS_TRAINING = 6,
  TSGBM_STATUS_STAGE = 7,
  TSGBM_STATUS_FORMAT = 8,
  TSGBM_STATUS_IO = 9,
  TSGBM_STATUS_BUFFER_TOO_SMALL = 10,
  TSGBM_STATUS_PANIC = 11,
} TsgbmStatus;

/**
 * Trained estimator handle.
 */
typedef struct TsgbmEstimator TsgbmEstimator;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string.
 * The pointer stays valid until the next call into the library on this thread.
 */
const char *tsgbm_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tsgbm_version(void);

/**
 * Parses an estimator from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsgbmStatus tsgbm_estimator_from_json(const char *json, struct TsgbmEstimator **out);

/**
 * Loads an estimator from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsgbmStatus tsgbm_estimator_load(const char *path, struct TsgbmEstimator **out);

/**
 * Trains an estimator from a config, given as TOML text or a shipped config name.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum TsgbmStatus tsgbm_estimator_train(const char *config, struct TsgbmEstimator **out);

/**
 * Serialises an estimator to JSON. Release the string with [`tsgbm_string_free`].
 *
 * # Safety
 * `est` must be a live handle and `out` a valid pointer.
 */
enum TsgbmStatus tsgbm_estimator_to_json(const struct TsgbmEstimator *est, char **out);

/**
 * Number of parameters the estimator returns, or 0 for a null handle.
 *
 * # Safety
 * `est` must be null or a live handle.
 */
size_t tsgbm_estimator_dims(const struct TsgbmEstimator *est);

/**
 * Estimates the parameters from an observation sequence `y[0..n]`, writing
 * `dims` values to `out` (`out_len` must be at least `dims`).
 *
 * # Safety
 * `est` must be a live handle; `y` must point to `n` doubles and `out` to `out_len`.
 */
enum TsgbmStatus tsgbm_estimator_estimate(const struct TsgbmEstimator *est,
                                          const double *y,
                                          size_t n,
                                          double *out,
                                          size_t out_len);

/**
 * Releases an estimator. Null is ignored.
 *
 * # Safety
 * `est` must be null or a handle not yet freed.
 */
void tsgbm_estimator_free(struct TsgbmEstimator *est);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void tsgbm_string_free(char *s);

/**
 * Weibull Cramér-Rao bounds for `n` i.i.d. samples.
 *
 * # Safety
 * `crlb_eta` and `crlb_gamma` must be valid pointers.
 */
enum TsgbmStatus tsgbm_weibull_crlb(double eta,
                                    double gamma,
                                    size_t n,
                                    double *crlb_eta,
                                    double *crlb_gamma);

/**
 * Seed of substream `index` for `purpose` under `master`.
 *
 * # Safety
 * `purpose` must be a NUL-terminated string; null is treated as "".
 */
uint64_t tsgbm_derive_substream_seed(uint64_t master, const char *purpose, uint64_t index);

/**
 * Simulates `n` observations of `mechanism` ("weibull", "state_space_1p" or
 * "stoch_vol") at `theta[0..d]` into `out[0..n]`, with the default burn-in.
 * `transformed` selects the log-square output of "stoch_vol".
 *
 * # Safety
 * `mechanism` must be a NUL-terminated string; `theta` must point to `d`
 * doubles and `out` to `n`.
 */
enum TsgbmStatus tsgbm_simulate(const char *mechanism,
                                bool transformed,
                                const double *theta,
                                size_t d,
                                uint64_t seed,
                                double *out,
                                size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TSGBM_H */
