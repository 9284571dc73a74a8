#ifndef PROJSTRUCT_H
#define PROJSTRUCT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Status codes returned by every fallible function.
typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_UTF8 = 2,
  PS_STATUS_INVALID_JSON = 3,
  PS_STATUS_INVALID_INPUT = 4,
  PS_STATUS_DIMENSION_MISMATCH = 5,
  PS_STATUS_NON_FINITE = 6,
  PS_STATUS_INVALID_STRUCTURE = 7,
  PS_STATUS_CAP_EXCEEDED = 8,
  PS_STATUS_UNSUPPORTED = 9,
  PS_STATUS_EXACT_UNAVAILABLE = 10,
  PS_STATUS_CONSTANTS = 11,
  PS_STATUS_BUFFER_TOO_SMALL = 12,
  PS_STATUS_PANIC = 13,
} PsStatus;

// A confidence ball.
typedef struct PsBall PsBall;

// A family of structures.
typedef struct PsFamily PsFamily;

// The data-dependent measure over structures for one observation.
typedef struct PsPosterior PsPosterior;

// The penalized selection for one observation.
typedef struct PsSelection PsSelection;

// Oracle quantities for a known signal.
typedef struct PsOracle {
  // `|theta - P_I theta|^2` at the oracle structure.
  double approx_sq;
  // `tau sigma^2 rho(I)` at the oracle structure.
  double complexity;
  // `approx_sq + complexity`.
  double rate_sq;
  // Majorant of the oracle structure.
  double rho;
} PsOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null after a
// successful call. The pointer stays valid until the next call on this thread.
const char *ps_last_error(void);

// Library version as a static NUL-terminated string.
const char *ps_version(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a pointer previously returned by this library.
void ps_string_free(char *s);

// Parses a family from JSON, e.g. `{"kind":"sparsity","n":10}`.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum PsStatus ps_family_from_json(const char *json, struct PsFamily **out);

// # Safety
// `family` must be null or a handle from [`ps_family_from_json`].
void ps_family_free(struct PsFamily *family);

// Length of the parameter vector.
//
// # Safety
// `family` must be a live handle; `out` must be writable.
enum PsStatus ps_family_ambient_dim(const struct PsFamily *family, uintptr_t *out);

// Majorant `rho(I)` of a structure given as JSON.
//
// # Safety
// `family` must be a live handle, `structure` a NUL-terminated string and
// `out` writable.
enum PsStatus ps_family_majorant(const struct PsFamily *family, const char *structure, double *out);

// Projection of `y` onto the subspace of a structure given as JSON.
//
// # Safety
// `y` must point to `len` values and `out` to `out_len` writable values.
enum PsStatus ps_family_project(const struct PsFamily *family,
                                const char *structure,
                                const double *y,
                                uintptr_t len,
                                double *out,
                                uintptr_t out_len);

// Exact minimiser of `|y - P_I y|^2 + sigma^2 (2 kappa rho(I) [+ dim])`.
//
// # Safety
// `family` must be a live handle, `y` must point to `len` values and `out`
// must be writable.
enum PsStatus ps_select(const struct PsFamily *family,
                        const double *y,
                        uintptr_t len,
                        double sigma,
                        double kappa,
                        bool with_dimension,
                        struct PsSelection **out);

// # Safety
// `selection` must be null or a handle from [`ps_select`].
void ps_selection_free(struct PsSelection *selection);

// Objective value at the selected structure.
//
// # Safety
// `selection` must be a live handle; `out` must be writable.
enum PsStatus ps_selection_objective(const struct PsSelection *selection, double *out);

// Majorant of the selected structure.
//
// # Safety
// `selection` must be a live handle; `out` must be writable.
enum PsStatus ps_selection_rho(const struct PsSelection *selection, double *out);

// Selected structure as JSON; release with [`ps_string_free`].
//
// # Safety
// `selection` must be a live handle; `out` must be writable.
enum PsStatus ps_selection_structure_json(const struct PsSelection *selection, char **out);

// Model-selected estimate `P_I y`.
//
// # Safety
// `selection` must be a live handle and `out` must point to `out_len`
// writable values.
enum PsStatus ps_selection_estimate(const struct PsSelection *selection,
                                    double *out,
                                    uintptr_t out_len);

// Builds the data-dependent measure over every structure of the family.
// Families other than sparsity are enumerated; `cap` bounds the count
// (0 selects the library default).
//
// # Safety
// `family` must be a live handle, `y` must point to `len` values and `out`
// must be writable.
enum PsStatus ps_posterior_new(const struct PsFamily *family,
                               const double *y,
                               uintptr_t len,
                               double sigma,
                               double kappa,
                               bool with_dimension,
                               uint64_t cap,
                               struct PsPosterior **out);

// # Safety
// `posterior` must be null or a handle from [`ps_posterior_new`].
void ps_posterior_free(struct PsPosterior *posterior);

// Log of the normalising constant.
//
// # Safety
// `posterior` must be a live handle; `out` must be writable.
enum PsStatus ps_posterior_log_normalizer(const struct PsPosterior *posterior, double *out);

// Normalised log weight of a structure given as JSON.
//
// # Safety
// `posterior` must be a live handle, `structure` a NUL-terminated string
// and `out` writable.
enum PsStatus ps_posterior_log_weight(const struct PsPosterior *posterior,
                                      const char *structure,
                                      double *out);

// Model-averaged mean.
//
// # Safety
// `posterior` must be a live handle and `out` must point to `out_len`
// writable values.
enum PsStatus ps_posterior_ma_mean(const struct PsPosterior *posterior,
                                   double *out,
                                   uintptr_t out_len);

// Projection onto the heaviest structure.
//
// # Safety
// `posterior` must be a live handle and `out` must point to `out_len`
// writable values.
enum PsStatus ps_posterior_ms_mean(const struct PsPosterior *posterior,
                                   double *out,
                                   uintptr_t out_len);

// The `k` heaviest structures with their log weights as a JSON array;
// release with [`ps_string_free`].
//
// # Safety
// `posterior` must be a live handle; `out` must be writable.
enum PsStatus ps_posterior_top_k_json(const struct PsPosterior *posterior, uintptr_t k, char **out);

// Oracle rate `min_I |theta - P_I theta|^2 + tau sigma^2 rho(I)`.
//
// # Safety
// `family` must be a live handle, `theta` must point to `len` values and
// `out` must be writable.
enum PsStatus ps_oracle_rate(const struct PsFamily *family,
                             const double *theta,
                             uintptr_t len,
                             double sigma,
                             double tau,
                             struct PsOracle *out);

// Ball centred at the selected estimate with squared radius
// `(t+1) m2 sigma^2 (1 + rho) + (t+2) m sigma^2`.
//
// # Safety
// `family` and `selection` must be live handles; `out` must be writable.
enum PsStatus ps_ball_ebr(const struct PsFamily *family,
                          const struct PsSelection *selection,
                          double sigma,
                          double m2,
                          double t,
                          double m,
                          struct PsBall **out);

// # Safety
// `ball` must be null or a handle from [`ps_ball_ebr`].
void ps_ball_free(struct PsBall *ball);

// Squared radius.
//
// # Safety
// `ball` must be a live handle; `out` must be writable.
enum PsStatus ps_ball_radius_sq(const struct PsBall *ball, double *out);

// Whether `theta` lies in the closed ball.
//
// # Safety
// `ball` must be a live handle, `theta` must point to `len` values and
// `out` must be writable.
enum PsStatus ps_ball_contains(const struct PsBall *ball,
                               const double *theta,
                               uintptr_t len,
                               bool *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROJSTRUCT_H */
