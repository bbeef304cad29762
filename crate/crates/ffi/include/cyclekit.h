#ifndef CYCLEKIT_H
#define CYCLEKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Result codes.
 */
typedef enum CkStatus {
  CK_STATUS_OK = 0,
  CK_STATUS_NULL_POINTER = 1,
  CK_STATUS_INVALID_ARGUMENT = 2,
  CK_STATUS_NUMERIC_FAILURE = 3,
  CK_STATUS_UNKNOWN_MAP = 4,
  CK_STATUS_INTERNAL = 5,
} CkStatus;

/*
 Mixing coefficients a_1..a_N, b_1..b_N.
 */
typedef struct CkCoefficients CkCoefficients;

/*
 The auxiliary function of a closed loop.
 */
typedef struct CkPhi CkPhi;

/*
 Message of the last failure on this thread; empty if none. Valid until
 the next failing call on the same thread.
 */
const char *ck_last_error(void);

/*
 Library version, a static string.
 */
const char *ck_version(void);

/*
 Generates mixing coefficients for depth `n`, cycle length `t`, shape
 parameters `sigma`, `tau` and gain `gamma`.

 # Safety
 `out` must be a valid pointer to writable storage for one handle.
 */
enum CkStatus ck_coeffs_new(size_t n,
                            size_t t,
                            double sigma,
                            double tau,
                            double gamma,
                            struct CkCoefficients **out);

/*
 Number of coefficients N in each of a and b; 0 for a null handle.

 # Safety
 `h` must be null or a handle from [`ck_coeffs_new`].
 */
size_t ck_coeffs_len(const struct CkCoefficients *h);

/*
 Copies a_1..a_N into `buf` (capacity `len`).

 # Safety
 `h` must be a valid handle and `buf` must point to `len` writable doubles.
 */
enum CkStatus ck_coeffs_a(const struct CkCoefficients *h, double *buf, size_t len);

/*
 Copies b_1..b_N into `buf` (capacity `len`).

 # Safety
 `h` must be a valid handle and `buf` must point to `len` writable doubles.
 */
enum CkStatus ck_coeffs_b(const struct CkCoefficients *h, double *buf, size_t len);

/*
 # Safety
 `h` must be null or a handle from [`ck_coeffs_new`] not yet freed.
 */
void ck_coeffs_free(struct CkCoefficients *h);

/*
 Builds the auxiliary function of the loop defined by `coeffs`.

 # Safety
 `coeffs` must be a valid handle and `out` writable.
 */
enum CkStatus ck_phi_new(const struct CkCoefficients *coeffs, struct CkPhi **out);

/*
 Evaluates the auxiliary function at z = re + i im.

 # Safety
 `phi` must be a valid handle; `out_re` and `out_im` writable.
 */
enum CkStatus ck_phi_eval(const struct CkPhi *phi,
                          double re,
                          double im,
                          double *out_re,
                          double *out_im);

/*
 Whether the multiplier re + i im lies in the admissible region. A
 multiplier on the region boundary is reported as a numeric failure.

 # Safety
 `phi` must be a valid handle and `out` writable.
 */
enum CkStatus ck_multiplier_admissible(const struct CkPhi *phi, double re, double im, bool *out);

/*
 Root test of the closed loop for `len` multipliers given as separate
 real and imaginary arrays. Writes the verdict and the margin
 1 - max|lambda|.

 # Safety
 `phi` must be a valid handle, `mu_re` and `mu_im` must point to `len`
 doubles, and the outputs must be writable.
 */
enum CkStatus ck_schur_stable(const struct CkPhi *phi,
                              const double *mu_re,
                              const double *mu_im,
                              size_t len,
                              bool *out_stable,
                              double *out_margin);

/*
 # Safety
 `h` must be null or a handle from [`ck_phi_new`] not yet freed.
 */
void ck_phi_free(struct CkPhi *h);

/*
 Runs cycle detection on a built-in map and returns the report as a JSON
 string (release with [`ck_string_free`]).

 `params_json` is null or a JSON object of map parameter overrides, e.g.
 `{"mu": 3.2}`. `gammas` holds `n_gammas` gains tried in order; with
 `stop_on_success` the sweep ends at the first gain that finds a cycle.

 # Safety
 String arguments must be null-terminated; `gammas` must point to
 `n_gammas` doubles; `out` must be writable.
 */
enum CkStatus ck_detect_json(const char *map_name,
                             const char *params_json,
                             size_t n,
                             size_t t,
                             double sigma,
                             double tau,
                             const double *gammas,
                             size_t n_gammas,
                             bool stop_on_success,
                             size_t restarts,
                             uint64_t seed,
                             char **out);

/*
 Releases a string returned by this library.

 # Safety
 `s` must be null or a string from this library not yet freed.
 */
void ck_string_free(char *s);

#endif  /* CYCLEKIT_H */
