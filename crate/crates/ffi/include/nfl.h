#ifndef NFL_H
#define NFL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  NFL_STATUS_OK = 0,
  NFL_STATUS_NULL_POINTER = 1,
  NFL_STATUS_INVALID_ARGUMENT = 2,
  NFL_STATUS_NUMERICAL_FAILURE = 3,
  NFL_STATUS_BUFFER_TOO_SMALL = 4,
  NFL_STATUS_PANIC = 5,
} NflStatus;

typedef struct NflField NflField;

typedef struct NflKernel NflKernel;

typedef struct NflNonlinearity NflNonlinearity;

typedef struct NflWave NflWave;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread; valid until the next failing call.
 */
const char *nfl_last_error(void);

/**
 * # Safety
 * `out` must be writable.
 */
NflStatus nfl_kernel_gaussian(double sigma, NflKernel **out);

/**
 * # Safety
 * `out` must be writable.
 */
NflStatus nfl_kernel_bump(double radius, NflKernel **out);

/**
 * # Safety
 * `k` must come from a kernel constructor and not be freed twice.
 */
void nfl_kernel_free(NflKernel *k);

/**
 * # Safety
 * `k` must be a live kernel handle and `out` writable.
 */
NflStatus nfl_kernel_eval(const NflKernel *k, double x, double *out);

/**
 * `∫J(x)e^{γx}dx`.
 *
 * # Safety
 * `k` must be a live kernel handle and `out` writable.
 */
NflStatus nfl_kernel_exp_moment(const NflKernel *k, double gamma, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
NflStatus nfl_nonlinearity_kpp(double f0, NflNonlinearity **out);

/**
 * # Safety
 * `out` must be writable.
 */
NflStatus nfl_nonlinearity_ignition(double theta, double a, NflNonlinearity **out);

/**
 * # Safety
 * `out` must be writable.
 */
NflStatus nfl_nonlinearity_bistable(double theta, NflNonlinearity **out);

/**
 * # Safety
 * `f` must come from a nonlinearity constructor and not be freed twice.
 */
void nfl_nonlinearity_free(NflNonlinearity *f);

/**
 * `f(t, x, u)` for `u ∈ [0, 1]`.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
NflStatus nfl_nonlinearity_eval(const NflNonlinearity *f,
                                double t,
                                double x,
                                double u,
                                double *out);

/**
 * Copies `n` samples on the grid `x0 + i·dx` with constant tails `u_left`, `u_right`.
 *
 * # Safety
 * `values` must point to `n` readable doubles and `out` be writable.
 */
NflStatus nfl_field_new(double x0,
                        double dx,
                        const double *values,
                        size_t n,
                        double u_left,
                        double u_right,
                        NflField **out);

/**
 * # Safety
 * `s` must come from a field constructor and not be freed twice.
 */
void nfl_field_free(NflField *s);

/**
 * # Safety
 * `s` must be a live handle; `len` and `t` writable.
 */
NflStatus nfl_field_info(const NflField *s, size_t *len, double *t);

/**
 * Copies the samples into `buf`, which must hold at least the field length.
 *
 * # Safety
 * `s` must be a live handle and `buf` writable for `cap` doubles.
 */
NflStatus nfl_field_values(const NflField *s, double *buf, size_t cap);

/**
 * Evolves `u0` to `t_end` on a fixed window and returns the final state as a new field.
 *
 * # Safety
 * All handles must be live and `out` writable.
 */
NflStatus nfl_evolve(const NflField *u0,
                     const NflNonlinearity *f,
                     const NflKernel *k,
                     double t_end,
                     double dt,
                     NflField **out);

/**
 * Leftmost and rightmost crossings of `level`.
 *
 * # Safety
 * `s` must be a live handle; `minus` and `plus` writable.
 */
NflStatus nfl_interface_locations(const NflField *s, double level, double *minus, double *plus);

/**
 * `c_r = (∫J e^{rx} - 1 + f0)/r`.
 *
 * # Safety
 * `k` must be a live handle and `out` writable.
 */
NflStatus nfl_kpp_speed(const NflKernel *k, double f0, double r, double *out);

/**
 * Traveling wave for a bistable or ignition nonlinearity with default solver options.
 *
 * # Safety
 * Handles must be live and `out` writable.
 */
NflStatus nfl_wave_solve(const NflNonlinearity *f, const NflKernel *k, NflWave **out);

/**
 * # Safety
 * `w` must come from `nfl_wave_solve` and not be freed twice.
 */
void nfl_wave_free(NflWave *w);

/**
 * Speed, sup-norm residual and profile length.
 *
 * # Safety
 * `w` must be a live handle; outputs writable.
 */
NflStatus nfl_wave_info(const NflWave *w, double *speed, double *residual, size_t *len);

/**
 * Profile value at `x` (interpolated; tails outside the grid).
 *
 * # Safety
 * `w` must be a live handle and `out` writable.
 */
NflStatus nfl_wave_eval(const NflWave *w, double x, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NFL_H */
