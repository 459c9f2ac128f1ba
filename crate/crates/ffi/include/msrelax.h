#ifndef MSRELAX_H
#define MSRELAX_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_ARGUMENT = 2,
  MS_STATUS_NEGATIVE_ORDER_ON_NONZERO_MEAN = 3,
  MS_STATUS_ZERO_MODE_NONZERO = 4,
  MS_STATUS_DIVISION_BY_ZERO = 5,
  MS_STATUS_SLOPE_GATE_VIOLATION = 6,
  MS_STATUS_SLOPE_BLOWUP = 7,
  MS_STATUS_SOLVER_DIVERGENCE = 8,
  MS_STATUS_CROSS_CHECK_FAILURE = 9,
  MS_STATUS_INSUFFICIENT_SAMPLES = 10,
  MS_STATUS_REGIME_NEVER_ENTERED = 11,
  MS_STATUS_INVALID_GRID = 12,
  MS_STATUS_INVALID_CONFIG = 13,
  MS_STATUS_PANIC = 14,
} MsStatus;

/**
 * A periodic height profile sampled on a uniform grid.
 */
typedef struct MsProfile MsProfile;

/**
 * A completed run together with its triad series.
 */
typedef struct MsTrajectory MsTrajectory;

/**
 * One row of the triad series.
 */
typedef struct MsTriadSample {
  double t;
  double energy;
  double dissipation;
  double distance;
  double distance_half;
  double sup_slope;
  double sup_h;
  double e2d;
  double int_vs2;
  double curv_l2;
} MsTriadSample;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or an empty
 * string. The pointer stays valid until the next call into this library.
 */
const char *ms_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ms_version(void);

/**
 * Builds a profile from `n` samples at nodes `x_j = -L/2 + j L/n`.
 *
 * # Safety
 * `samples` must point to `n` readable doubles; `out` must be writable.
 */
enum MsStatus ms_profile_new(double length,
                             size_t n,
                             const double *samples,
                             struct MsProfile **out);

/**
 * # Safety
 * `p` must be null or a pointer from [`ms_profile_new`] not yet freed.
 */
void ms_profile_free(struct MsProfile *p);

/**
 * # Safety
 * `p` must be a live profile.
 */
size_t ms_profile_len(const struct MsProfile *p);

/**
 * Homogeneous Sobolev seminorm `||h||_{H^sigma}`.
 *
 * # Safety
 * `p` must be a live profile and `out` writable.
 */
enum MsStatus ms_seminorm(const struct MsProfile *p, double sigma, double *out);

/**
 * Interface length excess `E = int (sqrt(1 + h_x^2) - 1) dx`.
 *
 * # Safety
 * `p` must be a live profile and `out` writable.
 */
enum MsStatus ms_energy(const struct MsProfile *p, double *out);

/**
 * # Safety
 * `p` must be a live profile and `out` writable.
 */
enum MsStatus ms_sup_slope(const struct MsProfile *p, double *out);

/**
 * Solves both phases on the default strip and writes the normal velocity
 * at the grid nodes into `velocity` and the dissipation into `dissipation`.
 *
 * # Safety
 * `velocity` must hold `len` doubles, `len` must equal the profile length,
 * and `dissipation` must be writable.
 */
enum MsStatus ms_normal_velocity(const struct MsProfile *p,
                                 double *velocity,
                                 size_t len,
                                 double *dissipation);

/**
 * Samples of the self-similar kernel on `n` nodes of a period `length`.
 *
 * # Safety
 * `out` must hold `n` doubles.
 */
enum MsStatus ms_kernel_mask(double length, size_t n, double *out);

/**
 * Runs the simulation described by a JSON configuration.
 *
 * A run stopped early by slope blow-up or solver failure still yields a
 * trajectory; query it with [`ms_trajectory_status`].
 *
 * # Safety
 * `config_json` must be a NUL-terminated UTF-8 string and `out` writable.
 */
enum MsStatus ms_simulate_json(const char *config_json, struct MsTrajectory **out);

/**
 * # Safety
 * `t` must be null or a pointer from [`ms_simulate_json`] not yet freed.
 */
void ms_trajectory_free(struct MsTrajectory *t);

/**
 * How the run ended: `Ok`, `SlopeBlowup` or `SolverDivergence`.
 *
 * # Safety
 * `t` must be a live trajectory.
 */
enum MsStatus ms_trajectory_status(const struct MsTrajectory *t);

/**
 * # Safety
 * `t` must be a live trajectory.
 */
size_t ms_trajectory_num_samples(const struct MsTrajectory *t);

/**
 * # Safety
 * `t` must be a live trajectory and `out` writable.
 */
enum MsStatus ms_trajectory_sample(const struct MsTrajectory *t,
                                   size_t index,
                                   struct MsTriadSample *out);

/**
 * Copies the final height samples into `out`, which must hold `len` doubles.
 *
 * # Safety
 * `t` must be a live trajectory and `out` must hold `len` doubles.
 */
enum MsStatus ms_trajectory_final_height(const struct MsTrajectory *t, double *out, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MSRELAX_H */
