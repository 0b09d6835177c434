#ifndef MUHS_H
#define MUHS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MuhsStatus {
  MUHS_STATUS_OK = 0,
  MUHS_STATUS_NULL_POINTER = 1,
  MUHS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The run stopped early; the trajectory up to that point is returned.
   */
  MUHS_STATUS_BLOW_UP = 3,
  MUHS_STATUS_PANIC = 4,
} MuhsStatus;

typedef enum MuhsAinvRoute {
  MUHS_AINV_ROUTE_FORMULA = 0,
  MUHS_AINV_ROUTE_SPECTRAL = 1,
  MUHS_AINV_ROUTE_CONVOLUTION = 2,
} MuhsAinvRoute;

/**
 * Opaque grid handle.
 */
typedef struct MuhsGrid MuhsGrid;

/**
 * Opaque recorded-trajectory handle.
 */
typedef struct MuhsTrajectory MuhsTrajectory;

typedef struct MuhsDiagnostics {
  double t;
  double mu0;
  double energy;
  double u_sup;
  double ux_sup;
  double rho_sup;
  double rho_min;
  double sup_margin;
} MuhsDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message (NUL-terminated, truncated to `len − 1`
 * bytes) into `buf` and returns the full message length. Pass a null `buf`
 * to query the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t muhs_last_error_message(char *buf, size_t len);

/**
 * Creates a grid of `n` nodes (`n` even, at least 4).
 *
 * # Safety
 * `out` must be a valid pointer to a handle slot.
 */
enum MuhsStatus muhs_grid_new(size_t n, struct MuhsGrid **out);

/**
 * # Safety
 * `grid` must be null or a handle from [`muhs_grid_new`] not yet freed.
 */
void muhs_grid_free(struct MuhsGrid *grid);

/**
 * Number of nodes, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t muhs_grid_size(const struct MuhsGrid *grid);

/**
 * Spectral derivative of `values` into `out`.
 *
 * # Safety
 * `values` and `out` must each hold `n` doubles.
 */
enum MuhsStatus muhs_deriv(const struct MuhsGrid *grid, const double *values, double *out);

/**
 * Mean over one period into `*out`.
 *
 * # Safety
 * `values` must hold `n` doubles; `out` must be writable.
 */
enum MuhsStatus muhs_mean(const struct MuhsGrid *grid, const double *values, double *out);

/**
 * `A⁻¹ values` by `route`, one of the [`MuhsAinvRoute`] values.
 *
 * # Safety
 * `values` and `out` must each hold `n` doubles.
 */
enum MuhsStatus muhs_ainv(const struct MuhsGrid *grid,
                          uint32_t route,
                          const double *values,
                          double *out);

/**
 * Convolution with the mollifier of index `index` (at least 2).
 *
 * # Safety
 * `values` and `out` must each hold `n` doubles.
 */
enum MuhsStatus muhs_mollify(const struct MuhsGrid *grid,
                             size_t index,
                             const double *values,
                             double *out);

/**
 * Integrates from `(u0, rho0)` to `t_end`. On [`MuhsStatus::Ok`] and
 * [`MuhsStatus::BlowUp`] a trajectory handle is stored in `*out`.
 *
 * # Safety
 * `u0` and `rho0` must each hold `n` doubles; `out` must be writable.
 */
enum MuhsStatus muhs_simulate(const struct MuhsGrid *grid,
                              const double *u0,
                              const double *rho0,
                              double gamma,
                              double t_end,
                              double dt_max,
                              double cfl_number,
                              size_t record_every,
                              struct MuhsTrajectory **out);

/**
 * Number of recorded snapshots, or 0 for a null handle.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t muhs_trajectory_len(const struct MuhsTrajectory *traj);

/**
 * Diagnostics of snapshot `index`.
 *
 * # Safety
 * `traj` must be a live handle and `out` writable.
 */
enum MuhsStatus muhs_trajectory_diagnostics(const struct MuhsTrajectory *traj,
                                            size_t index,
                                            struct MuhsDiagnostics *out);

/**
 * Copies snapshot `index` into `u_out`, `rho_out` (each `n` doubles) and
 * its time into `t_out`.
 *
 * # Safety
 * `traj` must be a live handle and the outputs writable.
 */
enum MuhsStatus muhs_trajectory_state(const struct MuhsTrajectory *traj,
                                      size_t index,
                                      double *u_out,
                                      double *rho_out,
                                      double *t_out);

/**
 * # Safety
 * `traj` must be null or a handle from [`muhs_simulate`] not yet freed.
 */
void muhs_trajectory_free(struct MuhsTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MUHS_H */
