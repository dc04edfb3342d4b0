#ifndef CELLLOAD_H
#define CELLLOAD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Load-constant convention.
 */
typedef enum CellloadConstantMode {
  CELLLOAD_CONSTANT_MODE_REDERIVED = 0,
  CELLLOAD_CONSTANT_MODE_PAPER_LITERAL = 1,
} CellloadConstantMode;

/**
 * Status codes. `CELLLOAD_STATUS_OK` is zero.
 */
typedef enum CellloadStatus {
  CELLLOAD_STATUS_OK = 0,
  CELLLOAD_STATUS_NULL_POINTER = 1,
  CELLLOAD_STATUS_INVALID_PARAMETER = 2,
  CELLLOAD_STATUS_DOMAIN = 3,
  CELLLOAD_STATUS_VALIDITY_REGION = 4,
  CELLLOAD_STATUS_NO_CONVERGENCE = 5,
  CELLLOAD_STATUS_UNSTABLE = 6,
  CELLLOAD_STATUS_UNSUPPORTED = 7,
  CELLLOAD_STATUS_PANIC = 8,
} CellloadStatus;

/**
 * Selects the exact or the asymptotic evaluation path.
 */
typedef enum CellloadApprox {
  CELLLOAD_APPROX_REFERENCE = 0,
  CELLLOAD_APPROX_PAPER_APPROX = 1,
} CellloadApprox;

/**
 * Opaque model handle.
 */
typedef struct CellloadModel CellloadModel;

/**
 * Model inputs in SI units, except powers and gains in dB.
 */
typedef struct CellloadParams {
  /**
   * BS density [m⁻²].
   */
  double lambda_bs;
  double pt_dbm;
  double g0_db;
  double bandwidth_hz;
  double noise_density_dbm_hz;
  double k_pathloss_db;
  double alpha;
  /**
   * Flow arrival intensity [users·s⁻¹·m⁻²].
   */
  double lambda_u;
  double sigma_bits;
  enum CellloadConstantMode constant_mode;
} CellloadParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default parameters: 10 BS/km², 100 flows/s/km², 100 Mb files, 28 GHz
 * free-space intercept.
 */
struct CellloadParams cellload_params_default(void);

/**
 * Validates `params` and writes a new handle to `out`.
 *
 * # Safety
 * `params` must point to a valid `CellloadParams`; `out` must be writable.
 */
enum CellloadStatus cellload_model_new(const struct CellloadParams *params,
                                       struct CellloadModel **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `model` must come from `cellload_model_new` and not be used afterwards.
 */
void cellload_model_free(struct CellloadModel *model);

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *cellload_last_error_message(void);

/**
 * # Safety
 * `out` must be writable.
 */
enum CellloadStatus cellload_e1(double x, double *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum CellloadStatus cellload_ei(double x, double *out);

/**
 * Inverse of Ei for `y < 0` on the branch used by the load distribution.
 *
 * # Safety
 * `out` must be writable.
 */
enum CellloadStatus cellload_ei_inverse(double y, enum CellloadApprox mode, double *out);

/**
 * Regularized lower incomplete gamma function `P(a, x)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum CellloadStatus cellload_gamma_p(double a, double x, double *out);

/**
 * CDF of the typical-cell area [m²] at BS density `lambda_bs` [m⁻²].
 *
 * # Safety
 * `out` must be writable.
 */
enum CellloadStatus cellload_area_cdf(double area_m2, double lambda_bs, double *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CellloadStatus cellload_load_of_area(const struct CellloadModel *model,
                                          double area_m2,
                                          double *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CellloadStatus cellload_load_cdf(const struct CellloadModel *model,
                                      double load,
                                      enum CellloadApprox mode,
                                      double *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CellloadStatus cellload_stable_fraction(const struct CellloadModel *model,
                                             enum CellloadApprox mode,
                                             double *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CellloadStatus cellload_ei_mean_load(const struct CellloadModel *model,
                                          enum CellloadApprox mode,
                                          double *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CellloadStatus cellload_cf_mean_load(const struct CellloadModel *model, double *out);

/**
 * Mean load seen by a uniformly placed user.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CellloadStatus cellload_mean_cell_load(const struct CellloadModel *model, double *out);

/**
 * Flow throughput [bit/s] at mean load `rho_bar`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum CellloadStatus cellload_dyn_throughput(const struct CellloadModel *model,
                                            double rho_bar,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CELLLOAD_H */
