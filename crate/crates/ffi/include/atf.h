/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ATF_H
#define ATF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum AtfStatus {
  ATF_STATUS_OK = 0,
  ATF_STATUS_NULL_POINTER = 1,
  ATF_STATUS_INVALID_PARAMETER = 2,
  ATF_STATUS_SINGULAR_SYSTEM = 3,
  ATF_STATUS_NUMERICAL = 4,
  ATF_STATUS_CONFIG = 5,
  ATF_STATUS_BUFFER_TOO_SMALL = 6,
  ATF_STATUS_INVALID_UTF8 = 7,
  ATF_STATUS_PANIC = 8,
} AtfStatus;

/**
 * Opaque parameter set.
 */
typedef struct AtfParams AtfParams;

typedef struct AtfOutageReport {
  double p_out;
  double p_e;
  double p_mode_i;
  double p_mode_ii;
  double p_mode_iii;
  double phi_i;
  double phi_ii;
  double phi_iii;
  double p_direct;
} AtfOutageReport;

typedef struct AtfOptimalEt {
  /**
   * 1-based battery level of the minimizer.
   */
  size_t index;
  double e_t;
  double outage;
} AtfOptimalEt;

typedef struct AtfSimResult {
  uint64_t blocks;
  uint64_t outages;
  double outage_rate;
  double standard_error;
  double conditional_outage;
  uint64_t mode_counts[3];
} AtfSimResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Paper-default parameters. Release with [`atf_params_free`].
 */
struct AtfParams *atf_params_new(void);

/**
 * # Safety
 * `params` must come from this library and not be used afterwards. Null is a no-op.
 */
void atf_params_free(struct AtfParams *params);

/**
 * Reads a `key = value` file into a new handle stored in `*out`.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum AtfStatus atf_params_load_config(const char *path, struct AtfParams **out);

/**
 * Sets one parameter from its config spelling, e.g. `("P_S", "20dbm")`.
 * Unknown keys and unparsable values give `Config` and leave the handle
 * unchanged. Consistency between keys (such as `E_T <= C`) is checked by the
 * computing calls.
 *
 * # Safety
 * `params` must be a live handle; `key` and `value` NUL-terminated strings.
 */
enum AtfStatus atf_params_set(struct AtfParams *params, const char *key, const char *value);

/**
 * Reads one parameter in SI units.
 *
 * # Safety
 * `params` must be a live handle, `key` a NUL-terminated string, `out` writable.
 */
enum AtfStatus atf_params_get(const struct AtfParams *params, const char *key, double *out);

/**
 * Closed-form outage with its per-mode breakdown.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum AtfStatus atf_analytic_outage(const struct AtfParams *params, struct AtfOutageReport *out);

/**
 * Outage of direct source-destination transmission.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum AtfStatus atf_direct_outage(const struct AtfParams *params, double *out);

/**
 * Best `E_T` over the battery levels, ignoring the handle's own `E_T`.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum AtfStatus atf_optimal_et(const struct AtfParams *params, struct AtfOptimalEt *out);

/**
 * Monte Carlo run of `replicas` chains with `blocks` blocks each, the first
 * `warmup` discarded. `discrete` nonzero selects the quantized battery.
 *
 * # Safety
 * `params` must be a live handle and `out` writable.
 */
enum AtfStatus atf_simulate(const struct AtfParams *params,
                            uint64_t blocks,
                            uint64_t warmup,
                            uint64_t seed,
                            int32_t discrete,
                            uint32_t replicas,
                            struct AtfSimResult *out);

/**
 * Generalized Marcum Q-function `Q_order(a, b)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum AtfStatus atf_marcum_q(uint32_t order, double a, double b, double *out);

/**
 * Stationary battery distribution, `L + 1` values. `*len_out` always receives
 * the required length; if `capacity` is smaller nothing else is written and
 * the call returns `BufferTooSmall`. `buf` may be null when `capacity` is 0.
 *
 * # Safety
 * `buf` must hold `capacity` doubles and `len_out` be writable.
 */
enum AtfStatus atf_stationary_distribution(const struct AtfParams *params,
                                           double *buf,
                                           size_t capacity,
                                           size_t *len_out);

/**
 * Message for the last failed call on this thread, or null after a
 * successful one. Valid until the next call from the same thread.
 */
const char *atf_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATF_H */
