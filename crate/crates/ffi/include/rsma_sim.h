#ifndef RSMA_SIM_H
#define RSMA_SIM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call. Values 2 to 4 match the CLI exit codes.
 */
typedef enum RsmaStatus {
  RSMA_STATUS_OK = 0,
  RSMA_STATUS_CONFIG = 2,
  RSMA_STATUS_NUMERICAL = 3,
  RSMA_STATUS_IO = 4,
  RSMA_STATUS_NULL_POINTER = 10,
  RSMA_STATUS_INVALID_UTF8 = 11,
  RSMA_STATUS_BUFFER_TOO_SMALL = 12,
  RSMA_STATUS_PANIC = 13,
} RsmaStatus;

typedef enum RsmaPrivatePrecoder {
  RSMA_PRIVATE_PRECODER_ZF,
  RSMA_PRIVATE_PRECODER_MRT,
  RSMA_PRIVATE_PRECODER_MMSE,
} RsmaPrivatePrecoder;

typedef enum RsmaCommonPrecoder {
  RSMA_COMMON_PRECODER_SINGULAR_VECTOR,
  RSMA_COMMON_PRECODER_MAX_MIN,
} RsmaCommonPrecoder;

typedef enum RsmaAllocationPolicy {
  RSMA_ALLOCATION_POLICY_MAX_MIN,
  RSMA_ALLOCATION_POLICY_ALL_TO_WEAKEST,
  RSMA_ALLOCATION_POLICY_EQUAL_SPLIT,
} RsmaAllocationPolicy;

/**
 * Opaque channel set.
 */
typedef struct RsmaChannelSet RsmaChannelSet;

typedef struct RsmaComplex {
  double re;
  double im;
} RsmaComplex;

/**
 * Rate summary; per-user totals go to a caller-provided buffer.
 */
typedef struct RsmaRateSummary {
  double common_rate;
  double sum_rate;
  double min_user_rate;
  /**
   * Common-power fraction chosen by the power search (0 for SDMA, the
   * weak-user share for NOMA).
   */
  double common_fraction;
} RsmaRateSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *rsma_last_error_message(void);

/**
 * Builds a channel set from `n_users × n_tx` row-major coefficients
 * (row k is user k's channel).
 *
 * # Safety
 * `coefficients` must point to `n_users * n_tx` values and `out` must be
 * writable.
 */
enum RsmaStatus rsma_channel_set_new(const struct RsmaComplex *coefficients,
                                     size_t n_users,
                                     size_t n_tx,
                                     double noise_variance,
                                     double tx_power,
                                     struct RsmaChannelSet **out);

/**
 * Two-user drop with the given correlation parameter and strength gap.
 *
 * # Safety
 * `out` must be writable.
 */
enum RsmaStatus rsma_channel_set_generate_pair(double rho,
                                               double alpha_db,
                                               size_t n_tx,
                                               double snr_db,
                                               uint64_t seed,
                                               struct RsmaChannelSet **out);

/**
 * i.i.d. Rayleigh drop.
 *
 * # Safety
 * `out` must be writable.
 */
enum RsmaStatus rsma_channel_set_generate_iid(size_t n_users,
                                              size_t n_tx,
                                              double snr_db,
                                              uint64_t seed,
                                              struct RsmaChannelSet **out);

/**
 * Releases a channel set. Null is ignored.
 *
 * # Safety
 * `set` must come from this library and not be used afterwards.
 */
void rsma_channel_set_free(struct RsmaChannelSet *set);

/**
 * # Safety
 * `set` must be a live handle or null (which yields 0).
 */
size_t rsma_channel_set_n_users(const struct RsmaChannelSet *set);

/**
 * # Safety
 * `set` must be a live handle or null (which yields 0).
 */
size_t rsma_channel_set_n_tx(const struct RsmaChannelSet *set);

/**
 * Correlation parameter and strength gap (dB) of users 0 and 1.
 *
 * # Safety
 * `set` must be a live handle; the outputs must be writable.
 */
enum RsmaStatus rsma_pair_geometry(const struct RsmaChannelSet *set,
                                   double *out_rho,
                                   double *out_alpha_db);

/**
 * RSMA with the sum-rate-maximizing common-power fraction over
 * `grid_points` values. `user_rates` (length `len`) and `summary` may be
 * null.
 *
 * # Safety
 * `set` must be a live handle; non-null outputs must be writable.
 */
enum RsmaStatus rsma_rsma_rates(const struct RsmaChannelSet *set,
                                enum RsmaPrivatePrecoder private_kind,
                                enum RsmaCommonPrecoder common_kind,
                                enum RsmaAllocationPolicy policy,
                                size_t grid_points,
                                double *user_rates,
                                size_t len,
                                struct RsmaRateSummary *summary);

/**
 * SDMA with equal power per user.
 *
 * # Safety
 * `set` must be a live handle; non-null outputs must be writable.
 */
enum RsmaStatus rsma_sdma_rates(const struct RsmaChannelSet *set,
                                enum RsmaPrivatePrecoder private_kind,
                                double *user_rates,
                                size_t len,
                                struct RsmaRateSummary *summary);

/**
 * Two-user NOMA on the chosen common beam with `power_split` of the power
 * on the weaker user's message.
 *
 * # Safety
 * `set` must be a live handle; non-null outputs must be writable.
 */
enum RsmaStatus rsma_noma_rates(const struct RsmaChannelSet *set,
                                double power_split,
                                enum RsmaCommonPrecoder beam_kind,
                                double *user_rates,
                                size_t len,
                                struct RsmaRateSummary *summary);

/**
 * Parses a configuration document, runs it and writes the CSV. A non-null
 * `output_path` overrides the document's.
 *
 * # Safety
 * `config_text` must be a nul-terminated string; `output_path` must be
 * one or null.
 */
enum RsmaStatus rsma_run_config(const char *config_text, const char *output_path);

/**
 * Runs a configuration document and returns the CSV as a new string in
 * `*out`, to be released with [`rsma_string_free`].
 *
 * # Safety
 * `config_text` must be a nul-terminated string and `out` writable.
 */
enum RsmaStatus rsma_render_csv(const char *config_text, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards. Null is
 * ignored.
 */
void rsma_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RSMA_SIM_H */
