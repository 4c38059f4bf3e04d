#ifndef TREE_MAJORITY_H
#define TREE_MAJORITY_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TmStatus {
  TM_STATUS_OK = 0,
  TM_STATUS_NULL_POINTER = 1,
  TM_STATUS_INVALID_ARGUMENT = 2,
  TM_STATUS_PRECONDITION = 3,
  TM_STATUS_UNSUPPORTED_REGIME = 4,
  TM_STATUS_EVERY_POINT_FIXED = 5,
  TM_STATUS_SOLVER_FAILURE = 6,
  TM_STATUS_INVALID_CONFIG = 7,
  TM_STATUS_BUFFER_TOO_SMALL = 8,
  TM_STATUS_PANIC = 9,
} TmStatus;

typedef enum TmStability {
  TM_STABILITY_ATTRACTIVE = 0,
  TM_STABILITY_REPULSIVE = 1,
  TM_STABILITY_NEUTRAL = 2,
} TmStability;

/**
 * Opaque: a fixed-point set.
 */
typedef struct TmFixedPoints TmFixedPoints;

/**
 * Opaque: model parameters with their update map.
 */
typedef struct TmModel TmModel;

/**
 * Opaque: a tree simulation result.
 */
typedef struct TmSimResult TmSimResult;

typedef struct TmFixedPoint {
  double value;
  enum TmStability stability;
  bool tangent;
  double residual;
} TmFixedPoint;

/**
 * Summary of an orbit; the full sequence stays on the Rust side.
 */
typedef struct TmTrajectory {
  double last;
  size_t steps;
  bool converged;
  bool has_limit;
  double limit;
} TmTrajectory;

typedef struct TmThreshold {
  size_t m;
  double p_threshold;
  double bracket_width;
  size_t evaluations;
  bool boundary;
} TmThreshold;

typedef struct TmSimConfig {
  size_t m;
  double p_b;
  double p_r;
  size_t depth;
  size_t horizon;
  double pi_0;
  uint64_t seed;
  uint64_t replications;
} TmSimConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library from the same thread.
 */
const char *tm_last_error_message(void);

/**
 * NUL-terminated library version; static storage.
 */
const char *tm_version(void);

enum TmStatus tm_model_new(size_t m, double p_b, double p_r, struct TmModel **model);

void tm_model_free(struct TmModel *model);

size_t tm_model_m(const struct TmModel *model);

/**
 * Copies `f_m(0..=m)` into `values`, which must hold `m + 1` doubles.
 */
enum TmStatus tm_model_policy(const struct TmModel *model, double *values, size_t len);

enum TmStatus tm_policy_value(size_t m, double p_b, double p_r, size_t k, double *value);

enum TmStatus tm_g_eval(const struct TmModel *model, double x, double *value);

enum TmStatus tm_g_prime(const struct TmModel *model, double x, double *value);

enum TmStatus tm_g_double_prime(const struct TmModel *model, double x, double *value);

/**
 * `g'_m(1/2)` with `p_B = p_R = p`.
 */
enum TmStatus tm_g_prime_at_half(size_t m, double p, double *value);

enum TmStatus tm_df_dp(size_t m, size_t l, double p, double *value);

enum TmStatus tm_fixed_points_new(const struct TmModel *model,
                                  double tol,
                                  struct TmFixedPoints **points);

/**
 * Closed-form fixed points for `m = 3`, `p_B = 1`.
 */
enum TmStatus tm_m3_pb1_closed_form(double p_r, struct TmFixedPoints **points);

size_t tm_fixed_points_len(const struct TmFixedPoints *points);

enum TmStatus tm_fixed_points_get(const struct TmFixedPoints *points,
                                  size_t index,
                                  struct TmFixedPoint *point);

void tm_fixed_points_free(struct TmFixedPoints *points);

enum TmStatus tm_classify_stability(const struct TmModel *model,
                                    double x,
                                    enum TmStability *result);

enum TmStatus tm_iterate(const struct TmModel *model,
                         double pi_0,
                         size_t max_steps,
                         double conv_tol,
                         struct TmTrajectory *summary);

enum TmStatus tm_predict_limit(const struct TmModel *model, double pi_0, double *limit);

enum TmStatus tm_solve_threshold(size_t m, double tol, struct TmThreshold *result);

enum TmStatus tm_estimate_g_one_step(const struct TmModel *model,
                                     double x,
                                     uint64_t samples,
                                     uint64_t seed,
                                     double *estimate,
                                     double *ci_half_width);

enum TmStatus tm_simulate_tree(const struct TmSimConfig *config, struct TmSimResult **result);

/**
 * Number of recorded times, `T + 1`.
 */
size_t tm_sim_result_len(const struct TmSimResult *result);

enum TmStatus tm_sim_result_pi_hat(const struct TmSimResult *result, double *values, size_t len);

enum TmStatus tm_sim_result_ci_half_width(const struct TmSimResult *result,
                                          double *values,
                                          size_t len);

/**
 * Writes NaN when no pair correlation was computed.
 */
enum TmStatus tm_sim_result_pair_correlation(const struct TmSimResult *result, double *value);

void tm_sim_result_free(struct TmSimResult *result);

enum TmStatus tm_independence_check(const struct TmSimConfig *config,
                                    size_t level,
                                    size_t pairs,
                                    double *max_abs_correlation);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TREE_MAJORITY_H */
