/* deltasense C interface. Generated from the Rust sources; do not edit by hand. */

#ifndef DELTASENSE_H
#define DELTASENSE_H

/* Regenerate with: cargo build -p deltasense-capi --features gen-header */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function in this interface.
 */
typedef enum DsStatus {
  /**
   * The call succeeded and all out parameters are valid.
   */
  DS_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  DS_STATUS_NULL_POINTER = 1,
  /**
   * An argument violated a documented precondition.
   */
  DS_STATUS_INVALID_ARGUMENT = 2,
  /**
   * A string argument was not valid UTF-8.
   */
  DS_STATUS_UTF8 = 3,
  /**
   * The geometry cannot support the construction (zero-measure area,
   * coincident sites, ...).
   */
  DS_STATUS_DEGENERATE_GEOMETRY = 4,
  /**
   * A serialized payload could not be read or written.
   */
  DS_STATUS_SERIALIZATION = 5,
  /**
   * Filesystem failure.
   */
  DS_STATUS_IO = 6,
  /**
   * An internal invariant failed; the handle states are unspecified.
   */
  DS_STATUS_INTERNAL = 7,
} DsStatus;

/**
 * Per-device fitted coverage curves for one deployment; inputs to the
 * closed-form expectations and every solver.
 */
typedef struct DsCalibration DsCalibration;

/**
 * A rectangular service area with fixed device positions.
 */
typedef struct DsDeployment DsDeployment;

/**
 * Sensing model plus error budget: decay rate, per-slot event probability,
 * and the error level solutions must stay under.
 */
typedef struct DsModel DsModel;

/**
 * Scoring of a solver's answer.
 */
typedef struct DsSolveInfo {
  /**
   * Expected per-device transmit power (the minimized objective).
   */
  double objective;
  /**
   * Expected per-slot error probability of the returned thresholds.
   */
  double expected_p_e;
  /**
   * Whether `expected_p_e` meets the configured budget.
   */
  bool feasible;
  /**
   * Outer iterations the solver ran.
   */
  uint64_t iterations;
  /**
   * Objective and constraint evaluations the solver spent.
   */
  uint64_t evaluations;
} DsSolveInfo;

/**
 * Summary statistics of one slotted simulation run.
 */
typedef struct DsSimStats {
  /**
   * Simulated slots.
   */
  uint64_t ttis;
  /**
   * Slots in which an event occurred.
   */
  uint64_t events;
  /**
   * Events reported by exactly one device.
   */
  uint64_t successes;
  /**
   * Events with two or more simultaneous reports.
   */
  uint64_t collisions;
  /**
   * Events nobody reported.
   */
  uint64_t misses;
  /**
   * Per-slot error frequency (misses plus collisions).
   */
  double error_rate;
  /**
   * Binomial standard error of `error_rate`.
   */
  double error_rate_std;
  /**
   * Per-slot miss frequency.
   */
  double miss_rate;
  /**
   * Per-slot collision frequency.
   */
  double collision_rate;
  /**
   * Mean fraction of slots a device spent transmitting.
   */
  double mean_active_fraction;
} DsSimStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version of this library as a static, null-terminated string.
 */
const char *ds_version(void);

/**
 * Copy the current thread's last error message into `buf`.
 *
 * Returns the size in bytes the full message needs, including the trailing
 * null. When `buf` is null or `cap` is zero nothing is copied; otherwise at
 * most `cap - 1` bytes plus a null terminator are written. The message is
 * empty until a call on this thread fails.
 */
size_t ds_last_error_message(char *buf, size_t cap);

/**
 * Create a sensing model handle.
 *
 * `eta` is the exponential decay rate of sensed power over distance,
 * `alpha` the per-slot event probability in (0, 1), and `budget` the error
 * probability ceiling in (0, alpha).
 */
enum DsStatus ds_model_new(double eta, double alpha, double budget, struct DsModel **out);

/**
 * Destroy a model handle. Accepts null.
 */
void ds_model_free(struct DsModel *model);

/**
 * Scatter `n` devices uniformly at random over a `length` by `height`
 * rectangle. The draw is deterministic in `seed`.
 */
enum DsStatus ds_deployment_generate(double length,
                                     double height,
                                     size_t n,
                                     uint64_t seed,
                                     struct DsDeployment **out);

/**
 * Parse a deployment from its JSON form:
 * `{"L":50.0,"H":50.0,"devices":[{"x":1.0,"y":2.0}, ...]}`.
 */
enum DsStatus ds_deployment_from_json(const char *json, struct DsDeployment **out);

/**
 * Serialize a deployment to JSON. The returned string must be released
 * with `ds_string_free`.
 */
enum DsStatus ds_deployment_to_json(const struct DsDeployment *dep, char **out);

/**
 * Release a string returned by this library. Accepts null.
 */
void ds_string_free(char *s);

/**
 * Number of devices in a deployment; zero when `dep` is null.
 */
size_t ds_deployment_len(const struct DsDeployment *dep);

/**
 * Fetch one device's coordinates by zero-based index.
 */
enum DsStatus ds_deployment_device(const struct DsDeployment *dep,
                                   size_t index,
                                   double *x,
                                   double *y);

/**
 * Destroy a deployment handle. Accepts null.
 */
void ds_deployment_free(struct DsDeployment *dep);

/**
 * Fit per-device coverage curves from `samples` uniform event draws
 * (at least 10000). Deterministic in `seed`.
 */
enum DsStatus ds_calibration_new(const struct DsDeployment *dep,
                                 const struct DsModel *model,
                                 size_t samples,
                                 uint64_t seed,
                                 struct DsCalibration **out);

/**
 * Destroy a calibration handle. Accepts null.
 */
void ds_calibration_free(struct DsCalibration *cal);

/**
 * Expected per-slot error probability of the thresholds `delta[0..len]`.
 */
enum DsStatus ds_expected_error(const struct DsModel *model,
                                const struct DsCalibration *cal,
                                const double *delta,
                                size_t len,
                                double *out);

/**
 * Expected per-device transmit power of the thresholds `delta[0..len]`.
 */
enum DsStatus ds_expected_power(const struct DsModel *model,
                                const struct DsCalibration *cal,
                                const double *delta,
                                size_t len,
                                double *out);

/**
 * Run one solver and write its thresholds into `delta_out[0..n]`.
 *
 * `method_tag` selects the solver: one of `equal`, `sca`, `bcd`,
 * `voronoi_min`, `voronoi_mean`, `voronoi_max`, `knn`, `ga`, `pso`,
 * `qlearn`. `delta_cap` is the capacity of `delta_out` and must cover the
 * deployment's device count. `info` may be null when the scoring is not
 * wanted. Stochastic solvers are deterministic in `seed`.
 */
enum DsStatus ds_solve(const struct DsModel *model,
                       const struct DsDeployment *dep,
                       const struct DsCalibration *cal,
                       const char *method_tag,
                       uint64_t seed,
                       double *delta_out,
                       size_t delta_cap,
                       struct DsSolveInfo *info);

/**
 * Replay thresholds through the slotted simulator for `ttis` slots and
 * fill `out` with the measured rates. Deterministic in `seed`.
 */
enum DsStatus ds_simulate(const struct DsModel *model,
                          const struct DsDeployment *dep,
                          const double *delta,
                          size_t len,
                          uint64_t ttis,
                          uint64_t seed,
                          struct DsSimStats *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DELTASENSE_H */
