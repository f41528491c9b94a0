#ifndef SYNCHRONY_H
#define SYNCHRONY_H

#include <stddef.h>
#include <stdint.h>

typedef enum SyStatus {
  SY_STATUS_OK = 0,
  SY_STATUS_INVALID_ARGUMENT = 1,
  SY_STATUS_INSUFFICIENT_HISTORY = 2,
  SY_STATUS_INVALID_STATE = 3,
  SY_STATUS_CONFIG = 4,
  SY_STATUS_IO = 5,
  SY_STATUS_JSON = 6,
  SY_STATUS_SESSION_EXISTS = 7,
  SY_STATUS_NOT_FOUND = 8,
  SY_STATUS_NULL_POINTER = 9,
  SY_STATUS_UTF8 = 10,
  SY_STATUS_PANIC = 11,
} SyStatus;

// Greedy trained avatar controller.
typedef struct SyAgent SyAgent;

// Streaming phase estimator for one position signal.
typedef struct SyEstimator SyEstimator;

// Time averages of one simulation. Undefined values are NaN.
typedef struct SyRunSummary {
  double r_net;
  double r_tot;
  double rho_net;
  double rho_tot;
  double mean_omega_a;
} SyRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call into the library from the same thread.
const char *sy_last_error_message(void);

// Static, NUL-terminated name of a status.
const char *sy_status_name(enum SyStatus status);

const char *sy_version(void);

// Writes the two-oscillator locking constants.
//
// # Safety
// `chi` and `nu` must be valid for writes.
enum SyStatus sy_theorem_constants(double *chi, double *nu);

// Kuramoto order parameter of `n` phases.
//
// # Safety
// `phases` must point to `n` readable doubles and `r` be valid for writes.
enum SyStatus sy_order_parameter(const double *phases, size_t n, double *r);

// Runs a simulation described by a JSON config and writes its CSV files
// into `out_dir`. `base_dir` may be null; otherwise relative checkpoint
// paths resolve against it.
//
// # Safety
// String arguments must be NUL-terminated; `summary` must be valid for
// writes.
enum SyStatus sy_simulate(const char *config_json,
                          const char *base_dir,
                          const char *out_dir,
                          struct SyRunSummary *summary);

// Creates an estimator with default settings. `bootstrap_seconds` of input
// are consumed before the first phase is produced.
//
// # Safety
// `out` must be valid for writes.
enum SyStatus sy_estimator_new(double bootstrap_seconds, struct SyEstimator **out);

// Feeds one sample taken `dt` seconds after the previous one. `*ready` is
// 0 while bootstrapping, in which case `*theta` is left untouched.
//
// # Safety
// `h` must come from [`sy_estimator_new`]; `theta` and `ready` must be
// valid for writes.
enum SyStatus sy_estimator_push(struct SyEstimator *h,
                                double t,
                                double position,
                                double dt,
                                double *theta,
                                int32_t *ready);

// # Safety
// `h` must be null or come from [`sy_estimator_new`], and not be used
// afterwards.
void sy_estimator_free(struct SyEstimator *h);

// Loads a checkpoint. The frequency saturates on `[omega_min, omega_max]`
// and starts at `omega0`.
//
// # Safety
// `checkpoint_path` must be NUL-terminated; `out` valid for writes.
enum SyStatus sy_agent_load(const char *checkpoint_path,
                            double omega_min,
                            double omega_max,
                            double omega0,
                            struct SyAgent **out);

// One decision from the observation (mean phase of the group relative to
// the avatar, circular variance). Writes the chosen action index and the
// new avatar frequency.
//
// # Safety
// `h` must come from [`sy_agent_load`]; `action` and `omega` must be valid
// for writes.
enum SyStatus sy_agent_step(struct SyAgent *h,
                            double mean_relative_phase,
                            double circular_variance,
                            uint32_t *action,
                            double *omega);

// # Safety
// `h` must be null or come from [`sy_agent_load`], and not be used
// afterwards.
void sy_agent_free(struct SyAgent *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYNCHRONY_H */
