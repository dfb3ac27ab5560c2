/* C interface to the cavlab intracavity absorption toolkit. */

#ifndef CAVLAB_H
#define CAVLAB_H

/* Generated with cbindgen:0.27.0 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Coherent drive selector for trajectory runs.
typedef enum CavDriveKind {
  // No drive; amplitude fields are ignored.
  CAV_DRIVE_KIND_OFF = 0,
  // Constant amplitude `drive_e0` in sqrt(photons)/s.
  CAV_DRIVE_KIND_CONSTANT = 1,
  // Input power ramped linearly from `p0_start` to `p0_stop` watts
  // over `ramp_duration` seconds, then held.
  CAV_DRIVE_KIND_POWER_RAMP = 2,
} CavDriveKind;

// Intracavity medium selector for trajectory runs.
typedef enum CavMediumKind {
  // Empty cavity; `kappa_m`, `i_sat_photons` and `q0` are ignored.
  CAV_MEDIUM_KIND_NO_MEDIUM = 0,
  // Fully inverted gain medium with small-signal rate `kappa_m`.
  CAV_MEDIUM_KIND_GAIN = 1,
  // Two-level saturable absorber with unsaturated rate `kappa_m`.
  CAV_MEDIUM_KIND_SATURABLE_LOSS = 2,
} CavMediumKind;

// Result code of a cavlab call.
typedef enum CavStatus {
  // Success.
  CAV_STATUS_OK = 0,
  // A required pointer argument was null.
  CAV_STATUS_NULL_ARGUMENT = 1,
  // A physical parameter is outside its admissible domain.
  CAV_STATUS_INVALID_PARAMETER = 2,
  // The linear cavity has net gain and no steady state exists.
  CAV_STATUS_NO_STEADY_STATE = 3,
  // A numerical procedure failed to converge or produced
  // non-finite values.
  CAV_STATUS_NUMERICAL = 4,
  // The library panicked internally. State may be inconsistent;
  // treat the process as poisoned.
  CAV_STATUS_PANIC = 5,
} CavStatus;

// Opaque mirror-and-mode description of a ring cavity.
typedef struct CavGeometry CavGeometry;

// Opaque solved steady-state intensity distribution.
typedef struct CavSteadyState CavSteadyState;

// Opaque recorded trajectory. Sample arrays stay valid until
// [`cav_trajectory_free`].
typedef struct CavTrajectory CavTrajectory;

// Plain-data description of one stochastic cavity trajectory.
typedef struct CavTrajectoryConfig {
  enum CavMediumKind medium_kind;
  // Unsaturated medium rate, 1/s.
  double kappa_m;
  // Medium saturation photon number.
  double i_sat_photons;
  // Spontaneous-emission diffusion scale, 1/s. Negative selects the
  // default 2 kappa_m.
  double q0;
  // Extra single-pass trace absorption, 1/m.
  double alpha_s_per_m;
  enum CavDriveKind drive_kind;
  // Drive amplitude for `Constant`, sqrt(photons)/s.
  double drive_e0;
  // Ramp start power for `PowerRamp`, W.
  double p0_start;
  // Ramp stop power for `PowerRamp`, W.
  double p0_stop;
  // Ramp duration for `PowerRamp`, s.
  double ramp_duration;
  // Initial quadratures, sqrt(photons).
  double initial_e1;
  double initial_e2;
  // Total integration time, s.
  double duration;
  // Step size, s. Must satisfy dt * (kappa' + kappa_m) <= 0.01.
  double dt;
  // Keep every this-many-th step; must be positive.
  uint64_t record_stride;
  // RNG seed and stream. Same (seed, stream) reproduces the run
  // bit for bit; see [`cav_noise_stream`].
  uint64_t seed;
  uint64_t stream;
} CavTrajectoryConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread. The
// pointer stays valid until the next failing cavlab call on the same
// thread. Never null; initially the empty string.
const char *cav_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *cav_version(void);

// Creates a cavity geometry.
//
// `length_m` is the one-way cavity length, `mode_area_m2` the beam
// cross-section, `wavelength_m` the carrier wavelength, `delta1` the
// per-mirror transmission (two coupling mirrors assumed) and `delta0`
// any residual round-trip loss. On success `*out` owns the handle.
//
// # Safety
// `out` must be a valid pointer.
enum CavStatus cav_geometry_new(double length_m,
                                double mode_area_m2,
                                double wavelength_m,
                                double delta1,
                                double delta0,
                                struct CavGeometry **out);

// Releases a geometry handle. Null is ignored.
//
// # Safety
// `g` must come from [`cav_geometry_new`] and not be used afterwards.
void cav_geometry_free(struct CavGeometry *g);

// Empty-cavity photon decay rate kappa_C in 1/s.
//
// # Safety
// `g` and `out` must be valid pointers.
enum CavStatus cav_geometry_kappa_c(const struct CavGeometry *g, double *out);

// Converts a circulating intensity in W/cm^2 to the dimensionless
// photon number used throughout the library.
//
// # Safety
// `g` and `out` must be valid pointers.
enum CavStatus cav_geometry_photons_from_wcm2(const struct CavGeometry *g,
                                              double intensity_wcm2,
                                              double *out);

// Inverse of [`cav_geometry_photons_from_wcm2`].
//
// # Safety
// `g` and `out` must be valid pointers.
enum CavStatus cav_geometry_wcm2_from_photons(const struct CavGeometry *g,
                                              double photons,
                                              double *out);

// Saturation photon number of a gain medium with small-signal photon
// ratio `eta0`, in the near-threshold scaling where I_sat = pi eta0^2 / 16.
double cav_i_sat_from_eta0(double eta0);

// Mean and variance of the normalized intensity x = I / sqrt(q'/beta')
// at pump parameter `a`.
//
// # Safety
// `out_mean` and `out_variance` must be valid pointers.
enum CavStatus cav_threshold_moments(double a, double *out_mean, double *out_variance);

// Normalized responsivity |d ln<x> / da| of the near-threshold laser at
// pump parameter `a`. Peaks near a = 1.28.
//
// # Safety
// `out` must be a valid pointer.
enum CavStatus cav_threshold_responsivity(double a, double *out);

// Squared absorption sensitivity (dalpha)^2 in 1/m^2 of a gain-filled
// cavity read out for time `t`, with gain rate `kappa_g`, saturation
// photon number `i_sat`, net decay margin `gamma_prime` (all 1/s) and
// technical relative-intensity floor `v_t` (1/Hz).
//
// # Safety
// `out` must be a valid pointer.
enum CavStatus cav_gain_sensitivity(double kappa_g,
                                    double i_sat,
                                    double gamma_prime,
                                    double v_t,
                                    double t,
                                    double *out);

// Solves the stationary intensity distribution of a cavity with drive
// amplitude `drive_e0` (sqrt(photons)/s), total linear decay
// `kappa_prime`, saturable gain `kappa_g`, gain saturation photon
// number `i_sat` and diffusion scale `q` (rates in 1/s). On success
// `*out` owns the handle.
//
// # Safety
// `out` must be a valid pointer.
enum CavStatus cav_steady_state_solve(double drive_e0,
                                      double kappa_prime,
                                      double kappa_g,
                                      double i_sat,
                                      double q,
                                      struct CavSteadyState **out);

// Releases a steady-state handle. Null is ignored.
//
// # Safety
// `h` must come from [`cav_steady_state_solve`] and not be used
// afterwards.
void cav_steady_state_free(struct CavSteadyState *h);

// Mean intracavity intensity <I> in photons.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_steady_state_mean(const struct CavSteadyState *h, double *out);

// Intensity variance <I^2> - <I>^2 in photons^2.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_steady_state_variance(const struct CavSteadyState *h, double *out);

// Fractional responsivity d ln<I> / d alpha_S in metres. Negative:
// added absorption lowers the mean output.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_steady_state_responsivity(const struct CavSteadyState *h, double *out);

// Derivative d<I^n>/d kappa' of the n-th raw moment with respect to
// the linear decay rate, in photons^n s.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_steady_state_moment_derivative(const struct CavSteadyState *h,
                                                  uint32_t n,
                                                  double *out);

// Unnormalized log-density ln P(I) + const at intensity `i` photons.
// Differences of this value between two intensities are exact.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_steady_state_log_density(const struct CavSteadyState *h, double i, double *out);

// Noise-stream identifier combining a shot index, a cavity index and a
// purpose tag (0 field, 1 detection, 2 drift), matching the streams the
// built-in experiments draw.
uint64_t cav_noise_stream(uint32_t shot, uint8_t cavity, uint8_t purpose);

// Integrates one stochastic trajectory of the intracavity field. On
// success `*out` owns the handle.
//
// # Safety
// `g`, `cfg` and `out` must be valid pointers.
enum CavStatus cav_trajectory_run(const struct CavGeometry *g,
                                  const struct CavTrajectoryConfig *cfg,
                                  struct CavTrajectory **out);

// Releases a trajectory handle and its sample arrays. Null is ignored.
//
// # Safety
// `h` must come from [`cav_trajectory_run`] and not be used afterwards.
void cav_trajectory_free(struct CavTrajectory *h);

// Number of recorded samples, including the initial condition.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_trajectory_len(const struct CavTrajectory *h, size_t *out);

// Sample times in seconds. The pointer stays valid until the handle is
// freed.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_trajectory_times(const struct CavTrajectory *h, const double **out);

// In-phase quadrature samples E1 in sqrt(photons). Valid until free.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_trajectory_e1(const struct CavTrajectory *h, const double **out);

// Quadrature-phase samples E2 in sqrt(photons). Valid until free.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_trajectory_e2(const struct CavTrajectory *h, const double **out);

// Intensity samples I = E1^2 + E2^2 in photons. Valid until free.
//
// # Safety
// `h` and `out` must be valid pointers.
enum CavStatus cav_trajectory_intensity(const struct CavTrajectory *h, const double **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVLAB_H */
