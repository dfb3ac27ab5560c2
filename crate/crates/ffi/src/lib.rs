//! C ABI surface for the cavlab core.
//!
//! Conventions:
//! * Every fallible call returns a [`CavStatus`]; `CAV_STATUS_OK` is zero.
//!   On failure a thread-local message is set, readable through
//!   [`cav_last_error_message`].
//! * Objects cross the boundary as opaque handles allocated by `_new` or
//!   `_run` constructors and released by the matching `_free`. Passing a
//!   handle to any other `_free`, or using it after free, is undefined
//!   behaviour. Freeing a null pointer is a no-op.
//! * Out-parameters are written only when the call returns
//!   `CAV_STATUS_OK`.
//! * Handles are not synchronized; do not share one handle between
//!   threads without external locking. Distinct handles are independent.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use cavlab::fokkerplanck::{
    i_sat_from_eta0, near_threshold_moments, normalized_threshold_responsivity, FpParams,
    SteadyStateDistribution,
};
use cavlab::sde::{noise_stream, Drive, SdeConfig, Trajectory};
use cavlab::sensitivity::gain_dalpha2;
use cavlab::units::{CavityGeometry, MediumSpec, TraceGas};
use cavlab::Error;

/// Result code of a cavlab call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A physical parameter is outside its admissible domain.
    InvalidParameter = 2,
    /// The linear cavity has net gain and no steady state exists.
    NoSteadyState = 3,
    /// A numerical procedure failed to converge or produced
    /// non-finite values.
    Numerical = 4,
    /// The library panicked internally. State may be inconsistent;
    /// treat the process as poisoned.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_err(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn fail(e: &Error) -> CavStatus {
    set_err(e.to_string());
    match e {
        Error::InvalidParameter(_) | Error::Config(_) => CavStatus::InvalidParameter,
        Error::NoSteadyState { .. } => CavStatus::NoSteadyState,
        Error::Numerical(_) => CavStatus::Numerical,
    }
}

fn guarded(f: impl FnOnce() -> CavStatus) -> CavStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(_) => {
            set_err("internal panic".into());
            CavStatus::Panic
        }
    }
}

/// Null-checks an out-pointer, then stores `$value` through it.
macro_rules! write_out {
    ($ptr:expr, $value:expr) => {{
        if $ptr.is_null() {
            set_err("null out-pointer".into());
            return CavStatus::NullArgument;
        }
        *$ptr = $value;
    }};
}

macro_rules! require_handle {
    ($ptr:expr) => {{
        if $ptr.is_null() {
            set_err("null handle".into());
            return CavStatus::NullArgument;
        }
        &*$ptr
    }};
}

/// Message describing the most recent failure on this thread. The
/// pointer stays valid until the next failing cavlab call on the same
/// thread. Never null; initially the empty string.
#[no_mangle]
pub extern "C" fn cav_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cav_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// Cavity geometry.

/// Opaque mirror-and-mode description of a ring cavity.
pub struct CavGeometry(CavityGeometry);

/// Creates a cavity geometry.
///
/// `length_m` is the one-way cavity length, `mode_area_m2` the beam
/// cross-section, `wavelength_m` the carrier wavelength, `delta1` the
/// per-mirror transmission (two coupling mirrors assumed) and `delta0`
/// any residual round-trip loss. On success `*out` owns the handle.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cav_geometry_new(
    length_m: f64,
    mode_area_m2: f64,
    wavelength_m: f64,
    delta1: f64,
    delta0: f64,
    out: *mut *mut CavGeometry,
) -> CavStatus {
    guarded(|| unsafe {
        match CavityGeometry::new(length_m, mode_area_m2, wavelength_m, delta1, delta0) {
            Ok(g) => {
                write_out!(out, Box::into_raw(Box::new(CavGeometry(g))));
                CavStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a geometry handle. Null is ignored.
///
/// # Safety
/// `g` must come from [`cav_geometry_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cav_geometry_free(g: *mut CavGeometry) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Empty-cavity photon decay rate kappa_C in 1/s.
///
/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_geometry_kappa_c(g: *const CavGeometry, out: *mut f64) -> CavStatus {
    guarded(|| unsafe {
        let g = require_handle!(g);
        write_out!(out, g.0.kappa_c());
        CavStatus::Ok
    })
}

/// Converts a circulating intensity in W/cm^2 to the dimensionless
/// photon number used throughout the library.
///
/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_geometry_photons_from_wcm2(
    g: *const CavGeometry,
    intensity_wcm2: f64,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let g = require_handle!(g);
        match g.0.photons_from_wcm2(intensity_wcm2) {
            Ok(v) => {
                write_out!(out, v);
                CavStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Inverse of [`cav_geometry_photons_from_wcm2`].
///
/// # Safety
/// `g` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_geometry_wcm2_from_photons(
    g: *const CavGeometry,
    photons: f64,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let g = require_handle!(g);
        write_out!(out, g.0.wcm2_from_photons(photons));
        CavStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Near-threshold closed forms.

/// Saturation photon number of a gain medium with small-signal photon
/// ratio `eta0`, in the near-threshold scaling where I_sat = pi eta0^2 / 16.
#[no_mangle]
pub extern "C" fn cav_i_sat_from_eta0(eta0: f64) -> f64 {
    i_sat_from_eta0(eta0)
}

/// Mean and variance of the normalized intensity x = I / sqrt(q'/beta')
/// at pump parameter `a`.
///
/// # Safety
/// `out_mean` and `out_variance` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_threshold_moments(
    a: f64,
    out_mean: *mut f64,
    out_variance: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let (m, v) = near_threshold_moments(a);
        write_out!(out_mean, m);
        write_out!(out_variance, v);
        CavStatus::Ok
    })
}

/// Normalized responsivity |d ln<x> / da| of the near-threshold laser at
/// pump parameter `a`. Peaks near a = 1.28.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cav_threshold_responsivity(a: f64, out: *mut f64) -> CavStatus {
    guarded(|| unsafe {
        write_out!(out, normalized_threshold_responsivity(a));
        CavStatus::Ok
    })
}

/// Squared absorption sensitivity (dalpha)^2 in 1/m^2 of a gain-filled
/// cavity read out for time `t`, with gain rate `kappa_g`, saturation
/// photon number `i_sat`, net decay margin `gamma_prime` (all 1/s) and
/// technical relative-intensity floor `v_t` (1/Hz).
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cav_gain_sensitivity(
    kappa_g: f64,
    i_sat: f64,
    gamma_prime: f64,
    v_t: f64,
    t: f64,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let v = gain_dalpha2(kappa_g, i_sat, gamma_prime, v_t, t);
        if !v.is_finite() {
            set_err(format!("sensitivity not finite: {v}"));
            return CavStatus::Numerical;
        }
        write_out!(out, v);
        CavStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Steady-state photon statistics.

/// Opaque solved steady-state intensity distribution.
pub struct CavSteadyState {
    dist: SteadyStateDistribution,
    params: FpParams,
}

/// Solves the stationary intensity distribution of a cavity with drive
/// amplitude `drive_e0` (sqrt(photons)/s), total linear decay
/// `kappa_prime`, saturable gain `kappa_g`, gain saturation photon
/// number `i_sat` and diffusion scale `q` (rates in 1/s). On success
/// `*out` owns the handle.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cav_steady_state_solve(
    drive_e0: f64,
    kappa_prime: f64,
    kappa_g: f64,
    i_sat: f64,
    q: f64,
    out: *mut *mut CavSteadyState,
) -> CavStatus {
    guarded(|| unsafe {
        let params = match FpParams::new(drive_e0, kappa_prime, kappa_g, i_sat, q) {
            Ok(p) => p,
            Err(e) => return fail(&e),
        };
        match SteadyStateDistribution::solve(params) {
            Ok(dist) => {
                write_out!(
                    out,
                    Box::into_raw(Box::new(CavSteadyState { dist, params }))
                );
                CavStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a steady-state handle. Null is ignored.
///
/// # Safety
/// `h` must come from [`cav_steady_state_solve`] and not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn cav_steady_state_free(h: *mut CavSteadyState) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Mean intracavity intensity <I> in photons.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_steady_state_mean(
    h: *const CavSteadyState,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.dist.mean());
        CavStatus::Ok
    })
}

/// Intensity variance <I^2> - <I>^2 in photons^2.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_steady_state_variance(
    h: *const CavSteadyState,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.dist.variance());
        CavStatus::Ok
    })
}

/// Fractional responsivity d ln<I> / d alpha_S in metres. Negative:
/// added absorption lowers the mean output.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_steady_state_responsivity(
    h: *const CavSteadyState,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.dist.responsivity());
        CavStatus::Ok
    })
}

/// Derivative d<I^n>/d kappa' of the n-th raw moment with respect to
/// the linear decay rate, in photons^n s.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_steady_state_moment_derivative(
    h: *const CavSteadyState,
    n: u32,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        match h.dist.moment_derivative(n) {
            Ok(v) => {
                write_out!(out, v);
                CavStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Unnormalized log-density ln P(I) + const at intensity `i` photons.
/// Differences of this value between two intensities are exact.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_steady_state_log_density(
    h: *const CavSteadyState,
    i: f64,
    out: *mut f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.params.log_density(i));
        CavStatus::Ok
    })
}

// ---------------------------------------------------------------------------
// Stochastic trajectories.

/// Intracavity medium selector for trajectory runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavMediumKind {
    /// Empty cavity; `kappa_m`, `i_sat_photons` and `q0` are ignored.
    NoMedium = 0,
    /// Fully inverted gain medium with small-signal rate `kappa_m`.
    Gain = 1,
    /// Two-level saturable absorber with unsaturated rate `kappa_m`.
    SaturableLoss = 2,
}

/// Coherent drive selector for trajectory runs.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CavDriveKind {
    /// No drive; amplitude fields are ignored.
    Off = 0,
    /// Constant amplitude `drive_e0` in sqrt(photons)/s.
    Constant = 1,
    /// Input power ramped linearly from `p0_start` to `p0_stop` watts
    /// over `ramp_duration` seconds, then held.
    PowerRamp = 2,
}

/// Plain-data description of one stochastic cavity trajectory.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CavTrajectoryConfig {
    pub medium_kind: CavMediumKind,
    /// Unsaturated medium rate, 1/s.
    pub kappa_m: f64,
    /// Medium saturation photon number.
    pub i_sat_photons: f64,
    /// Spontaneous-emission diffusion scale, 1/s. Negative selects the
    /// default 2 kappa_m.
    pub q0: f64,
    /// Extra single-pass trace absorption, 1/m.
    pub alpha_s_per_m: f64,
    pub drive_kind: CavDriveKind,
    /// Drive amplitude for `Constant`, sqrt(photons)/s.
    pub drive_e0: f64,
    /// Ramp start power for `PowerRamp`, W.
    pub p0_start: f64,
    /// Ramp stop power for `PowerRamp`, W.
    pub p0_stop: f64,
    /// Ramp duration for `PowerRamp`, s.
    pub ramp_duration: f64,
    /// Initial quadratures, sqrt(photons).
    pub initial_e1: f64,
    pub initial_e2: f64,
    /// Total integration time, s.
    pub duration: f64,
    /// Step size, s. Must satisfy dt * (kappa' + kappa_m) <= 0.01.
    pub dt: f64,
    /// Keep every this-many-th step; must be positive.
    pub record_stride: u64,
    /// RNG seed and stream. Same (seed, stream) reproduces the run
    /// bit for bit; see [`cav_noise_stream`].
    pub seed: u64,
    pub stream: u64,
}

/// Opaque recorded trajectory. Sample arrays stay valid until
/// [`cav_trajectory_free`].
pub struct CavTrajectory(Trajectory);

/// Noise-stream identifier combining a shot index, a cavity index and a
/// purpose tag (0 field, 1 detection, 2 drift), matching the streams the
/// built-in experiments draw.
#[no_mangle]
pub extern "C" fn cav_noise_stream(shot: u32, cavity: u8, purpose: u8) -> u64 {
    noise_stream(shot, cavity, purpose)
}

/// Integrates one stochastic trajectory of the intracavity field. On
/// success `*out` owns the handle.
///
/// # Safety
/// `g`, `cfg` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_trajectory_run(
    g: *const CavGeometry,
    cfg: *const CavTrajectoryConfig,
    out: *mut *mut CavTrajectory,
) -> CavStatus {
    guarded(|| unsafe {
        let g = require_handle!(g);
        let cfg = require_handle!(cfg);
        let medium = match cfg.medium_kind {
            CavMediumKind::NoMedium => Ok(MediumSpec::none()),
            CavMediumKind::Gain => MediumSpec::gain(cfg.kappa_m, cfg.i_sat_photons),
            CavMediumKind::SaturableLoss => {
                MediumSpec::saturable_loss(cfg.kappa_m, cfg.i_sat_photons)
            }
        };
        let medium = match medium {
            Ok(m) if cfg.q0 >= 0.0 => m.with_q0(cfg.q0),
            Ok(m) => m,
            Err(e) => return fail(&e),
        };
        let trace = match TraceGas::new(cfg.alpha_s_per_m) {
            Ok(t) => t,
            Err(e) => return fail(&e),
        };
        if cfg.record_stride == 0 {
            set_err("record_stride must be positive".into());
            return CavStatus::InvalidParameter;
        }
        let drive = match cfg.drive_kind {
            CavDriveKind::Off => Drive::Off,
            CavDriveKind::Constant => Drive::Constant { e0: cfg.drive_e0 },
            CavDriveKind::PowerRamp => Drive::PowerRamp {
                p0_start: cfg.p0_start,
                p0_stop: cfg.p0_stop,
                duration: cfg.ramp_duration,
            },
        };
        let sde = SdeConfig {
            geom: g.0,
            medium,
            trace,
            drive,
            initial: [cfg.initial_e1, cfg.initial_e2],
            duration: cfg.duration,
            dt: cfg.dt,
            record_stride: cfg.record_stride as usize,
            seed: cfg.seed,
            stream: cfg.stream,
        };
        match sde.integrate() {
            Ok(traj) => {
                write_out!(out, Box::into_raw(Box::new(CavTrajectory(traj))));
                CavStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a trajectory handle and its sample arrays. Null is ignored.
///
/// # Safety
/// `h` must come from [`cav_trajectory_run`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cav_trajectory_free(h: *mut CavTrajectory) {
    if !h.is_null() {
        drop(unsafe { Box::from_raw(h) });
    }
}

/// Number of recorded samples, including the initial condition.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_trajectory_len(h: *const CavTrajectory, out: *mut usize) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.0.t.len());
        CavStatus::Ok
    })
}

/// Sample times in seconds. The pointer stays valid until the handle is
/// freed.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_trajectory_times(
    h: *const CavTrajectory,
    out: *mut *const f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.0.t.as_ptr());
        CavStatus::Ok
    })
}

/// In-phase quadrature samples E1 in sqrt(photons). Valid until free.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_trajectory_e1(
    h: *const CavTrajectory,
    out: *mut *const f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.0.e1.as_ptr());
        CavStatus::Ok
    })
}

/// Quadrature-phase samples E2 in sqrt(photons). Valid until free.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_trajectory_e2(
    h: *const CavTrajectory,
    out: *mut *const f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.0.e2.as_ptr());
        CavStatus::Ok
    })
}

/// Intensity samples I = E1^2 + E2^2 in photons. Valid until free.
///
/// # Safety
/// `h` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn cav_trajectory_intensity(
    h: *const CavTrajectory,
    out: *mut *const f64,
) -> CavStatus {
    guarded(|| unsafe {
        let h = require_handle!(h);
        write_out!(out, h.0.intensity.as_ptr());
        CavStatus::Ok
    })
}
