//! Time-domain stochastic trajectories of the cavity field and the two
//! switching-based measurement protocols built on them.
//!
//! The quadratures follow the Euler-Maruyama discretization of
//!
//!   dE_i = [ (kappa_m / (1 + I/I_sat) - kappa') E_i / 2 + E0_i(t) ] dt
//!          + sqrt(2 Q(I)) dW_i,
//!
//! with kappa_m signed (+ for gain, - for a saturable absorber), linear
//! loss kappa' = kappa_C + c alpha_S, drive on quadrature 1, and the
//! medium diffusion Q(I) of [`crate::units::MediumSpec::q_of`]. Noise is
//! generated counter-style: every trajectory owns a (seed, stream) pair,
//! so ensembles are reproducible and shots are independent by
//! construction.
//!
//! Two experiments use the switching dynamics as an amplifier:
//!
//! * [`sweep_up_experiment`]: ramp the drive power through the lower
//!   bistability knee in two cavities that differ only by a trace
//!   absorption; the differential jump time, divided by the
//!   deterministic knee-power slope, estimates the absorption
//!   difference.
//! * [`ringdown_shot`]: let a strongly saturated absorber cavity decay;
//!   time the crossing of a detection threshold. A perturbation delta
//!   ln I entering the unsaturation knee grows exponentially (the higher
//!   trajectory stays transparent longer while the lower one hits the
//!   fast loss), which multiplies the timing responsivity to absorption
//!   by the same factor. [`ringdown_prediction`] propagates the medium
//!   noise through that linearized amplification by quadrature and is
//!   the oracle the Monte Carlo tests check against.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bistability::BistableCavity;
use crate::error::{Error, Result};
use crate::numerics::quad::integrate_adaptive;
use crate::numerics::stats::{autocorrelation, decay_rate_fit, linear_fit, mean_var};
use crate::units::{CavityGeometry, MediumKind, MediumSpec, TraceGas, SPEED_OF_LIGHT};

/// Stream id for a (shot, cavity, purpose) triple. Fixed encoding keeps
/// every random draw in the whole program attributable.
pub fn noise_stream(shot: u32, cavity: u8, purpose: u8) -> u64 {
    ((purpose as u64) << 40) | ((cavity as u64) << 32) | shot as u64
}

/// Purposes used by the built-in experiments.
pub const PURPOSE_FIELD: u8 = 0;
pub const PURPOSE_DETECTION: u8 = 1;
pub const PURPOSE_DRIFT: u8 = 2;

/// Coherent drive schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Drive {
    Off,
    /// Fixed amplitude, sqrt(photons)/s.
    Constant {
        e0: f64,
    },
    /// Input power ramped linearly from `p0_start` to `p0_stop` (W) over
    /// `duration` (s), then held.
    PowerRamp {
        p0_start: f64,
        p0_stop: f64,
        duration: f64,
    },
}

impl Drive {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Drive::Off => true,
            Drive::Constant { e0 } => e0.is_finite() && e0 >= 0.0,
            Drive::PowerRamp {
                p0_start,
                p0_stop,
                duration,
            } => {
                p0_start.is_finite()
                    && p0_stop.is_finite()
                    && p0_start >= 0.0
                    && p0_stop >= 0.0
                    && duration > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid drive {self:?}")))
        }
    }

    /// Amplitude at time `t` for a cavity with output rate `kappa_c` and
    /// photon energy `hbar_omega`: E0 = sqrt(P0 kappa_C / 4 hbar omega).
    pub fn amplitude(&self, t: f64, kappa_c: f64, hbar_omega: f64) -> f64 {
        match *self {
            Drive::Off => 0.0,
            Drive::Constant { e0 } => e0,
            Drive::PowerRamp {
                p0_start,
                p0_stop,
                duration,
            } => {
                let f = (t / duration).clamp(0.0, 1.0);
                let p0 = p0_start + (p0_stop - p0_start) * f;
                (p0 * kappa_c / (4.0 * hbar_omega)).sqrt()
            }
        }
    }
}

/// Full specification of one stochastic trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SdeConfig {
    pub geom: CavityGeometry,
    pub medium: MediumSpec,
    pub trace: TraceGas,
    pub drive: Drive,
    /// Initial quadratures [E1, E2], sqrt(photons).
    pub initial: [f64; 2],
    /// Total integration time, s.
    pub duration: f64,
    /// Step size, s. Must satisfy dt * (kappa' + |kappa_m|) <= 0.01.
    pub dt: f64,
    /// Record every this many steps.
    pub record_stride: usize,
    pub seed: u64,
    pub stream: u64,
}

impl SdeConfig {
    pub fn kappa_prime(&self) -> f64 {
        self.geom.kappa_c() + self.trace.kappa_s()
    }

    /// Fastest rate in the drift; bounds the stable step size.
    pub fn max_rate(&self) -> f64 {
        self.kappa_prime() + self.medium.kappa_m
    }

    pub fn validate(&self) -> Result<()> {
        self.drive.validate()?;
        if !(self.dt > 0.0 && self.duration >= self.dt) {
            return Err(Error::InvalidParameter(format!(
                "need 0 < dt <= duration, got dt = {}, duration = {}",
                self.dt, self.duration
            )));
        }
        let stiffness = self.dt * self.max_rate();
        if stiffness > 0.01 * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!(
                "dt * max rate = {stiffness:.3e} exceeds 0.01; \
                 reduce dt below {:.3e} s",
                0.01 / self.max_rate()
            )));
        }
        if self.record_stride == 0 {
            return Err(Error::InvalidParameter("record stride must be >= 1".into()));
        }
        if !(self.initial[0].is_finite() && self.initial[1].is_finite()) {
            return Err(Error::InvalidParameter(
                "initial field must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Drive the visitor through every step; `visit(step, t, e1, e2)`
    /// returns false to stop early. Step 0 is the initial condition.
    pub fn walk(&self, mut visit: impl FnMut(usize, f64, f64, f64) -> bool) -> Result<()> {
        self.validate()?;
        let kappa_prime = self.kappa_prime();
        let kappa_c = self.geom.kappa_c();
        let hbar_omega = self.geom.photon_energy();
        let signed = self.medium.signed_rate();
        let i_sat = self.medium.i_sat;
        let n_steps = (self.duration / self.dt).ceil() as usize;
        let sqrt_dt = self.dt.sqrt();

        let mut rng = ChaCha12Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);

        let (mut e1, mut e2) = (self.initial[0], self.initial[1]);
        if !visit(0, 0.0, e1, e2) {
            return Ok(());
        }
        for step in 1..=n_steps {
            let t_prev = (step - 1) as f64 * self.dt;
            let i = e1 * e1 + e2 * e2;
            let a = 0.5 * (signed / (1.0 + i / i_sat) - kappa_prime);
            let e0 = self.drive.amplitude(t_prev, kappa_c, hbar_omega);
            let q = self.medium.q_of(i);
            let mut d1 = (a * e1 + e0) * self.dt;
            let mut d2 = a * e2 * self.dt;
            if q > 0.0 {
                let s = (2.0 * q).sqrt() * sqrt_dt;
                let n1: f64 = rng.sample(StandardNormal);
                let n2: f64 = rng.sample(StandardNormal);
                d1 += s * n1;
                d2 += s * n2;
            }
            e1 += d1;
            e2 += d2;
            if !visit(step, step as f64 * self.dt, e1, e2) {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Integrate and record every `record_stride` steps (plus the final
    /// step).
    pub fn integrate(&self) -> Result<Trajectory> {
        let n_steps = (self.duration / self.dt).ceil() as usize;
        let cap = n_steps / self.record_stride + 2;
        let mut t = Vec::with_capacity(cap);
        let mut e1v = Vec::with_capacity(cap);
        let mut e2v = Vec::with_capacity(cap);
        let mut iv = Vec::with_capacity(cap);
        self.walk(|step, time, e1, e2| {
            if step % self.record_stride == 0 || step == n_steps {
                t.push(time);
                e1v.push(e1);
                e2v.push(e2);
                iv.push(e1 * e1 + e2 * e2);
            }
            true
        })?;
        Ok(Trajectory {
            t,
            e1: e1v,
            e2: e2v,
            intensity: iv,
            seed: self.seed,
            stream: self.stream,
        })
    }
}

/// Recorded samples of one trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub intensity: Vec<f64>,
    pub seed: u64,
    pub stream: u64,
}

/// Measured versus predicted fluctuation statistics of a laser run above
/// threshold, in the radial coordinate r = sqrt(I) (the phase diffuses
/// freely, so E1 - <E1> is not the right linear variable).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OuCheck {
    pub mean_r: f64,
    pub predicted_r: f64,
    pub var_r: f64,
    pub predicted_var_r: f64,
    pub relax_rate: f64,
    pub predicted_relax_rate: f64,
    pub mean_intensity: f64,
    pub predicted_mean_intensity: f64,
    pub var_intensity: f64,
    pub predicted_var_intensity: f64,
    /// r_bar^2 / var(r): large means the linearization is trustworthy.
    pub linearization_quality: f64,
}

/// Run a gain cavity above threshold and compare the radial fluctuations
/// with the linearized (Ornstein-Uhlenbeck) prediction: relaxation rate
/// (kappa_G - kappa') kappa'/kappa_G and variance Q over that rate.
pub fn linearized_ou_check(
    geom: &CavityGeometry,
    medium: &MediumSpec,
    trace: &TraceGas,
    duration: f64,
    burn_in: f64,
    dt: f64,
    seed: u64,
) -> Result<OuCheck> {
    if medium.kind != MediumKind::Gain {
        return Err(Error::InvalidParameter(
            "the linearization check needs a gain medium".into(),
        ));
    }
    let kappa_prime = geom.kappa_c() + trace.kappa_s();
    let kappa_g = medium.kappa_m;
    if kappa_g <= kappa_prime {
        return Err(Error::InvalidParameter(format!(
            "below threshold: kappa_G = {kappa_g} <= kappa' = {kappa_prime}"
        )));
    }
    let i_star = medium.i_sat * (kappa_g / kappa_prime - 1.0);
    let r_bar = i_star.sqrt();
    let gamma_r = (kappa_g - kappa_prime) * kappa_prime / kappa_g;
    let q = medium.q_of(i_star);
    let var_r_pred = q / gamma_r;

    // Sample spacing ~ 1/20 of the relaxation time.
    let stride = ((0.05 / gamma_r / dt).round() as usize).max(1);
    let cfg = SdeConfig {
        geom: *geom,
        medium: *medium,
        trace: *trace,
        drive: Drive::Off,
        initial: [r_bar, 0.0],
        duration,
        dt,
        record_stride: stride,
        seed,
        stream: noise_stream(0, 0, PURPOSE_FIELD),
    };
    let traj = cfg.integrate()?;
    let keep: Vec<usize> = (0..traj.t.len())
        .filter(|&k| traj.t[k] >= burn_in)
        .collect();
    let r: Vec<f64> = keep.iter().map(|&k| traj.intensity[k].sqrt()).collect();
    let i: Vec<f64> = keep.iter().map(|&k| traj.intensity[k]).collect();
    if r.len() < 100 {
        return Err(Error::InvalidParameter(
            "too few samples after burn-in for statistics".into(),
        ));
    }
    let (mean_r, var_r) = mean_var(&r);
    let (mean_i, var_i) = mean_var(&i);
    let spacing = stride as f64 * dt;
    let n_lags = ((((3.0 / gamma_r) / spacing).ceil() as usize).min(r.len() / 4)).max(2);
    let lags: Vec<usize> = (1..=n_lags).collect();
    let taus: Vec<f64> = lags.iter().map(|&l| l as f64 * spacing).collect();
    let acf = autocorrelation(&r, &lags);
    let rate = decay_rate_fit(&taus, &acf);

    Ok(OuCheck {
        mean_r,
        predicted_r: r_bar,
        var_r,
        predicted_var_r: var_r_pred,
        relax_rate: rate,
        predicted_relax_rate: gamma_r,
        mean_intensity: mean_i,
        predicted_mean_intensity: i_star + var_r_pred,
        var_intensity: var_i,
        predicted_var_intensity: 4.0 * i_star * var_r_pred,
        linearization_quality: i_star / var_r_pred,
    })
}

/// One differential sweep-up shot.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShotResult {
    pub shot: u32,
    /// Jump time of the clean cavity, s.
    pub switch_time_a: f64,
    /// Jump time of the cavity with the extra absorption, s.
    pub switch_time_b: f64,
    /// sign(t_a - t_b): -1 when the clean cavity jumps first, which is
    /// the expected sign for positive added absorption.
    pub sign_of_differential: i8,
    /// Absorption estimate from the differential jump time, 1/m.
    pub estimate: f64,
}

/// Deterministic calibration used to convert jump times to absorption.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepCalibration {
    /// Knee power of the clean cavity, W.
    pub knee_power: f64,
    /// d P0_knee / d alpha_S from the closed-form knee, W m.
    pub dp0_dalpha: f64,
    /// Ramp rate, W/s.
    pub ramp_rate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepUpReport {
    pub shots: Vec<ShotResult>,
    pub negative_fraction: f64,
    pub mean_estimate: f64,
    pub calibration: SweepCalibration,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepUpConfig {
    pub geom: CavityGeometry,
    pub absorber: MediumSpec,
    /// Trace absorption common to both cavities, 1/m.
    pub alpha_base: f64,
    /// Extra absorption in cavity B, 1/m.
    pub delta_alpha: f64,
    pub p0_start: f64,
    pub p0_stop: f64,
    pub ramp_duration: f64,
    /// Intensity that counts as "jumped", photons.
    pub jump_threshold: f64,
    pub dt: f64,
    pub shots: u32,
    pub seed: u64,
}

/// Ramp window that brackets both knees: 0.8x the down-switch power to
/// 1.2x the up-switch power.
pub fn default_sweep_window(cavity: &BistableCavity) -> Result<(f64, f64)> {
    let tp = cavity.turning_points().ok_or_else(|| {
        Error::InvalidParameter("sweep experiment needs a bistable cavity".into())
    })?;
    Ok((0.8 * tp.p0_down_jump, 1.2 * tp.p0_up_jump))
}

pub fn sweep_up_experiment(cfg: &SweepUpConfig) -> Result<SweepUpReport> {
    if !(cfg.shots >= 1) {
        return Err(Error::InvalidParameter("need at least one shot".into()));
    }
    if !(cfg.jump_threshold > 0.0) {
        return Err(Error::InvalidParameter(
            "jump threshold must be positive".into(),
        ));
    }
    // Closed-form knee calibration. The step is matched to the probed
    // difference so the secant slope inverts the knee shift without
    // linearization bias when delta_alpha is a sizable fraction of the
    // cavity loss.
    let h = cfg.delta_alpha.abs().max(1e-9);
    let knee = |alpha: f64| -> Result<f64> {
        let cavity = BistableCavity::new(&cfg.geom, &cfg.absorber, &TraceGas::new(alpha)?)?;
        cavity
            .turning_points()
            .map(|tp| tp.p0_up_jump)
            .ok_or_else(|| Error::InvalidParameter("cavity is not bistable".into()))
    };
    let knee_power = knee(cfg.alpha_base)?;
    let dp0_dalpha = (knee(cfg.alpha_base + h)? - knee((cfg.alpha_base - h).max(0.0))?)
        / (h + cfg.alpha_base.min(h));
    let ramp_rate = (cfg.p0_stop - cfg.p0_start) / cfg.ramp_duration;
    if !(ramp_rate > 0.0) {
        return Err(Error::InvalidParameter(
            "ramp must increase the power".into(),
        ));
    }

    let jump_time = |shot: u32, cavity_id: u8, alpha: f64| -> Result<f64> {
        let sde = SdeConfig {
            geom: cfg.geom,
            medium: cfg.absorber,
            trace: TraceGas::new(alpha)?,
            drive: Drive::PowerRamp {
                p0_start: cfg.p0_start,
                p0_stop: cfg.p0_stop,
                duration: cfg.ramp_duration,
            },
            initial: [0.0, 0.0],
            // Hold the final power half a ramp longer in case the jump
            // is late.
            duration: 1.5 * cfg.ramp_duration,
            dt: cfg.dt,
            record_stride: usize::MAX,
            seed: cfg.seed,
            stream: noise_stream(shot, cavity_id, PURPOSE_FIELD),
        };
        let mut hit = None;
        let mut prev: Option<(f64, f64)> = None;
        sde.walk(|_, t, e1, e2| {
            let i_now = e1 * e1 + e2 * e2;
            if i_now > cfg.jump_threshold {
                // Interpolate the crossing within the last step (log-linear
                // in intensity, which grows near-exponentially during the
                // jump). Reporting the grid time instead quantizes switch
                // times to dt and produces exact ties between the two
                // cavities once the shot jitter approaches dt.
                let t_cross = match prev {
                    Some((tp, ip)) if ip > 0.0 && i_now > ip => {
                        tp + (t - tp) * (cfg.jump_threshold / ip).ln() / (i_now / ip).ln()
                    }
                    _ => t,
                };
                hit = Some(t_cross);
                false
            } else {
                prev = Some((t, i_now));
                true
            }
        })?;
        hit.ok_or_else(|| {
            Error::Numerical(format!(
                "no switch within {:.3e} s at shot {shot}; ramp window too low",
                1.5 * cfg.ramp_duration
            ))
        })
    };

    let shots: Vec<ShotResult> = (0..cfg.shots)
        .into_par_iter()
        .map(|shot| -> Result<ShotResult> {
            let t_a = jump_time(shot, 0, cfg.alpha_base)?;
            let t_b = jump_time(shot, 1, cfg.alpha_base + cfg.delta_alpha)?;
            let dt_ab = t_b - t_a;
            Ok(ShotResult {
                shot,
                switch_time_a: t_a,
                switch_time_b: t_b,
                sign_of_differential: if t_a < t_b {
                    -1
                } else if t_a > t_b {
                    1
                } else {
                    0
                },
                estimate: dt_ab * ramp_rate / dp0_dalpha,
            })
        })
        .collect::<Result<_>>()?;

    let negative = shots.iter().filter(|s| s.sign_of_differential < 0).count() as f64;
    let mean_estimate = shots.iter().map(|s| s.estimate).sum::<f64>() / shots.len() as f64;
    Ok(SweepUpReport {
        negative_fraction: negative / shots.len() as f64,
        mean_estimate,
        shots,
        calibration: SweepCalibration {
            knee_power,
            dp0_dalpha,
            ramp_rate,
        },
    })
}

/// Closed-form time for the noise-free intensity to fall from `i_init`
/// to `i_final` under kappa(I) = kappa_a + kappa_L/(1 + I/I_sat):
///
///   t = (1/kappa_a) [ (1/R) ln y + ((R-1)/R) ln(y + R) ],  R = 1 +
///   kappa_L/kappa_a, evaluated between y = I/I_sat endpoints.
pub fn deterministic_crossing_time(
    kappa_a: f64,
    kappa_l: f64,
    i_sat: f64,
    i_init: f64,
    i_final: f64,
) -> f64 {
    let r = 1.0 + kappa_l / kappa_a;
    let f = |i: f64| {
        let y = i / i_sat;
        (y.ln() / r + (1.0 - 1.0 / r) * (y + r).ln()) / kappa_a
    };
    f(i_init) - f(i_final)
}

/// Which timing estimator to report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimingEstimator {
    /// ln(I_init/I_ref) / (c t) - kappa_C/c: assumes the whole decay ran
    /// at the saturated rate. Large deterministic offset, but the least
    /// sensitive to detection-gain drift.
    Raw,
    /// Linearized inversion of the deterministic crossing-time model
    /// around zero absorption: unbiased for small alpha.
    Calibrated,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RingdownConfig {
    pub geom: CavityGeometry,
    /// Saturable absorber (sets both the knee and the quantum noise).
    pub absorber: MediumSpec,
    pub trace: TraceGas,
    /// Initial intensity, photons.
    pub i_init: f64,
    /// Detection threshold, photons.
    pub i_threshold: f64,
    /// Reference intensity of the raw estimator; defaults to the
    /// threshold.
    pub i_ref: Option<f64>,
    pub estimator: TimingEstimator,
    pub quantum_noise: bool,
    pub detection_shotnoise: bool,
    /// Multiplicative detector-gain drift rate g', 1/s: recorded power
    /// is scaled by exp(g' t).
    pub gain_drift: f64,
    /// Standard deviation of an extra per-shot random drift added to
    /// `gain_drift`, 1/s.
    pub gain_drift_rms: f64,
    /// Detector integration time per sample, s (also the record period).
    pub tau_sample: f64,
    pub dt: f64,
    /// CRDS-style slope fit uses samples with t below this, s.
    pub crds_fit_end: f64,
    pub max_duration: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RingdownShot {
    /// Interpolated threshold-crossing time, s.
    pub t_cross: f64,
    /// Absorption from the crossing time, 1/m.
    pub alpha_timing: f64,
    /// Absorption from the early-decay slope fit, 1/m.
    pub alpha_crds: f64,
}

impl RingdownConfig {
    fn check(&self) -> Result<()> {
        if self.absorber.kind != MediumKind::SaturableLoss {
            return Err(Error::InvalidParameter(
                "ring-down timing needs a saturable absorber".into(),
            ));
        }
        if !(self.i_init > self.i_threshold && self.i_threshold > 0.0) {
            return Err(Error::InvalidParameter(
                "need i_init > i_threshold > 0".into(),
            ));
        }
        if !(self.tau_sample >= self.dt) {
            return Err(Error::InvalidParameter(
                "detector integration must be at least one step".into(),
            ));
        }
        Ok(())
    }

    fn alpha_from_crossing(&self, t_cross: f64) -> f64 {
        let kappa_c = self.geom.kappa_c();
        let c = SPEED_OF_LIGHT;
        match self.estimator {
            TimingEstimator::Raw => {
                let i_ref = self.i_ref.unwrap_or(self.i_threshold);
                (self.i_init / i_ref).ln() / (c * t_cross) - kappa_c / c
            }
            TimingEstimator::Calibrated => {
                let model = |alpha: f64| {
                    deterministic_crossing_time(
                        kappa_c + c * alpha,
                        self.absorber.kappa_m,
                        self.absorber.i_sat,
                        self.i_init,
                        self.i_threshold,
                    )
                };
                let h = 1e-8;
                let slope = (model(h) - model(-h)) / (2.0 * h);
                (t_cross - model(0.0)) / slope
            }
        }
    }
}

pub fn ringdown_shot(cfg: &RingdownConfig, shot: u32) -> Result<RingdownShot> {
    cfg.check()?;
    let kappa_c = cfg.geom.kappa_c();
    let hbar_omega = cfg.geom.photon_energy();
    let medium = if cfg.quantum_noise {
        cfg.absorber
    } else {
        cfg.absorber.with_q0(0.0)
    };
    let sde = SdeConfig {
        geom: cfg.geom,
        medium,
        trace: cfg.trace,
        drive: Drive::Off,
        initial: [cfg.i_init.sqrt(), 0.0],
        duration: cfg.max_duration,
        dt: cfg.dt,
        record_stride: usize::MAX,
        seed: cfg.seed,
        stream: noise_stream(shot, 0, PURPOSE_FIELD),
    };
    let mut det_rng = ChaCha12Rng::seed_from_u64(cfg.seed);
    det_rng.set_stream(noise_stream(shot, 0, PURPOSE_DETECTION));
    let drift = if cfg.gain_drift_rms > 0.0 {
        let mut rng = ChaCha12Rng::seed_from_u64(cfg.seed);
        rng.set_stream(noise_stream(shot, 0, PURPOSE_DRIFT));
        let n: f64 = rng.sample(StandardNormal);
        cfg.gain_drift + cfg.gain_drift_rms * n
    } else {
        cfg.gain_drift
    };

    let stride = (cfg.tau_sample / cfg.dt).round().max(1.0) as usize;
    let stop_intensity = cfg.i_threshold / 100.0;
    let mut samples: Vec<(f64, f64)> = Vec::new();
    sde.walk(|step, t, e1, e2| {
        let i = e1 * e1 + e2 * e2;
        if step % stride == 0 {
            let p_true = hbar_omega * kappa_c * i * (drift * t).exp();
            let p_meas = if cfg.detection_shotnoise {
                let sigma = (hbar_omega * p_true.max(0.0) / cfg.tau_sample).sqrt();
                let n: f64 = det_rng.sample(StandardNormal);
                p_true + sigma * n
            } else {
                p_true
            };
            samples.push((t, p_meas));
        }
        i > stop_intensity
    })?;

    let p_threshold = hbar_omega * kappa_c * cfg.i_threshold;
    let cross_idx = samples
        .iter()
        .position(|&(_, p)| p < p_threshold)
        .ok_or_else(|| Error::Numerical("power never crossed the threshold".into()))?;
    if cross_idx == 0 {
        return Err(Error::Numerical(
            "first sample already below threshold; raise i_init or shorten tau_sample".into(),
        ));
    }
    let (t0, p0) = samples[cross_idx - 1];
    let (t1, p1) = samples[cross_idx];
    // Interpolate in ln P when possible: the decay is exponential and
    // the sample spacing covers a sizeable fraction of a decade.
    let t_cross = if p0 > 0.0 && p1 > 0.0 {
        let f = (p0.ln() - p_threshold.ln()) / (p0.ln() - p1.ln());
        t0 + f * (t1 - t0)
    } else {
        let f = (p0 - p_threshold) / (p0 - p1);
        t0 + f * (t1 - t0)
    };

    // Slope fit over the early (saturated) segment, truncated at the
    // first non-positive sample.
    let mut ts = Vec::new();
    let mut lnp = Vec::new();
    for &(t, p) in &samples {
        if t > cfg.crds_fit_end {
            break;
        }
        if p <= 0.0 {
            break;
        }
        ts.push(t);
        lnp.push(p.ln());
    }
    if ts.len() < 8 {
        return Err(Error::Numerical(
            "not enough positive samples for the slope fit".into(),
        ));
    }
    let (slope, _) = linear_fit(&ts, &lnp);
    let alpha_crds = (-slope - kappa_c) / SPEED_OF_LIGHT;

    Ok(RingdownShot {
        t_cross,
        alpha_timing: cfg.alpha_from_crossing(t_cross),
        alpha_crds,
    })
}

/// Analytic expectations for the ring-down experiment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RingdownPrediction {
    /// Deterministic crossing time, s.
    pub t_cross: f64,
    /// |d ln I / dt| at the threshold, 1/s.
    pub slope_at_threshold: f64,
    /// Growth factor a ln-intensity perturbation picks up between the
    /// start of the decay and the threshold.
    pub amplification: f64,
    /// Standard deviation of ln I at the crossing from the medium noise,
    /// propagated through the linearized dynamics.
    pub sigma_ln_i: f64,
    /// Quantum-limited timing jitter, s.
    pub sigma_t_quantum: f64,
    /// Detection-shot-noise timing jitter (single sample), s.
    pub sigma_t_detection: f64,
    /// d t_cross / d alpha_S, s m.
    pub dt_dalpha: f64,
    /// Quantum-limited absorption resolution, 1/m.
    pub sigma_alpha_quantum: f64,
    /// Detection-limited absorption resolution, 1/m.
    pub sigma_alpha_detection: f64,
}

pub fn ringdown_prediction(cfg: &RingdownConfig) -> Result<RingdownPrediction> {
    cfg.check()?;
    let c = SPEED_OF_LIGHT;
    let kappa_c = cfg.geom.kappa_c();
    let kappa_a = kappa_c + cfg.trace.kappa_s();
    let kappa_l = cfg.absorber.kappa_m;
    let i_sat = cfg.absorber.i_sat;
    let rho = kappa_l / kappa_a;
    let u0 = 1.0 + cfg.i_init / i_sat;
    let u_th = 1.0 + cfg.i_threshold / i_sat;

    let t_cross = deterministic_crossing_time(kappa_a, kappa_l, i_sat, cfg.i_init, cfg.i_threshold);
    let slope_at_threshold = kappa_a + kappa_l / u_th;

    // A perturbation delta ln I obeys d(delta)/dt = [kappa_L y/(1+y)^2]
    // delta: it grows while the knee unsaturates. Integrated growth from
    // intensity u down to the threshold:
    //   A(u) = (u/(u+rho)) ((u_th+rho)/u_th).
    let c_th = (u_th + rho) / u_th;
    let amplification = u0 / (u0 + rho) * c_th;

    // Medium noise enters ln I at rate 8Q/I = 16 kappa_L/(I + I_sat) and
    // is amplified by A(u)^2 from its injection point:
    //   var = (16 kappa_L C^2/(I_sat kappa_a))
    //         Int u^2 / ((u-1)(u+rho)^3) du.
    let pref = 16.0 * kappa_l * c_th * c_th / (i_sat * kappa_a);
    let mut bps = vec![u_th, u0];
    for candidate in [2.0, 0.1 * rho, rho, 10.0 * rho] {
        if candidate > u_th * (1.0 + 1e-9) && candidate < u0 * (1.0 - 1e-9) {
            bps.push(candidate);
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * u0);
    let integral = integrate_adaptive(
        |u| u * u / ((u - 1.0) * (u + rho).powi(3)),
        &bps,
        1e-10,
        0.0,
        2000,
    )?;
    let var_ln_i = pref * integral.value;
    let sigma_ln_i = var_ln_i.sqrt();
    let sigma_t_quantum = sigma_ln_i / slope_at_threshold;

    // Detection: fractional power noise 1/sqrt(kappa_C I_th tau) through
    // the same local slope.
    let sigma_t_detection =
        1.0 / (kappa_c * cfg.i_threshold * cfg.tau_sample).sqrt() / slope_at_threshold;

    let h = 1e-8;
    let model = |alpha: f64| {
        deterministic_crossing_time(
            kappa_c + c * alpha,
            kappa_l,
            i_sat,
            cfg.i_init,
            cfg.i_threshold,
        )
    };
    let dt_dalpha = (model(cfg.trace.alpha_s + h) - model(cfg.trace.alpha_s - h)) / (2.0 * h);

    Ok(RingdownPrediction {
        t_cross,
        slope_at_threshold,
        amplification,
        sigma_ln_i,
        sigma_t_quantum,
        sigma_t_detection,
        dt_dalpha,
        sigma_alpha_quantum: sigma_t_quantum / dt_dalpha.abs(),
        sigma_alpha_detection: sigma_t_detection / dt_dalpha.abs(),
    })
}

/// Mean, spread and bias of one estimator over an ensemble.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimatorStats {
    pub mean: f64,
    /// RMS about the ensemble mean: the precision, insensitive to any
    /// common deterministic offset.
    pub rms_about_mean: f64,
    /// mean minus the true absorption.
    pub bias: f64,
}

fn summarize(values: &[f64], truth: f64) -> EstimatorStats {
    let (mean, var) = mean_var(values);
    EstimatorStats {
        mean,
        rms_about_mean: var.sqrt(),
        bias: mean - truth,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub gain_drift: f64,
    pub timing: EstimatorStats,
    pub crds: EstimatorStats,
}

/// Run `shots` ring-downs at every drift value and summarize both
/// estimators. The timing channel reads the same trajectories as the
/// slope fit, so the comparison is paired.
pub fn estimator_comparison(
    cfg: &RingdownConfig,
    drifts: &[f64],
    shots: u32,
) -> Result<Vec<ComparisonRow>> {
    comparison_impl(cfg, drifts, shots, |local, g| local.gain_drift = g)
}

/// Like [`estimator_comparison`], but the grid values are the RMS of a
/// per-shot random drift (zero-mean), the regime where CRDS loses its
/// accuracy while the threshold timing barely moves.
pub fn estimator_comparison_random(
    cfg: &RingdownConfig,
    drift_rms: &[f64],
    shots: u32,
) -> Result<Vec<ComparisonRow>> {
    comparison_impl(cfg, drift_rms, shots, |local, g| local.gain_drift_rms = g)
}

fn comparison_impl(
    cfg: &RingdownConfig,
    grid: &[f64],
    shots: u32,
    apply: impl Fn(&mut RingdownConfig, f64),
) -> Result<Vec<ComparisonRow>> {
    let truth = cfg.trace.alpha_s;
    grid.iter()
        .map(|&g| {
            let mut local = cfg.clone();
            apply(&mut local, g);
            let results: Vec<RingdownShot> = (0..shots)
                .into_par_iter()
                .map(|s| ringdown_shot(&local, s))
                .collect::<Result<_>>()?;
            let timing: Vec<f64> = results.iter().map(|r| r.alpha_timing).collect();
            let crds: Vec<f64> = results.iter().map(|r| r.alpha_crds).collect();
            Ok(ComparisonRow {
                gain_drift: g,
                timing: summarize(&timing, truth),
                crds: summarize(&crds, truth),
            })
        })
        .collect()
}
