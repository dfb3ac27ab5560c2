//! Absorption sensitivity of the three readout schemes and the choice of
//! operating point.
//!
//! Every scheme measures the same thing: a fractional change of the
//! detected intensity per unit added absorption (the responsivity R),
//! against a fractional intensity variance that decays with averaging
//! time t until it hits a technical floor v_T. All three sensitivity
//! curves therefore share one shape,
//!
//!   dalpha^2(t) = R^-2 [ v0 / (1 + r t / 2) + v_T ],
//!
//! where v0 is the instantaneous fractional variance and r the rate at
//! which averaging buys statistics. The schemes differ only in (R, v0, r):
//!
//! * empty cavity driven on resonance: R = -2c/kappa_E, v0 = 1/I_E
//!   (photon shot noise), r = 2 kappa_E;
//! * laser just above threshold, no drive: R = -c/2 gamma', v0 =
//!   2 kappa_G^2 / (I_sat gamma'^2), r = 2 gamma' (critical slowing both
//!   amplifies the signal and slows the statistics);
//! * cavity just below threshold with a drive holding the same mean
//!   intensity: R = -c/gamma', v0 = 4 kappa_G^2 / (I_sat gamma'^2),
//!   r = gamma'.
//!
//! Here gamma' = |kappa_G - kappa'| / 2 is the distance from threshold
//! and the laser formulas are the large-a asymptotics of the truncated
//! Gaussian statistics in [`crate::fokkerplanck`], valid for
//! a = gamma' sqrt(I_sat)/kappa_G of a few and above.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{NoiseBudget, SPEED_OF_LIGHT};

/// Which readout scheme produced a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseTag {
    EmptyCavity,
    GainUndriven,
    GainDriven,
}

/// Scalar context attached to a sensitivity curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveMeta {
    pub case: CaseTag,
    /// Characteristic cavity rate of the scheme, 1/s.
    pub rate: f64,
    /// Mean intracavity intensity, photons.
    pub intensity: f64,
    /// Instantaneous fractional intensity variance.
    pub v0: f64,
    /// Averaging rate g in the factor 1/(1 + g t).
    pub gamma: f64,
    pub warnings: Vec<String>,
}

/// Absorption variance versus averaging time for one scheme.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityCurve {
    /// Averaging times, s.
    pub t: Vec<f64>,
    /// Total absorption variance, 1/m^2.
    pub dalpha2: Vec<f64>,
    /// Fluctuation part alone (dalpha2 minus the floor), 1/m^2.
    pub fluctuation: Vec<f64>,
    /// Technical floor R^-2 v_T, 1/m^2.
    pub floor: f64,
    pub meta: CurveMeta,
}

#[allow(clippy::too_many_arguments)]
fn build_curve(
    case: CaseTag,
    inv_resp_sq: f64,
    v0: f64,
    relax_rate: f64,
    rate: f64,
    intensity: f64,
    v_t: f64,
    t_grid: &[f64],
    warnings: Vec<String>,
) -> Result<SensitivityCurve> {
    let mut dalpha2 = Vec::with_capacity(t_grid.len());
    let mut fluctuation = Vec::with_capacity(t_grid.len());
    let floor = inv_resp_sq * v_t;
    for &t in t_grid {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "averaging time must be non-negative, got {t}"
            )));
        }
        let fluct = inv_resp_sq * v0 / (1.0 + 0.5 * relax_rate * t);
        fluctuation.push(fluct);
        dalpha2.push(fluct + floor);
    }
    Ok(SensitivityCurve {
        t: t_grid.to_vec(),
        dalpha2,
        fluctuation,
        floor,
        meta: CurveMeta {
            case,
            rate,
            intensity,
            v0,
            gamma: 0.5 * relax_rate,
            warnings,
        },
    })
}

fn check_gain_params(kappa_g: f64, i_sat: f64, gamma_prime: f64) -> Result<Vec<String>> {
    if !(kappa_g > 0.0 && kappa_g.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gain rate must be positive, got {kappa_g}"
        )));
    }
    if !(i_sat > 0.0 && i_sat.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "saturation intensity must be positive and finite, got {i_sat}"
        )));
    }
    if !(gamma_prime > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "threshold offset gamma' must be positive, got {gamma_prime}"
        )));
    }
    let a = gamma_prime * i_sat.sqrt() / kappa_g;
    let mut warnings = Vec::new();
    if a < 5.0 {
        warnings.push(format!(
            "gamma' is within the quantum threshold region (a = {a:.3} < 5); \
             the asymptotic mean and variance are inaccurate here"
        ));
    }
    Ok(warnings)
}

/// Sensitivity of the undriven laser run at threshold offset
/// gamma' = (kappa_G - kappa')/2 > 0.
pub fn gain_sensitivity_curve(
    kappa_g: f64,
    i_sat: f64,
    gamma_prime: f64,
    noise: &NoiseBudget,
    t_grid: &[f64],
) -> Result<SensitivityCurve> {
    let mut warnings = check_gain_params(kappa_g, i_sat, gamma_prime)?;
    if gamma_prime >= 0.5 * kappa_g {
        return Err(Error::InvalidParameter(format!(
            "gamma' = {gamma_prime} leaves no positive loss rate \
             (needs gamma' < kappa_G/2 = {})",
            0.5 * kappa_g
        )));
    }
    if !warnings.is_empty() {
        warnings.push("reported variance is the large-a asymptote".into());
    }
    let inv_resp_sq = 4.0 * gamma_prime * gamma_prime / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let v0 = 2.0 * kappa_g * kappa_g / (i_sat * gamma_prime * gamma_prime);
    build_curve(
        CaseTag::GainUndriven,
        inv_resp_sq,
        v0,
        2.0 * gamma_prime,
        kappa_g,
        2.0 * i_sat * gamma_prime / kappa_g,
        noise.v_t,
        t_grid,
        warnings,
    )
}

/// Point evaluation of the undriven-laser variance; what the optimizer
/// minimizes.
pub fn gain_dalpha2(kappa_g: f64, i_sat: f64, gamma_prime: f64, v_t: f64, t: f64) -> f64 {
    let inv_resp_sq = 4.0 * gamma_prime * gamma_prime / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let v0 = 2.0 * kappa_g * kappa_g / (i_sat * gamma_prime * gamma_prime);
    inv_resp_sq * (v0 / (1.0 + gamma_prime * t) + v_t)
}

/// Sensitivity of the cavity held just below threshold,
/// gamma' = (kappa' - kappa_G)/2 > 0, with a resonant drive
/// E0^2 = 2 I_sat gamma'^3 / kappa_G chosen so the mean intensity matches
/// the undriven laser at the same |gamma'|.
pub fn driven_sensitivity_curve(
    kappa_g: f64,
    i_sat: f64,
    gamma_prime: f64,
    noise: &NoiseBudget,
    t_grid: &[f64],
) -> Result<SensitivityCurve> {
    let warnings = check_gain_params(kappa_g, i_sat, gamma_prime)?;
    let inv_resp_sq = gamma_prime * gamma_prime / (SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let v0 = 4.0 * kappa_g * kappa_g / (i_sat * gamma_prime * gamma_prime);
    build_curve(
        CaseTag::GainDriven,
        inv_resp_sq,
        v0,
        gamma_prime,
        kappa_g + 2.0 * gamma_prime,
        2.0 * i_sat * gamma_prime / kappa_g,
        noise.v_t,
        t_grid,
        warnings,
    )
}

/// Drive amplitude squared that holds the below-threshold cavity at the
/// same mean intensity as the laser: E0^2 = 2 I_sat gamma'^3 / kappa_G.
pub fn driven_drive_squared(kappa_g: f64, i_sat: f64, gamma_prime: f64) -> f64 {
    2.0 * i_sat * gamma_prime.powi(3) / kappa_g
}

/// Empty-cavity curve from the decay rate alone (the geometry-based
/// wrapper lives in [`crate::analytic`]).
pub fn empty_rate_sensitivity_curve(
    kappa_e: f64,
    i_e: f64,
    noise: &NoiseBudget,
    t_grid: &[f64],
) -> Result<SensitivityCurve> {
    if !(kappa_e > 0.0 && i_e > 0.0) {
        return Err(Error::InvalidParameter(
            "empty-cavity curve needs positive decay rate and intensity".into(),
        ));
    }
    let inv_resp_sq = kappa_e * kappa_e / (4.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    build_curve(
        CaseTag::EmptyCavity,
        inv_resp_sq,
        1.0 / i_e,
        2.0 * kappa_e,
        kappa_e,
        i_e,
        noise.v_t,
        t_grid,
        Vec::new(),
    )
}

/// Which constraint the optimizer landed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Clamp {
    /// True minimum inside the allowed interval.
    Interior,
    /// Validity floor gamma' = 5 kappa_G / sqrt(I_sat): closer to
    /// threshold the Gaussian asymptotics stop holding.
    Lower,
    /// Intensity cap: the mean intensity 2 I_sat gamma'/kappa_G would
    /// exceed the configured maximum.
    Upper,
    /// Loss budget: gamma' = 0.49 kappa_G, beyond which the required
    /// total loss would fall below what any resonator can reach.
    MirrorLimit,
}

/// Optimized undriven-laser operating point at a fixed averaging time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub gamma_prime: f64,
    /// Mean intensity there, photons.
    pub intensity: f64,
    pub clamped: Clamp,
    pub dalpha2_at_t: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OptimizeConfig {
    pub kappa_g: f64,
    pub i_sat: f64,
    pub v_t: f64,
    /// Averaging time the variance is minimized at, s.
    pub t: f64,
    /// Optional cap on the mean intracavity intensity, photons.
    pub i_max: Option<f64>,
}

/// Minimize [`gain_dalpha2`] over gamma'. The objective has a single
/// interior critical point (gamma (1 + gamma t)^2 is strictly
/// increasing), so a golden-section search over ln gamma' is exact.
pub fn optimize_operating_point(cfg: &OptimizeConfig) -> Result<OperatingPoint> {
    check_gain_params(cfg.kappa_g, cfg.i_sat, 1.0)?;
    if !(cfg.v_t >= 0.0 && cfg.t > 0.0) {
        return Err(Error::InvalidParameter(
            "optimizer needs non-negative v_T and positive averaging time".into(),
        ));
    }
    let lo = 5.0 * cfg.kappa_g / cfg.i_sat.sqrt();
    let mut hi = 0.49 * cfg.kappa_g;
    let mut hi_tag = Clamp::MirrorLimit;
    if let Some(i_max) = cfg.i_max {
        let cap = cfg.kappa_g * i_max / (2.0 * cfg.i_sat);
        if cap < hi {
            hi = cap;
            hi_tag = Clamp::Upper;
        }
    }
    let objective = |u: f64| gain_dalpha2(cfg.kappa_g, cfg.i_sat, u.exp(), cfg.v_t, cfg.t);
    let (gamma_prime, clamped) = if hi <= lo {
        (hi, hi_tag)
    } else {
        let (u_min, _) = golden_section_min_wrap(objective, lo.ln(), hi.ln());
        let g = u_min.exp();
        if g <= lo * 1.0001 {
            (lo, Clamp::Lower)
        } else if g >= hi * 0.9999 {
            (hi, hi_tag)
        } else {
            (g, Clamp::Interior)
        }
    };
    Ok(OperatingPoint {
        gamma_prime,
        intensity: 2.0 * cfg.i_sat * gamma_prime / cfg.kappa_g,
        clamped,
        dalpha2_at_t: gain_dalpha2(cfg.kappa_g, cfg.i_sat, gamma_prime, cfg.v_t, cfg.t),
    })
}

fn golden_section_min_wrap(f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    crate::numerics::golden::golden_section_min(f, a, b, 1e-12, 300)
}

/// Characteristic times and limits of the laser-versus-empty comparison.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CrossoverReport {
    /// Averaging time where the laser curve crosses below the
    /// empty-cavity floor: 32 kappa_G^2 / (kappa_E^2 I_sat gamma' v_T).
    pub t_crossover: f64,
    /// Time for the laser to reach its own floor:
    /// 2 kappa_G^2 / (I_sat gamma'^3 v_T).
    pub t_gain_floor: f64,
    /// Time for the empty cavity to reach its floor: 2/(I_E v_T kappa_E).
    pub t_empty_floor: f64,
    /// Floor-to-floor variance advantage (kappa_E / 4 gamma')^2.
    pub chi_max: f64,
    /// Technical floor below which the crossover takes longer than the
    /// reference time t_chi.
    pub v_t_critical: f64,
}

pub fn crossover_analysis(
    kappa_g: f64,
    kappa_e: f64,
    i_sat: f64,
    gamma_prime: f64,
    i_e: f64,
    v_t: f64,
    t_chi: f64,
) -> Result<CrossoverReport> {
    if !(kappa_g > 0.0 && kappa_e > 0.0 && i_sat > 0.0 && gamma_prime > 0.0 && i_e > 0.0) {
        return Err(Error::InvalidParameter(
            "crossover analysis needs positive rates and intensities".into(),
        ));
    }
    if !(v_t > 0.0 && t_chi > 0.0) {
        return Err(Error::InvalidParameter(
            "crossover analysis needs positive v_T and reference time".into(),
        ));
    }
    let ratio = kappa_e / (4.0 * gamma_prime);
    Ok(CrossoverReport {
        t_crossover: 32.0 * kappa_g * kappa_g / (kappa_e * kappa_e * i_sat * gamma_prime * v_t),
        t_gain_floor: 2.0 * kappa_g * kappa_g / (i_sat * gamma_prime.powi(3) * v_t),
        t_empty_floor: 2.0 / (i_e * v_t * kappa_e),
        chi_max: ratio * ratio,
        v_t_critical: 32.0 * kappa_g * kappa_g / (kappa_e * kappa_e * i_sat * t_chi * gamma_prime),
    })
}

/// Inputs for the time sweep comparing all three schemes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimeSweepConfig {
    pub kappa_g: f64,
    pub i_sat: f64,
    pub gamma_prime: f64,
    pub kappa_e: f64,
    pub i_e: f64,
    pub noise: NoiseBudget,
    pub t_grid: Vec<f64>,
    /// Reference time for the critical technical floor.
    pub t_chi: f64,
}

#[derive(Debug, Clone)]
pub struct TimeSweep {
    pub gain: SensitivityCurve,
    pub driven: SensitivityCurve,
    pub empty: SensitivityCurve,
    pub crossover: CrossoverReport,
}

pub fn time_sweep(cfg: &TimeSweepConfig) -> Result<TimeSweep> {
    Ok(TimeSweep {
        gain: gain_sensitivity_curve(
            cfg.kappa_g,
            cfg.i_sat,
            cfg.gamma_prime,
            &cfg.noise,
            &cfg.t_grid,
        )?,
        driven: driven_sensitivity_curve(
            cfg.kappa_g,
            cfg.i_sat,
            cfg.gamma_prime,
            &cfg.noise,
            &cfg.t_grid,
        )?,
        empty: empty_rate_sensitivity_curve(cfg.kappa_e, cfg.i_e, &cfg.noise, &cfg.t_grid)?,
        crossover: crossover_analysis(
            cfg.kappa_g,
            cfg.kappa_e,
            cfg.i_sat,
            cfg.gamma_prime,
            cfg.i_e,
            cfg.noise.v_t,
            cfg.t_chi,
        )?,
    })
}

/// Inputs for the sweep over the technical floor v_T at fixed averaging
/// time: re-optimize the laser at each v_T and compare with the empty
/// cavity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloorSweepConfig {
    pub kappa_g: f64,
    pub i_sat: f64,
    pub kappa_e: f64,
    pub i_e: f64,
    pub t: f64,
    pub v_t_grid: Vec<f64>,
    pub i_max: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FloorSweepPoint {
    pub v_t: f64,
    pub point: OperatingPoint,
    pub dalpha2_empty: f64,
}

pub fn floor_sweep(cfg: &FloorSweepConfig) -> Result<Vec<FloorSweepPoint>> {
    let kappa_e_sq = cfg.kappa_e * cfg.kappa_e;
    let c_sq = SPEED_OF_LIGHT * SPEED_OF_LIGHT;
    cfg.v_t_grid
        .iter()
        .map(|&v_t| {
            let point = optimize_operating_point(&OptimizeConfig {
                kappa_g: cfg.kappa_g,
                i_sat: cfg.i_sat,
                v_t,
                t: cfg.t,
                i_max: cfg.i_max,
            })?;
            let dalpha2_empty =
                kappa_e_sq / (4.0 * c_sq) * ((1.0 / cfg.i_e) / (1.0 + cfg.kappa_e * cfg.t) + v_t);
            Ok(FloorSweepPoint {
                v_t,
                point,
                dalpha2_empty,
            })
        })
        .collect()
}
