//! Closed-form benchmarks for linear readout of a weak absorber.
//!
//! These are the baselines the nonlinear cavity has to beat: a single
//! pass through the sample, and a linear (empty) cavity read out in
//! transmission. All follow from photon shot noise on the detected power
//! plus an optional technical-noise floor.

use crate::error::{Error, Result};
use crate::sensitivity::{CaseTag, CurveMeta, SensitivityCurve};
use crate::units::{photon_energy, CavityGeometry, NoiseBudget, SPEED_OF_LIGHT};

/// Transmitted power and uncertainty of a single-pass measurement.
#[derive(Debug, Clone, Copy)]
pub struct SinglePassResult {
    /// Detected power, W.
    pub p_out: f64,
    /// Shot-noise-limited variance of the absorption estimate, 1/m^2.
    pub dalpha2: f64,
}

/// Single pass through length `length` of a medium with background loss
/// `alpha_l`, gain `alpha_g` and trace absorption `alpha_s` (all 1/m),
/// probed with power `p0` for time `t` at wavelength `lambda`.
///
/// P_out = exp((alpha_g - alpha_l - alpha_s) L) P0 and the estimate
/// variance is hbar_omega / (L^2 t P_out): one shot-noise-limited
/// fractional power measurement divided by the responsivity -L.
pub fn single_pass_sensitivity(
    alpha_l: f64,
    alpha_g: f64,
    alpha_s: f64,
    length: f64,
    p0: f64,
    t: f64,
    lambda: f64,
) -> Result<SinglePassResult> {
    if !(length > 0.0 && p0 > 0.0 && t > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidParameter(
            "single pass needs positive length, power, time and wavelength".into(),
        ));
    }
    let p_out = ((alpha_g - alpha_l - alpha_s) * length).exp() * p0;
    let dalpha2 = photon_energy(lambda) / (length * length * t * p_out);
    Ok(SinglePassResult { p_out, dalpha2 })
}

/// Optimal sample length 2/alpha_l for a lossy single-pass cell, and the
/// variance there: (alpha_l^2/4) hbar_omega / (t e^-2 P0).
pub fn optimal_single_pass(alpha_l: f64, p0: f64, t: f64, lambda: f64) -> Result<(f64, f64)> {
    if !(alpha_l > 0.0) {
        return Err(Error::InvalidParameter(
            "optimal length requires positive background loss".into(),
        ));
    }
    let l_opt = 2.0 / alpha_l;
    let dalpha2 = 0.25 * alpha_l * alpha_l * photon_energy(lambda) / (t * (-2.0_f64).exp() * p0);
    Ok((l_opt, dalpha2))
}

/// Steady state of the driven linear cavity.
#[derive(Debug, Clone, Copy)]
pub struct PowerPoint {
    /// Transmitted power, W.
    pub p_out: f64,
    /// Intracavity intensity, photons.
    pub photons: f64,
    /// Total round-trip loss delta = delta_C + 2 L alpha_S + delta_L.
    pub delta: f64,
    /// Total decay rate kappa = delta c / 2L, 1/s.
    pub kappa: f64,
}

/// Transmission of an impedance-matched two-mirror cavity containing a
/// distributed extra loss `delta_l` (per round trip) and trace absorption
/// `alpha_s` (1/m): P_out = (kappa_C / kappa)^2 P0.
pub fn empty_cavity_output(
    p0: f64,
    geom: &CavityGeometry,
    delta_l: f64,
    alpha_s: f64,
) -> Result<PowerPoint> {
    let delta = geom.delta_c() + 2.0 * geom.length * alpha_s + delta_l;
    if delta <= 0.0 {
        return Err(Error::NoSteadyState { delta });
    }
    let kappa_c = geom.kappa_c();
    let kappa = delta * SPEED_OF_LIGHT / (2.0 * geom.length);
    let ratio = kappa_c / kappa;
    let p_out = ratio * ratio * p0;
    let photons = p_out / (geom.photon_energy() * kappa_c);
    Ok(PowerPoint {
        p_out,
        photons,
        delta,
        kappa,
    })
}

/// Fractional responsivity of the transmitted power to the trace
/// absorption, R = d ln(P_out)/d alpha_S = -4 L / delta (m).
pub fn empty_cavity_responsivity(geom: &CavityGeometry, delta_l: f64, alpha_s: f64) -> Result<f64> {
    let delta = geom.delta_c() + 2.0 * geom.length * alpha_s + delta_l;
    if delta <= 0.0 {
        return Err(Error::NoSteadyState { delta });
    }
    Ok(-4.0 * geom.length / delta)
}

/// High-finesse shorthand for the lossless empty cavity: -2 L / delta1.
pub fn empty_cavity_responsivity_approx(geom: &CavityGeometry) -> f64 {
    -2.0 * geom.length / geom.delta1
}

/// Shot-noise plus technical-floor sensitivity of the empty cavity read
/// out at intracavity intensity `i_e` (photons) over averaging times
/// `t_grid`:
///
///   dalpha^2(t) = (kappa_C^2 / 4 c^2) [ (1/I) / (1 + kappa_C t) + v_T ].
pub fn empty_cavity_sensitivity_curve(
    geom: &CavityGeometry,
    i_e: f64,
    noise: &NoiseBudget,
    t_grid: &[f64],
) -> Result<SensitivityCurve> {
    if !(i_e > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "empty-cavity intensity must be positive, got {i_e}"
        )));
    }
    let kappa_c = geom.kappa_c();
    let pref = kappa_c * kappa_c / (4.0 * SPEED_OF_LIGHT * SPEED_OF_LIGHT);
    let mut dalpha2 = Vec::with_capacity(t_grid.len());
    let mut fluctuation = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        if t < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "averaging time must be non-negative, got {t}"
            )));
        }
        let fluct = pref * (1.0 / i_e) / (1.0 + kappa_c * t);
        fluctuation.push(fluct);
        dalpha2.push(fluct + pref * noise.v_t);
    }
    Ok(SensitivityCurve {
        t: t_grid.to_vec(),
        dalpha2,
        fluctuation,
        floor: pref * noise.v_t,
        meta: CurveMeta {
            case: CaseTag::EmptyCavity,
            rate: kappa_c,
            intensity: i_e,
            v0: 1.0 / i_e,
            gamma: kappa_c,
            warnings: Vec::new(),
        },
    })
}

/// Absorption-variance floor set by source relative intensity noise:
/// dalpha^2 = (delta1^2 / 4 L^2) RIN.
pub fn rin_propagation(geom: &CavityGeometry, rin: f64) -> f64 {
    let r = geom.delta1 / (2.0 * geom.length);
    r * r * rin
}
