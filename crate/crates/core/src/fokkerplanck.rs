//! Stationary photon statistics of the nonlinear cavity.
//!
//! The intracavity field quadratures (E1, E2) obey
//!
//!   dE_i = [ (kappa_G / (1 + I/I_sat) - kappa') E_i / 2 + E0_i ] dt
//!          + sqrt(2 Q) dW_i,          I = E1^2 + E2^2,
//!
//! with constant diffusion Q (fully inverted gain), linear loss kappa',
//! and a coherent drive E0 applied to quadrature 1. The stationary
//! distribution of the intensity is known in closed form up to
//! normalization:
//!
//!   ln p(I) = [ -kappa' I + kappa_G I_sat ln(1 + I/I_sat) ] / 4Q
//!             + ln B(E0 sqrt(I)/Q),
//!
//! where B is the phase-integrated drive kernel of
//! [`crate::numerics::bessel`]. Everything observable here - moments,
//! their derivative with respect to the loss rate, and the fractional
//! responsivity to added absorption - follows from one-dimensional
//! quadrature against exp(ln p). The exponent can reach +-1e9 at realistic
//! saturation photon numbers, so all evaluation is done relative to the
//! distribution mode and no normalization constant is ever exponentiated
//! on its own.
//!
//! Near threshold the quadratic expansion of ln p turns the intensity
//! into a Gaussian truncated at zero, which gives the closed forms of
//! [`near_threshold_moments`] in the reduced variables
//!
//!   gamma' = (kappa_G - kappa')/2,   beta' = kappa_G / 2 I_sat,
//!   q' = Q,  a = gamma'/sqrt(beta' q'),  I~ = I sqrt(beta'/q').

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::numerics::bessel::{ln_drive_kernel, ln_drive_kernel_diff};
use crate::numerics::golden::golden_section_min;
use crate::numerics::quad::integrate_adaptive;
use crate::units::{CavityGeometry, MediumKind, MediumSpec, TraceGas, SPEED_OF_LIGHT};

/// Parameters of the stationary intensity distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FpParams {
    /// Coherent drive amplitude E0, sqrt(photons)/s.
    pub drive: f64,
    /// Total linear loss rate kappa' = kappa_C + c alpha_S, 1/s.
    pub kappa_prime: f64,
    /// Unsaturated gain rate kappa_G, 1/s (0 for no gain medium).
    pub kappa_g: f64,
    /// Gain saturation intensity, photons.
    pub i_sat: f64,
    /// Quadrature diffusion Q, 1/s.
    pub q: f64,
}

impl FpParams {
    pub fn new(drive: f64, kappa_prime: f64, kappa_g: f64, i_sat: f64, q: f64) -> Result<Self> {
        if !(kappa_prime > 0.0 && kappa_prime.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "loss rate kappa' must be positive, got {kappa_prime}"
            )));
        }
        if !(kappa_g >= 0.0 && kappa_g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gain rate must be non-negative, got {kappa_g}"
            )));
        }
        if !(i_sat > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "saturation intensity must be positive, got {i_sat}"
            )));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "diffusion Q must be positive, got {q}"
            )));
        }
        if !(drive >= 0.0 && drive.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "drive amplitude must be non-negative, got {drive}"
            )));
        }
        Ok(Self {
            drive,
            kappa_prime,
            kappa_g,
            i_sat,
            q,
        })
    }

    /// Assemble from cavity pieces. The medium must be a gain medium (or
    /// none); a saturable absorber has intensity-dependent diffusion and
    /// no stationary distribution of this form.
    pub fn from_cavity(
        geom: &CavityGeometry,
        medium: &MediumSpec,
        trace: &TraceGas,
        drive: f64,
    ) -> Result<Self> {
        let (kappa_g, i_sat, q) = match medium.kind {
            MediumKind::Gain => (medium.kappa_m, medium.i_sat, medium.q0),
            MediumKind::None => (0.0, f64::INFINITY, medium.q0),
            MediumKind::SaturableLoss => {
                return Err(Error::InvalidParameter(
                    "stationary distribution requires constant diffusion; \
                     saturable loss is handled by the trajectory solver"
                        .into(),
                ))
            }
        };
        Self::new(drive, geom.kappa_c() + trace.kappa_s(), kappa_g, i_sat, q)
    }

    /// Unnormalized log density at intensity `i` (photons).
    pub fn log_density(&self, i: f64) -> f64 {
        debug_assert!(i >= 0.0);
        let gain = if self.kappa_g > 0.0 {
            self.kappa_g * self.i_sat * (i / self.i_sat).ln_1p()
        } else {
            0.0
        };
        (-self.kappa_prime * i + gain) / (4.0 * self.q)
            + ln_drive_kernel(self.drive * i.sqrt() / self.q)
    }

    /// log_density(i) - log_density(i_ref), evaluated without forming
    /// either large exponent. This is what the quadrature uses.
    fn log_density_rel(&self, i: f64, i_ref: f64) -> f64 {
        let d = i - i_ref;
        let gain = if self.kappa_g > 0.0 {
            self.kappa_g * self.i_sat * (d / (self.i_sat + i_ref)).ln_1p()
        } else {
            0.0
        };
        let x = self.drive * i.sqrt() / self.q;
        let x_ref = self.drive * i_ref.sqrt() / self.q;
        (-self.kappa_prime * d + gain) / (4.0 * self.q) + ln_drive_kernel_diff(x, x_ref)
    }

    /// Deterministic (noise-free) intensity fixed point
    /// I = 4 E0^2 / (kappa' - kappa_G/(1+I/I_sat))^2, when the iteration
    /// converges. Used as a scale hint and as an oracle for the
    /// strong-drive limit of the mean.
    pub fn classical_fixed_point(&self) -> Option<f64> {
        if self.drive == 0.0 {
            return if self.kappa_g > self.kappa_prime && self.i_sat.is_finite() {
                Some(self.i_sat * (self.kappa_g / self.kappa_prime - 1.0))
            } else {
                Some(0.0)
            };
        }
        let floor = self.kappa_prime * 1e-9;
        let mut i = 4.0 * self.drive * self.drive / (self.kappa_prime * self.kappa_prime);
        for _ in 0..400 {
            let keff = (self.kappa_prime - self.kappa_g / (1.0 + i / self.i_sat)).max(floor);
            let next = 4.0 * self.drive * self.drive / (keff * keff);
            let step = 0.5 * (next - i);
            i += step;
            if step.abs() <= 1e-12 * i.abs() {
                return Some(i);
            }
        }
        None
    }
}

/// Convert the threshold scale parameter eta0 = (4/sqrt(pi)) sqrt(I_sat)
/// to a saturation photon number.
pub fn i_sat_from_eta0(eta0: f64) -> f64 {
    let s = eta0 * std::f64::consts::PI.sqrt() / 4.0;
    s * s
}

pub fn eta0_from_i_sat(i_sat: f64) -> f64 {
    4.0 / std::f64::consts::PI.sqrt() * i_sat.sqrt()
}

/// Reduced near-threshold parameters of a gain cavity.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdParams {
    pub gamma_prime: f64,
    pub beta_prime: f64,
    pub q_prime: f64,
    /// Distance from threshold in units of the quantum-fluctuation scale.
    pub a: f64,
    pub eta0: f64,
}

impl ThresholdParams {
    pub fn from_fp(p: &FpParams) -> Result<Self> {
        if !(p.kappa_g > 0.0 && p.i_sat.is_finite()) {
            return Err(Error::InvalidParameter(
                "threshold parameters require a saturable gain medium".into(),
            ));
        }
        let gamma_prime = 0.5 * (p.kappa_g - p.kappa_prime);
        let beta_prime = p.kappa_g / (2.0 * p.i_sat);
        let q_prime = p.q;
        Ok(Self {
            gamma_prime,
            beta_prime,
            q_prime,
            a: gamma_prime / (beta_prime * q_prime).sqrt(),
            eta0: eta0_from_i_sat(p.i_sat),
        })
    }

    /// Scale between reduced intensity and photons: I = I~ * intensity_scale().
    pub fn intensity_scale(&self) -> f64 {
        (self.q_prime / self.beta_prime).sqrt()
    }
}

/// Mean and variance of the reduced intensity I~ near threshold (drive
/// free): a Gaussian of mean `a` and variance 2 truncated to I~ >= 0.
///
/// mean = a + lambda,  var = 2 - a lambda - lambda^2,
/// lambda = 2 exp(-a^2/4) / (sqrt(pi) erfc(-a/2)).
pub fn near_threshold_moments(a: f64) -> (f64, f64) {
    let lambda = 2.0 * (-0.25 * a * a).exp() / (std::f64::consts::PI.sqrt() * erfc(-0.5 * a));
    let mean = a + lambda;
    let var = 2.0 - a * lambda - lambda * lambda;
    (mean, var)
}

/// Normalized drive-free responsivity (d<I~>/da)/<I~> = var/(2 mean),
/// using the truncated-Gaussian identity d mean/da = var/2.
pub fn normalized_threshold_responsivity(a: f64) -> f64 {
    let (mean, var) = near_threshold_moments(a);
    var / (2.0 * mean)
}

/// Relative quadrature tolerance for all moment integrals.
const QUAD_REL_TOL: f64 = 1e-8;
/// Truncate the domain where ln p has fallen this far below its maximum.
const TAIL_NATS: f64 = 60.0;
const MAX_SEGMENTS: usize = 4000;

/// Stationary intensity distribution with its quadrature scaffolding.
#[derive(Debug, Clone)]
pub struct SteadyStateDistribution {
    pub params: FpParams,
    /// Location of the density maximum, photons.
    pub mode: f64,
    /// Upper integration cutoff (density 60 nats below the mode).
    pub i_cut: f64,
    /// Plot grid over [0, i_cut].
    pub grid: Vec<f64>,
    /// Normalized ln p on `grid`.
    pub ln_density: Vec<f64>,
    breakpoints: Vec<f64>,
    ln_norm_shifted: f64,
    mean: f64,
    variance: f64,
}

impl SteadyStateDistribution {
    pub fn solve(params: FpParams) -> Result<Self> {
        Self::solve_with_grid(params, 512)
    }

    pub fn solve_with_grid(params: FpParams, grid_points: usize) -> Result<Self> {
        let (mode, i_cut, breakpoints) = locate_support(&params)?;

        let lp = |i: f64| params.log_density_rel(i, mode);
        let norm = integrate_adaptive(
            |i| lp(i).exp(),
            &breakpoints,
            QUAD_REL_TOL,
            0.0,
            MAX_SEGMENTS,
        )?;
        let m1 = integrate_adaptive(
            |i| i * lp(i).exp(),
            &breakpoints,
            QUAD_REL_TOL,
            0.0,
            MAX_SEGMENTS,
        )?;
        let mean = m1.value / norm.value;
        // Centered second moment: immune to the cancellation that would
        // hit <I^2> - <I>^2 for narrow distributions far from zero.
        let var = integrate_adaptive(
            |i| {
                let d = i - mean;
                d * d * lp(i).exp()
            },
            &breakpoints,
            QUAD_REL_TOL,
            0.0,
            MAX_SEGMENTS,
        )?;
        let variance = var.value / norm.value;

        let ln_norm_shifted = norm.value.ln();
        let n = grid_points.max(2);
        let grid: Vec<f64> = (0..n).map(|k| i_cut * k as f64 / (n - 1) as f64).collect();
        let ln_density = grid.iter().map(|&i| lp(i) - ln_norm_shifted).collect();

        Ok(Self {
            params,
            mode,
            i_cut,
            grid,
            ln_density,
            breakpoints,
            ln_norm_shifted,
            mean,
            variance,
        })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    /// Raw moment <I^n>.
    pub fn raw_moment(&self, n: u32) -> Result<f64> {
        if n == 0 {
            return Ok(1.0);
        }
        if n == 1 {
            return Ok(self.mean);
        }
        let lp = |i: f64| self.params.log_density_rel(i, self.mode);
        let m = integrate_adaptive(
            |i| i.powi(n as i32) * lp(i).exp(),
            &self.breakpoints,
            QUAD_REL_TOL,
            0.0,
            MAX_SEGMENTS,
        )?;
        Ok(m.value / self.ln_norm_shifted.exp())
    }

    /// Raw moments <I^1> .. <I^n_max>.
    pub fn moments(&self, n_max: u32) -> Result<Vec<f64>> {
        (1..=n_max).map(|n| self.raw_moment(n)).collect()
    }

    /// d<I^n>/d kappa' = -cov(I^n, I) / 4Q, computed as a centered
    /// covariance integral.
    pub fn moment_derivative(&self, n: u32) -> Result<f64> {
        let cov = if n == 1 {
            self.variance
        } else {
            let mn = self.raw_moment(n)?;
            let mean = self.mean;
            let lp = |i: f64| self.params.log_density_rel(i, self.mode);
            let c = integrate_adaptive(
                |i| (i.powi(n as i32) - mn) * (i - mean) * lp(i).exp(),
                &self.breakpoints,
                QUAD_REL_TOL,
                0.0,
                MAX_SEGMENTS,
            )?;
            c.value / self.ln_norm_shifted.exp()
        };
        Ok(-cov / (4.0 * self.params.q))
    }

    /// Fractional responsivity of the mean output to added absorption,
    /// R = d ln<I>/d alpha_S = -(c/4Q) var/mean (m). Always negative.
    pub fn responsivity(&self) -> f64 {
        -SPEED_OF_LIGHT / (4.0 * self.params.q) * self.variance / self.mean
    }
}

/// Find the density mode, the 60-nat truncation point, and quadrature
/// breakpoints that bracket every feature seen on a coarse probe grid.
fn locate_support(params: &FpParams) -> Result<(f64, f64, Vec<f64>)> {
    // Candidate scales for the support of the density.
    let mut scales = vec![4.0 * params.q / params.kappa_prime];
    if params.kappa_g > 0.0 && params.i_sat.is_finite() {
        scales.push((2.0 * params.q * params.i_sat / params.kappa_g).sqrt());
        if params.kappa_g > params.kappa_prime {
            scales.push(params.i_sat * (params.kappa_g / params.kappa_prime - 1.0));
        }
    }
    if let Some(cl) = params.classical_fixed_point() {
        if cl.is_finite() && cl > 0.0 {
            scales.push(cl);
        }
    }
    let s_max = scales.iter().cloned().fold(f64::MIN, f64::max);
    let guard = if params.i_sat.is_finite() {
        1e6 * params.i_sat
    } else {
        1e12 * s_max
    };

    // Probe ln p on a geometric grid, tracking the global maximum.
    let lp0 = |i: f64| params.log_density_rel(i, 0.0);
    let mut hi = 10.0 * s_max;
    let lo = s_max * 1e-12;
    let n_probe = 240;
    let mut probes: Vec<(f64, f64)> = Vec::with_capacity(n_probe + 1);
    probes.push((0.0, 0.0)); // lp relative to itself at 0
    let build_probes = |lo: f64, hi: f64, probes: &mut Vec<(f64, f64)>| {
        let ratio = (hi / lo).ln() / (n_probe - 1) as f64;
        for k in 0..n_probe {
            let i = lo * (ratio * k as f64).exp();
            probes.push((i, lp0(i)));
        }
    };
    build_probes(lo, hi, &mut probes);

    // Extend until the tail has dropped TAIL_NATS below the running max.
    loop {
        let max_lp = probes.iter().map(|p| p.1).fold(f64::MIN, f64::max);
        let tail_lp = probes.last().unwrap().1;
        if tail_lp < max_lp - TAIL_NATS {
            break;
        }
        hi *= 8.0;
        if hi > guard {
            return Err(Error::Numerical(format!(
                "stationary distribution support exceeds {guard:.3e} photons \
                 (kappa'={:.3e}, kappa_G={:.3e}, Q={:.3e}, drive={:.3e}); \
                 the distribution is too wide to normalize",
                params.kappa_prime, params.kappa_g, params.q, params.drive
            )));
        }
        let start = probes.last().unwrap().0;
        build_probes(start * 1.2, hi, &mut probes);
    }
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));
    probes.dedup_by(|a, b| a.0 == b.0);

    // Global maximum, refined by golden section between its neighbors.
    let k_max = probes
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.1.total_cmp(&b.1))
        .map(|(k, _)| k)
        .unwrap();
    let mode = if k_max == 0 {
        0.0
    } else {
        let a = probes[k_max - 1].0;
        let b = probes[(k_max + 1).min(probes.len() - 1)].0;
        golden_section_min(|i| -lp0(i), a, b, 1e-10, 200).0
    };
    let lp_mode = lp0(mode);

    // Width estimate from the probe points 2 nats below the mode.
    let left_2n = probes[..k_max]
        .iter()
        .rev()
        .find(|p| p.1 < lp_mode - 2.0)
        .map(|p| p.0)
        .unwrap_or(0.0);
    let right_2n = probes[k_max..]
        .iter()
        .find(|p| p.1 < lp_mode - 2.0)
        .map(|p| p.0)
        .unwrap_or(probes.last().unwrap().0);
    let sigma = ((right_2n - left_2n) / 4.0).max(s_max * 1e-9);

    // Truncation: first probe beyond the mode below the 60-nat line, then
    // bisect for a tight cutoff.
    let beyond = probes[k_max..]
        .iter()
        .find(|p| p.1 < lp_mode - TAIL_NATS)
        .map(|p| p.0)
        .expect("tail drop was verified above");
    let mut a = mode;
    let mut b = beyond;
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        if lp0(m) < lp_mode - TAIL_NATS {
            b = m;
        } else {
            a = m;
        }
        if (b - a) < 1e-3 * b {
            break;
        }
    }
    let i_cut = b;

    // Breakpoints: the mode and every secondary local maximum of the
    // probe grid, each bracketed at a few widths, all clipped to [0, cut].
    let mut bps = vec![0.0, i_cut];
    let mut add = |x: f64| {
        if x > 0.0 && x < i_cut {
            bps.push(x);
        }
    };
    for &k in &[-32.0, -8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0, 32.0] {
        add(mode + k * sigma);
    }
    for w in probes.windows(3) {
        if w[1].1 > w[0].1 && w[1].1 > w[2].1 && w[1].1 > lp_mode - TAIL_NATS {
            add(w[0].0);
            add(w[1].0);
            add(w[2].0);
        }
    }
    bps.sort_by(f64::total_cmp);
    bps.dedup_by(|x, y| (*x - *y) <= 1e-12 * i_cut);
    if bps.len() < 2 || *bps.last().unwrap() < i_cut {
        bps.push(i_cut);
    }

    Ok((mode, i_cut, bps))
}

/// |R| over a (gain, drive) grid, with Q tied to the fully inverted value
/// 2 kappa_G cell by cell.
#[derive(Debug, Clone)]
pub struct ResponsivityMap {
    pub drives: Vec<f64>,
    pub gains: Vec<f64>,
    /// magnitude[gain_index][drive_index] = |R| in m; NaN where the cell
    /// failed (see `failures`).
    pub magnitude: Vec<Vec<f64>>,
    pub mean_intensity: Vec<Vec<f64>>,
    pub failures: Vec<(usize, usize, String)>,
}

pub fn responsivity_map(drives: &[f64], gains: &[f64], template: &FpParams) -> ResponsivityMap {
    let cells: Vec<(usize, usize)> = (0..gains.len())
        .flat_map(|gi| (0..drives.len()).map(move |di| (gi, di)))
        .collect();
    let results: Vec<(f64, f64, Option<String>)> = cells
        .par_iter()
        .map(|&(gi, di)| {
            let cell = FpParams::new(
                drives[di],
                template.kappa_prime,
                gains[gi],
                template.i_sat,
                2.0 * gains[gi],
            );
            let solved = cell.and_then(SteadyStateDistribution::solve);
            match solved {
                Ok(d) => {
                    let r = d.responsivity();
                    (r.abs(), d.mean(), None)
                }
                Err(e) => (f64::NAN, f64::NAN, Some(e.to_string())),
            }
        })
        .collect();

    let mut magnitude = vec![vec![0.0; drives.len()]; gains.len()];
    let mut mean_intensity = vec![vec![0.0; drives.len()]; gains.len()];
    let mut failures = Vec::new();
    for (&(gi, di), (mag, mi, err)) in cells.iter().zip(results) {
        magnitude[gi][di] = mag;
        mean_intensity[gi][di] = mi;
        if let Some(e) = err {
            failures.push((gi, di, e));
        }
    }
    ResponsivityMap {
        drives: drives.to_vec(),
        gains: gains.to_vec(),
        magnitude,
        mean_intensity,
        failures,
    }
}

/// Gain-axis slices of the map at zero drive and one finite drive,
/// together with the classical (noise-free) references.
#[derive(Debug, Clone)]
pub struct MapSlices {
    pub gains: Vec<f64>,
    pub drive_value: f64,
    pub rbar_zero_drive: Vec<f64>,
    pub rbar_driven: Vec<f64>,
    /// Classical zero-drive responsivity magnitude c/2 gamma' above
    /// threshold, NaN below.
    pub rbar_classical: Vec<f64>,
    pub intensity_zero_drive: Vec<f64>,
    pub intensity_driven: Vec<f64>,
    /// Classical clamped intensity max(0, I_sat (kappa_G/kappa' - 1)).
    pub intensity_classical: Vec<f64>,
}

pub fn map_slices(gains: &[f64], drive: f64, template: &FpParams) -> MapSlices {
    let map = responsivity_map(&[0.0, drive], gains, template);
    let mut s = MapSlices {
        gains: gains.to_vec(),
        drive_value: drive,
        rbar_zero_drive: Vec::with_capacity(gains.len()),
        rbar_driven: Vec::with_capacity(gains.len()),
        rbar_classical: Vec::with_capacity(gains.len()),
        intensity_zero_drive: Vec::with_capacity(gains.len()),
        intensity_driven: Vec::with_capacity(gains.len()),
        intensity_classical: Vec::with_capacity(gains.len()),
    };
    for (gi, &g) in gains.iter().enumerate() {
        s.rbar_zero_drive.push(map.magnitude[gi][0]);
        s.rbar_driven.push(map.magnitude[gi][1]);
        s.intensity_zero_drive.push(map.mean_intensity[gi][0]);
        s.intensity_driven.push(map.mean_intensity[gi][1]);
        let gamma_prime = 0.5 * (g - template.kappa_prime);
        s.rbar_classical.push(if gamma_prime > 0.0 {
            SPEED_OF_LIGHT / (2.0 * gamma_prime)
        } else {
            f64::NAN
        });
        s.intensity_classical
            .push(template.i_sat * (g / template.kappa_prime - 1.0).max(0.0));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Map (a, I_sat) to full parameters with kappa_G = 3000 1/s and the
    /// fully inverted Q = 2 kappa_G.
    fn params_for_a(a: f64, i_sat: f64) -> FpParams {
        let kappa_g = 3000.0;
        let gamma_prime = a * kappa_g / i_sat.sqrt();
        FpParams::new(
            0.0,
            kappa_g - 2.0 * gamma_prime,
            kappa_g,
            i_sat,
            2.0 * kappa_g,
        )
        .unwrap()
    }

    #[test]
    fn threshold_values_at_zero() {
        let (mean, var) = near_threshold_moments(0.0);
        assert_relative_eq!(
            mean,
            2.0 / std::f64::consts::PI.sqrt(),
            max_relative = 1e-14
        );
        assert_relative_eq!(var, 2.0 - 4.0 / std::f64::consts::PI, max_relative = 1e-14);
        // Numeric anchors: 1.128 and 0.727.
        assert_relative_eq!(mean, 1.128, max_relative = 1e-3);
        assert_relative_eq!(var, 0.727, max_relative = 1e-3);
    }

    #[test]
    fn threshold_values_far_above() {
        let (mean, var) = near_threshold_moments(10.0);
        assert!((mean - 10.0).abs() < 1e-3);
        assert!((var - 2.0).abs() < 1e-3);
    }

    #[test]
    fn mean_slope_is_half_variance() {
        // d<I~>/da = var/2 (truncated-Gaussian identity), checked by
        // central differences at several a.
        let h = 1e-6;
        for &a in &[-2.0, -0.5, 0.0, 0.7, 1.28, 3.0] {
            let (m_plus, _) = near_threshold_moments(a + h);
            let (m_minus, _) = near_threshold_moments(a - h);
            let (_, var) = near_threshold_moments(a);
            assert_relative_eq!(
                (m_plus - m_minus) / (2.0 * h),
                0.5 * var,
                max_relative = 1e-7
            );
        }
    }

    #[test]
    fn quadrature_matches_threshold_closed_form() {
        // Large I_sat makes the quadratic expansion of ln p essentially
        // exact; quadrature then has to reproduce the truncated-Gaussian
        // moments to 1e-6 relative, including below threshold (a = -2)
        // where the variance formula is exercised hardest.
        let i_sat = 1e18;
        for &a in &[-2.0, 0.0, 1.28, 5.0] {
            let p = params_for_a(a, i_sat);
            let d = SteadyStateDistribution::solve(p).unwrap();
            let t = ThresholdParams::from_fp(&p).unwrap();
            // Recovering gamma' = (kappa_G - kappa')/2 cancels ~9 digits
            // at this i_sat, so compare moments at the recovered a.
            assert_relative_eq!(t.a, a, max_relative = 1e-6);
            let scale = t.intensity_scale();
            assert_relative_eq!(scale, 2.0 * i_sat.sqrt(), max_relative = 1e-12);
            let (mean_n, var_n) = near_threshold_moments(t.a);
            assert_relative_eq!(d.mean() / scale, mean_n, max_relative = 1e-6);
            assert_relative_eq!(d.variance() / (scale * scale), var_n, max_relative = 1e-6);
        }
    }

    #[test]
    fn undriven_linear_cavity_is_exponential() {
        // kappa_G = 0, drive = 0: p ~ exp(-kappa' I / 4Q), so
        // ln p(i) - ln p(0) = -kappa' i/4Q, <I> = 4Q/kappa', var = <I>^2,
        // R = -c/kappa'.
        let p = FpParams::new(0.0, 3000.0, 0.0, f64::INFINITY, 1500.0).unwrap();
        for &i in &[0.5, 1.0, 7.3] {
            assert_relative_eq!(
                p.log_density(i) - p.log_density(0.0),
                -3000.0 * i / 6000.0,
                max_relative = 1e-12
            );
        }
        let d = SteadyStateDistribution::solve(p).unwrap();
        let expect_mean = 4.0 * 1500.0 / 3000.0;
        assert_relative_eq!(d.mean(), expect_mean, max_relative = 1e-7);
        assert_relative_eq!(d.variance(), expect_mean * expect_mean, max_relative = 1e-6);
        assert_relative_eq!(
            d.responsivity(),
            -SPEED_OF_LIGHT / 3000.0,
            max_relative = 1e-6
        );
    }

    #[test]
    fn strong_drive_reaches_linear_cavity_responsivity() {
        // Strongly driven, no gain: the distribution is a narrow peak at
        // the classical intensity and R -> -2c/kappa' = -4L/delta.
        let kappa_prime = 2997.92458; // delta1 = 1e-5, L = 1 m, kappa_C
        let target_i = 1e4_f64;
        let drive = kappa_prime * target_i.sqrt() / 2.0;
        let p = FpParams::new(drive, kappa_prime, 0.0, 1e9, 0.5 * kappa_prime).unwrap();
        let d = SteadyStateDistribution::solve(p).unwrap();
        assert_relative_eq!(d.mean(), target_i, max_relative = 0.01);
        let expect = -2.0 * SPEED_OF_LIGHT / kappa_prime;
        assert_relative_eq!(d.responsivity(), expect, max_relative = 0.01);
        // -4L/delta for the matching geometry (L = 1, delta = 2e-5).
        assert_relative_eq!(expect, -4.0 * 1.0 / 2.0e-5, max_relative = 1e-6);
    }

    #[test]
    fn saturated_gain_tracks_classical_fixed_point() {
        // Driven above saturation with gain: <I> approaches the
        // deterministic fixed point.
        let p = FpParams::new(6.0e5, 3000.0, 2000.0, 1e6, 4000.0).unwrap();
        let classical = p.classical_fixed_point().unwrap();
        let d = SteadyStateDistribution::solve(p).unwrap();
        assert_relative_eq!(d.mean(), classical, max_relative = 0.01);
    }

    #[test]
    fn moment_derivative_matches_finite_difference() {
        // d<I^n>/d kappa' via the covariance identity against central
        // differences with delta kappa = 1e-4 kappa'.
        let base = FpParams::new(2.0e4, 3000.0, 2500.0, 1e6, 5000.0).unwrap();
        let d0 = SteadyStateDistribution::solve(base).unwrap();
        let h = 1e-4 * base.kappa_prime;
        for n in 1..=3u32 {
            let mut up = base;
            up.kappa_prime += h;
            let mut dn = base;
            dn.kappa_prime -= h;
            let m_up = SteadyStateDistribution::solve(up)
                .unwrap()
                .raw_moment(n)
                .unwrap();
            let m_dn = SteadyStateDistribution::solve(dn)
                .unwrap()
                .raw_moment(n)
                .unwrap();
            let fd = (m_up - m_dn) / (2.0 * h);
            let ident = d0.moment_derivative(n).unwrap();
            assert_relative_eq!(fd, ident, max_relative = 1e-4);
        }
    }

    #[test]
    fn density_normalizes_to_one() {
        // Independent check with blunt Simpson integration on a fine
        // uniform grid over [0, i_cut].
        let p = params_for_a(1.0, 1e8);
        let d = SteadyStateDistribution::solve(p).unwrap();
        let n = 200_001;
        let h = d.i_cut / (n - 1) as f64;
        let f = |k: usize| {
            let i = k as f64 * h;
            (p.log_density_rel(i, d.mode) - d.ln_norm_shifted).exp()
        };
        let mut s = f(0) + f(n - 1);
        for k in 1..n - 1 {
            s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(k);
        }
        let integral = s * h / 3.0;
        assert_relative_eq!(integral, 1.0, max_relative = 1e-7);
    }

    #[test]
    fn variance_stays_positive_across_regimes() {
        for &a in &[-3.0, -1.0, 0.0, 0.5, 2.0, 6.0] {
            for &i_sat in &[1e4, 1e6, 1e9] {
                for &drive_frac in &[0.0, 0.1, 1.0] {
                    let mut p = params_for_a(a, i_sat);
                    p.drive = drive_frac * p.kappa_prime * i_sat.sqrt() / 10.0;
                    let d = SteadyStateDistribution::solve(p).unwrap();
                    assert!(
                        d.variance() > 0.0,
                        "variance must be positive at a={a}, i_sat={i_sat}, drive={}",
                        p.drive
                    );
                    assert!(d.responsivity() < 0.0);
                }
            }
        }
    }

    #[test]
    fn too_wide_distribution_is_reported() {
        // kappa' so small that the support blows past 1e6 I_sat.
        let p = FpParams::new(0.0, 1e-9, 0.0, 1.0, 1e6).unwrap();
        match SteadyStateDistribution::solve(p) {
            Err(Error::Numerical(msg)) => assert!(msg.contains("support")),
            other => panic!("expected numerical error, got {other:?}"),
        }
    }

    #[test]
    fn map_peak_is_at_zero_drive() {
        // Zero-drive responsivity peaks higher than any driven column.
        let i_sat = 1e8;
        let template = FpParams::new(0.0, 3000.0, 3000.0, i_sat, 6000.0).unwrap();
        let gains: Vec<f64> = (0..13).map(|k| 3000.0 * (0.7 + 0.05 * k as f64)).collect();
        let drives = [0.0, 0.25 * 3000.0 * i_sat.sqrt() / 2.0];
        let map = responsivity_map(&drives, &gains, &template);
        assert!(map.failures.is_empty(), "{:?}", map.failures);
        let peak0 = map
            .magnitude
            .iter()
            .map(|row| row[0])
            .fold(f64::MIN, f64::max);
        let peak1 = map
            .magnitude
            .iter()
            .map(|row| row[1])
            .fold(f64::MIN, f64::max);
        assert!(peak0 > peak1, "zero-drive peak {peak0} vs driven {peak1}");
        for row in &map.magnitude {
            for &v in row {
                assert!(v.is_finite() && v > 0.0);
            }
        }
    }

    #[test]
    fn zero_drive_slice_smooths_classical_kink() {
        // Small I_sat widens the quantum transition (width ~ kappa_G /
        // sqrt(I_sat) in gain) so it spans a few grid steps.
        let i_sat = 1e4;
        let template = FpParams::new(0.0, 3000.0, 3000.0, i_sat, 6000.0).unwrap();
        let gains: Vec<f64> = (0..21).map(|k| 3000.0 * (0.8 + 0.02 * k as f64)).collect();
        let s = map_slices(&gains, 0.1 * 3000.0 * i_sat.sqrt(), &template);
        // At threshold the classical curve is 0 but fluctuations keep the
        // true mean finite, about 1.128 * 2 sqrt(I_sat) = 226.
        let at_thr = gains
            .iter()
            .position(|&g| (g - 3000.0).abs() < 1.0)
            .unwrap();
        assert_eq!(s.intensity_classical[at_thr], 0.0);
        assert!(s.intensity_zero_drive[at_thr] > 100.0);
        // Well above threshold the quantum mean approaches the classical line.
        let top = gains.len() - 1;
        assert_relative_eq!(
            s.intensity_zero_drive[top],
            s.intensity_classical[top],
            max_relative = 0.05
        );
        // Smoothness: second difference of the quantum curve stays small
        // compared to the classical kink's.
        let second_diff = |v: &[f64], k: usize| (v[k + 1] - 2.0 * v[k] + v[k - 1]).abs();
        assert!(
            second_diff(&s.intensity_zero_drive, at_thr)
                < 0.5 * second_diff(&s.intensity_classical, at_thr)
        );
    }

    #[test]
    fn eta0_round_trip() {
        let i_sat = i_sat_from_eta0(1e6);
        assert_relative_eq!(
            i_sat,
            1e12 * std::f64::consts::PI / 16.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(eta0_from_i_sat(i_sat), 1e6, max_relative = 1e-12);
    }

    #[test]
    fn rejects_saturable_loss_medium() {
        let geom =
            CavityGeometry::new(1.0, std::f64::consts::PI * 1e-6, 1.064e-6, 1e-5, 0.0).unwrap();
        let medium = MediumSpec::saturable_loss(100.0, 1e6).unwrap();
        let trace = TraceGas::new(0.0).unwrap();
        assert!(FpParams::from_cavity(&geom, &medium, &trace, 0.0).is_err());
    }
}
