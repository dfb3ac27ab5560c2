//! Optical bistability of a driven cavity containing a saturable
//! absorber.
//!
//! The total decay rate kappa(I) = kappa0 + kappa_L / (1 + I/I_sat)
//! falls with intensity, so the steady-state condition
//!
//!   I kappa(I)^2 = P0 kappa_C / hbar omega
//!
//! can have one or three solutions. In u = 1 + I/I_sat it is a cubic,
//! solved here in closed form and polished by Newton steps on the
//! original balance. A root is stable exactly when d/dI [I kappa^2] > 0;
//! the knees of the S-curve (where that derivative vanishes) are
//!
//!   I+- = I_sat (kappa_L - 2 kappa0 +- sqrt(kappa_L (kappa_L - 8 kappa0)))
//!         / (2 kappa0),
//!
//! which exist iff kappa_L > 8 kappa0. With x = sqrt(kappa_L/8kappa0 - 1)
//! they are I_sat (3 + 4x^2 +- 4x sqrt(1+x^2)), approximately
//! I_sat (3 +- 4x) for weak contrast.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::cubic::solve_cubic_real;
use crate::units::{CavityGeometry, MediumKind, MediumSpec, TraceGas};

/// Saturable-absorber cavity, reduced to rates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BistableCavity {
    /// Mirror output-coupling rate, 1/s (converts drive power to rate).
    pub kappa_c: f64,
    /// Intensity-independent loss kappa_C + c alpha_S, 1/s.
    pub kappa0: f64,
    /// Unsaturated absorber rate, 1/s.
    pub kappa_l: f64,
    /// Absorber saturation intensity, photons.
    pub i_sat: f64,
    /// Photon energy, J.
    pub hbar_omega: f64,
}

/// One steady-state intensity and its stability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyState {
    pub intensity: f64,
    pub stable: bool,
}

/// Knees of the S-curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TurningPoints {
    /// Lower-knee intensity I-, photons.
    pub i_lower: f64,
    /// Upper-knee intensity I+, photons.
    pub i_upper: f64,
    /// Input power at the lower knee: where an upward sweep jumps, W.
    pub p0_up_jump: f64,
    /// Input power at the upper knee: where a downward sweep drops, W.
    pub p0_down_jump: f64,
    /// Contrast parameter sqrt(kappa_L / 8 kappa0 - 1).
    pub x: f64,
}

/// Weak-contrast estimate I_sat (3 -+ 4x) of the knee intensities.
pub fn small_contrast_turning_estimate(i_sat: f64, x: f64) -> (f64, f64) {
    (i_sat * (3.0 - 4.0 * x), i_sat * (3.0 + 4.0 * x))
}

/// Branch structure over an input-power grid plus adiabatic sweeps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hysteresis {
    pub p0: Vec<f64>,
    /// All steady states at each power, ascending in intensity.
    pub states: Vec<Vec<SteadyState>>,
    /// Intensity when the power is ramped up adiabatically.
    pub sweep_up: Vec<f64>,
    /// Intensity when the power is ramped down (same grid order as `p0`).
    pub sweep_down: Vec<f64>,
}

impl BistableCavity {
    pub fn new(geom: &CavityGeometry, absorber: &MediumSpec, trace: &TraceGas) -> Result<Self> {
        if absorber.kind != MediumKind::SaturableLoss {
            return Err(Error::InvalidParameter(
                "bistability requires a saturable-loss medium".into(),
            ));
        }
        Self::from_rates(
            geom.kappa_c(),
            geom.kappa_c() + trace.kappa_s(),
            absorber.kappa_m,
            absorber.i_sat,
            geom.photon_energy(),
        )
    }

    pub fn from_rates(
        kappa_c: f64,
        kappa0: f64,
        kappa_l: f64,
        i_sat: f64,
        hbar_omega: f64,
    ) -> Result<Self> {
        if !(kappa_c > 0.0 && kappa0 >= kappa_c && kappa_l >= 0.0) {
            return Err(Error::InvalidParameter(
                "need kappa_C > 0, kappa0 >= kappa_C and kappa_L >= 0".into(),
            ));
        }
        if !(i_sat > 0.0 && i_sat.is_finite() && hbar_omega > 0.0) {
            return Err(Error::InvalidParameter(
                "need finite positive saturation intensity and photon energy".into(),
            ));
        }
        Ok(Self {
            kappa_c,
            kappa0,
            kappa_l,
            i_sat,
            hbar_omega,
        })
    }

    /// Total decay rate at intensity `i`.
    pub fn kappa_of(&self, i: f64) -> f64 {
        self.kappa0 + self.kappa_l / (1.0 + i / self.i_sat)
    }

    fn dkappa_di(&self, i: f64) -> f64 {
        let u = 1.0 + i / self.i_sat;
        -self.kappa_l / (self.i_sat * u * u)
    }

    /// Input power that holds the cavity at intensity `i` in steady
    /// state: P0 = hbar omega I kappa(I)^2 / kappa_C.
    pub fn input_power_at(&self, i: f64) -> f64 {
        let k = self.kappa_of(i);
        self.hbar_omega * i * k * k / self.kappa_c
    }

    /// Drive amplitude squared for input power `p0`:
    /// E0^2 = P0 kappa_C / 4 hbar omega.
    pub fn drive_squared_from_power(&self, p0: f64) -> f64 {
        p0 * self.kappa_c / (4.0 * self.hbar_omega)
    }

    /// All steady-state intensities at input power `p0`, ascending.
    pub fn steady_states(&self, p0: f64) -> Result<Vec<SteadyState>> {
        if !(p0 >= 0.0 && p0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "input power must be non-negative, got {p0}"
            )));
        }
        if p0 == 0.0 {
            return Ok(vec![SteadyState {
                intensity: 0.0,
                stable: true,
            }]);
        }
        let d = p0 * self.kappa_c / self.hbar_omega;
        let (s, k0, kl) = (self.i_sat, self.kappa0, self.kappa_l);
        let roots_u = solve_cubic_real(
            s * k0 * k0,
            s * (2.0 * k0 * kl - k0 * k0) - d,
            s * (kl * kl - 2.0 * k0 * kl),
            -s * kl * kl,
        );
        let balance = |i: f64| {
            let k = self.kappa_of(i);
            i * k * k - d
        };
        let balance_slope = |i: f64| {
            let k = self.kappa_of(i);
            k * k + 2.0 * i * k * self.dkappa_di(i)
        };
        let mut out: Vec<SteadyState> = Vec::new();
        for u in roots_u {
            if u < 1.0 - 1e-9 {
                continue; // negative intensity: unphysical cubic branch
            }
            let mut i = (s * (u - 1.0)).max(0.0);
            for _ in 0..3 {
                let g = balance(i);
                let gp = balance_slope(i);
                if gp != 0.0 {
                    let step = g / gp;
                    // Newton can overshoot near a knee; keep I >= 0.
                    i = (i - step).max(0.0);
                }
            }
            if out
                .iter()
                .any(|r| (r.intensity - i).abs() <= 1e-8 * (self.i_sat + i))
            {
                continue;
            }
            out.push(SteadyState {
                intensity: i,
                stable: balance_slope(i) > 0.0,
            });
        }
        out.sort_by(|a, b| a.intensity.total_cmp(&b.intensity));
        Ok(out)
    }

    /// Knees of the S-curve, present iff kappa_L > 8 kappa0.
    pub fn turning_points(&self) -> Option<TurningPoints> {
        let (k0, kl) = (self.kappa0, self.kappa_l);
        let disc = kl * (kl - 8.0 * k0);
        if !(disc > 0.0) {
            return None;
        }
        let root = disc.sqrt();
        let i_lower = self.i_sat * (kl - 2.0 * k0 - root) / (2.0 * k0);
        let i_upper = self.i_sat * (kl - 2.0 * k0 + root) / (2.0 * k0);
        Some(TurningPoints {
            i_lower,
            i_upper,
            p0_up_jump: self.input_power_at(i_lower),
            p0_down_jump: self.input_power_at(i_upper),
            x: (kl / (8.0 * k0) - 1.0).sqrt(),
        })
    }

    /// Steady states over a power grid plus adiabatic up and down sweeps
    /// that follow the nearest stable branch and jump when it vanishes.
    pub fn hysteresis(&self, p0_grid: &[f64]) -> Result<Hysteresis> {
        if p0_grid.len() < 2 {
            return Err(Error::InvalidParameter(
                "hysteresis sweep needs at least two powers".into(),
            ));
        }
        let states: Vec<Vec<SteadyState>> = p0_grid
            .iter()
            .map(|&p| self.steady_states(p))
            .collect::<Result<_>>()?;
        let follow = |order: &mut dyn Iterator<Item = usize>, start_low: bool| -> Vec<f64> {
            let mut trace = vec![0.0; p0_grid.len()];
            let mut state: Option<f64> = None;
            for k in order {
                let stables: Vec<f64> = states[k]
                    .iter()
                    .filter(|s| s.stable)
                    .map(|s| s.intensity)
                    .collect();
                let next = match state {
                    None => {
                        if start_low {
                            *stables.first().expect("at least one stable state")
                        } else {
                            *stables.last().expect("at least one stable state")
                        }
                    }
                    Some(prev) => stables
                        .iter()
                        .copied()
                        .min_by(|a, b| (a - prev).abs().total_cmp(&(b - prev).abs()))
                        .expect("at least one stable state"),
                };
                trace[k] = next;
                state = Some(next);
            }
            trace
        };
        let sweep_up = follow(&mut (0..p0_grid.len()), true);
        let sweep_down = follow(&mut (0..p0_grid.len()).rev(), false);
        Ok(Hysteresis {
            p0: p0_grid.to_vec(),
            states,
            sweep_up,
            sweep_down,
        })
    }
}

/// Convenience: the standard demonstration cavity. Meter-long resonator,
/// 1.064 um drive, millimeter-squared mode, 1e-5 mirror transmission,
/// absorber 12x the mirror loss saturating at the photon number of
/// 1 W/cm^2, plus a trace absorber alpha_s (1/m).
pub fn demo_cavity(alpha_s: f64) -> Result<(CavityGeometry, BistableCavity)> {
    let geom = CavityGeometry::new(1.0, std::f64::consts::PI * 1e-6, 1.064e-6, 1e-5, 0.0)?;
    let i_sat = geom.photons_from_wcm2(1.0)?;
    let absorber = MediumSpec::saturable_loss(12.0 * geom.kappa_c(), i_sat)?;
    let trace = TraceGas::new(alpha_s)?;
    let cavity = BistableCavity::new(&geom, &absorber, &trace)?;
    Ok((geom, cavity))
}
