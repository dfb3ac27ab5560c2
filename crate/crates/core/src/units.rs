//! Cavity geometry, media, and unit conversions.
//!
//! Internal convention: SI throughout, with intracavity "intensity" I
//! measured in photons (the dimensionless quadrature amplitudes square to
//! photon number). The bench-facing units are W/cm^2 for optical
//! intensities and 1/cm for absorption coefficients; they are converted
//! exactly once, at the configuration boundary.
//!
//! A symmetric two-mirror cavity of length L with per-mirror transmission
//! delta1 and residual round-trip loss delta0 has
//!
//!   delta_C  = delta0 + 2*delta1          (total round-trip loss)
//!   kappa_C  = delta_C * c / (2 L)        (photon decay rate, 1/s)
//!   fsr      = c / (2 L)                  (free spectral range, Hz)
//!   finesse  = 2 pi / delta_C
//!
//! An intracavity intensity of J W/cm^2 in mode area A corresponds to
//! J * 1e4 * A * L / (hbar_omega * c) photons: energy in the mode volume
//! divided by the photon energy hbar_omega = h c / lambda.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exact SI speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Exact SI Planck constant, J s.
pub const PLANCK: f64 = 6.626_070_15e-34;

/// Photon energy h c / lambda in J for a vacuum wavelength in m.
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * SPEED_OF_LIGHT / wavelength
}

/// Convert an absorption coefficient from 1/cm to 1/m.
pub fn per_cm_to_per_m(alpha_per_cm: f64) -> f64 {
    alpha_per_cm * 100.0
}

/// Convert an absorption coefficient from 1/m to 1/cm.
pub fn per_m_to_per_cm(alpha_per_m: f64) -> f64 {
    alpha_per_m / 100.0
}

/// Two-mirror cavity geometry.
///
/// `delta1` is the intensity transmission of each end mirror; `delta0`
/// collects any additional round-trip loss not associated with the
/// mirrors (absorptive coatings, scatter). Both are dimensionless
/// fractions per round trip.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CavityGeometry {
    /// Mirror spacing, m.
    pub length: f64,
    /// Transverse mode area, m^2.
    pub mode_area: f64,
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Per-mirror intensity transmission.
    pub delta1: f64,
    /// Residual round-trip loss.
    pub delta0: f64,
}

/// Derived linear-cavity rates.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CavityRates {
    /// Photon decay rate kappa_C, 1/s.
    pub kappa_c: f64,
    /// Finesse 2 pi / delta_C.
    pub finesse: f64,
    /// Free spectral range c / 2L, Hz.
    pub fsr: f64,
    /// Lorentzian linewidth kappa_C / 2 pi, Hz.
    pub linewidth: f64,
}

impl CavityGeometry {
    pub fn new(
        length: f64,
        mode_area: f64,
        wavelength: f64,
        delta1: f64,
        delta0: f64,
    ) -> Result<Self> {
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cavity length must be positive, got {length}"
            )));
        }
        if !(mode_area > 0.0 && mode_area.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "mode area must be positive, got {mode_area}"
            )));
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "wavelength must be positive, got {wavelength}"
            )));
        }
        if !(delta1 > 0.0 && delta1 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "mirror transmission delta1 must lie in (0, 1), got {delta1}"
            )));
        }
        if !(delta0 >= 0.0 && delta0 < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "residual loss delta0 must lie in [0, 1), got {delta0}"
            )));
        }
        Ok(Self {
            length,
            mode_area,
            wavelength,
            delta1,
            delta0,
        })
    }

    /// Total round-trip loss delta_C = delta0 + 2 delta1.
    pub fn delta_c(&self) -> f64 {
        self.delta0 + 2.0 * self.delta1
    }

    /// Photon decay rate kappa_C = delta_C c / 2L, 1/s.
    pub fn kappa_c(&self) -> f64 {
        self.delta_c() * SPEED_OF_LIGHT / (2.0 * self.length)
    }

    /// Photon energy of the cavity mode, J.
    pub fn photon_energy(&self) -> f64 {
        photon_energy(self.wavelength)
    }

    pub fn rates(&self) -> CavityRates {
        let kappa_c = self.kappa_c();
        CavityRates {
            kappa_c,
            finesse: 2.0 * std::f64::consts::PI / self.delta_c(),
            fsr: SPEED_OF_LIGHT / (2.0 * self.length),
            linewidth: kappa_c / (2.0 * std::f64::consts::PI),
        }
    }

    /// Intracavity photon number for a circulating intensity in W/cm^2.
    pub fn photons_from_wcm2(&self, intensity_wcm2: f64) -> Result<f64> {
        if !(intensity_wcm2 >= 0.0 && intensity_wcm2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "intensity must be non-negative, got {intensity_wcm2} W/cm^2"
            )));
        }
        let watts_per_m2 = intensity_wcm2 * 1.0e4;
        Ok(watts_per_m2 * self.mode_area * self.length / (self.photon_energy() * SPEED_OF_LIGHT))
    }

    /// Inverse of [`CavityGeometry::photons_from_wcm2`].
    pub fn wcm2_from_photons(&self, photons: f64) -> f64 {
        photons * self.photon_energy() * SPEED_OF_LIGHT / (self.mode_area * self.length) / 1.0e4
    }

    /// Output power through both mirrors for an intracavity photon number,
    /// P = hbar_omega kappa_C I, in W.
    pub fn output_power(&self, photons: f64) -> f64 {
        self.photon_energy() * self.kappa_c() * photons
    }

    /// Coherent drive amplitude (sqrt(photons)/s) equivalent to an input
    /// power in W, from P0 = 4 hbar_omega E0^2 / kappa_C.
    pub fn drive_from_power(&self, p0: f64) -> f64 {
        (p0 * self.kappa_c() / (4.0 * self.photon_energy())).sqrt()
    }
}

/// Kind of intracavity medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MediumKind {
    /// Saturable gain (inverted medium).
    Gain,
    /// Saturable loss (two-level absorber).
    SaturableLoss,
    /// No intracavity medium.
    None,
}

/// Intracavity medium: saturable rate and its spontaneous-emission noise.
///
/// `kappa_m` is the unsaturated magnitude of the medium rate: the field
/// sees +kappa_m/(1+I/I_sat) for gain and -kappa_m/(1+I/I_sat) for
/// saturable loss. `q0` sets the diffusion: Q = q0 for gain (constant,
/// full inversion), Q(I) = q0 I/(I+I_sat) for saturable loss.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MediumSpec {
    pub kind: MediumKind,
    /// Unsaturated medium rate magnitude, 1/s.
    pub kappa_m: f64,
    /// Saturation intensity, photons.
    pub i_sat: f64,
    /// Diffusion scale Q0, 1/s.
    pub q0: f64,
}

impl MediumSpec {
    /// Fully inverted gain medium: Q = 2 kappa_g, independent of intensity.
    pub fn gain(kappa_g: f64, i_sat: f64) -> Result<Self> {
        Self::checked(MediumKind::Gain, kappa_g, i_sat, 2.0 * kappa_g)
    }

    /// Two-level saturable absorber. The diffusion scale defaults to
    /// Q0 = 2 kappa_l, mirroring the fully inverted gain value; the
    /// absorber emits spontaneously only in proportion to its saturation,
    /// hence Q(I) = Q0 I/(I+I_sat).
    pub fn saturable_loss(kappa_l: f64, i_sat: f64) -> Result<Self> {
        Self::checked(MediumKind::SaturableLoss, kappa_l, i_sat, 2.0 * kappa_l)
    }

    pub fn none() -> Self {
        Self {
            kind: MediumKind::None,
            kappa_m: 0.0,
            i_sat: f64::INFINITY,
            q0: 0.0,
        }
    }

    fn checked(kind: MediumKind, kappa_m: f64, i_sat: f64, q0: f64) -> Result<Self> {
        if !(kappa_m >= 0.0 && kappa_m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "medium rate must be non-negative, got {kappa_m}"
            )));
        }
        if !(i_sat > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "saturation intensity must be positive, got {i_sat}"
            )));
        }
        Ok(Self {
            kind,
            kappa_m,
            i_sat,
            q0,
        })
    }

    /// Override the default diffusion scale.
    pub fn with_q0(mut self, q0: f64) -> Self {
        self.q0 = q0;
        self
    }

    /// Signed unsaturated medium rate: +kappa_m for gain, -kappa_m for
    /// saturable loss, 0 for none.
    pub fn signed_rate(&self) -> f64 {
        match self.kind {
            MediumKind::Gain => self.kappa_m,
            MediumKind::SaturableLoss => -self.kappa_m,
            MediumKind::None => 0.0,
        }
    }

    /// Diffusion Q(I) at intracavity intensity `i` (photons).
    pub fn q_of(&self, i: f64) -> f64 {
        match self.kind {
            MediumKind::Gain => self.q0,
            MediumKind::SaturableLoss => self.q0 * i / (i + self.i_sat),
            MediumKind::None => self.q0,
        }
    }
}

/// Trace-gas absorber under estimation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TraceGas {
    /// Absorption coefficient alpha_S, 1/m.
    pub alpha_s: f64,
}

impl TraceGas {
    pub fn new(alpha_s: f64) -> Result<Self> {
        if !alpha_s.is_finite() || alpha_s < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "trace absorption must be non-negative, got {alpha_s}"
            )));
        }
        Ok(Self { alpha_s })
    }

    pub fn from_per_cm(alpha_per_cm: f64) -> Result<Self> {
        Self::new(per_cm_to_per_m(alpha_per_cm))
    }

    /// Absorption rate kappa_S = c alpha_S, 1/s.
    pub fn kappa_s(&self) -> f64 {
        SPEED_OF_LIGHT * self.alpha_s
    }
}

/// Classical noise contributions layered on top of quantum noise.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseBudget {
    /// Technical fractional intensity-noise floor v_T (dimensionless,
    /// variance of deltaI/I per averaged sample).
    pub v_t: f64,
    /// Source relative intensity noise (dimensionless variance).
    pub rin: f64,
    /// RMS of the slow multiplicative gain-drift rate g', 1/s. Each shot
    /// draws one g' and the recorded output is distorted by exp(g' t).
    pub g_drift_rms: f64,
    /// Whether detection shotnoise is added to recorded outputs.
    pub detection_shotnoise: bool,
}

impl NoiseBudget {
    pub fn quiet() -> Self {
        Self {
            v_t: 0.0,
            rin: 0.0,
            g_drift_rms: 0.0,
            detection_shotnoise: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn bench_geometry(delta1: f64) -> CavityGeometry {
        // 1 m cavity, 1 mm beam radius, 1.064 um light.
        CavityGeometry::new(1.0, std::f64::consts::PI * 1.0e-6, 1.064e-6, delta1, 0.0).unwrap()
    }

    #[test]
    fn kappa_c_for_reference_cavity() {
        // delta_C = 2e-5 over a 1 m cavity: kappa_C = 1e-5 c = 2997.92458 1/s.
        let g = bench_geometry(1.0e-5);
        assert_relative_eq!(g.kappa_c(), 2997.92458, max_relative = 1e-12);
        assert_relative_eq!(g.rates().fsr, 1.49896229e8, max_relative = 1e-12);
    }

    #[test]
    fn finesse_times_loss_is_two_pi() {
        for &(d1, d0) in &[(1e-5, 0.0), (1e-4, 0.0), (3e-6, 2e-6), (0.01, 0.005)] {
            let g = CavityGeometry::new(0.3, 1e-6, 1.55e-6, d1, d0).unwrap();
            assert_relative_eq!(
                g.rates().finesse * g.delta_c(),
                2.0 * std::f64::consts::PI,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn photon_number_for_mirror_limited_intensity() {
        // 10 kW/cm^2 in the bench geometry. Independent arithmetic:
        // photons = J[W/m^2] A L / (hw c), hw = h c / lambda.
        let g = bench_geometry(1.0e-5);
        let hw = PLANCK * SPEED_OF_LIGHT / 1.064e-6;
        let expect = 1.0e8 * (std::f64::consts::PI * 1.0e-6) * 1.0 / (hw * SPEED_OF_LIGHT);
        let got = g.photons_from_wcm2(1.0e4).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-13);
        // Order of magnitude anchor: about 5.6e12 photons.
        assert_relative_eq!(got, 5.6e12, max_relative = 0.01);
    }

    #[test]
    fn photon_number_for_saturation_intensity() {
        // 1 W/cm^2 is about 5.6e8 photons in the same geometry.
        let g = bench_geometry(1.0e-5);
        let got = g.photons_from_wcm2(1.0).unwrap();
        assert_relative_eq!(got, 5.6e8, max_relative = 0.01);
    }

    #[test]
    fn intensity_round_trip() {
        let g = bench_geometry(1.0e-4);
        for &j in &[1e-6, 1.0, 42.0, 1e4, 3.7e7] {
            let photons = g.photons_from_wcm2(j).unwrap();
            assert_relative_eq!(g.wcm2_from_photons(photons), j, max_relative = 1e-12);
        }
    }

    #[test]
    fn per_cm_round_trip() {
        assert_relative_eq!(per_cm_to_per_m(1e-8), 1e-6, max_relative = 1e-15);
        assert_relative_eq!(
            per_m_to_per_cm(per_cm_to_per_m(0.123)),
            0.123,
            max_relative = 1e-15
        );
    }

    #[test]
    fn drive_power_round_trip() {
        // P0 = 4 hw E0^2 / kappa_C inverted by drive_from_power.
        let g = bench_geometry(1.0e-5);
        let e0 = g.drive_from_power(1.0e-6);
        let p0 = 4.0 * g.photon_energy() * e0 * e0 / g.kappa_c();
        assert_relative_eq!(p0, 1.0e-6, max_relative = 1e-12);
    }

    #[test]
    fn medium_q_profiles() {
        let gain = MediumSpec::gain(100.0, 1e6).unwrap();
        assert_relative_eq!(gain.q_of(0.0), 200.0);
        assert_relative_eq!(gain.q_of(1e9), 200.0);
        assert_relative_eq!(gain.signed_rate(), 100.0);

        let abs = MediumSpec::saturable_loss(100.0, 1e6).unwrap();
        assert_relative_eq!(abs.q_of(0.0), 0.0);
        assert_relative_eq!(abs.q_of(1e6), 100.0); // half saturated
        assert_relative_eq!(abs.signed_rate(), -100.0);

        let none = MediumSpec::none();
        assert_relative_eq!(none.q_of(123.0), 0.0);
        assert_relative_eq!(none.signed_rate(), 0.0);
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(CavityGeometry::new(-1.0, 1e-6, 1e-6, 1e-5, 0.0).is_err());
        assert!(CavityGeometry::new(1.0, 1e-6, 1e-6, 0.0, 0.0).is_err());
        assert!(CavityGeometry::new(1.0, 1e-6, 1e-6, 1.5, 0.0).is_err());
        assert!(CavityGeometry::new(1.0, 1e-6, 1e-6, 1e-5, -0.1).is_err());
    }

    #[test]
    fn trace_gas_rate() {
        // 1e-8 1/cm = 1e-6 1/m -> kappa_S = c * 1e-6 = 299.792458 1/s.
        let t = TraceGas::from_per_cm(1e-8).unwrap();
        assert_relative_eq!(t.kappa_s(), 299.792458, max_relative = 1e-12);
    }
}
