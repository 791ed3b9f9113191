//! Closed-form noise transport laws for a diffusive slab.
//!
//! Units: lengths in metres, diffusivity in m²/s, optical frequency offsets
//! in rad/s. Noise spectral densities are normalized so that the shot-noise
//! (coherent-state) power of a beam equals its mean photon flux.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this η the correlation kernel is evaluated from its power series.
const F_ETA_SERIES_LIMIT: f64 = 1.0;

/// Transport properties of the scattering medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    ell: f64,
    diffusivity: f64,
}

impl MediumParams {
    /// `ell` is the transport mean free path (m), `diffusivity` the diffusion
    /// constant (m²/s). Both must be finite and positive.
    pub fn new(ell: f64, diffusivity: f64) -> Result<Self> {
        if !(ell.is_finite() && ell > 0.0) {
            return Err(Error::domain(format!("mean free path must be > 0, got {ell}")));
        }
        if !(diffusivity.is_finite() && diffusivity > 0.0) {
            return Err(Error::domain(format!(
                "diffusion constant must be > 0, got {diffusivity}"
            )));
        }
        Ok(Self { ell, diffusivity })
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn diffusivity(&self) -> f64 {
        self.diffusivity
    }
}

/// Slab thickness plus the extrapolation lengths at both faces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    thickness: f64,
    z_front: f64,
    z_back: f64,
}

impl Geometry {
    pub fn new(thickness: f64, z_front: f64, z_back: f64) -> Result<Self> {
        if !(thickness.is_finite() && thickness > 0.0) {
            return Err(Error::domain(format!("thickness must be > 0, got {thickness}")));
        }
        for (name, z) in [("front", z_front), ("back", z_back)] {
            if !(z.is_finite() && z >= 0.0) {
                return Err(Error::domain(format!(
                    "{name} extrapolation length must be >= 0, got {z}"
                )));
            }
        }
        Ok(Self {
            thickness,
            z_front,
            z_back,
        })
    }

    /// A bare slab with no boundary extension.
    pub fn bare(thickness: f64) -> Result<Self> {
        Self::new(thickness, 0.0, 0.0)
    }

    pub fn thickness(&self) -> f64 {
        self.thickness
    }

    pub fn z_front(&self) -> f64 {
        self.z_front
    }

    pub fn z_back(&self) -> f64 {
        self.z_back
    }

    pub fn effective_thickness(&self) -> f64 {
        effective_thickness(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoiseKind {
    ShotNoise,
    TechnicalNoise,
}

impl NoiseKind {
    pub fn label(self) -> &'static str {
        match self {
            NoiseKind::ShotNoise => "sn",
            NoiseKind::TechnicalNoise => "tn",
        }
    }
}

impl std::fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Multiplicative contrast reduction from a constant stray-light background.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastModel {
    kappa: f64,
}

impl ContrastModel {
    pub fn new(kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 1.0) {
            return Err(Error::domain(format!("contrast must lie in (0, 1], got {kappa}")));
        }
        Ok(Self { kappa })
    }

    pub const fn full() -> Self {
        Self { kappa: 1.0 }
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Default for ContrastModel {
    fn default() -> Self {
        Self::full()
    }
}

/// A total transmission together with a flag telling whether the diffusive
/// approximation (`ell < L_eff`) holds for the inputs that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub value: f64,
    pub diffusive: bool,
}

pub fn effective_thickness(geom: &Geometry) -> f64 {
    geom.thickness + geom.z_front + geom.z_back
}

/// Dimensionless frequency offset `2 L² Δω / D`.
pub fn eta_of(delta_omega: f64, l_eff: f64, diffusivity: f64) -> Result<f64> {
    if !(delta_omega.is_finite() && delta_omega >= 0.0) {
        return Err(Error::domain(format!(
            "frequency offset must be finite and >= 0, got {delta_omega}"
        )));
    }
    if !(l_eff.is_finite() && l_eff > 0.0) {
        return Err(Error::domain(format!("thickness must be > 0, got {l_eff}")));
    }
    if !(diffusivity.is_finite() && diffusivity > 0.0) {
        return Err(Error::domain(format!(
            "diffusion constant must be > 0, got {diffusivity}"
        )));
    }
    Ok(2.0 * l_eff * l_eff * delta_omega / diffusivity)
}

/// Intensity frequency-correlation kernel `η / (cosh √η − cos √η)`.
pub fn f_eta(eta: f64) -> Result<f64> {
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::domain(format!("eta must be >= 0, got {eta}")));
    }
    Ok(f_eta_unchecked(eta))
}

pub(crate) fn f_eta_unchecked(eta: f64) -> f64 {
    if eta < F_ETA_SERIES_LIMIT {
        // cosh x - cos x = 2 Σ x^(4k+2)/(4k+2)!, so with x² = η the ratio is
        // 1 / Σ 2 η^(2k) / (4k+2)!
        let eta2 = eta * eta;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1u32;
        loop {
            let n = f64::from(4 * k);
            // 2/(4k+2)! from 2/(4k-2)!
            term *= eta2 / ((n - 1.0) * n * (n + 1.0) * (n + 2.0));
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
            k += 1;
        }
        return 1.0 / sum;
    }
    if eta.is_infinite() {
        return 0.0;
    }
    let x = eta.sqrt();
    eta / (x.cosh() - x.cos())
}

pub fn corr_shot(eta: f64, contrast: ContrastModel) -> Result<f64> {
    Ok(contrast.kappa * f_eta(eta)?)
}

pub fn corr_tech(eta: f64, contrast: ContrastModel) -> Result<f64> {
    let f = f_eta(eta)?;
    Ok(contrast.kappa * (f * f + 4.0 * f))
}

/// Model correlation for either noise kind.
pub fn corr_model(kind: NoiseKind, eta: f64, contrast: ContrastModel) -> Result<f64> {
    match kind {
        NoiseKind::ShotNoise => corr_shot(eta, contrast),
        NoiseKind::TechnicalNoise => corr_tech(eta, contrast),
    }
}

/// Disorder-averaged total transmission of shot noise, `ℓ / L_eff`.
pub fn total_trans_shot(medium: &MediumParams, geom: &Geometry) -> Transmission {
    let l_eff = effective_thickness(geom);
    Transmission {
        value: medium.ell / l_eff,
        diffusive: medium.ell < l_eff,
    }
}

/// Disorder-averaged total transmission of technical noise, `(ℓ / L_eff)²`.
pub fn total_trans_tech(medium: &MediumParams, geom: &Geometry) -> Transmission {
    let t = total_trans_shot(medium, geom);
    Transmission {
        value: t.value * t.value,
        diffusive: t.diffusive,
    }
}

pub fn total_transmission(kind: NoiseKind, medium: &MediumParams, geom: &Geometry) -> Transmission {
    match kind {
        NoiseKind::ShotNoise => total_trans_shot(medium, geom),
        NoiseKind::TechnicalNoise => total_trans_tech(medium, geom),
    }
}

/// Vacuum-beat noise density of a coherent beam of the given mean flux.
pub fn vacuum_psd(mean_input_intensity: f64) -> Result<f64> {
    if !(mean_input_intensity.is_finite() && mean_input_intensity >= 0.0) {
        return Err(Error::domain(format!(
            "mean intensity must be >= 0, got {mean_input_intensity}"
        )));
    }
    Ok(mean_input_intensity)
}

/// Output noise density of one channel with intensity transmission `t_ab`:
/// `T² (s_in − s_v) + T s_v`.
pub fn channel_noise_psd(t_ab: f64, s_in: f64, s_v: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t_ab) {
        return Err(Error::domain(format!("transmission must lie in [0, 1], got {t_ab}")));
    }
    if !(s_in.is_finite() && s_in >= 0.0) {
        return Err(Error::domain(format!("input noise density must be >= 0, got {s_in}")));
    }
    if !(s_v.is_finite() && s_v >= 0.0) {
        return Err(Error::domain(format!("vacuum noise density must be >= 0, got {s_v}")));
    }
    Ok(t_ab * t_ab * (s_in - s_v) + t_ab * s_v)
}

/// Complex field frequency correlation `s / sinh s`, `s = (1 − i) √η / 2`.
///
/// Negative offsets return the complex conjugate, so a matrix built from
/// `g(ω_i − ω_j)` is Hermitian.
pub fn field_covariance(delta_omega: f64, l_eff: f64, diffusivity: f64) -> Result<Complex64> {
    let eta = eta_of(delta_omega.abs(), l_eff, diffusivity)?;
    let g = field_kernel(eta);
    Ok(if delta_omega < 0.0 { g.conj() } else { g })
}

/// `s / sinh s` as a function of η ≥ 0.
pub(crate) fn field_kernel(eta: f64) -> Complex64 {
    let a = 0.5 * eta.sqrt();
    let s = Complex64::new(a, -a);
    if a < 1e-4 {
        // s/sinh s = 1 - s²/6 + 7 s⁴/360
        let s2 = s * s;
        return Complex64::new(1.0, 0.0) - s2 / 6.0 + s2 * s2 * (7.0 / 360.0);
    }
    if a > 300.0 {
        // sinh s ≈ e^s / 2
        return 2.0 * s * (-s).exp();
    }
    s / s.sinh()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn effective_thickness_adds_extrapolation_lengths() {
        let g = Geometry::bare(18e-6).unwrap();
        assert_eq!(effective_thickness(&g), 18e-6);
        let g = Geometry::new(18e-6, 1e-6, 1e-6).unwrap();
        assert!(rel(effective_thickness(&g), 20e-6) < 1e-15);
        let g = Geometry::new(5.0e-6, 0.8e-6, 0.8e-6).unwrap();
        assert!(rel(effective_thickness(&g), 6.6e-6) < 1e-15);
    }

    #[test]
    fn invalid_types_are_rejected() {
        assert!(MediumParams::new(0.0, 1.0).is_err());
        assert!(MediumParams::new(1.0, -1.0).is_err());
        assert!(Geometry::new(0.0, 0.0, 0.0).is_err());
        assert!(Geometry::new(1.0, -1e-9, 0.0).is_err());
        assert!(ContrastModel::new(0.0).is_err());
        assert!(ContrastModel::new(1.01).is_err());
        assert!(ContrastModel::new(1.0).is_ok());
    }

    #[test]
    fn eta_examples() {
        assert_eq!(eta_of(0.0, 3.0, 7.0).unwrap(), 0.0);
        assert_eq!(eta_of(1.0, 1.0, 2.0).unwrap(), 1.0);
        let eta = eta_of(2.0 * std::f64::consts::PI * 0.5e12, 18e-6, 34.0).unwrap();
        assert!(rel(eta, 59.875059986064294662) < 1e-12, "{eta}");
        assert!(eta_of(-1.0, 1.0, 1.0).is_err());
    }

    // Frozen from a 40-digit evaluation of η/(cosh√η − cos√η).
    #[test]
    fn f_eta_examples() {
        assert_eq!(f_eta(0.0).unwrap(), 1.0);
        assert!(rel(f_eta(4.0).unwrap(), 0.95731739883663903889) < 1e-14);
        assert!(rel(f_eta(100.0).unwrap(), 0.0090792942043571084234) < 1e-13);
        assert!(rel(f_eta(0.5).unwrap(), 0.99930600307476337294) < 1e-14);
        assert!(rel(f_eta(1e-3).unwrap(), 0.99999999722222222939) < 1e-15);
        assert!(rel(f_eta(1000.0).unwrap(), 3.6934533248195197089e-11) < 1e-12);
        assert!(f_eta(-1e-9).is_err());
        assert!(f_eta(f64::NAN).is_err());
        assert_eq!(f_eta(f64::INFINITY).unwrap(), 0.0);
        assert_eq!(f_eta(1e7).unwrap(), 0.0);
    }

    #[test]
    fn series_and_closed_form_agree_at_switch() {
        let below = f_eta_unchecked(F_ETA_SERIES_LIMIT * (1.0 - 1e-12));
        let x = F_ETA_SERIES_LIMIT.sqrt();
        let direct = F_ETA_SERIES_LIMIT / (x.cosh() - x.cos());
        assert!(rel(below, direct) < 1e-13);
    }

    #[test]
    fn correlation_examples() {
        let half = ContrastModel::new(0.5).unwrap();
        let k08 = ContrastModel::new(0.8).unwrap();
        let full = ContrastModel::full();
        assert_eq!(corr_shot(0.0, full).unwrap(), 1.0);
        assert_eq!(corr_shot(0.0, k08).unwrap(), 0.8);
        assert!(rel(corr_shot(4.0, full).unwrap(), 0.95731739883663903889) < 1e-14);
        assert_eq!(corr_tech(0.0, full).unwrap(), 5.0);
        assert_eq!(corr_tech(0.0, half).unwrap(), 2.5);
        assert!(rel(corr_tech(4.0, full).unwrap(), 4.7457261974619047758) < 1e-14);
        assert!(corr_tech(-1.0, full).is_err());
    }

    #[test]
    fn total_transmission_examples() {
        let m = MediumParams::new(1e-6, 34.0).unwrap();
        let g = Geometry::bare(10e-6).unwrap();
        let sn = total_trans_shot(&m, &g);
        assert!(rel(sn.value, 0.1) < 1e-15);
        assert!(sn.diffusive);
        assert!(rel(total_trans_tech(&m, &g).value, 0.01) < 1e-14);

        let g = Geometry::bare(1e-6).unwrap();
        let sn = total_trans_shot(&m, &g);
        assert_eq!(sn.value, 1.0);
        assert!(!sn.diffusive);
    }

    #[test]
    fn vacuum_and_channel_examples() {
        assert_eq!(vacuum_psd(0.0).unwrap(), 0.0);
        assert_eq!(vacuum_psd(1.0).unwrap(), 1.0);
        assert_eq!(vacuum_psd(2.5).unwrap(), 2.5);
        assert!(vacuum_psd(-1.0).is_err());

        assert_eq!(channel_noise_psd(1.0, 7.0, 1.0).unwrap(), 7.0);
        assert!(rel(channel_noise_psd(0.3, 1.0, 1.0).unwrap(), 0.3) < 1e-15);
        assert!(rel(channel_noise_psd(0.3, 100.0, 1.0).unwrap(), 9.21) < 1e-14);
        assert!(channel_noise_psd(1.1, 1.0, 1.0).is_err());
        assert!(channel_noise_psd(-0.1, 1.0, 1.0).is_err());
    }

    // Frozen from a 40-digit evaluation of s/sinh(s).
    #[test]
    fn field_covariance_examples() {
        assert_eq!(field_covariance(0.0, 1.0, 1.0).unwrap(), Complex64::new(1.0, 0.0));
        // η = 2·1²·Δω/2 = Δω
        let g = field_covariance(4.0, 1.0, 2.0).unwrap();
        assert!(rel(g.re, 0.92544901879885487157) < 1e-14);
        assert!(rel(g.im, 0.3175870155420019709) < 1e-13);
        let g = field_covariance(100.0, 1.0, 2.0).unwrap();
        assert!(rel(g.re, -0.04549913621329998348) < 1e-12);
        assert!(rel(g.im, -0.083720504108615366504) < 1e-12);
        assert!(rel(g.norm_sqr(), 0.0090792942043571084234) < 1e-12);

        let neg = field_covariance(-4.0, 1.0, 2.0).unwrap();
        assert_eq!(neg, field_covariance(4.0, 1.0, 2.0).unwrap().conj());
    }

    #[test]
    fn field_kernel_branches_are_continuous() {
        // small-s series against sinh near the switch
        let eta = (2.0 * 1e-4f64).powi(2);
        let a = 0.5 * eta.sqrt();
        let s = Complex64::new(a, -a);
        let direct = s / s.sinh();
        assert!((field_kernel(eta * (1.0 - 1e-9)) - direct).norm() < 1e-15);
        // asymptotic branch against f_eta for large η
        let eta = 600.0f64.powi(2) * 1.0001;
        let g = field_kernel(eta);
        assert!(g.norm_sqr() < 1e-200);
    }
}
