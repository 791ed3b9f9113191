//! Virtual experiments built from the ensemble and detection layers: a
//! thickness series of total-transmission spectra and a frequency scan of
//! the noise in one speckle spot.

use serde::{Deserialize, Serialize};

use crate::detection::{
    self, InputNoiseModel, NoiseSpectrum, SampleSynthesis, SpectrumKind,
};
use crate::ensemble::{self, EnsembleConfig, NoisePowerSeries};
use crate::error::{Error, Result};
use crate::inference::{CorrelationPoint, CorrelationSeries};
use crate::model::{self, Geometry, MediumParams, NoiseKind};

/// Settings of the total-transmission measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TotalSetup {
    pub medium: MediumParams,
    pub z_front_m: f64,
    pub z_back_m: f64,
    pub thicknesses_m: Vec<f64>,
    /// Sample positions measured per thickness (disorder realizations).
    pub positions: usize,
    pub n_channels: usize,
    pub input: InputNoiseModel,
    pub grid_hz: Vec<f64>,
    pub thermal_level: f64,
    pub jitter_rel: f64,
    pub seed: u64,
}

/// All spectra of a thickness series: one reference, one thermal, and one
/// sample spectrum per (thickness, position).
#[derive(Debug, Clone, PartialEq)]
pub struct TotalMeasurement {
    pub reference: NoiseSpectrum,
    pub thermal: NoiseSpectrum,
    pub samples: Vec<NoiseSpectrum>,
}

/// Stream offsets so that spectra, positions and thicknesses never share a
/// random stream.
const REFERENCE_STREAM: u64 = 1 << 40;
const THERMAL_STREAM: u64 = 2 << 40;

pub fn simulate_total(setup: &TotalSetup) -> Result<TotalMeasurement> {
    if setup.thicknesses_m.is_empty() {
        return Err(Error::config("no thicknesses given"));
    }
    let input = detection::synth_input_noise(&setup.input, &setup.grid_hz)?;
    let shot = setup.input.shot_level;
    let measure = |t_sn: f64, t_tn: f64, seed: u64| {
        detection::synth_transmitted_spectrum(
            &input,
            &SampleSynthesis {
                t_sn,
                t_tn,
                shot_level: shot,
                thermal_level: setup.thermal_level,
                jitter_rel: setup.jitter_rel,
                seed,
            },
        )
    };
    let mut reference = measure(1.0, 1.0, setup.seed ^ REFERENCE_STREAM)?;
    reference.meta.kind = SpectrumKind::Reference;
    reference.meta.sample_id = "reference".into();
    let thermal = detection::synth_thermal(
        &setup.grid_hz,
        setup.thermal_level,
        setup.jitter_rel,
        setup.seed ^ THERMAL_STREAM,
    )?;

    let mut samples = Vec::new();
    for (i, &l) in setup.thicknesses_m.iter().enumerate() {
        let geom = Geometry::new(l, setup.z_front_m, setup.z_back_m)?;
        let cfg = EnsembleConfig::channels(
            setup.n_channels,
            setup.positions,
            setup.seed.wrapping_add(i as u64 + 1),
        )?;
        let totals = ensemble::sample_total_transmissions(&cfg, &setup.medium, &geom)?;
        for (p, (t_sn, t_tn)) in totals.into_iter().enumerate() {
            if t_sn > 1.0 {
                return Err(Error::domain(format!(
                    "sampled total transmission {t_sn} exceeds 1 at L = {l} m; sample too thin"
                )));
            }
            let seed = setup.seed ^ (((i as u64) << 20) | p as u64);
            let mut s = measure(t_sn, t_tn, seed)?;
            s.meta.sample_id = format!("L{:.3}um_p{p}", l * 1e6);
            s.meta.thickness_m = Some(l);
            samples.push(s);
        }
    }
    Ok(TotalMeasurement {
        reference,
        thermal,
        samples,
    })
}

/// Settings of the frequency-scan measurement in one speckle spot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSetup {
    pub medium: MediumParams,
    pub geometry: Geometry,
    pub n_steps: usize,
    /// Optical frequency step in rad/s.
    pub step_rad_s: f64,
    /// Independent scans (spots or sample positions).
    pub n_scans: usize,
    /// Mean spot transmission; spot transmission is `τ |E|² / ⟨|E|²⟩`.
    pub spot_transmission: f64,
    /// Input technical-noise density relative to the shot level.
    pub tech_level: f64,
    pub jitter_rel: f64,
    pub seed: u64,
}

impl ScanSetup {
    /// Laboratory defaults: 200 steps of 0.5 THz.
    pub fn lab_default(medium: MediumParams, geometry: Geometry) -> Self {
        Self {
            medium,
            geometry,
            n_steps: 200,
            step_rad_s: 2.0 * std::f64::consts::PI * 0.5e12,
            n_scans: 400,
            spot_transmission: 1e-4,
            tech_level: 100.0,
            jitter_rel: 0.0,
            seed: 0,
        }
    }
}

/// Band-averaged noise powers per optical frequency and scan.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanData {
    pub sn: NoisePowerSeries,
    pub tn: NoisePowerSeries,
}

const SCAN_JITTER_STREAM: u64 = 3 << 40;

pub fn simulate_scan(setup: &ScanSetup) -> Result<ScanData> {
    if setup.n_steps < 2 {
        return Err(Error::config("a scan needs >= 2 steps"));
    }
    if !(setup.spot_transmission > 0.0 && setup.spot_transmission <= 1e-2) {
        return Err(Error::config("spot transmission must lie in (0, 0.01]"));
    }
    let grid = EnsembleConfig::uniform_grid(0.0, setup.step_rad_s, setup.n_steps);
    let cfg = EnsembleConfig::new(1, setup.n_scans, setup.seed, grid)?;
    let speckle = ensemble::sample_frequency_speckle(&cfg, &setup.medium, &setup.geometry, 1.0)?;
    let reference = 1.0 / setup.spot_transmission;
    let shot = model::vacuum_psd(1.0)?;
    let mut sn = ensemble::noise_power_series(&speckle, NoiseKind::ShotNoise, shot, shot, reference)?;
    let mut tn = ensemble::noise_power_series(
        &speckle,
        NoiseKind::TechnicalNoise,
        setup.tech_level,
        shot,
        reference,
    )?;
    if setup.jitter_rel > 0.0 {
        for (k, series) in [&mut sn, &mut tn].into_iter().enumerate() {
            for (r, row) in series.power.iter_mut().enumerate() {
                let stream = SCAN_JITTER_STREAM | ((k as u64) << 32) | r as u64;
                let mut rng = crate::stats::stream_rng(setup.seed, stream);
                for p in row.iter_mut() {
                    let z: f64 = rand::Rng::sample(&mut rng, rand_distr::StandardNormal);
                    *p *= (setup.jitter_rel * z - 0.5 * setup.jitter_rel.powi(2)).exp();
                }
            }
        }
    }
    Ok(ScanData { sn, tn })
}

/// Correlation series from a scan over the first `n_lags` lags (at least
/// four, so a two-parameter fit keeps two degrees of freedom).
pub fn correlation_from_powers(
    powers: &NoisePowerSeries,
    l_eff_m: f64,
    n_lags: usize,
) -> Result<CorrelationSeries> {
    let step = ensemble::uniform_spacing(&powers.omega_grid)?;
    let n = powers.omega_grid.len();
    if n < 4 {
        return Err(Error::config("a correlation fit needs a scan of >= 4 steps"));
    }
    let n_lags = n_lags.clamp(4, n);
    let lags: Vec<f64> = (0..n_lags).map(|k| k as f64 * step).collect();
    let est = ensemble::empirical_noise_correlation(powers, &lags)?;
    let points = lags
        .iter()
        .zip(est)
        .map(|(&dw, e)| CorrelationPoint {
            delta_omega_rad_s: dw,
            c_hat: e.value,
            stderr: e.stderr,
        })
        .collect();
    CorrelationSeries::new(points, l_eff_m)
}
