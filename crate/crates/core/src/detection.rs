//! Virtual noise measurement and its data reduction.
//!
//! Spectra are photocurrent noise densities versus detection frequency Ω
//! (Hz), normalized so that the shot noise of the reference beam is 1.
//! The reduction chain is: thermal subtraction, division by the reference
//! spectrum, then averaging within the technical-noise and shot-noise bands
//! while skipping excluded intervals (power-supply spikes).

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::{self, McEstimate};

pub const DEFAULT_RBW_HZ: f64 = 30e3;
pub const DEFAULT_VBW_HZ: f64 = 10e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumKind {
    Sample,
    Reference,
    Thermal,
}

impl SpectrumKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SpectrumKind::Sample => "sample",
            SpectrumKind::Reference => "reference",
            SpectrumKind::Thermal => "thermal",
        }
    }
}

impl std::str::FromStr for SpectrumKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sample" => Ok(SpectrumKind::Sample),
            "reference" => Ok(SpectrumKind::Reference),
            "thermal" => Ok(SpectrumKind::Thermal),
            other => Err(format!("unknown spectrum kind '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub kind: SpectrumKind,
    pub sample_id: String,
    pub thickness_m: Option<f64>,
    pub seed: u64,
    pub rbw_hz: f64,
    pub vbw_hz: f64,
    /// Points clamped to zero by thermal subtraction.
    pub clamped_points: usize,
    /// Free-form provenance (model parameters and the like).
    pub extra: BTreeMap<String, String>,
}

impl SpectrumMeta {
    pub fn new(kind: SpectrumKind, sample_id: impl Into<String>) -> Self {
        Self {
            kind,
            sample_id: sample_id.into(),
            thickness_m: None,
            seed: 0,
            rbw_hz: DEFAULT_RBW_HZ,
            vbw_hz: DEFAULT_VBW_HZ,
            clamped_points: 0,
            extra: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpectrum {
    omega_hz: Vec<f64>,
    psd: Vec<f64>,
    pub meta: SpectrumMeta,
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if let Some(i) = grid.iter().position(|w| !w.is_finite()) {
        return Err(Error::InvalidData(format!("non-finite frequency at index {i}")));
    }
    if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
        return Err(Error::InvalidData(format!(
            "frequency grid not strictly increasing at index {}",
            i + 1
        )));
    }
    Ok(())
}

impl NoiseSpectrum {
    pub fn new(omega_hz: Vec<f64>, psd: Vec<f64>, meta: SpectrumMeta) -> Result<Self> {
        if omega_hz.len() != psd.len() {
            return Err(Error::Shape(format!(
                "{} frequencies but {} densities",
                omega_hz.len(),
                psd.len()
            )));
        }
        check_grid(&omega_hz)?;
        if let Some(i) = psd.iter().position(|p| !p.is_finite()) {
            return Err(Error::InvalidData(format!("non-finite density at index {i}")));
        }
        if meta.kind != SpectrumKind::Thermal {
            if let Some(i) = psd.iter().position(|&p| p < 0.0) {
                return Err(Error::InvalidData(format!(
                    "negative density {} at {} Hz in a {} spectrum",
                    psd[i],
                    omega_hz[i],
                    meta.kind.as_str()
                )));
            }
        }
        Ok(Self {
            omega_hz,
            psd,
            meta,
        })
    }

    pub fn omega_hz(&self) -> &[f64] {
        &self.omega_hz
    }

    pub fn psd(&self) -> &[f64] {
        &self.psd
    }

    pub fn len(&self) -> usize {
        self.psd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psd.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spike {
    pub center_hz: f64,
    pub width_hz: f64,
    pub height: f64,
}

impl Spike {
    /// Gaussian line with standard deviation `width_hz`.
    pub fn eval(&self, omega_hz: f64) -> f64 {
        let x = (omega_hz - self.center_hz) / self.width_hz;
        self.height * (-0.5 * x * x).exp()
    }
}

/// Laser intensity noise: a shot-noise floor, a low-frequency technical
/// plateau that rolls off as a power law above a corner, and narrow spikes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNoiseModel {
    pub shot_level: f64,
    pub tech_amplitude: f64,
    pub tech_corner_hz: f64,
    pub tech_exponent: f64,
    pub spikes: Vec<Spike>,
}

impl Default for InputNoiseModel {
    fn default() -> Self {
        Self {
            shot_level: 1.0,
            tech_amplitude: 100.0,
            tech_corner_hz: 0.6e6,
            tech_exponent: 8.0,
            spikes: vec![Spike {
                center_hz: 1.3e6,
                width_hz: 8e3,
                height: 5.0,
            }],
        }
    }
}

impl InputNoiseModel {
    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x >= 0.0;
        if !ok(self.shot_level) || !ok(self.tech_amplitude) {
            return Err(Error::config("noise amplitudes must be >= 0"));
        }
        if !(self.tech_corner_hz.is_finite() && self.tech_corner_hz > 0.0) {
            return Err(Error::config("technical-noise corner must be > 0"));
        }
        if !(self.tech_exponent.is_finite() && self.tech_exponent > 0.0) {
            return Err(Error::config("technical-noise exponent must be > 0"));
        }
        for s in &self.spikes {
            if !ok(s.height) || !(s.width_hz > 0.0) || !s.center_hz.is_finite() {
                return Err(Error::config(format!("invalid spike {s:?}")));
            }
        }
        Ok(())
    }

    pub fn technical(&self, omega_hz: f64) -> f64 {
        self.tech_amplitude / (1.0 + (omega_hz / self.tech_corner_hz).powf(self.tech_exponent))
    }

    pub fn eval(&self, omega_hz: f64) -> f64 {
        self.shot_level
            + self.technical(omega_hz)
            + self.spikes.iter().map(|s| s.eval(omega_hz)).sum::<f64>()
    }

    fn describe(&self, extra: &mut BTreeMap<String, String>) {
        extra.insert("shot_level".into(), format!("{}", self.shot_level));
        extra.insert("tech_amplitude".into(), format!("{}", self.tech_amplitude));
        extra.insert("tech_corner_hz".into(), format!("{}", self.tech_corner_hz));
        extra.insert("tech_exponent".into(), format!("{}", self.tech_exponent));
        let spikes: Vec<String> = self
            .spikes
            .iter()
            .map(|s| format!("{}:{}:{}", s.center_hz, s.width_hz, s.height))
            .collect();
        extra.insert("spikes".into(), spikes.join(";"));
    }
}

/// Detection-frequency grid of `n` points from `start_hz` to `stop_hz`.
pub fn linear_grid(start_hz: f64, stop_hz: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start_hz];
    }
    let step = (stop_hz - start_hz) / (n - 1) as f64;
    (0..n).map(|i| start_hz + step * i as f64).collect()
}

/// Noise density of the bare input beam, tagged as a reference spectrum.
pub fn synth_input_noise(model: &InputNoiseModel, grid: &[f64]) -> Result<NoiseSpectrum> {
    model.validate()?;
    let psd = grid.iter().map(|&w| model.eval(w)).collect();
    let mut meta = SpectrumMeta::new(SpectrumKind::Reference, "input");
    model.describe(&mut meta.extra);
    NoiseSpectrum::new(grid.to_vec(), psd, meta)
}

/// Parameters of one virtual measurement through a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSynthesis {
    pub t_sn: f64,
    pub t_tn: f64,
    pub shot_level: f64,
    pub thermal_level: f64,
    /// Relative width of the multiplicative measurement jitter.
    pub jitter_rel: f64,
    pub seed: u64,
}

impl SampleSynthesis {
    /// Noiseless measurement of a sample with the given transmissions.
    pub fn exact(t_sn: f64, t_tn: f64) -> Self {
        Self {
            t_sn,
            t_tn,
            shot_level: 1.0,
            thermal_level: 0.0,
            jitter_rel: 0.0,
            seed: 0,
        }
    }
}

/// Mean-one log-normal factors `exp(σ z − σ²/2)`.
fn jitter_factors(n: usize, rel: f64, seed: u64) -> Vec<f64> {
    if rel == 0.0 {
        return vec![1.0; n];
    }
    let mut rng = stats::stream_rng(seed, 0);
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            (rel * z - 0.5 * rel * rel).exp()
        })
        .collect()
}

/// Transmitted noise: the technical excess scales with `t_tn`, the shot
/// floor with `t_sn`, plus an additive detector thermal floor.
pub fn synth_transmitted_spectrum(
    input: &NoiseSpectrum,
    setup: &SampleSynthesis,
) -> Result<NoiseSpectrum> {
    let SampleSynthesis {
        t_sn,
        t_tn,
        shot_level,
        thermal_level,
        jitter_rel,
        seed,
    } = *setup;
    if !(0.0..=1.0).contains(&t_sn) || !(0.0..=1.0).contains(&t_tn) {
        return Err(Error::domain(format!(
            "transmissions must lie in [0, 1], got sn={t_sn} tn={t_tn}"
        )));
    }
    if t_tn > t_sn {
        return Err(Error::domain(format!(
            "technical-noise transmission {t_tn} exceeds shot-noise transmission {t_sn}"
        )));
    }
    if !(thermal_level >= 0.0 && jitter_rel >= 0.0 && shot_level >= 0.0) {
        return Err(Error::domain("levels and jitter must be >= 0"));
    }
    let jitter = jitter_factors(input.len(), jitter_rel, seed);
    let psd = input
        .psd
        .iter()
        .zip(&jitter)
        .map(|(&p, &j)| (t_tn * (p - shot_level) + t_sn * shot_level + thermal_level) * j)
        .map(|p| p.max(0.0))
        .collect();
    let mut meta = input.meta.clone();
    meta.kind = SpectrumKind::Sample;
    meta.seed = seed;
    meta.extra.insert("t_sn".into(), format!("{t_sn}"));
    meta.extra.insert("t_tn".into(), format!("{t_tn}"));
    meta.extra.insert("thermal_level".into(), format!("{thermal_level}"));
    meta.extra.insert("jitter_rel".into(), format!("{jitter_rel}"));
    NoiseSpectrum::new(input.omega_hz.clone(), psd, meta)
}

/// Detector noise recorded with the beam blocked.
pub fn synth_thermal(grid: &[f64], level: f64, jitter_rel: f64, seed: u64) -> Result<NoiseSpectrum> {
    let jitter = jitter_factors(grid.len(), jitter_rel, seed);
    let psd = jitter.iter().map(|j| level * j).collect();
    let mut meta = SpectrumMeta::new(SpectrumKind::Thermal, "thermal");
    meta.seed = seed;
    NoiseSpectrum::new(grid.to_vec(), psd, meta)
}

fn check_compatible(a: &NoiseSpectrum, b: &NoiseSpectrum) -> Result<()> {
    if a.omega_hz != b.omega_hz {
        return Err(Error::GridMismatch(format!(
            "'{}' and '{}' use different frequency grids",
            a.meta.sample_id, b.meta.sample_id
        )));
    }
    if a.meta.rbw_hz != b.meta.rbw_hz || a.meta.vbw_hz != b.meta.vbw_hz {
        return Err(Error::MetadataMismatch(format!(
            "bandwidths differ: rbw {} vs {}, vbw {} vs {}",
            a.meta.rbw_hz, b.meta.rbw_hz, a.meta.vbw_hz, b.meta.vbw_hz
        )));
    }
    Ok(())
}

/// Pointwise `spec − thermal`, clamping negatives to zero.
pub fn subtract_thermal(spec: &NoiseSpectrum, thermal: &NoiseSpectrum) -> Result<NoiseSpectrum> {
    check_compatible(spec, thermal)?;
    let mut clamped = 0;
    let psd = spec
        .psd
        .iter()
        .zip(&thermal.psd)
        .map(|(s, t)| {
            let d = s - t;
            if d < 0.0 {
                clamped += 1;
                0.0
            } else {
                d
            }
        })
        .collect();
    let mut meta = spec.meta.clone();
    meta.clamped_points += clamped;
    NoiseSpectrum::new(spec.omega_hz.clone(), psd, meta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config(format!("invalid interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            lo: self.lo * factor,
            hi: self.hi * factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandPlan {
    pub tn_band: Interval,
    pub sn_band: Interval,
    pub exclusions: Vec<Interval>,
}

impl Default for BandPlan {
    fn default() -> Self {
        Self {
            tn_band: Interval { lo: 0.2e6, hi: 0.9e6 },
            sn_band: Interval { lo: 1.5e6, hi: 3.0e6 },
            exclusions: vec![Interval {
                lo: 1.25e6,
                hi: 1.35e6,
            }],
        }
    }
}

impl BandPlan {
    pub fn new(tn_band: Interval, sn_band: Interval, exclusions: Vec<Interval>) -> Result<Self> {
        let plan = Self {
            tn_band,
            sn_band,
            exclusions,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        for iv in [&self.tn_band, &self.sn_band].into_iter().chain(&self.exclusions) {
            Interval::new(iv.lo, iv.hi)?;
        }
        if self.tn_band.hi > self.sn_band.lo {
            return Err(Error::config(
                "technical-noise band must lie below the shot-noise band",
            ));
        }
        Ok(())
    }

    pub fn is_excluded(&self, omega_hz: f64) -> bool {
        self.exclusions.iter().any(|iv| iv.contains(omega_hz))
    }
}

/// Sample-to-reference ratio per detection frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioSeries {
    pub omega_hz: Vec<f64>,
    pub ratio: Vec<f64>,
    /// Points inside an exclusion window; their ratio is not meaningful
    /// when the reference vanishes there.
    pub excluded: Vec<bool>,
}

/// Pointwise `sample / reference`. Both inputs are expected to be
/// thermal-subtracted already.
pub fn noise_transmission_ratio(
    sample: &NoiseSpectrum,
    reference: &NoiseSpectrum,
    exclusions: &[Interval],
) -> Result<RatioSeries> {
    check_compatible(sample, reference)?;
    let excluded: Vec<bool> = sample
        .omega_hz
        .iter()
        .map(|&w| exclusions.iter().any(|iv| iv.contains(w)))
        .collect();
    let bad: Vec<f64> = reference
        .psd
        .iter()
        .zip(&sample.omega_hz)
        .zip(&excluded)
        .filter(|((r, _), ex)| !**ex && !(**r > 0.0))
        .map(|((_, w), _)| *w)
        .collect();
    if !bad.is_empty() {
        return Err(Error::DivisionDomain { points: bad });
    }
    let ratio = sample
        .psd
        .iter()
        .zip(&reference.psd)
        .map(|(s, r)| if *r > 0.0 { s / r } else { 0.0 })
        .collect();
    Ok(RatioSeries {
        omega_hz: sample.omega_hz.clone(),
        ratio,
        excluded,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEstimates {
    pub t_tn_hat: McEstimate,
    pub t_sn_hat: McEstimate,
}

pub const MIN_BAND_POINTS: usize = 3;

fn band_indices(omega: &[f64], skip: &[bool], band: &Interval, plan: &BandPlan) -> Vec<usize> {
    omega
        .iter()
        .enumerate()
        .filter(|(i, &w)| band.contains(w) && !skip[*i] && !plan.is_excluded(w))
        .map(|(i, _)| i)
        .collect()
}

fn band_mean(
    ratio: &RatioSeries,
    band: &Interval,
    plan: &BandPlan,
    name: &'static str,
) -> Result<McEstimate> {
    let idx = band_indices(&ratio.omega_hz, &ratio.excluded, band, plan);
    if idx.len() < MIN_BAND_POINTS {
        return Err(Error::InsufficientPoints {
            band: name,
            found: idx.len(),
            needed: MIN_BAND_POINTS,
        });
    }
    let values: Vec<f64> = idx.iter().map(|&i| ratio.ratio[i]).collect();
    Ok(McEstimate::from_samples(&values).expect("non-empty band"))
}

/// Mean and standard error of the ratio inside each band.
pub fn band_average(ratio: &RatioSeries, plan: &BandPlan) -> Result<BandEstimates> {
    Ok(BandEstimates {
        t_tn_hat: band_mean(ratio, &plan.tn_band, plan, "tn")?,
        t_sn_hat: band_mean(ratio, &plan.sn_band, plan, "sn")?,
    })
}

/// Upper bound on the bias of the raw technical-band average caused by the
/// transmitted shot floor: `t_sn / min(reference over the band)`, with the
/// reference in units of its shot level.
pub fn tn_contamination_bound(
    t_sn: f64,
    reference: &NoiseSpectrum,
    plan: &BandPlan,
    shot_level: f64,
) -> Result<f64> {
    let skip = vec![false; reference.len()];
    let idx = band_indices(&reference.omega_hz, &skip, &plan.tn_band, plan);
    let min = idx
        .iter()
        .map(|&i| reference.psd[i] / shot_level)
        .fold(f64::INFINITY, f64::min);
    if idx.is_empty() || !(min > 0.0) {
        return Err(Error::InsufficientPoints {
            band: "tn",
            found: idx.len(),
            needed: 1,
        });
    }
    Ok(t_sn / min)
}

/// Technical-noise transmission with the transmitted shot floor removed.
///
/// Per point `(ρ r − t_sn s) / (r − s)` where `ρ` is the ratio, `r` the
/// reference density and `s` the shot level; the points are combined with
/// weights `r − s`, so points with little technical excess count little.
/// Points with `r ≤ s` carry no technical signal and are skipped.
pub fn shot_floor_corrected_tn(
    ratio: &RatioSeries,
    reference: &NoiseSpectrum,
    t_sn: f64,
    plan: &BandPlan,
    shot_level: f64,
) -> Result<McEstimate> {
    if ratio.omega_hz != reference.omega_hz {
        return Err(Error::GridMismatch("ratio and reference grids differ".into()));
    }
    let idx: Vec<usize> = band_indices(&ratio.omega_hz, &ratio.excluded, &plan.tn_band, plan)
        .into_iter()
        .filter(|&i| reference.psd[i] > shot_level)
        .collect();
    if idx.len() < MIN_BAND_POINTS {
        return Err(Error::InsufficientPoints {
            band: "tn",
            found: idx.len(),
            needed: MIN_BAND_POINTS,
        });
    }
    let (mut sw, mut swx) = (0.0, 0.0);
    let mut pts = Vec::with_capacity(idx.len());
    for &i in &idx {
        let r = reference.psd[i];
        let w = r - shot_level;
        let x = (ratio.ratio[i] * r - t_sn * shot_level) / w;
        sw += w;
        swx += w * x;
        pts.push((w, x));
    }
    let value = swx / sw;
    // standard error of a weighted mean with effective sample size
    let sw2: f64 = pts.iter().map(|(w, _)| w * w).sum();
    let n_eff = sw * sw / sw2;
    let var = pts.iter().map(|(w, x)| w * (x - value).powi(2)).sum::<f64>() / sw;
    let stderr = if n_eff > 1.0 {
        (var / (n_eff - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        value,
        stderr,
        n: idx.len(),
    })
}

/// Shot-noise transmission with the transmitted technical excess removed.
///
/// Per point `(ρ r − t_tn (r − s)) / s` over the shot-noise band, averaged
/// with equal weights.
pub fn technical_floor_corrected_sn(
    ratio: &RatioSeries,
    reference: &NoiseSpectrum,
    t_tn: f64,
    plan: &BandPlan,
    shot_level: f64,
) -> Result<McEstimate> {
    if ratio.omega_hz != reference.omega_hz {
        return Err(Error::GridMismatch("ratio and reference grids differ".into()));
    }
    if !(shot_level > 0.0) {
        return Err(Error::domain(format!("shot level must be > 0, got {shot_level}")));
    }
    let idx = band_indices(&ratio.omega_hz, &ratio.excluded, &plan.sn_band, plan);
    if idx.len() < MIN_BAND_POINTS {
        return Err(Error::InsufficientPoints {
            band: "sn",
            found: idx.len(),
            needed: MIN_BAND_POINTS,
        });
    }
    let values: Vec<f64> = idx
        .iter()
        .map(|&i| {
            let r = reference.psd[i];
            (ratio.ratio[i] * r - t_tn * (r - shot_level)) / shot_level
        })
        .collect();
    Ok(McEstimate::from_samples(&values).expect("non-empty band"))
}

/// Both transmissions with the cross contamination between the bands
/// removed. Each corrected estimator is linear in the other transmission,
/// so the pair is solved in closed form.
pub fn corrected_bands(
    ratio: &RatioSeries,
    reference: &NoiseSpectrum,
    plan: &BandPlan,
    shot_level: f64,
) -> Result<BandEstimates> {
    let sn = |t_tn| technical_floor_corrected_sn(ratio, reference, t_tn, plan, shot_level);
    let tn = |t_sn| shot_floor_corrected_tn(ratio, reference, t_sn, plan, shot_level);
    // t_sn = a - b t_tn, t_tn = c - e t_sn
    let a = sn(0.0)?.value;
    let b = a - sn(1.0)?.value;
    let c = tn(0.0)?.value;
    let e = c - tn(1.0)?.value;
    let det = 1.0 - b * e;
    if !(det.abs() > 1e-12) {
        return Err(Error::SingularDesign(
            "technical and shot-noise bands cannot be separated".into(),
        ));
    }
    let t_sn = (a - b * c) / det;
    let t_tn = c - e * t_sn;
    Ok(BandEstimates {
        t_tn_hat: tn(t_sn)?,
        t_sn_hat: sn(t_tn)?,
    })
}

/// Everything the total-transmission reduction yields for one sample
/// spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    /// Raw band averages of the sample/reference ratio.
    pub t_sn_hat: McEstimate,
    pub t_tn_hat: McEstimate,
    /// Band estimates with the cross contamination removed.
    pub t_sn_corrected: McEstimate,
    pub t_tn_corrected: McEstimate,
    pub tn_bias_bound: f64,
    pub clamped_points: usize,
}

/// Thermal subtraction, reference normalization, band averaging and the
/// shot-floor correction in one pass.
pub fn reduce_measurement(
    sample: &NoiseSpectrum,
    reference: &NoiseSpectrum,
    thermal: &NoiseSpectrum,
    plan: &BandPlan,
    shot_level: f64,
) -> Result<Reduction> {
    let sample = subtract_thermal(sample, thermal)?;
    let reference = subtract_thermal(reference, thermal)?;
    let ratio = noise_transmission_ratio(&sample, &reference, &plan.exclusions)?;
    let bands = band_average(&ratio, plan)?;
    let corrected = corrected_bands(&ratio, &reference, plan, shot_level)?;
    Ok(Reduction {
        t_sn_hat: bands.t_sn_hat,
        t_tn_hat: bands.t_tn_hat,
        t_sn_corrected: corrected.t_sn_hat,
        t_tn_corrected: corrected.t_tn_hat,
        tn_bias_bound: tn_contamination_bound(bands.t_sn_hat.value, &reference, plan, shot_level)?,
        clamped_points: sample.meta.clamped_points + reference.meta.clamped_points,
    })
}
