//! Self-verification suite: Monte Carlo and synthetic round trips checked
//! against the closed-form model.
//!
//! Every check reduces to one statistic compared with a bound; the check
//! passes when `statistic < bound × tolerance_scale`. A scale of zero makes
//! every check fail.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::detection::{
    self, BandPlan, InputNoiseModel, SampleSynthesis, Spike,
};
use crate::ensemble::{self, EnsembleConfig};
use crate::error::{Error, Result};
use crate::experiment::{self, ScanSetup};
use crate::inference::{
    fit_correlation, fit_total, CorrelationPoint, CorrelationSeries, ThicknessPoint,
    ThicknessSeries,
};
use crate::model::{self, ContrastModel, Geometry, MediumParams, NoiseKind};
use crate::stats::{self, McEstimate};

pub const CHECKS: [&str; 10] = [
    "analytic",
    "f-eta",
    "static-mc",
    "dynamic-mc",
    "thickness-fit",
    "scan-fit",
    "shot-robustness",
    "pipeline",
    "calibration",
    "determinism",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub statistic: f64,
    pub bound: f64,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub tolerance_scale: f64,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    /// One aligned line per check.
    pub fn summary_lines(&self) -> Vec<String> {
        self.checks
            .iter()
            .map(|c| {
                format!(
                    "{:<16} {:>12.4e} < {:>10.4e}  {}  {}",
                    c.name,
                    c.statistic,
                    c.bound,
                    if c.passed { "PASS" } else { "FAIL" },
                    c.detail
                )
            })
            .collect()
    }
}

/// Statistic, unscaled bound and a short description.
struct Outcome(f64, f64, String);

/// Run the named checks (all when `only` is empty) in their fixed order.
pub fn run_verify(seed: u64, tolerance_scale: f64, only: &[String]) -> Result<VerifyReport> {
    if !(tolerance_scale.is_finite() && tolerance_scale >= 0.0) {
        return Err(Error::config(format!(
            "tolerance scale must be >= 0, got {tolerance_scale}"
        )));
    }
    if let Some(bad) = only.iter().find(|n| !CHECKS.contains(&n.as_str())) {
        return Err(Error::config(format!(
            "unknown check '{bad}'; known checks: {}",
            CHECKS.join(", ")
        )));
    }
    let mut checks = Vec::new();
    for (k, name) in CHECKS.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|n| n == name) {
            continue;
        }
        let s = check_seed(seed, k);
        let Outcome(statistic, bound, detail) = match *name {
            "analytic" => analytic()?,
            "f-eta" => f_eta_reference()?,
            "static-mc" => static_mc(s)?,
            "dynamic-mc" => dynamic_mc(s)?,
            "thickness-fit" => thickness_fit(s)?,
            "scan-fit" => scan_fit(s)?,
            "shot-robustness" => shot_robustness(s)?,
            "pipeline" => pipeline()?,
            "calibration" => calibration(s)?,
            "determinism" => determinism(s)?,
            _ => unreachable!("names validated above"),
        };
        let bound = bound * tolerance_scale;
        checks.push(CheckResult {
            name: name.to_string(),
            statistic,
            bound,
            passed: statistic < bound,
            detail,
        });
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        tolerance_scale,
        checks,
        passed,
    })
}

fn check_seed(seed: u64, k: usize) -> u64 {
    seed ^ ((k as u64 + 1) << 48)
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

/// η grid of 50 points spanning 1e-3 to 1e3.
pub fn eta_grid() -> Vec<f64> {
    (0..50).map(|k| 10f64.powf(-3.0 + 6.0 * k as f64 / 49.0)).collect()
}

fn analytic() -> Result<Outcome> {
    let full = ContrastModel::full();
    let mut worst: f64 = rel(model::f_eta(0.0)?, 1.0);
    worst = worst.max(rel(model::corr_tech(0.0, full)?, 5.0));
    let (l_eff, d) = (18e-6, 34.0);
    for (k, &eta) in eta_grid().iter().enumerate() {
        let dw = eta * d / (2.0 * l_eff * l_eff);
        let eta = model::eta_of(dw, l_eff, d)?;
        let g = model::field_covariance(dw, l_eff, d)?;
        worst = worst.max(rel(g.norm_sqr(), model::f_eta(eta)?));
        let medium = MediumParams::new(1e-6, d)?;
        let geom = Geometry::new(1e-6 * (1.0 + k as f64), 0.3e-6, 0.7e-6)?;
        let sn = model::total_trans_shot(&medium, &geom).value;
        let tn = model::total_trans_tech(&medium, &geom).value;
        worst = worst.max(rel(tn, sn * sn));
    }
    Ok(Outcome(worst, 1e-12, "max relative error of the model identities".into()))
}

/// Reference values computed with 30-digit arithmetic.
const F_ETA_REFERENCE: [(f64, f64); 5] = [
    (1e-3, 0.999_999_997_222_222_229_39),
    (0.5, 0.999_306_003_074_763_372_94),
    (4.0, 0.957_317_398_836_639_038_89),
    (100.0, 0.009_079_294_204_357_108_423_4),
    (1000.0, 3.693_453_324_819_519_708_9e-11),
];

fn f_eta_reference() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (eta, f) in F_ETA_REFERENCE {
        worst = worst.max(rel(model::f_eta(eta)?, f));
    }
    worst = worst.max(rel(
        model::corr_tech(4.0, ContrastModel::full())?,
        4.745_726_197_461_904_775_8,
    ));
    Ok(Outcome(worst, 1e-12, "max relative error against reference values".into()))
}

/// Static ensemble with `ℓ / L_eff = 0.1`, 512 channels, 1000 realizations.
pub fn static_ensemble(seed: u64) -> Result<(EnsembleConfig, MediumParams, Geometry)> {
    Ok((
        EnsembleConfig::channels(512, 1000, seed)?,
        MediumParams::new(1e-6, 34.0)?,
        Geometry::bare(10e-6)?,
    ))
}

fn static_mc(seed: u64) -> Result<Outcome> {
    let (cfg, medium, geom) = static_ensemble(seed)?;
    let t = ensemble::mean_channel_transmission(&cfg, &medium, &geom);
    let samples = ensemble::sample_channel_transmissions(&cfg, t)?;
    let sn = ensemble::total_noise_from_channels(&samples, NoiseKind::ShotNoise)?;
    let tn = ensemble::total_noise_from_channels(&samples, NoiseKind::TechnicalNoise)?;
    let z_sn = sn.z_score(0.1);
    let z_tn = tn.z_score(0.01 * (1.0 + 2.0 / 512.0));
    Ok(Outcome(
        z_sn.abs().max(z_tn.abs()),
        3.0,
        format!("|z| of totals: sn {:.2}, tn {:.2}", z_sn, z_tn),
    ))
}

/// Correlated-frequency ensemble: 64 frequencies spanning η ∈ [0, 60].
pub fn dynamic_ensemble(seed: u64, n_realizations: usize) -> Result<(EnsembleConfig, MediumParams, Geometry)> {
    let (l, d) = (18e-6, 34.0);
    let step = 60.0 / 63.0 * d / (2.0 * l * l);
    let grid = EnsembleConfig::uniform_grid(0.0, step, 64);
    Ok((
        EnsembleConfig::new(1, n_realizations, seed, grid)?,
        MediumParams::new(1e-6, d)?,
        Geometry::bare(l)?,
    ))
}

/// Empirical shot- and technical-noise correlations at every lag of the
/// ensemble grid together with `η` per lag.
pub fn dynamic_correlations(
    cfg: &EnsembleConfig,
    medium: &MediumParams,
    geom: &Geometry,
) -> Result<(Vec<f64>, Vec<McEstimate>, Vec<McEstimate>)> {
    // spot transmission 1e-4 keeps every sampled transmission below one
    let speckle = ensemble::sample_frequency_speckle(cfg, medium, geom, 1.0)?;
    let sn = ensemble::noise_power_series(&speckle, NoiseKind::ShotNoise, 1.0, 1.0, 1e4)?;
    let tn = ensemble::noise_power_series(&speckle, NoiseKind::TechnicalNoise, 1.0, 1.0, 1e4)?;
    let grid = cfg.omega_grid();
    let lags: Vec<f64> = grid.iter().map(|w| w - grid[0]).collect();
    let etas = lags
        .iter()
        .map(|&dw| model::eta_of(dw, geom.effective_thickness(), medium.diffusivity()))
        .collect::<Result<Vec<_>>>()?;
    Ok((
        etas,
        ensemble::empirical_noise_correlation(&sn, &lags)?,
        ensemble::empirical_noise_correlation(&tn, &lags)?,
    ))
}

fn dynamic_mc(seed: u64) -> Result<Outcome> {
    let (cfg, medium, geom) = dynamic_ensemble(seed, 10_000)?;
    let (etas, sn, tn) = dynamic_correlations(&cfg, &medium, &geom)?;
    let mut worst: f64 = 0.0;
    for (i, &eta) in etas.iter().enumerate() {
        let f = model::f_eta(eta)?;
        worst = worst.max((sn[i].value - f).abs() / (3.0 * sn[i].stderr).max(0.02));
        worst = worst.max((tn[i].value - (f * f + 4.0 * f)).abs() / (3.0 * tn[i].stderr).max(0.15));
    }
    Ok(Outcome(
        worst,
        1.0,
        "max |C - model| / max(3 stderr, abs. tolerance) over lags".into(),
    ))
}

/// Thicknesses of the synthetic series, micrometres.
pub const SYNTH_THICKNESSES_UM: [f64; 8] = [5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0];

/// Synthetic thickness series with multiplicative Gaussian noise of
/// relative width `noise` and matching reported standard errors.
pub fn synthetic_thickness_series(
    kind: NoiseKind,
    ell_m: f64,
    z0_m: f64,
    noise: f64,
    seed: u64,
) -> Result<ThicknessSeries> {
    let mut rng = stats::stream_rng(seed, kind as u64);
    let points = SYNTH_THICKNESSES_UM
        .iter()
        .map(|&l_um| {
            let l = l_um * 1e-6;
            let t_sn = ell_m / (l + z0_m);
            let t = match kind {
                NoiseKind::ShotNoise => t_sn,
                NoiseKind::TechnicalNoise => t_sn * t_sn,
            };
            let z: f64 = rng.sample(StandardNormal);
            ThicknessPoint {
                l_m: l,
                t_hat: t * (1.0 + noise * z),
                stderr: t * noise,
            }
        })
        .collect();
    ThicknessSeries::new(points)
}

fn thickness_fit(seed: u64) -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for (kind, ell, bar) in [
        (NoiseKind::ShotNoise, 1.19e-6, 0.33e-6),
        (NoiseKind::TechnicalNoise, 1.03e-6, 0.09e-6),
    ] {
        let series = synthetic_thickness_series(kind, ell, 2e-6, 0.05, seed)?;
        let r = fit_total(&series, kind)?;
        let err = (r.param("ell_m") - ell).abs();
        let sigma = r.param_stderr("ell_m");
        worst = worst.max(err / bar).max(err / (2.0 * sigma));
        detail.push(format!(
            "{}: ell {:.3} +- {:.3} um",
            kind.label(),
            r.param("ell_m") * 1e6,
            sigma * 1e6
        ));
    }
    Ok(Outcome(
        worst,
        1.0,
        format!("max(|d ell| / error bar, |d ell| / 2 stderr); {}", detail.join(", ")),
    ))
}

/// Relative deviations of the fitted diffusion constant for a 200-step,
/// 0.5 THz scan at L = 18 um with D = 34 m²/s, averaged over `n_scans`
/// independent spots.
pub fn scan_fit_errors(seed: u64, n_scans: usize) -> Result<[(NoiseKind, f64, f64); 2]> {
    let medium = MediumParams::new(1e-6, 34.0)?;
    let geom = Geometry::bare(18e-6)?;
    let setup = ScanSetup {
        n_scans,
        seed,
        ..ScanSetup::lab_default(medium, geom)
    };
    let data = experiment::simulate_scan(&setup)?;
    let mut out = [(NoiseKind::ShotNoise, 0.0, 0.0); 2];
    for (slot, (kind, powers)) in out
        .iter_mut()
        .zip([(NoiseKind::ShotNoise, &data.sn), (NoiseKind::TechnicalNoise, &data.tn)])
    {
        let series = experiment::correlation_from_powers(powers, geom.effective_thickness(), 20)?;
        let r = fit_correlation(&series, kind)?;
        *slot = (kind, r.param("D_m2_s"), r.param_stderr("D_m2_s"));
    }
    Ok(out)
}

fn scan_fit(seed: u64) -> Result<Outcome> {
    let fits = scan_fit_errors(seed, 400)?;
    let worst = fits.iter().map(|(_, d, _)| rel(*d, 34.0)).fold(0.0, f64::max);
    let detail = fits
        .iter()
        .map(|(k, d, s)| format!("{}: D {:.2} +- {:.2}", k.label(), d, s))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(Outcome(worst, 0.15, format!("max |D/34 - 1|; {detail}")))
}

/// Ratio of the recovered shot-noise transmission to the true one for every
/// realization of the static ensemble, through the full detection chain
/// (jittered spectra, thermal floor and its subtraction).
pub fn shot_noise_ratios(seed: u64) -> Result<Vec<f64>> {
    let (cfg, medium, geom) = static_ensemble(seed)?;
    let totals = ensemble::sample_total_transmissions(&cfg, &medium, &geom)?;
    let input = InputNoiseModel::default();
    let grid = detection::linear_grid(0.1e6, 3.2e6, 311);
    let beam = detection::synth_input_noise(&input, &grid)?;
    // a well-averaged reference: thermal floor included, no jitter
    let reference = detection::synth_transmitted_spectrum(
        &beam,
        &SampleSynthesis {
            thermal_level: 0.5,
            shot_level: input.shot_level,
            ..SampleSynthesis::exact(1.0, 1.0)
        },
    )?;
    let plan = BandPlan::default();
    totals
        .iter()
        .enumerate()
        .map(|(r, &(t_sn, t_tn))| {
            let s = seed ^ ((r as u64 + 1) << 24);
            let setup = SampleSynthesis {
                t_sn,
                t_tn,
                shot_level: input.shot_level,
                thermal_level: 0.5,
                jitter_rel: 0.02,
                seed: s,
            };
            let sample = detection::synth_transmitted_spectrum(&beam, &setup)?;
            let thermal = detection::synth_thermal(&grid, 0.5, 0.02, s ^ 1)?;
            let red = detection::reduce_measurement(&sample, &reference, &thermal, &plan, input.shot_level)?;
            Ok(red.t_sn_corrected.value / t_sn)
        })
        .collect()
}

fn shot_robustness(seed: u64) -> Result<Outcome> {
    let q = McEstimate::from_samples(&shot_noise_ratios(seed)?).expect("non-empty");
    let z = q.z_score(1.0);
    Ok(Outcome(
        z.abs(),
        3.0,
        format!("output/input shot-noise ratio {:.6} +- {:.1e}", q.value, q.stderr),
    ))
}

/// Worst normalized violation of the noiseless detection round trip: exact
/// shot-noise recovery, raw technical estimate within its bias bound, and
/// invariance under spikes inside the exclusion window.
pub fn pipeline_violation() -> Result<f64> {
    let grid = detection::linear_grid(0.1e6, 3.2e6, 311);
    let base = InputNoiseModel::default();
    let plan = BandPlan::default();
    let zero = detection::synth_thermal(&grid, 0.0, 0.0, 0)?;
    let medium = MediumParams::new(1e-6, 34.0)?;
    let mut worst: f64 = 0.0;
    for l_um in [5.0, 10.0, 15.0, 20.0] {
        let geom = Geometry::bare(l_um * 1e-6)?;
        let t_sn = model::total_trans_shot(&medium, &geom).value;
        let t_tn = model::total_trans_tech(&medium, &geom).value;
        let reduce = |input: &InputNoiseModel| -> Result<detection::Reduction> {
            let reference = detection::synth_input_noise(input, &grid)?;
            let sample = detection::synth_transmitted_spectrum(&reference, &SampleSynthesis::exact(t_sn, t_tn))?;
            detection::reduce_measurement(&sample, &reference, &zero, &plan, input.shot_level)
        };
        let clean = reduce(&base)?;
        worst = worst.max(rel(clean.t_sn_corrected.value, t_sn) / 1e-12);
        worst = worst.max(rel(clean.t_tn_corrected.value, t_tn) / 1e-12);
        let excess = clean.t_tn_hat.value - t_tn;
        if excess < 0.0 {
            worst = worst.max(1.0 + excess.abs() / clean.tn_bias_bound);
        } else {
            worst = worst.max(excess / clean.tn_bias_bound);
        }
        for height in [50.0, 5e3] {
            let spiky = InputNoiseModel {
                spikes: vec![
                    Spike {
                        center_hz: 1.3e6,
                        width_hz: 8e3,
                        height,
                    },
                    Spike {
                        center_hz: 1.31e6,
                        width_hz: 3e3,
                        height: height / 2.0,
                    },
                ],
                ..base.clone()
            };
            let r = reduce(&spiky)?;
            for (a, b) in [
                (r.t_sn_hat.value, clean.t_sn_hat.value),
                (r.t_tn_hat.value, clean.t_tn_hat.value),
                (r.t_sn_corrected.value, clean.t_sn_corrected.value),
                (r.t_tn_corrected.value, clean.t_tn_corrected.value),
            ] {
                worst = worst.max(rel(a, b) / 1e-12);
            }
        }
    }
    Ok(worst)
}

fn pipeline() -> Result<Outcome> {
    Ok(Outcome(
        pipeline_violation()?,
        1.0,
        "worst normalized round-trip violation".into(),
    ))
}

/// Lag step of the calibration datasets: 1.5 in η.
fn calibration_series(seed: u64, index: usize, kappa: f64, noise: f64) -> Result<CorrelationSeries> {
    let (l, d) = (18e-6, 34.0);
    let step = 1.5 * d / (2.0 * l * l);
    let mut rng = stats::stream_rng(seed, index as u64);
    let points = (0..20)
        .map(|k| {
            let dw = step * k as f64;
            let f = model::f_eta_unchecked(2.0 * l * l * dw / d);
            let z: f64 = rng.sample(StandardNormal);
            CorrelationPoint {
                delta_omega_rad_s: dw,
                c_hat: kappa * f + noise * z,
                stderr: noise,
            }
        })
        .collect();
    CorrelationSeries::new(points, l)
}

/// Fraction of `n` noisy synthetic correlation datasets whose fitted
/// `D ± stderr` covers the true value, and the number of failed fits.
pub fn calibration_coverage(seed: u64, n: usize) -> Result<(f64, usize)> {
    use rayon::prelude::*;
    let hits: Vec<Option<bool>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let series = calibration_series(seed, i, 0.9, 0.02).ok()?;
            let r = fit_correlation(&series, NoiseKind::ShotNoise).ok()?;
            Some((r.param("D_m2_s") - 34.0).abs() <= r.param_stderr("D_m2_s"))
        })
        .collect();
    let failed = hits.iter().filter(|h| h.is_none()).count();
    let covered = hits.iter().filter(|h| **h == Some(true)).count();
    Ok((covered as f64 / n as f64, failed))
}

fn calibration(seed: u64) -> Result<Outcome> {
    let (coverage, failed) = calibration_coverage(seed, 200)?;
    Ok(Outcome(
        (coverage - 0.68).abs(),
        0.08,
        format!("1-sigma coverage of D {:.3} (target [0.60, 0.76]), {failed} failed fits", coverage),
    ))
}

fn determinism(seed: u64) -> Result<Outcome> {
    let run = |threads: usize| -> Result<Vec<f64>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))?;
        pool.install(|| {
            let (cfg, medium, geom) = dynamic_ensemble(seed, 500)?;
            let (_, sn, tn) = dynamic_correlations(&cfg, &medium, &geom)?;
            let (cfg, medium, geom) = static_ensemble(seed)?;
            let t = ensemble::mc_total_noise_transmission(&cfg, &medium, &geom, NoiseKind::TechnicalNoise)?;
            let (cov, _) = calibration_coverage(seed, 20)?;
            let mut out: Vec<f64> = sn.iter().chain(&tn).flat_map(|e| [e.value, e.stderr]).collect();
            out.extend([t.value, t.stderr, cov]);
            Ok(out)
        })
    };
    let one = run(1)?;
    let four = run(4)?;
    let differing = one
        .iter()
        .zip(&four)
        .filter(|(a, b)| a.to_bits() != b.to_bits())
        .count()
        + one.len().abs_diff(four.len());
    Ok(Outcome(
        differing as f64,
        1.0,
        format!("values differing between 1 and 4 threads (of {})", one.len()),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_checks_pass_and_zero_scale_fails() {
        let only: Vec<String> = ["analytic", "f-eta", "pipeline"].map(String::from).to_vec();
        let r = run_verify(0, 1.0, &only).unwrap();
        assert!(r.passed, "{:#?}", r.checks);
        assert_eq!(r.checks.len(), 3);
        let r = run_verify(0, 0.0, &only).unwrap();
        assert!(r.checks.iter().all(|c| !c.passed));
    }

    #[test]
    fn unknown_check_is_rejected() {
        assert!(run_verify(0, 1.0, &["nope".to_string()]).is_err());
    }
}
