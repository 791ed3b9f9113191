//! Monte Carlo speckle ensembles.
//!
//! Transmitted fields are modelled as circular complex Gaussian variables.
//! Two ensembles are provided: independent output channels for the static
//! (total transmission) measurement, and frequency-correlated fields in a
//! single speckle spot for the frequency-scan measurement. Realizations are
//! independent work units run on rayon; each draws from its own counter-based
//! stream and results are reduced in realization order, so every number is
//! independent of the worker count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{self, Geometry, MediumParams, NoiseKind};
use crate::stats::{self, McEstimate};

/// Negative eigenvalues below `-PSD_TOLERANCE * trace` are treated as a
/// modelling error rather than round-off.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    n_channels: usize,
    n_realizations: usize,
    seed: u64,
    omega_grid: Vec<f64>,
}

impl EnsembleConfig {
    /// `omega_grid` holds optical frequencies in rad/s and must be
    /// non-decreasing; repeated frequencies are allowed and yield perfectly
    /// correlated fields.
    pub fn new(
        n_channels: usize,
        n_realizations: usize,
        seed: u64,
        omega_grid: Vec<f64>,
    ) -> Result<Self> {
        if n_channels == 0 {
            return Err(Error::config("n_channels must be >= 1"));
        }
        if n_realizations == 0 {
            return Err(Error::config("n_realizations must be >= 1"));
        }
        if omega_grid.iter().any(|w| !w.is_finite()) {
            return Err(Error::config("omega grid contains non-finite values"));
        }
        if omega_grid.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::config("omega grid must be non-decreasing"));
        }
        Ok(Self {
            n_channels,
            n_realizations,
            seed,
            omega_grid,
        })
    }

    /// Configuration for the static measurement (no frequency grid).
    pub fn channels(n_channels: usize, n_realizations: usize, seed: u64) -> Result<Self> {
        Self::new(n_channels, n_realizations, seed, Vec::new())
    }

    /// `n` equally spaced optical frequencies starting at `start` (rad/s).
    pub fn uniform_grid(start: f64, step: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| start + step * i as f64).collect()
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_realizations(&self) -> usize {
        self.n_realizations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn omega_grid(&self) -> &[f64] {
        &self.omega_grid
    }
}

/// Unit circular complex Gaussian: `E|z|² = 1`, independent re/im parts.
fn circular_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Channel transmissions `T_ab = |t_ab|²` per realization (outer index) and
/// output channel (inner index). Each `t_ab` is circular Gaussian with
/// `E|t_ab|² = mean_t_channel`, so each `T_ab` is exponential.
pub fn sample_channel_transmissions(
    cfg: &EnsembleConfig,
    mean_t_channel: f64,
) -> Result<Vec<Vec<f64>>> {
    if !(mean_t_channel.is_finite() && mean_t_channel > 0.0) {
        return Err(Error::config(format!(
            "mean channel transmission must be > 0, got {mean_t_channel}"
        )));
    }
    let total = mean_t_channel * cfg.n_channels as f64;
    if total > 1.0 {
        return Err(Error::config(format!(
            "mean total transmission {total} exceeds 1"
        )));
    }
    let amplitude = mean_t_channel.sqrt();
    Ok((0..cfg.n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = stats::stream_rng(cfg.seed, r as u64);
            (0..cfg.n_channels)
                .map(|_| (amplitude * circular_gaussian(&mut rng)).norm_sqr())
                .collect()
        })
        .collect())
}

/// Total noise transmission of one realization: `Σ_b T_ab` for shot noise,
/// `(Σ_b T_ab)²` for technical noise.
pub fn realization_total(channels: &[f64], kind: NoiseKind) -> f64 {
    let sum: f64 = channels.iter().sum();
    match kind {
        NoiseKind::ShotNoise => sum,
        NoiseKind::TechnicalNoise => sum * sum,
    }
}

/// Disorder average of the total noise transmission over given channel
/// samples.
pub fn total_noise_from_channels(samples: &[Vec<f64>], kind: NoiseKind) -> Result<McEstimate> {
    let totals: Vec<f64> = samples.iter().map(|c| realization_total(c, kind)).collect();
    McEstimate::from_samples(&totals)
        .ok_or_else(|| Error::config("no realizations to average"))
}

/// Mean channel transmission that makes the ensemble reproduce `ℓ / L_eff`.
pub fn mean_channel_transmission(
    cfg: &EnsembleConfig,
    medium: &MediumParams,
    geom: &Geometry,
) -> f64 {
    model::total_trans_shot(medium, geom).value / cfg.n_channels as f64
}

pub fn mc_total_noise_transmission(
    cfg: &EnsembleConfig,
    medium: &MediumParams,
    geom: &Geometry,
    kind: NoiseKind,
) -> Result<McEstimate> {
    let t = mean_channel_transmission(cfg, medium, geom);
    let samples = sample_channel_transmissions(cfg, t)?;
    total_noise_from_channels(&samples, kind)
}

/// Per-realization `(Σ T, (Σ T)²)` pairs, e.g. for successive sample
/// positions in a virtual measurement.
pub fn sample_total_transmissions(
    cfg: &EnsembleConfig,
    medium: &MediumParams,
    geom: &Geometry,
) -> Result<Vec<(f64, f64)>> {
    let t = mean_channel_transmission(cfg, medium, geom);
    let samples = sample_channel_transmissions(cfg, t)?;
    Ok(samples
        .iter()
        .map(|c| {
            let sn = realization_total(c, NoiseKind::ShotNoise);
            (sn, sn * sn)
        })
        .collect())
}

/// Expected disorder average of the technical-noise total for `n_channels`
/// independent exponential channels with total mean `t_total`:
/// `t_total² (1 + 1/N)`.
pub fn expected_technical_total(t_total: f64, n_channels: usize) -> f64 {
    t_total * t_total * (1.0 + 1.0 / n_channels as f64)
}

/// Frequency-resolved fields in one speckle spot.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleSeries {
    pub omega_grid: Vec<f64>,
    /// `fields[realization][grid point]`
    pub fields: Vec<Vec<Complex64>>,
    pub mean_intensity: f64,
}

impl SpeckleSeries {
    pub fn n_realizations(&self) -> usize {
        self.fields.len()
    }

    pub fn intensities(&self) -> Vec<Vec<f64>> {
        self.fields
            .iter()
            .map(|row| row.iter().map(|e| e.norm_sqr()).collect())
            .collect()
    }

    /// Sample covariance `⟨E_i E_j*⟩` over realizations.
    pub fn empirical_covariance(&self) -> DMatrix<Complex64> {
        let n = self.omega_grid.len();
        let mut acc = DMatrix::<Complex64>::zeros(n, n);
        for row in &self.fields {
            for i in 0..n {
                for j in 0..n {
                    acc[(i, j)] += row[i] * row[j].conj();
                }
            }
        }
        acc / Complex64::new(self.fields.len() as f64, 0.0)
    }
}

/// Target field covariance `Σ_ij = I g(ω_i − ω_j)`.
pub fn speckle_covariance(
    omega_grid: &[f64],
    l_eff: f64,
    diffusivity: f64,
    mean_intensity: f64,
) -> Result<DMatrix<Complex64>> {
    let n = omega_grid.len();
    let mut sigma = DMatrix::<Complex64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let g = model::field_covariance(omega_grid[i] - omega_grid[j], l_eff, diffusivity)?;
            sigma[(i, j)] = g * mean_intensity;
        }
    }
    Ok(sigma)
}

/// Factor `A` with `A A† = Σ` from the eigendecomposition of a Hermitian
/// matrix. Eigenvalues in `[-PSD_TOLERANCE·tr Σ, 0)` are clamped to zero.
pub fn hermitian_factor(sigma: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(Error::Shape(format!("covariance is {}x{}", n, sigma.ncols())));
    }
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let trace: f64 = (0..n).map(|i| sigma[(i, i)].re).sum();
    let eig = sigma.clone().symmetric_eigen();
    let min_eigenvalue = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let tolerance = PSD_TOLERANCE * trace.abs();
    if min_eigenvalue < -tolerance {
        return Err(Error::NotPositiveSemidefinite {
            min_eigenvalue,
            tolerance,
        });
    }
    let mut factor = eig.eigenvectors;
    for (k, lambda) in eig.eigenvalues.iter().enumerate() {
        let scale = lambda.max(0.0).sqrt();
        factor.column_mut(k).scale_mut(scale);
    }
    Ok(factor)
}

/// Correlated circular Gaussian fields over the configured frequency grid.
pub fn sample_frequency_speckle(
    cfg: &EnsembleConfig,
    medium: &MediumParams,
    geom: &Geometry,
    mean_intensity: f64,
) -> Result<SpeckleSeries> {
    if cfg.omega_grid.is_empty() {
        return Err(Error::config("frequency grid is empty"));
    }
    if !(mean_intensity.is_finite() && mean_intensity > 0.0) {
        return Err(Error::config(format!(
            "mean intensity must be > 0, got {mean_intensity}"
        )));
    }
    let sigma = speckle_covariance(
        &cfg.omega_grid,
        geom.effective_thickness(),
        medium.diffusivity(),
        mean_intensity,
    )?;
    let factor = hermitian_factor(&sigma)?;
    let n = cfg.omega_grid.len();
    let fields = (0..cfg.n_realizations)
        .into_par_iter()
        .map(|r| {
            let mut rng = stats::stream_rng(cfg.seed, r as u64);
            let z: Vec<Complex64> = (0..n).map(|_| circular_gaussian(&mut rng)).collect();
            (0..n)
                .map(|i| (0..n).map(|k| factor[(i, k)] * z[k]).sum())
                .collect()
        })
        .collect();
    Ok(SpeckleSeries {
        omega_grid: cfg.omega_grid.clone(),
        fields,
        mean_intensity,
    })
}

/// Noise power per grid point and realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePowerSeries {
    pub omega_grid: Vec<f64>,
    /// `power[realization][grid point]`
    pub power: Vec<Vec<f64>>,
}

fn spot_transmissions(series: &SpeckleSeries, reference: f64) -> Result<Vec<Vec<f64>>> {
    if !(reference.is_finite() && reference > 0.0) {
        return Err(Error::domain(format!("reference must be > 0, got {reference}")));
    }
    for row in &series.fields {
        if row.len() != series.omega_grid.len() {
            return Err(Error::Shape(format!(
                "realization has {} points, grid has {}",
                row.len(),
                series.omega_grid.len()
            )));
        }
    }
    Ok(series
        .fields
        .iter()
        .map(|row| row.iter().map(|e| e.norm_sqr() / reference).collect())
        .collect())
}

fn map_transmissions(
    series: &SpeckleSeries,
    reference: f64,
    s_in: f64,
    s_v: f64,
) -> Result<NoisePowerSeries> {
    let t = spot_transmissions(series, reference)?;
    let power = t
        .into_iter()
        .map(|row| {
            row.into_iter()
                .map(|t| model::channel_noise_psd(t, s_in, s_v))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NoisePowerSeries {
        omega_grid: series.omega_grid.clone(),
        power,
    })
}

/// Pure shot-noise (`s_in = s_v`) or pure technical-noise (`s_v = 0`) power
/// in the spot, with spot transmission `T = |E|² / reference`. For shot noise
/// the level is `s_v`, for technical noise `s_in`.
pub fn noise_power_series(
    series: &SpeckleSeries,
    kind: NoiseKind,
    s_in: f64,
    s_v: f64,
    reference: f64,
) -> Result<NoisePowerSeries> {
    match kind {
        NoiseKind::ShotNoise => map_transmissions(series, reference, s_v, s_v),
        NoiseKind::TechnicalNoise => map_transmissions(series, reference, s_in, 0.0),
    }
}

/// Output noise for arbitrary input and vacuum densities.
pub fn mixed_noise_power(
    series: &SpeckleSeries,
    s_in: f64,
    s_v: f64,
    reference: f64,
) -> Result<NoisePowerSeries> {
    map_transmissions(series, reference, s_in, s_v)
}

/// Spacing of a uniform, strictly increasing grid.
pub(crate) fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::config("correlation needs at least 2 grid points"));
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::config("grid must be strictly increasing"));
    }
    for w in grid.windows(2) {
        if ((w[1] - w[0]) - step).abs() > 1e-6 * step {
            return Err(Error::config("correlation requires a uniform grid"));
        }
    }
    Ok(step)
}

/// Noise auto-correlation `(⟨N_ω N_ω+Δω⟩ − ⟨N⟩²) / ⟨N⟩²` at each requested
/// lag (rad/s, multiples of the grid step), averaging over all frequency
/// pairs and realizations with the global mean.
///
/// With several realizations the standard error is the delta-method error
/// over realizations. For a single realization the pair products are
/// treated as independent, which understates the error for correlated data.
pub fn empirical_noise_correlation(
    series: &NoisePowerSeries,
    lags: &[f64],
) -> Result<Vec<McEstimate>> {
    let step = uniform_spacing(&series.omega_grid)?;
    let n = series.omega_grid.len();
    if series.power.is_empty() {
        return Err(Error::config("no realizations"));
    }
    if series.power.iter().any(|row| row.len() != n) {
        return Err(Error::Shape("power rows do not match the grid".into()));
    }
    let first = series.power[0][0];
    if series.power.iter().flatten().all(|&p| p == first) {
        return Err(Error::DegenerateVariance(
            "all noise powers are equal; correlation is undefined".into(),
        ));
    }
    let lag_index = lags
        .iter()
        .map(|&lag| {
            let k = (lag / step).round();
            if !(lag >= 0.0) || (k * step - lag).abs() > 1e-6 * step || k as usize >= n {
                Err(Error::config(format!(
                    "lag {lag} is not a grid multiple below the grid span"
                )))
            } else {
                Ok(k as usize)
            }
        })
        .collect::<Result<Vec<usize>>>()?;

    let row_means: Vec<f64> = series.power.iter().map(|r| stats::mean(r)).collect();
    let global_mean = stats::mean(&row_means);
    let m2 = global_mean * global_mean;
    let n_real = series.power.len();

    lag_index
        .into_iter()
        .map(|k| {
            let pairs = n - k;
            if n_real > 1 {
                let products: Vec<f64> = series
                    .power
                    .iter()
                    .map(|row| (0..pairs).map(|i| row[i] * row[i + k]).sum::<f64>() / pairs as f64)
                    .collect();
                let p_bar = stats::mean(&products);
                let influence: Vec<f64> = products
                    .iter()
                    .zip(&row_means)
                    .map(|(p, m)| p / m2 - 2.0 * p_bar * m / (m2 * global_mean))
                    .collect();
                Ok(McEstimate {
                    value: p_bar / m2 - 1.0,
                    stderr: stats::std_dev(&influence) / (n_real as f64).sqrt(),
                    n: n_real * pairs,
                })
            } else {
                let row = &series.power[0];
                let products: Vec<f64> = (0..pairs).map(|i| row[i] * row[i + k] / m2).collect();
                let est = McEstimate::from_samples(&products).expect("non-empty");
                Ok(McEstimate {
                    value: est.value - 1.0,
                    ..est
                })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParams {
        MediumParams::new(1e-6, 34.0).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(EnsembleConfig::channels(0, 10, 0).is_err());
        assert!(EnsembleConfig::channels(10, 0, 0).is_err());
        assert!(EnsembleConfig::new(1, 1, 0, vec![1.0, 0.5]).is_err());
        assert!(EnsembleConfig::new(1, 1, 0, vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn flux_excess_is_rejected() {
        let cfg = EnsembleConfig::channels(10, 10, 0).unwrap();
        assert!(sample_channel_transmissions(&cfg, 0.2).is_err());
        assert!(sample_channel_transmissions(&cfg, 0.0).is_err());
        assert!(sample_channel_transmissions(&cfg, 0.1).is_ok());
    }

    #[test]
    fn frozen_channels_give_hand_sums() {
        let samples = vec![vec![0.05, 0.05]];
        let sn = total_noise_from_channels(&samples, NoiseKind::ShotNoise).unwrap();
        let tn = total_noise_from_channels(&samples, NoiseKind::TechnicalNoise).unwrap();
        assert!((sn.value - 0.1).abs() < 1e-15);
        assert!((tn.value - 0.01).abs() < 1e-15);
    }

    #[test]
    fn channel_moments_match_exponential_law() {
        let l_eff = 10e-6;
        let mean_t = 1e-6 / (l_eff * 512.0);
        let cfg = EnsembleConfig::channels(512, 200, 11).unwrap();
        let draws: Vec<f64> = sample_channel_transmissions(&cfg, mean_t)
            .unwrap()
            .into_iter()
            .flatten()
            .collect();
        assert_eq!(draws.len(), 102_400);
        let first = McEstimate::from_samples(&draws).unwrap();
        assert!(first.z_score(mean_t) < 3.0, "{first:?} vs {mean_t}");

        // ⟨T²⟩/⟨T⟩² = 2 for an exponential; delta-method error on the ratio.
        let sq: Vec<f64> = draws.iter().map(|t| t * t).collect();
        let m1 = first.value;
        let m2 = stats::mean(&sq);
        let infl: Vec<f64> = draws
            .iter()
            .zip(&sq)
            .map(|(t, t2)| t2 / (m1 * m1) - 2.0 * m2 * t / (m1 * m1 * m1))
            .collect();
        let se = stats::std_dev(&infl) / (draws.len() as f64).sqrt();
        let ratio = m2 / (m1 * m1);
        assert!((ratio - 2.0).abs() < 3.0 * se, "{ratio} ± {se}");
    }

    #[test]
    fn technical_total_has_one_over_n_excess() {
        // With few channels the finite-N term separates 1 + 1/N from 1 + 2/N.
        let n = 4;
        let cfg = EnsembleConfig::channels(n, 200_000, 5).unwrap();
        let est = total_noise_from_channels(
            &sample_channel_transmissions(&cfg, 0.1 / n as f64).unwrap(),
            NoiseKind::TechnicalNoise,
        )
        .unwrap();
        let expected = expected_technical_total(0.1, n);
        assert!(est.z_score(expected) < 3.0, "{est:?} vs {expected}");
        assert!(est.z_score(0.01 * 1.5) > 5.0);
    }

    #[test]
    fn single_frequency_field_is_scaled_unit_gaussian() {
        let cfg = EnsembleConfig::new(1, 20_000, 3, vec![0.0]).unwrap();
        let geom = Geometry::bare(18e-6).unwrap();
        let s = sample_frequency_speckle(&cfg, &medium(), &geom, 2.5).unwrap();
        let i: Vec<f64> = s.intensities().into_iter().flatten().collect();
        let est = McEstimate::from_samples(&i).unwrap();
        assert!(est.z_score(2.5) < 3.0, "{est:?}");
    }

    #[test]
    fn duplicate_frequency_is_perfectly_correlated() {
        let cfg = EnsembleConfig::new(1, 50, 3, vec![1e12, 1e12]).unwrap();
        let geom = Geometry::bare(18e-6).unwrap();
        let s = sample_frequency_speckle(&cfg, &medium(), &geom, 1.0).unwrap();
        for row in &s.fields {
            assert!((row[0] - row[1]).norm() < 1e-12 * (1.0 + row[0].norm()));
        }
    }

    #[test]
    fn non_psd_covariance_is_reported() {
        let mut m = DMatrix::<Complex64>::identity(2, 2);
        m[(0, 1)] = Complex64::new(2.0, 0.0);
        m[(1, 0)] = Complex64::new(2.0, 0.0);
        match hermitian_factor(&m) {
            Err(Error::NotPositiveSemidefinite { min_eigenvalue, .. }) => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn factor_reproduces_covariance() {
        let grid = EnsembleConfig::uniform_grid(0.0, 2e10, 16);
        let sigma = speckle_covariance(&grid, 18e-6, 34.0, 1.0).unwrap();
        let a = hermitian_factor(&sigma).unwrap();
        let back = &a * a.adjoint();
        assert!((back - sigma).norm() < 1e-12);
    }

    #[test]
    fn constant_field_power_maps() {
        let s = SpeckleSeries {
            omega_grid: vec![0.0, 1.0, 2.0],
            fields: vec![vec![Complex64::new(0.5, 0.0); 3]],
            mean_intensity: 0.25,
        };
        let sn = noise_power_series(&s, NoiseKind::ShotNoise, 9.0, 2.0, 10.0).unwrap();
        assert!(sn.power[0].iter().all(|&p| (p - 0.25 * 2.0 / 10.0).abs() < 1e-15));
        let tn = noise_power_series(&s, NoiseKind::TechnicalNoise, 9.0, 2.0, 10.0).unwrap();
        assert!(tn.power[0].iter().all(|&p| (p - 0.025f64.powi(2) * 9.0).abs() < 1e-15));
        assert!(noise_power_series(&s, NoiseKind::ShotNoise, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn constant_series_has_undefined_correlation() {
        let p = NoisePowerSeries {
            omega_grid: vec![0.0, 1.0, 2.0],
            power: vec![vec![3.0; 3]; 4],
        };
        assert!(matches!(
            empirical_noise_correlation(&p, &[0.0]),
            Err(Error::DegenerateVariance(_))
        ));
    }

    #[test]
    fn lags_off_grid_are_rejected() {
        let p = NoisePowerSeries {
            omega_grid: vec![0.0, 1.0, 2.0],
            power: vec![vec![1.0, 2.0, 3.0]],
        };
        assert!(empirical_noise_correlation(&p, &[0.5]).is_err());
        assert!(empirical_noise_correlation(&p, &[3.0]).is_err());
        assert!(empirical_noise_correlation(&p, &[2.0]).is_ok());
    }

    fn iid_exponential_powers(n_real: usize, n: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..n_real)
            .map(|r| {
                let mut rng = stats::stream_rng(seed, r as u64);
                (0..n).map(|_| circular_gaussian(&mut rng).norm_sqr()).collect()
            })
            .collect()
    }

    #[test]
    fn iid_intensities_follow_gaussian_moments() {
        let grid: Vec<f64> = (0..32).map(f64::from).collect();
        let intens = iid_exponential_powers(4000, 32, 21);
        let sn = NoisePowerSeries {
            omega_grid: grid.clone(),
            power: intens.clone(),
        };
        let c = empirical_noise_correlation(&sn, &[0.0, 1.0, 5.0]).unwrap();
        assert!(c[0].z_score(1.0) < 3.0, "{:?}", c[0]);
        assert!(c[1].z_score(0.0) < 3.0, "{:?}", c[1]);
        assert!(c[2].z_score(0.0) < 3.0, "{:?}", c[2]);

        let tn = NoisePowerSeries {
            omega_grid: grid,
            power: intens.iter().map(|r| r.iter().map(|i| i * i).collect()).collect(),
        };
        let c = empirical_noise_correlation(&tn, &[0.0]).unwrap();
        assert!(c[0].z_score(5.0) < 3.0, "{:?}", c[0]);
    }

    #[test]
    fn rayleigh_ensemble_power_ratio() {
        let intens = iid_exponential_powers(2000, 16, 8);
        let tn: Vec<f64> = intens.iter().flatten().map(|i| i * i).collect();
        let sn: Vec<f64> = intens.iter().flatten().copied().collect();
        let ratio = stats::mean(&tn) / stats::mean(&sn).powi(2);
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }
}
