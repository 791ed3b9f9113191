//! Fit of the diffusion constant and contrast to a noise correlation curve.

use serde::{Deserialize, Serialize};

use super::lm::{self, Bound, LmSettings};
use super::{weights_from_stderr, FitReport};
use crate::error::{Error, Result};
use crate::model::{self, NoiseKind};

/// Smallest contrast the fit may reach.
pub const KAPPA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub delta_omega_rad_s: f64,
    pub c_hat: f64,
    pub stderr: f64,
}

/// Measured correlation versus frequency offset, starting at zero lag, for
/// a sample of known effective thickness.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    points: Vec<CorrelationPoint>,
    l_eff_m: f64,
}

impl CorrelationSeries {
    pub fn new(points: Vec<CorrelationPoint>, l_eff_m: f64) -> Result<Self> {
        if !(l_eff_m.is_finite() && l_eff_m > 0.0) {
            return Err(Error::InvalidData(format!("thickness must be > 0, got {l_eff_m}")));
        }
        if points.is_empty() || points[0].delta_omega_rad_s != 0.0 {
            return Err(Error::InvalidData("correlation series must start at zero lag".into()));
        }
        if points
            .iter()
            .any(|p| !(p.delta_omega_rad_s.is_finite() && p.c_hat.is_finite()))
        {
            return Err(Error::InvalidData("non-finite lag or correlation".into()));
        }
        if points
            .windows(2)
            .any(|w| w[1].delta_omega_rad_s <= w[0].delta_omega_rad_s)
        {
            return Err(Error::InvalidData("lags must be strictly increasing".into()));
        }
        weights_from_stderr(&points.iter().map(|p| p.stderr).collect::<Vec<_>>())?;
        Ok(Self { points, l_eff_m })
    }

    pub fn points(&self) -> &[CorrelationPoint] {
        &self.points
    }

    pub fn l_eff_m(&self) -> f64 {
        self.l_eff_m
    }
}

fn shape(kind: NoiseKind, eta: f64) -> f64 {
    let f = model::f_eta_unchecked(eta);
    match kind {
        NoiseKind::ShotNoise => f,
        NoiseKind::TechnicalNoise => f * f + 4.0 * f,
    }
}

pub fn fit_correlation(series: &CorrelationSeries, kind: NoiseKind) -> Result<FitReport> {
    fit_correlation_with(series, kind, &LmSettings::default())
}

/// Weighted fit of `κ·f(η)` (shot noise) or `κ·(f² + 4f)` (technical noise)
/// over `(ln D, κ)` with `κ` held in `(0, 1]`. Errors come from the
/// Gauss–Newton normal matrix scaled by the reduced chi-square.
pub fn fit_correlation_with(
    series: &CorrelationSeries,
    kind: NoiseKind,
    settings: &LmSettings,
) -> Result<FitReport> {
    let pts = &series.points;
    if pts.len() < 4 {
        return Err(Error::InvalidData(format!(
            "correlation fit needs >= 4 points, got {}",
            pts.len()
        )));
    }
    let weights = weights_from_stderr(&pts.iter().map(|p| p.stderr).collect::<Vec<_>>())?;
    let weighted = weights.is_some();
    let sqrt_w: Vec<f64> = weights
        .unwrap_or_else(|| vec![1.0; pts.len()])
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let two_l2 = 2.0 * series.l_eff_m * series.l_eff_m;

    let residuals = |p: &[f64]| -> Result<Vec<f64>> {
        let d = p[0].exp();
        Ok(pts
            .iter()
            .zip(&sqrt_w)
            .map(|(pt, w)| {
                let eta = two_l2 * pt.delta_omega_rad_s / d;
                w * (pt.c_hat - p[1] * shape(kind, eta))
            })
            .collect())
    };

    let kappa0 = (pts[0].c_hat / shape(kind, 0.0)).clamp(0.05, 1.0);
    let lag_min = pts[1].delta_omega_rad_s;
    let lag_max = pts[pts.len() - 1].delta_omega_rad_s;
    let ln_lo = (two_l2 * lag_min / 1e3).ln();
    let ln_hi = (two_l2 * lag_max / 1e-3).ln();
    let mut best = (f64::INFINITY, 0.5 * (ln_lo + ln_hi));
    for k in 0..=400 {
        let ln_d = ln_lo + (ln_hi - ln_lo) * k as f64 / 400.0;
        let cost: f64 = residuals(&[ln_d, kappa0])?.iter().map(|r| r * r).sum();
        if cost < best.0 {
            best = (cost, ln_d);
        }
    }

    let bounds = [Bound::free(), Bound::between(KAPPA_FLOOR, 1.0)];
    let out = lm::minimize(&residuals, vec![best.1, kappa0], &bounds, settings)?;
    let n = pts.len();
    let dof = n - 2;
    let cov_log = out.covariance(out.cost / dof as f64)?;
    let d = out.params[0].exp();
    let kappa = out.params[1];
    let cov = vec![
        vec![d * d * cov_log[0][0], d * cov_log[0][1]],
        vec![d * cov_log[1][0], cov_log[1][1]],
    ];
    let mut report = FitReport::new(
        format!("correlation_{}", kind.label()),
        &["D_m2_s", "kappa"],
        &[d, kappa],
        cov,
        out.cost,
        n,
    );
    if out.at_bound[1] {
        report
            .warnings
            .push(format!("contrast at its bound ({kappa}); errors assume an interior optimum"));
    }
    if !weighted {
        report.warnings.push("no standard errors given; unweighted fit".into());
    }
    let zero = &pts[0];
    let predicted = kappa * shape(kind, 0.0);
    if zero.stderr > 0.0 && (zero.c_hat - predicted).abs() > 3.0 * zero.stderr {
        report.warnings.push(format!(
            "zero-lag correlation {} deviates from the fitted {predicted} by more than 3 standard errors",
            zero.c_hat
        ));
    }
    Ok(report)
}
