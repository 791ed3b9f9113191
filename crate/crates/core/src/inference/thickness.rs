//! Total-transmission fits versus sample thickness.
//!
//! Shot noise obeys `1/T = (L + z0)/ℓ`, technical noise `1/T = ((L + z0)/ℓ)²`.
//! Both are fitted as straight lines, in `1/T` and `1/√T` respectively.

use serde::{Deserialize, Serialize};

use super::lm::{self, Bound, LmSettings};
use super::{weights_from_stderr, FitReport};
use crate::error::{Error, Result};
use crate::model::NoiseKind;

/// Micrometre in metres.
pub const UM: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThicknessPoint {
    pub l_m: f64,
    pub t_hat: f64,
    pub stderr: f64,
}

/// Measured total transmissions at several thicknesses. Repeated
/// thicknesses are allowed (several sample positions, bootstrap resamples);
/// the fit itself needs at least two distinct values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThicknessSeries {
    points: Vec<ThicknessPoint>,
}

impl ThicknessSeries {
    pub fn new(points: Vec<ThicknessPoint>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidData(format!(
                "thickness series needs >= 3 points, got {}",
                points.len()
            )));
        }
        for p in &points {
            if !(p.l_m.is_finite() && p.l_m > 0.0) {
                return Err(Error::InvalidData(format!("invalid thickness {}", p.l_m)));
            }
            if !(p.t_hat.is_finite() && p.t_hat > 0.0) {
                return Err(Error::InvalidData(format!(
                    "transmission must be > 0, got {} at L = {} m",
                    p.t_hat, p.l_m
                )));
            }
        }
        weights_from_stderr(&points.iter().map(|p| p.stderr).collect::<Vec<_>>())?;
        Ok(Self { points })
    }

    pub fn points(&self) -> &[ThicknessPoint] {
        &self.points
    }
}

/// Straight-line fit of a scaling law, in the length unit of the input.
#[derive(Debug, Clone, PartialEq)]
pub struct LawFit {
    pub ell: f64,
    pub z0: f64,
    /// Covariance of `(ell, z0)`.
    pub covariance: [[f64; 2]; 2],
    pub slope: f64,
    pub intercept: f64,
    pub chi2: f64,
    pub n_points: usize,
    pub weighted: bool,
    pub warnings: Vec<String>,
}

/// Linearized ordinate and its standard error for one transmission.
fn linearize(kind: NoiseKind, t: f64, sigma: f64) -> (f64, f64) {
    match kind {
        NoiseKind::ShotNoise => (1.0 / t, sigma / (t * t)),
        NoiseKind::TechnicalNoise => (1.0 / t.sqrt(), sigma / (2.0 * t * t.sqrt())),
    }
}

/// Weighted least squares of `1/T` (shot noise) or `1/√T` (technical noise)
/// against length. Without standard errors the fit is unweighted and the
/// covariance is scaled by the residual variance; with them it is the
/// plain `(XᵀWX)⁻¹`.
pub fn fit_scaling_law(
    lengths: &[f64],
    t_hat: &[f64],
    stderr: &[f64],
    kind: NoiseKind,
) -> Result<LawFit> {
    let n = lengths.len();
    if t_hat.len() != n || stderr.len() != n {
        return Err(Error::Shape("lengths, transmissions and errors differ in length".into()));
    }
    if n < 3 {
        return Err(Error::InvalidData("need >= 3 points".into()));
    }
    if t_hat.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidData("transmissions must be > 0".into()));
    }
    let (y, sy): (Vec<f64>, Vec<f64>) = t_hat
        .iter()
        .zip(stderr)
        .map(|(&t, &s)| linearize(kind, t, s))
        .unzip();
    let weights = weights_from_stderr(&sy)?;
    let weighted = weights.is_some();
    let w = weights.unwrap_or_else(|| vec![1.0; n]);

    let sw: f64 = w.iter().sum();
    let xm = w.iter().zip(lengths).map(|(w, x)| w * x).sum::<f64>() / sw;
    let ym = w.iter().zip(&y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(lengths).map(|(w, x)| w * (x - xm).powi(2)).sum();
    let scale = lengths.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(sxx > 1e-24 * sw * scale * scale) {
        return Err(Error::SingularDesign(
            "all thicknesses are equal; slope is not identifiable".into(),
        ));
    }
    let sxy: f64 = w
        .iter()
        .zip(lengths)
        .zip(&y)
        .map(|((w, x), y)| w * (x - xm) * y)
        .sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: f64 = w
        .iter()
        .zip(lengths)
        .zip(&y)
        .map(|((w, x), y)| w * (y - intercept - slope * x).powi(2))
        .sum();

    // (intercept, slope) covariance
    let var_b = 1.0 / sxx;
    let var_a = 1.0 / sw + xm * xm / sxx;
    let cov_ab = -xm / sxx;
    let s2 = if weighted { 1.0 } else { chi2 / (n - 2) as f64 };
    let (var_a, var_b, cov_ab) = (var_a * s2, var_b * s2, cov_ab * s2);

    let ell = 1.0 / slope;
    let z0 = intercept / slope;
    // d(ell)/d(a, b) = (0, -1/b²); d(z0)/d(a, b) = (1/b, -a/b²)
    let jl = [0.0, -1.0 / (slope * slope)];
    let jz = [1.0 / slope, -intercept / (slope * slope)];
    let c = [[var_a, cov_ab], [cov_ab, var_b]];
    let q = |u: [f64; 2], v: [f64; 2]| {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += u[i] * c[i][j] * v[j];
            }
        }
        acc
    };
    let covariance = [[q(jl, jl), q(jl, jz)], [q(jz, jl), q(jz, jz)]];

    let mut warnings = Vec::new();
    if slope <= 0.0 {
        warnings.push(format!(
            "non-positive slope {slope:e}: mean free path is unphysical"
        ));
    }
    if !weighted {
        warnings.push("no standard errors given; unweighted fit".into());
    }
    Ok(LawFit {
        ell,
        z0,
        covariance,
        slope,
        intercept,
        chi2,
        n_points: n,
        weighted,
        warnings,
    })
}

fn columns(series: &ThicknessSeries) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let l = series.points.iter().map(|p| p.l_m).collect();
    let t = series.points.iter().map(|p| p.t_hat).collect();
    let s = series.points.iter().map(|p| p.stderr).collect();
    (l, t, s)
}

/// Scaling-law fit of a thickness series; reports `ell_m` and `z0_m`.
pub fn fit_total(series: &ThicknessSeries, kind: NoiseKind) -> Result<FitReport> {
    let (l, t, s) = columns(series);
    let fit = fit_scaling_law(&l, &t, &s, kind)?;
    let cov = fit.covariance.iter().map(|r| r.to_vec()).collect();
    let mut report = FitReport::new(
        format!("total_{}", kind.label()),
        &["ell_m", "z0_m"],
        &[fit.ell, fit.z0],
        cov,
        fit.chi2,
        fit.n_points,
    );
    report.warnings = fit.warnings;
    Ok(report)
}

pub fn fit_total_sn(series: &ThicknessSeries) -> Result<FitReport> {
    fit_total(series, NoiseKind::ShotNoise)
}

pub fn fit_total_tn(series: &ThicknessSeries) -> Result<FitReport> {
    fit_total(series, NoiseKind::TechnicalNoise)
}

/// Shot-noise and technical-noise series fitted with one shared boundary
/// offset. Reports `ell_sn_m`, `ell_tn_m` and `z0_m`.
pub fn fit_total_joint(sn: &ThicknessSeries, tn: &ThicknessSeries) -> Result<FitReport> {
    let start_sn = fit_total_sn(sn)?;
    let start_tn = fit_total_tn(tn)?;
    // work in micrometres for conditioning
    let mut rows = Vec::new();
    for (series, kind) in [(sn, NoiseKind::ShotNoise), (tn, NoiseKind::TechnicalNoise)] {
        for p in series.points() {
            let (y, sy) = linearize(kind, p.t_hat, p.stderr);
            rows.push((kind, p.l_m / UM, y, sy));
        }
    }
    let weights = weights_from_stderr(&rows.iter().map(|r| r.3).collect::<Vec<_>>())?;
    let weighted = weights.is_some();
    let w: Vec<f64> = weights
        .unwrap_or_else(|| vec![1.0; rows.len()])
        .into_iter()
        .map(f64::sqrt)
        .collect();
    let residuals = |x: &[f64]| -> Result<Vec<f64>> {
        Ok(rows
            .iter()
            .zip(&w)
            .map(|((kind, l, y, _), w)| {
                let ell = match kind {
                    NoiseKind::ShotNoise => x[0],
                    NoiseKind::TechnicalNoise => x[1],
                };
                w * (y - (l + x[2]) / ell)
            })
            .collect())
    };
    let z0_start = 0.5 * (start_sn.param("z0_m") + start_tn.param("z0_m")) / UM;
    let x0 = vec![
        start_sn.param("ell_m").abs() / UM,
        start_tn.param("ell_m").abs() / UM,
        z0_start,
    ];
    let bounds = [
        Bound::lower(1e-12),
        Bound::lower(1e-12),
        Bound::free(),
    ];
    let out = lm::minimize(&residuals, x0, &bounds, &LmSettings::default())?;
    let n = rows.len();
    let s2 = if weighted { 1.0 } else { out.cost / (n - 3) as f64 };
    let cov_um = out.covariance(s2)?;
    let cov = cov_um
        .iter()
        .map(|r| r.iter().map(|c| c * UM * UM).collect())
        .collect();
    let p = &out.params;
    let mut report = FitReport::new(
        "total_joint",
        &["ell_sn_m", "ell_tn_m", "z0_m"],
        &[p[0] * UM, p[1] * UM, p[2] * UM],
        cov,
        out.cost,
        n,
    );
    if !weighted {
        report.warnings.push("no standard errors given; unweighted fit".into());
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(l_um: f64, t_hat: f64, stderr: f64) -> ThicknessPoint {
        ThicknessPoint {
            l_m: l_um * UM,
            t_hat,
            stderr,
        }
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn exact_shot_noise_line() {
        let s = ThicknessSeries::new(vec![
            pt(5.0, 0.2, 0.01),
            pt(10.0, 0.1, 0.005),
            pt(20.0, 0.05, 0.0025),
        ])
        .unwrap();
        let r = fit_total_sn(&s).unwrap();
        assert!(rel(r.param("ell_m"), 1e-6) < 1e-12);
        assert!(r.param("z0_m").abs() < 1e-18);
        assert!(r.chi2 < 1e-20);
        assert_eq!(r.dof, 1);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn exact_technical_noise_quadratic() {
        // 1/T = ((L + 1 um)/1 um)²
        let pts = [5.0, 10.0, 15.0, 20.0]
            .iter()
            .map(|&l: &f64| pt(l, 1.0 / (l + 1.0).powi(2), 0.0))
            .collect();
        let r = fit_total_tn(&ThicknessSeries::new(pts).unwrap()).unwrap();
        assert!(rel(r.param("ell_m"), 1e-6) < 1e-12);
        assert!(rel(r.param("z0_m"), 1e-6) < 1e-12);
    }

    #[test]
    fn equal_thicknesses_are_singular() {
        let s = ThicknessSeries::new(vec![pt(5.0, 0.2, 0.0), pt(5.0, 0.21, 0.0), pt(5.0, 0.19, 0.0)])
            .unwrap();
        assert!(matches!(fit_total_sn(&s), Err(Error::SingularDesign(_))));
    }

    #[test]
    fn increasing_transmission_warns() {
        let s = ThicknessSeries::new(vec![pt(5.0, 0.05, 0.0), pt(10.0, 0.1, 0.0), pt(20.0, 0.2, 0.0)])
            .unwrap();
        let r = fit_total_sn(&s).unwrap();
        assert!(r.param("ell_m") < 0.0);
        assert!(r.warnings.iter().any(|w| w.contains("unphysical")));
    }

    #[test]
    fn series_validation() {
        assert!(ThicknessSeries::new(vec![pt(5.0, 0.2, 0.0), pt(6.0, 0.1, 0.0)]).is_err());
        assert!(
            ThicknessSeries::new(vec![pt(5.0, 0.2, 0.0), pt(6.0, 0.0, 0.0), pt(7.0, 0.1, 0.0)])
                .is_err()
        );
        assert!(
            ThicknessSeries::new(vec![pt(5.0, 0.2, 0.1), pt(6.0, 0.1, 0.0), pt(7.0, 0.1, 0.1)])
                .is_err()
        );
    }

    #[test]
    fn squared_shot_data_fit_as_technical_noise_matches() {
        let sn: Vec<ThicknessPoint> = [4.0f64, 7.0, 9.5, 13.0, 21.0]
            .iter()
            .map(|&l| {
                let t = 1.3 / (l + 2.2) * (1.0 + 0.03 * (l * 1.7).sin());
                pt(l, t, 0.04 * t)
            })
            .collect();
        let tn: Vec<ThicknessPoint> = sn
            .iter()
            .map(|p| pt(p.l_m / UM, p.t_hat * p.t_hat, 2.0 * p.t_hat * p.stderr))
            .collect();
        let a = fit_total_sn(&ThicknessSeries::new(sn).unwrap()).unwrap();
        let b = fit_total_tn(&ThicknessSeries::new(tn).unwrap()).unwrap();
        for key in ["ell_m", "z0_m"] {
            assert!(rel(a.param(key), b.param(key)) < 1e-12, "{key}");
            assert!(rel(a.param_stderr(key), b.param_stderr(key)) < 1e-10, "{key}");
        }
    }

    #[test]
    fn joint_fit_shares_offset() {
        let (ell_sn, ell_tn, z0) = (1.2, 1.0, 1.5);
        let sn: Vec<_> = [5.0, 10.0, 15.0, 20.0]
            .iter()
            .map(|&l| pt(l, ell_sn / (l + z0), 0.0))
            .collect();
        let tn: Vec<_> = [5.0, 10.0, 15.0, 20.0]
            .iter()
            .map(|&l| pt(l, (ell_tn / (l + z0)).powi(2), 0.0))
            .collect();
        let r = fit_total_joint(
            &ThicknessSeries::new(sn).unwrap(),
            &ThicknessSeries::new(tn).unwrap(),
        )
        .unwrap();
        assert!(rel(r.param("ell_sn_m"), ell_sn * UM) < 1e-8);
        assert!(rel(r.param("ell_tn_m"), ell_tn * UM) < 1e-8);
        assert!(rel(r.param("z0_m"), z0 * UM) < 1e-8);
        assert_eq!(r.dof, 5);
    }
}
