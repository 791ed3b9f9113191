//! Case-resampling bootstrap for fit uncertainties.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::FitReport;
use crate::error::{Error, Result};
use crate::stats;

pub const MIN_RESAMPLES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    /// Standard deviation of each parameter over successful refits.
    pub stderr: BTreeMap<String, f64>,
    pub n_resamples: usize,
    pub n_failed: usize,
}

impl BootstrapSummary {
    pub fn failed_fraction(&self) -> f64 {
        self.n_failed as f64 / self.n_resamples as f64
    }
}

/// Refit `n_resamples` resampled copies of `data` and report the spread of
/// each fitted parameter.
///
/// Without `blocks` individual points are resampled with replacement. With
/// `blocks` (one label per point, e.g. the speckle spot a point came from)
/// whole blocks are resampled, keeping their points together. Resample `i`
/// draws from its own random stream, so the result does not depend on the
/// thread count.
pub fn bootstrap_errors<P, F>(
    fitter: F,
    data: &[P],
    blocks: Option<&[usize]>,
    n_resamples: usize,
    seed: u64,
) -> Result<BootstrapSummary>
where
    P: Clone + Sync,
    F: Fn(&[P]) -> Result<FitReport> + Sync,
{
    if n_resamples < MIN_RESAMPLES {
        return Err(Error::config(format!(
            "bootstrap needs >= {MIN_RESAMPLES} resamples, got {n_resamples}"
        )));
    }
    if data.is_empty() {
        return Err(Error::InvalidData("nothing to resample".into()));
    }
    let groups: Vec<Vec<usize>> = match blocks {
        None => (0..data.len()).map(|i| vec![i]).collect(),
        Some(labels) => {
            if labels.len() != data.len() {
                return Err(Error::Shape("one block label per point required".into()));
            }
            let mut map: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (i, &b) in labels.iter().enumerate() {
                map.entry(b).or_default().push(i);
            }
            map.into_values().collect()
        }
    };
    if groups.len() < 2 {
        return Err(Error::DegenerateResample(format!(
            "{} block(s); resampling cannot vary the data",
            groups.len()
        )));
    }

    let results: Vec<Result<FitReport>> = (0..n_resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = stats::stream_rng(seed, i as u64);
            let mut resample = Vec::with_capacity(data.len());
            for _ in 0..groups.len() {
                let g = &groups[rng.random_range(0..groups.len())];
                resample.extend(g.iter().map(|&k| data[k].clone()));
            }
            fitter(&resample)
        })
        .collect();

    let mut values: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut n_failed = 0;
    let mut last_err = None;
    for r in results {
        match r {
            Ok(rep) => {
                for (k, v) in rep.params {
                    values.entry(k).or_default().push(v);
                }
            }
            Err(e) => {
                n_failed += 1;
                last_err = Some(e);
            }
        }
    }
    if n_failed == n_resamples {
        return Err(last_err.expect("at least one failure"));
    }
    Ok(BootstrapSummary {
        stderr: values.into_iter().map(|(k, v)| (k, stats::std_dev(&v))).collect(),
        n_resamples,
        n_failed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{fit_total_sn, ThicknessPoint, ThicknessSeries};

    fn exact_points() -> Vec<ThicknessPoint> {
        (1..=8)
            .map(|i| {
                let l = 3.0 * i as f64;
                ThicknessPoint {
                    l_m: l * 1e-6,
                    t_hat: 1.1 / (l + 1.5),
                    stderr: 0.0,
                }
            })
            .collect()
    }

    fn fitter(pts: &[ThicknessPoint]) -> Result<FitReport> {
        fit_total_sn(&ThicknessSeries::new(pts.to_vec())?)
    }

    #[test]
    fn zero_noise_gives_zero_spread() {
        let pts = exact_points();
        let s = bootstrap_errors(fitter, &pts, None, 200, 1).unwrap();
        let ell = 1.1e-6;
        assert!(s.stderr["ell_m"] < 1e-8 * ell, "{s:?}");
        assert!(s.stderr["z0_m"] < 1e-8 * ell);
    }

    #[test]
    fn single_block_is_degenerate() {
        let pts = exact_points();
        let labels = vec![0; pts.len()];
        assert!(matches!(
            bootstrap_errors(fitter, &pts, Some(&labels), 200, 1),
            Err(Error::DegenerateResample(_))
        ));
    }

    #[test]
    fn too_few_resamples() {
        assert!(bootstrap_errors(fitter, &exact_points(), None, 99, 1).is_err());
    }

    #[test]
    fn failures_are_counted() {
        // three points: some resamples repeat a single thickness
        let pts: Vec<_> = exact_points().into_iter().take(3).collect();
        let s = bootstrap_errors(fitter, &pts, None, 300, 4).unwrap();
        assert!(s.n_failed > 0);
        assert!(s.failed_fraction() < 0.5);
    }

    #[test]
    fn result_is_reproducible() {
        let pts: Vec<_> = exact_points()
            .into_iter()
            .enumerate()
            .map(|(i, mut p)| {
                p.t_hat *= 1.0 + 0.02 * ((i * 7) as f64).sin();
                p
            })
            .collect();
        let a = bootstrap_errors(fitter, &pts, None, 150, 9).unwrap();
        let b = bootstrap_errors(fitter, &pts, None, 150, 9).unwrap();
        assert_eq!(a, b);
    }
}
