//! Parameter estimation from reduced measurements.
//!
//! Thickness series of total noise transmission yield the transport mean
//! free path and the lumped boundary offset; frequency-correlation series
//! yield the diffusion constant and the contrast.

mod bootstrap;
mod correlation;
mod lm;
mod report;
mod thickness;

pub use bootstrap::{bootstrap_errors, BootstrapSummary, MIN_RESAMPLES};
pub use correlation::{
    fit_correlation, fit_correlation_with, CorrelationPoint, CorrelationSeries, KAPPA_FLOOR,
};
pub use lm::{minimize, Bound, LmOutcome, LmSettings};
pub use report::FitReport;
pub use thickness::{
    fit_scaling_law, fit_total, fit_total_joint, fit_total_sn, fit_total_tn, LawFit,
    ThicknessPoint, ThicknessSeries, UM,
};

/// Weights `1/σ²` for a set of standard errors. All-zero errors select an
/// unweighted fit (`None`); a mix of zero and positive errors is rejected.
pub(crate) fn weights_from_stderr(stderr: &[f64]) -> crate::Result<Option<Vec<f64>>> {
    if stderr.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(crate::Error::InvalidData(
            "standard errors must be finite and >= 0".into(),
        ));
    }
    if stderr.iter().all(|&s| s == 0.0) {
        return Ok(None);
    }
    if stderr.contains(&0.0) {
        return Err(crate::Error::InvalidData(
            "either all or none of the standard errors may be zero".into(),
        ));
    }
    Ok(Some(stderr.iter().map(|s| 1.0 / (s * s)).collect()))
}
