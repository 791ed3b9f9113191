use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Outcome of one fit. `covariance` is ordered like `param_names`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model: String,
    pub param_names: Vec<String>,
    pub params: BTreeMap<String, f64>,
    pub stderr: BTreeMap<String, f64>,
    pub covariance: Vec<Vec<f64>>,
    pub chi2: f64,
    pub dof: usize,
    pub n_points: usize,
    pub warnings: Vec<String>,
}

impl FitReport {
    pub(crate) fn new(
        model: impl Into<String>,
        names: &[&str],
        values: &[f64],
        covariance: Vec<Vec<f64>>,
        chi2: f64,
        n_points: usize,
    ) -> Self {
        let param_names: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        let params = param_names.iter().cloned().zip(values.iter().copied()).collect();
        let stderr = param_names
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, n)| (n, covariance[i][i].max(0.0).sqrt()))
            .collect();
        Self {
            model: model.into(),
            param_names,
            params,
            stderr,
            covariance,
            chi2,
            dof: n_points - names.len(),
            n_points,
            warnings: Vec::new(),
        }
    }

    /// Parameter value by name. Panics on an unknown name.
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn param_stderr(&self, name: &str) -> f64 {
        self.stderr[name]
    }

    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof as f64
    }
}
