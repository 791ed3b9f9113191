//! Damped Gauss–Newton (Levenberg–Marquardt) least squares with a central
//! difference Jacobian and box bounds enforced by projection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bound {
    pub lo: f64,
    pub hi: f64,
}

impl Bound {
    pub const fn free() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub const fn lower(lo: f64) -> Self {
        Self {
            lo,
            hi: f64::INFINITY,
        }
    }

    pub const fn between(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lo, self.hi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmSettings {
    pub max_iterations: usize,
    /// Stop when `|Δx| / |x|` falls below this.
    pub step_tol: f64,
    /// Stop when the relative decrease of the cost falls below this.
    pub cost_tol: f64,
    pub initial_lambda: f64,
}

impl Default for LmSettings {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            step_tol: 1e-10,
            cost_tol: 1e-12,
            initial_lambda: 1e-3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmOutcome {
    pub params: Vec<f64>,
    /// Sum of squared residuals at `params`.
    pub cost: f64,
    pub iterations: usize,
    /// Jacobian of the residuals at `params`.
    pub jacobian: DMatrix<f64>,
    /// Parameters sitting on one of their bounds.
    pub at_bound: Vec<bool>,
}

impl LmOutcome {
    /// `scale · (JᵀJ)⁻¹`.
    pub fn covariance(&self, scale: f64) -> Result<Vec<Vec<f64>>> {
        let jtj = self.jacobian.transpose() * &self.jacobian;
        let inv = jtj
            .try_inverse()
            .ok_or_else(|| Error::SingularDesign("normal matrix is singular".into()))?;
        let n = inv.nrows();
        Ok((0..n)
            .map(|i| {
                (0..n)
                    // symmetrize round-off
                    .map(|j| 0.5 * (inv[(i, j)] + inv[(j, i)]) * scale)
                    .collect()
            })
            .collect())
    }
}

fn jacobian<F>(residuals: &F, x: &[f64], r0_len: usize) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let h0 = f64::EPSILON.cbrt();
    let mut jac = DMatrix::zeros(r0_len, x.len());
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        let h = h0 * x[j].abs().max(1.0);
        xp[j] = x[j] + h;
        let rp = residuals(&xp)?;
        xp[j] = x[j] - h;
        let rm = residuals(&xp)?;
        xp[j] = x[j];
        for i in 0..r0_len {
            jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

/// Minimize `Σ rᵢ(x)²` from `x0`. The residual function is evaluated
/// slightly outside the bounds when differentiating at a bound.
pub fn minimize<F>(residuals: &F, x0: Vec<f64>, bounds: &[Bound], settings: &LmSettings) -> Result<LmOutcome>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if bounds.len() != x0.len() {
        return Err(Error::Shape("one bound per parameter required".into()));
    }
    let project = |x: &mut [f64]| {
        for (v, b) in x.iter_mut().zip(bounds) {
            *v = b.clamp(*v);
        }
    };
    let mut x = x0;
    project(&mut x);
    let mut r = residuals(&x)?;
    if r.len() < x.len() {
        return Err(Error::InvalidData(format!(
            "{} residuals for {} parameters",
            r.len(),
            x.len()
        )));
    }
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::InvalidData("non-finite cost at the starting point".into()));
    }
    let mut lambda = settings.initial_lambda;
    let mut iterations = 0;
    let mut jac = jacobian(residuals, &x, r.len())?;

    'outer: loop {
        if cost == 0.0 {
            break;
        }
        let jt = jac.transpose();
        let a = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);
        loop {
            iterations += 1;
            if iterations > settings.max_iterations {
                return Err(Error::NonConvergence {
                    iterations: settings.max_iterations,
                });
            }
            let mut damped = a.clone();
            let mut rhs = -&g;
            for k in 0..damped.nrows() {
                let d = a[(k, k)];
                damped[(k, k)] += lambda * if d > 0.0 { d } else { 1.0 };
                // freeze a parameter held at a bound the descent direction points past
                let b = bounds[k];
                if (x[k] <= b.lo && g[k] > 0.0) || (x[k] >= b.hi && g[k] < 0.0) {
                    damped.row_mut(k).fill(0.0);
                    damped.column_mut(k).fill(0.0);
                    damped[(k, k)] = 1.0;
                    rhs[k] = 0.0;
                }
            }
            let step = damped.lu().solve(&rhs);
            let Some(step) = step else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(x, d)| x + d).collect();
            project(&mut trial);
            let r_trial = residuals(&trial)?;
            let cost_trial = sum_sq(&r_trial);
            if cost_trial.is_finite() && cost_trial < cost {
                let dx: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let xn: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let rel_cost = (cost - cost_trial) / cost;
                x = trial;
                r = r_trial;
                cost = cost_trial;
                lambda = (lambda / 10.0).max(1e-12);
                jac = jacobian(residuals, &x, r.len())?;
                if dx <= settings.step_tol * (xn + settings.step_tol) || rel_cost < settings.cost_tol {
                    break 'outer;
                }
                continue 'outer;
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // no descent direction left at working precision
                break 'outer;
            }
        }
    }

    let at_bound = x
        .iter()
        .zip(bounds)
        .map(|(v, b)| *v <= b.lo || *v >= b.hi)
        .collect();
    Ok(LmOutcome {
        params: x,
        cost,
        iterations,
        jacobian: jac,
        at_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential_decay() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-0.7 * t).exp()).collect();
        let res = |p: &[f64]| -> Result<Vec<f64>> {
            Ok(t.iter().zip(&y).map(|(t, y)| y - p[0] * (-p[1] * t).exp()).collect())
        };
        let out = minimize(&res, vec![1.0, 0.1], &[Bound::free(); 2], &LmSettings::default()).unwrap();
        assert!((out.params[0] - 2.5).abs() < 1e-8);
        assert!((out.params[1] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn projection_holds_bound() {
        // minimum of (x - 2)² lies outside [0, 1]
        let res = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![p[0] - 2.0, 0.0]) };
        let out = minimize(&res, vec![0.5], &[Bound::between(0.0, 1.0)], &LmSettings::default()).unwrap();
        assert_eq!(out.params[0], 1.0);
        assert!(out.at_bound[0]);
    }

    #[test]
    fn iteration_cap_reports_non_convergence() {
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.25).collect();
        let res = |p: &[f64]| -> Result<Vec<f64>> {
            Ok(t.iter().map(|t| (p[0] * t).sin() - (1.3 * t).sin() + 0.1 * p[1]).collect())
        };
        let settings = LmSettings {
            max_iterations: 2,
            ..Default::default()
        };
        assert!(matches!(
            minimize(&res, vec![0.2, 5.0], &[Bound::free(); 2], &settings),
            Err(Error::NonConvergence { iterations: 2 })
        ));
    }
}
