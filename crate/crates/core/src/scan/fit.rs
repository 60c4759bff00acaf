//! Thin wrapper around a Levenberg-Marquardt minimizer with dynamically
//! sized parameter and residual vectors, adding a covariance estimate.

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt, TerminationReason};
use nalgebra::storage::Owned;
use nalgebra::{DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Iteration budget, counted in Jacobian evaluations.
pub const MAX_ITERATIONS: usize = 200;
/// Relative step tolerance.
pub const STEP_TOLERANCE: f64 = 1e-12;

/// A least-squares model `r(p)`.
pub trait Residuals {
    fn residual_count(&self) -> usize;

    fn residuals(&self, params: &[f64], out: &mut [f64]) -> bool;

    /// `∂rᵢ/∂pⱼ`. The default is a central difference.
    fn jacobian(&self, params: &[f64]) -> Option<DMatrix<f64>> {
        let m = self.residual_count();
        let mut jac = DMatrix::zeros(m, params.len());
        let mut p = params.to_vec();
        let mut plus = vec![0.0; m];
        let mut minus = vec![0.0; m];
        for j in 0..params.len() {
            let h = 1e-6 * params[j].abs().max(1e-3);
            p[j] = params[j] + h;
            let ok_plus = self.residuals(&p, &mut plus);
            p[j] = params[j] - h;
            let ok_minus = self.residuals(&p, &mut minus);
            p[j] = params[j];
            if !(ok_plus && ok_minus) {
                return None;
            }
            for i in 0..m {
                jac[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
            }
        }
        Some(jac)
    }
}

/// Converged parameters and their statistics.
#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub params: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Sum of squared residuals.
    pub ssr: f64,
    /// `SSR / (m − p)`, the residual variance estimate.
    pub reduced_chi2: f64,
    /// `s² (JᵀJ)⁻¹`; entries are infinite when `JᵀJ` is singular.
    pub covariance: DMatrix<f64>,
    /// `(JᵀJ)⁻¹`, which still carries the correlations when `s²` is zero.
    pub normal_inverse: DMatrix<f64>,
    pub evaluations: usize,
}

impl FitOutcome {
    pub fn std_error(&self, j: usize) -> f64 {
        self.covariance[(j, j)].max(0.0).sqrt()
    }

    pub fn correlation(&self, a: usize, b: usize) -> f64 {
        let c = &self.normal_inverse;
        c[(a, b)] / (c[(a, a)] * c[(b, b)]).sqrt()
    }
}

struct Problem<'a, R: Residuals> {
    model: &'a R,
    params: DVector<f64>,
}

impl<R: Residuals> LeastSquaresProblem<f64, Dyn, Dyn> for Problem<'_, R> {
    type ResidualStorage = Owned<f64, Dyn>;
    type JacobianStorage = Owned<f64, Dyn, Dyn>;
    type ParameterStorage = Owned<f64, Dyn>;

    fn set_params(&mut self, x: &DVector<f64>) {
        self.params.copy_from(x);
    }

    fn params(&self) -> DVector<f64> {
        self.params.clone()
    }

    fn residuals(&self) -> Option<DVector<f64>> {
        let mut out = vec![0.0; self.model.residual_count()];
        if !self.model.residuals(self.params.as_slice(), &mut out) || out.iter().any(|v| !v.is_finite()) {
            return None;
        }
        Some(DVector::from_vec(out))
    }

    fn jacobian(&self) -> Option<DMatrix<f64>> {
        self.model.jacobian(self.params.as_slice())
    }
}

/// Minimizes `|r(p)|²` from `initial`.
pub fn least_squares<R: Residuals>(model: &R, initial: &[f64]) -> Result<FitOutcome> {
    let m = model.residual_count();
    let n = initial.len();
    if m <= n {
        return Err(Error::param(
            "fit data",
            format!("{m} residuals cannot determine {n} parameters"),
        ));
    }
    let problem = Problem {
        model,
        params: DVector::from_column_slice(initial),
    };
    // Only the step tolerance ends the search; a cost-reduction test would
    // stop with parameter errors of order sqrt(ftol) of their spread.
    let (solved, report) = LevenbergMarquardt::new()
        .with_xtol(STEP_TOLERANCE)
        .with_ftol(0.0)
        .with_gtol(0.0)
        .with_patience(MAX_ITERATIONS)
        .minimize(problem);
    // machine precision reached before the step tolerance: still the optimum
    let at_precision_limit = matches!(report.termination, TerminationReason::NoImprovementPossible(_));
    if !(report.termination.was_successful() || at_precision_limit) {
        return Err(Error::NonConvergence(format!("{:?}", report.termination)));
    }
    let mut params: Vec<f64> = solved.params.iter().copied().collect();
    let mut residuals = vec![0.0; m];
    if !model.residuals(&params, &mut residuals) {
        return Err(Error::NonConvergence("model undefined at the solution".into()));
    }
    let mut ssr: f64 = residuals.iter().map(|r| r * r).sum();
    polish(model, &mut params, &mut residuals, &mut ssr);
    let reduced_chi2 = ssr / (m - n) as f64;
    let jac = model
        .jacobian(&params)
        .ok_or_else(|| Error::NonConvergence("Jacobian undefined at the solution".into()))?;
    let jtj = jac.transpose() * &jac;
    let normal_inverse = jtj.try_inverse().unwrap_or_else(|| DMatrix::from_element(n, n, f64::INFINITY));
    let covariance = &normal_inverse * reduced_chi2;
    Ok(FitOutcome {
        params,
        residuals,
        ssr,
        reduced_chi2,
        covariance,
        normal_inverse,
        evaluations: report.number_of_evaluations,
    })
}

/// Undamped Gauss-Newton steps from the damped solution. The step test stops
/// wherever its threshold is first crossed, which depends on the iteration
/// path; a few full steps settle on the minimum itself to rounding level.
fn polish<R: Residuals>(model: &R, params: &mut [f64], residuals: &mut [f64], ssr: &mut f64) {
    const STEPS: usize = 6;
    let mut trial_r = vec![0.0; residuals.len()];
    for _ in 0..STEPS {
        let Some(jac) = model.jacobian(params) else { return };
        let r = DVector::from_column_slice(residuals);
        let Ok(step) = jac.svd(true, true).solve(&(-r), f64::EPSILON) else { return };
        let trial: Vec<f64> = params.iter().zip(step.iter()).map(|(p, d)| p + d).collect();
        if !model.residuals(&trial, &mut trial_r) || trial_r.iter().any(|v| !v.is_finite()) {
            return;
        }
        let trial_ssr: f64 = trial_r.iter().map(|v| v * v).sum();
        // near the minimum the cost is flat to rounding, so it can only veto
        // steps that clearly make things worse
        if trial_ssr > *ssr * (1.0 + 1e-10) {
            return;
        }
        let moved = step.iter().zip(params.iter()).any(|(d, p)| d.abs() > f64::EPSILON * p.abs());
        params.copy_from_slice(&trial);
        residuals.copy_from_slice(&trial_r);
        *ssr = trial_ssr;
        if !moved {
            return;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Line<'a> {
        x: &'a [f64],
        y: &'a [f64],
    }

    impl Residuals for Line<'_> {
        fn residual_count(&self) -> usize {
            self.x.len()
        }

        fn residuals(&self, p: &[f64], out: &mut [f64]) -> bool {
            for ((o, x), y) in out.iter_mut().zip(self.x).zip(self.y) {
                *o = p[0] + p[1] * x - y;
            }
            true
        }
    }

    #[test]
    fn straight_line_matches_ordinary_least_squares() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let y: Vec<f64> = x.iter().enumerate().map(|(i, x)| 1.5 + 0.25 * x + if i % 2 == 0 { 0.1 } else { -0.1 }).collect();
        let fit = least_squares(&Line { x: &x, y: &y }, &[0.0, 0.0]).unwrap();
        let n = x.len() as f64;
        let (sx, sy) = (x.iter().sum::<f64>(), y.iter().sum::<f64>());
        let sxx: f64 = x.iter().map(|x| x * x).sum();
        let sxy: f64 = x.iter().zip(&y).map(|(x, y)| x * y).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        assert!((fit.params[1] - slope).abs() < 1e-10);
        assert!((fit.params[0] - intercept).abs() < 1e-10);
        let s2 = fit.ssr / (n - 2.0);
        let var_slope = s2 * n / (n * sxx - sx * sx);
        assert!((fit.std_error(1) / var_slope.sqrt() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn underdetermined_is_rejected() {
        let x = [0.0, 1.0];
        assert!(least_squares(&Line { x: &x, y: &x }, &[0.0, 0.0]).is_err());
    }
}
