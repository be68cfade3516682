//! BFGS ascent with backtracking line search.

use serde::{Deserialize, Serialize};

use super::likelihood::Likelihood;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Convergence when `‖score‖∞ ≤ grad_tol · max(1, N)`.
    pub grad_tol: f64,
    pub step_tol: f64,
    /// Starting point; zeros when absent.
    pub init: Option<Vec<f64>>,
}

impl Default for OptimOptions {
    fn default() -> Self {
        Self { max_iter: 500, grad_tol: 1e-6, step_tol: 1e-10, init: None }
    }
}

impl OptimOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0 && self.step_tol > 0.0) {
            return Err(Error::InvalidInput("optimizer tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    GradientTolerance,
    StepTolerance,
    MaxIterations,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult<T> {
    pub theta: Vec<T>,
    pub log_likelihood: T,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// `‖score‖∞` at the returned point (unnormalized).
    pub score_inf_norm: T,
}

/// Largest coordinate change allowed for a single trial step.
const MAX_TRIAL_STEP: f64 = 10.0;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 80;

fn inf_norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

/// Maximizes the log-likelihood. Internally minimizes `−LL / max(1, N)` so
/// that `grad_tol` applies to the mean score.
pub fn maximize<T: Real, L: Likelihood<T> + ?Sized>(model: &L, options: &OptimOptions) -> Result<OptimResult<T>> {
    options.validate()?;
    let p = model.n_params();
    let scale = T::lit(model.n_obs().max(1) as f64);
    let mut theta: Vec<T> = match &options.init {
        Some(v) if v.len() == p => v.iter().map(|&x| T::lit(x)).collect(),
        Some(v) => {
            return Err(Error::InvalidInput(format!("initial point has {} entries, model has {p}", v.len())));
        }
        None => vec![T::zero(); p],
    };
    let objective = |th: &[T]| -> Result<T> { Ok(-model.log_likelihood(th)? / scale) };
    let gradient = |th: &[T]| -> Result<Vec<T>> { Ok(model.score(th)?.into_iter().map(|g| -g / scale).collect()) };

    let grad_tol = T::lit(options.grad_tol);
    let step_tol = T::lit(options.step_tol);
    let mut f = objective(&theta)?;
    if !f.is_finite() {
        return Err(Error::Estimation("objective is not finite at the initial point".into()));
    }
    let mut g = gradient(&theta)?;
    let mut h_inv = vec![vec![T::zero(); p]; p];
    reset(&mut h_inv);
    let mut scaled_once = false;
    let mut iterations = 0;
    let mut termination = Termination::MaxIterations;

    loop {
        if inf_norm(&g) <= grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        if iterations >= options.max_iter {
            break;
        }
        let mut d: Vec<T> = h_inv.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < T::zero()) {
            reset(&mut h_inv);
            scaled_once = false;
            d = g.iter().map(|&x| -x).collect();
            slope = dot(&g, &d);
        }
        let mut alpha = T::one();
        let d_norm = inf_norm(&d);
        let cap = T::lit(MAX_TRIAL_STEP);
        if d_norm > cap {
            alpha = cap / d_norm;
        }

        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<T> = theta.iter().zip(&d).map(|(&t, &di)| t + alpha * di).collect();
            if let Ok(ft) = objective(&trial) {
                if ft.is_finite() && ft <= f + T::lit(ARMIJO_C1) * alpha * slope {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            alpha = alpha * T::lit(0.5);
        }
        let Some((next, f_next)) = accepted else {
            termination = Termination::LineSearchFailed;
            break;
        };
        let g_next = gradient(&next)?;
        let s: Vec<T> = next.iter().zip(&theta).map(|(&a, &b)| a - b).collect();
        let y: Vec<T> = g_next.iter().zip(&g).map(|(&a, &b)| a - b).collect();
        theta = next;
        f = f_next;
        g = g_next;
        iterations += 1;

        if inf_norm(&g) <= grad_tol {
            termination = Termination::GradientTolerance;
            break;
        }
        if inf_norm(&s) < step_tol {
            termination = Termination::StepTolerance;
            break;
        }

        let sy = dot(&s, &y);
        let curvature_ok = sy > T::lit(1e-12) * dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if curvature_ok {
            if !scaled_once {
                let gamma = sy / dot(&y, &y);
                for (i, row) in h_inv.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        *v = if i == j { gamma } else { T::zero() };
                    }
                }
                scaled_once = true;
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
    }

    let ll = -f * scale;
    let score_inf_norm = inf_norm(&g) * scale;
    let converged = matches!(termination, Termination::GradientTolerance | Termination::StepTolerance);
    if !converged {
        log::warn!("optimizer stopped without converging ({termination:?}) after {iterations} iterations");
    }
    Ok(OptimResult { theta, log_likelihood: ll, iterations, converged, termination, score_inf_norm })
}

fn reset<T: Real>(h: &mut [Vec<T>]) {
    for (i, row) in h.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = if i == j { T::one() } else { T::zero() };
        }
    }
}

/// `H ← (I − ρ s yᵀ) H (I − ρ y sᵀ) + ρ s sᵀ`.
fn bfgs_update<T: Real>(h: &mut [Vec<T>], s: &[T], y: &[T], sy: T) {
    let n = s.len();
    let rho = T::one() / sy;
    let hy: Vec<T> = h.iter().map(|row| dot(row, y)).collect();
    let yhy = dot(y, &hy);
    let coef = (T::one() + rho * yhy) * rho;
    for i in 0..n {
        for j in 0..n {
            h[i][j] = h[i][j] - rho * (hy[i] * s[j] + s[i] * hy[j]) + coef * s[i] * s[j];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Concave quadratic: LL = −½ Σ w_i (θ_i − c_i)², one "observation".
    struct Quadratic {
        w: Vec<f64>,
        c: Vec<f64>,
    }

    impl Likelihood<f64> for Quadratic {
        fn n_params(&self) -> usize {
            self.w.len()
        }
        fn n_obs(&self) -> usize {
            1
        }
        fn param_names(&self) -> Vec<String> {
            (0..self.w.len()).map(|i| format!("p{i}")).collect()
        }
        fn log_likelihood(&self, th: &[f64]) -> Result<f64> {
            Ok(-0.5 * th.iter().zip(&self.w).zip(&self.c).map(|((t, w), c)| w * (t - c).powi(2)).sum::<f64>())
        }
        fn score(&self, th: &[f64]) -> Result<Vec<f64>> {
            Ok(th.iter().zip(&self.w).zip(&self.c).map(|((t, w), c)| -w * (t - c)).collect())
        }
        fn row_scores(&self, th: &[f64]) -> Result<Vec<Vec<f64>>> {
            Ok(vec![self.score(th)?])
        }
    }

    #[test]
    fn finds_quadratic_maximum() {
        let q = Quadratic { w: vec![1.0, 100.0, 0.01], c: vec![3.0, -2.0, 40.0] };
        let r = maximize(&q, &OptimOptions { grad_tol: 1e-10, ..Default::default() }).unwrap();
        assert!(r.converged);
        for (t, c) in r.theta.iter().zip(&q.c) {
            assert!((t - c).abs() < 1e-6, "{t} vs {c}");
        }
    }

    #[test]
    fn starting_at_optimum_is_a_fixed_point() {
        let q = Quadratic { w: vec![1.0, 2.0], c: vec![0.5, -0.5] };
        let r = maximize(&q, &OptimOptions { init: Some(q.c.clone()), ..Default::default() }).unwrap();
        assert_eq!(r.iterations, 0);
        assert_eq!(r.theta, q.c);
        assert!(r.converged);
    }

    #[test]
    fn reports_non_convergence() {
        let q = Quadratic { w: vec![1.0, 1e4], c: vec![30.0, -20.0] };
        let r = maximize(&q, &OptimOptions { max_iter: 1, grad_tol: 1e-12, ..Default::default() }).unwrap();
        assert!(!r.converged);
        assert_eq!(r.termination, Termination::MaxIterations);
    }

    #[test]
    fn rejects_bad_options() {
        let q = Quadratic { w: vec![1.0], c: vec![0.0] };
        assert!(maximize(&q, &OptimOptions { grad_tol: 0.0, ..Default::default() }).is_err());
        assert!(maximize(&q, &OptimOptions { init: Some(vec![0.0, 1.0]), ..Default::default() }).is_err());
    }
}
