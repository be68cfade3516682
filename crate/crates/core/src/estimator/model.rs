use serde::{Deserialize, Serialize};

use super::covariance::{sandwich_covariance, Covariances};
use super::likelihood::{Likelihood, MnlLikelihood, OlLikelihood};
use super::optimize::{maximize, OptimOptions, Termination};
use super::wald::{ll_ratio, wald_stats, WaldStat};
use crate::error::{Error, Result};
use crate::ingest::{FrameRow, ModelFrame};
use crate::linalg::Matrix;
use crate::mnl::{self, MnlParams, ProbabilityVector, MNL_PARAM_NAMES};
use crate::ordered_logit::{self as ol, OlParams, OL_PARAM_NAMES, OL_REPORTED_NAMES};
use crate::scalar::Real;

/// Coefficients beyond this magnitude on unit-scaled attributes indicate
/// (quasi-)separation.
pub const SEPARATION_GUARD: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    #[serde(rename = "MNL")]
    Mnl,
    #[serde(rename = "OL")]
    Ol,
}

impl ModelKind {
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::Mnl => "MNL",
            ModelKind::Ol => "OL",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel<T> {
    pub kind: ModelKind,
    /// Free parameters in estimation order.
    pub theta: Vec<T>,
    pub free_names: Vec<String>,
    /// Robust covariance of `theta`.
    pub covariance: Matrix<T>,
    /// Inverse observed information of `theta`.
    pub classical_covariance: Matrix<T>,
    pub ll: T,
    pub ll_null: T,
    pub ll_ratio: T,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    pub score_inf_norm: T,
    pub grad_tol: f64,
    /// Reported parameterization (ordered-logit thresholds back-transformed).
    pub reported_names: Vec<String>,
    /// Robust Wald statistics of the reported parameters.
    pub stats: Vec<WaldStat<T>>,
    pub warnings: Vec<String>,
}

impl<T: Real> FittedModel<T> {
    /// Wraps known parameters (for example a generating truth) so they can be
    /// used for prediction and elasticities. Fit statistics are NaN and the
    /// covariances are zero.
    pub fn fixed(kind: ModelKind, theta: Vec<T>) -> Result<Self> {
        let (reported_names, _) = reported(kind, &theta)?;
        let p = theta.len();
        let free_names = match kind {
            ModelKind::Mnl => MNL_PARAM_NAMES.iter(),
            ModelKind::Ol => OL_PARAM_NAMES.iter(),
        }
        .map(|s| s.to_string())
        .collect();
        Ok(Self {
            kind,
            theta,
            free_names,
            covariance: Matrix::zeros(p, p),
            classical_covariance: Matrix::zeros(p, p),
            ll: T::nan(),
            ll_null: T::nan(),
            ll_ratio: T::nan(),
            n_obs: 0,
            converged: true,
            iterations: 0,
            termination: Termination::GradientTolerance,
            score_inf_norm: T::nan(),
            grad_tol: 0.0,
            reported_names,
            stats: Vec::new(),
            warnings: vec!["parameters supplied, not estimated".into()],
        })
    }

    pub fn mnl_params(&self) -> Option<MnlParams<T>> {
        (self.kind == ModelKind::Mnl).then(|| MnlParams::from_slice(&self.theta).ok()).flatten()
    }

    pub fn ol_params(&self) -> Option<OlParams<T>> {
        (self.kind == ModelKind::Ol).then(|| OlParams::from_slice(&self.theta).ok()).flatten()
    }

    pub fn probabilities(&self, row: &FrameRow<T>) -> Result<ProbabilityVector<T>> {
        probabilities_for(self.kind, &self.theta, row)
    }

    /// Robust covariance in the reported parameterization.
    pub fn reported_covariance(&self) -> Matrix<T> {
        reported_covariance(self.kind, &self.theta, &self.covariance)
    }

    pub fn reported_values(&self) -> Vec<T> {
        self.stats.iter().map(|s| s.value).collect()
    }
}

pub fn probabilities_for<T: Real>(kind: ModelKind, theta: &[T], row: &FrameRow<T>) -> Result<ProbabilityVector<T>> {
    match kind {
        ModelKind::Mnl => mnl::probabilities(&MnlParams::from_slice(theta)?, row),
        ModelKind::Ol => ol::ol_probabilities(&OlParams::from_slice(theta)?, row),
    }
}

/// Equal-shares null log-likelihood `−N ln 3`.
pub fn null_log_likelihood<T: Real>(n_obs: usize) -> T {
    -T::lit(n_obs as f64) * T::lit(3.0).ln()
}

pub fn check_levels<T>(frame: &ModelFrame<T>) -> Result<()>
where
    T: Real,
{
    if frame.is_empty() {
        return Err(Error::Empty("estimation frame has no rows"));
    }
    let counts = frame.level_counts();
    let missing: Vec<u8> = (0..3).filter(|&j| counts[j] == 0).map(|j| j as u8 + 1).collect();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::MissingLevels { missing })
    }
}

fn reported_covariance<T: Real>(kind: ModelKind, theta: &[T], cov: &Matrix<T>) -> Matrix<T> {
    match kind {
        ModelKind::Mnl => cov.clone(),
        ModelKind::Ol => {
            // μ₂ = μ₁ + exp(δ): delta-method Jacobian
            let p = theta.len();
            let mut jac = Matrix::identity(p);
            jac[(p - 1, p - 2)] = T::one();
            jac[(p - 1, p - 1)] = theta[p - 1].exp();
            jac.matmul(cov).matmul(&jac.transpose()).symmetrize()
        }
    }
}

fn reported<T: Real>(kind: ModelKind, theta: &[T]) -> Result<(Vec<String>, Vec<T>)> {
    Ok(match kind {
        ModelKind::Mnl => (MNL_PARAM_NAMES.iter().map(|s| s.to_string()).collect(), theta.to_vec()),
        ModelKind::Ol => {
            (OL_REPORTED_NAMES.iter().map(|s| s.to_string()).collect(), OlParams::from_slice(theta)?.reported())
        }
    })
}

pub fn sandwich_covariance_for<T: Real>(kind: ModelKind, theta: &[T], frame: &ModelFrame<T>) -> Result<Covariances<T>> {
    match kind {
        ModelKind::Mnl => sandwich_covariance(&MnlLikelihood { frame }, theta),
        ModelKind::Ol => sandwich_covariance(&OlLikelihood { frame }, theta),
    }
}

pub fn fit<T: Real>(kind: ModelKind, frame: &ModelFrame<T>, options: &OptimOptions) -> Result<FittedModel<T>> {
    match kind {
        ModelKind::Mnl => fit_with(kind, &MnlLikelihood { frame }, frame, options),
        ModelKind::Ol => fit_with(kind, &OlLikelihood { frame }, frame, options),
    }
}

pub fn fit_mnl<T: Real>(frame: &ModelFrame<T>, options: &OptimOptions) -> Result<FittedModel<T>> {
    fit(ModelKind::Mnl, frame, options)
}

pub fn fit_ol<T: Real>(frame: &ModelFrame<T>, options: &OptimOptions) -> Result<FittedModel<T>> {
    fit(ModelKind::Ol, frame, options)
}

fn fit_with<T: Real, L: Likelihood<T>>(
    kind: ModelKind,
    model: &L,
    frame: &ModelFrame<T>,
    options: &OptimOptions,
) -> Result<FittedModel<T>> {
    check_levels(frame)?;
    let opt = maximize(model, options)?;
    let mut warnings = Vec::new();
    if !opt.converged {
        warnings.push(format!("optimizer did not converge ({:?})", opt.termination));
    }
    if let Some((i, v)) = opt.theta.iter().enumerate().find(|(_, v)| v.abs() > T::lit(SEPARATION_GUARD)) {
        let msg = format!("possible quasi-separation: {} = {v} exceeds ±{SEPARATION_GUARD}", model.param_names()[i]);
        log::warn!("{msg}");
        warnings.push(msg);
    }
    let cov = sandwich_covariance(model, &opt.theta)?;
    let ll_null = null_log_likelihood::<T>(frame.len());
    let ratio = ll_ratio(opt.log_likelihood, ll_null)?;
    let (reported_names, values) = reported(kind, &opt.theta)?;
    let stats = wald_stats(&values, &reported_covariance(kind, &opt.theta, &cov.robust))?;
    if stats.iter().any(|s| s.flagged) {
        warnings.push("zero robust standard error on at least one parameter".into());
    }
    Ok(FittedModel {
        kind,
        theta: opt.theta,
        free_names: model.param_names(),
        covariance: cov.robust,
        classical_covariance: cov.classical,
        ll: opt.log_likelihood,
        ll_null,
        ll_ratio: ratio,
        n_obs: frame.len(),
        converged: opt.converged,
        iterations: opt.iterations,
        termination: opt.termination,
        score_inf_norm: opt.score_inf_norm,
        grad_tol: options.grad_tol,
        reported_names,
        stats,
        warnings,
    })
}

/// Rebuilds robust statistics for an externally supplied parameter vector
/// (used when a model is read back from disk).
pub fn restat<T: Real>(
    kind: ModelKind,
    theta: &[T],
    covariance: &Matrix<T>,
) -> Result<(Vec<String>, Vec<WaldStat<T>>)> {
    let (names, values) = reported(kind, theta)?;
    Ok((names, wald_stats(&values, &reported_covariance(kind, theta, covariance))?))
}
