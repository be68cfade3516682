//! Hausman-McFadden test of independence from irrelevant alternatives.
//!
//! The MNL is re-estimated on the rows whose chosen level is one of the two
//! retained levels. With the low level as base, the restricted model is a
//! binary logit of the retained non-base level `j` against low, whose
//! identified parameters are the contrast `ASC_j − ASC_low` and the slopes
//! `β_j`. The same seven quantities are formed from the full fit.
//!
//! `V_r` is the inverse expected information of the restricted model under
//! the null, evaluated at the full-model estimate over all rows:
//! `Σ P_low·P_j / (P_low + P_j) · z zᵀ` with `z = (1, x)`. At a common
//! parameter value the full model's information dominates that of the
//! conditional factor, so `V_r − V_f` is positive semi-definite up to
//! rounding. The observed information of the restricted fit, taken on a
//! random subset of rows at a different estimate, carries noise of the same
//! order as the difference itself.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::estimator::{invert_information, maximize, FittedModel, Likelihood, ModelKind, OptimOptions};
use crate::ingest::{ModelFrame, N_COVARIATES};
use crate::level::Level;
use crate::linalg::Matrix;
use crate::scalar::{log_logistic, logistic, pairwise_sum, pairwise_vec_sum, Real};

pub const IIA_TEST_NAME: &str = "Hausman-McFadden IIA test";

const RESTRICTED_N_PARAMS: usize = N_COVARIATES + 1;
const PINV_TOL: f64 = 1e-10;

/// Binary logit of `alternative` against the low level.
pub struct BinaryLogitLikelihood<'a, T> {
    pub frame: &'a ModelFrame<T>,
    pub alternative: Level,
}

impl<T: Real> BinaryLogitLikelihood<'_, T> {
    fn row_parts(&self, theta: &[T], i: usize) -> (T, [T; N_COVARIATES], bool) {
        let r = &self.frame.rows()[i];
        let x = r.covariates();
        let z = theta[1..].iter().zip(&x).fold(theta[0], |acc, (&b, &v)| acc + b * v);
        (z, x, r.chosen == self.alternative)
    }
}

impl<T: Real> Likelihood<T> for BinaryLogitLikelihood<'_, T> {
    fn n_params(&self) -> usize {
        RESTRICTED_N_PARAMS
    }

    fn n_obs(&self) -> usize {
        self.frame.len()
    }

    fn param_names(&self) -> Vec<String> {
        let tag = if self.alternative == Level::Medium { "Medium" } else { "High" };
        let mut names = vec![format!("ASC_{tag}_minus_ASC_Low")];
        names.extend(
            ["LinkSpeed", "Density", "FreeSpeed", "NumLanes", "PrevMediumGHG", "PrevHighGHG"]
                .iter()
                .map(|a| format!("Beta_{tag}_{a}")),
        );
        names
    }

    fn log_likelihood(&self, theta: &[T]) -> Result<T> {
        if self.frame.is_empty() {
            return Err(Error::Empty("log-likelihood of an empty frame"));
        }
        let terms: Vec<T> = (0..self.frame.len())
            .map(|i| {
                let (z, _, y) = self.row_parts(theta, i);
                if y {
                    log_logistic(z)
                } else {
                    log_logistic(-z)
                }
            })
            .collect();
        let ll = pairwise_sum(&terms);
        if ll.is_nan() {
            return Err(Error::NonFinite("binary logit log-likelihood"));
        }
        Ok(ll)
    }

    fn score(&self, theta: &[T]) -> Result<Vec<T>> {
        let rows = self.row_scores(theta)?;
        Ok(pairwise_vec_sum(rows.len(), RESTRICTED_N_PARAMS, &|i, acc: &mut [T]| {
            for (a, &v) in acc.iter_mut().zip(&rows[i]) {
                *a = *a + v;
            }
        }))
    }

    fn row_scores(&self, theta: &[T]) -> Result<Vec<Vec<T>>> {
        Ok((0..self.frame.len())
            .map(|i| {
                let (z, x, y) = self.row_parts(theta, i);
                let resid = if y { T::one() } else { T::zero() } - logistic(z);
                let mut g = Vec::with_capacity(RESTRICTED_N_PARAMS);
                g.push(resid);
                g.extend(x.iter().map(|&v| resid * v));
                g
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HausmanResult {
    pub test: String,
    pub dropped_alternative: Level,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// True when `V_r − V_f` was not positive definite and a generalized
    /// inverse over its positive eigenvalues was used.
    pub generalized_inverse: bool,
    pub restricted_n_obs: usize,
    pub names: Vec<String>,
    pub restricted: Vec<f64>,
    pub full: Vec<f64>,
}

/// `q = dᵀ (V_r − V_f)⁻¹ d` with `d = b_r − b_f`; returns (q, dof, p, generalized).
pub fn hausman_statistic<T: Real>(
    b_r: &[T],
    b_f: &[T],
    v_r: &Matrix<T>,
    v_f: &Matrix<T>,
) -> Result<(f64, usize, f64, bool)> {
    if b_r.len() != b_f.len() || v_r.rows() != b_r.len() || v_f.rows() != b_r.len() {
        return Err(Error::InvalidInput("Hausman inputs have mismatched dimensions".into()));
    }
    let d: Vec<T> = b_r.iter().zip(b_f).map(|(&a, &b)| a - b).collect();
    let diff = v_r.sub(v_f).symmetrize();
    let (values, _) = diff.symmetric_eigen();
    let largest = values.iter().fold(T::zero(), |m, &v| m.max(v.abs()));
    let positive_definite = values[0] > T::lit(PINV_TOL) * largest;
    let (q, dof, generalized) = match (positive_definite, diff.inverse()) {
        (true, Some(inv)) => (inv.quadratic_form(&d), d.len(), false),
        _ => {
            let (pinv, rank) = diff.symmetric_pinv(T::lit(PINV_TOL));
            log::warn!("V_r - V_f is not positive definite; using a rank-{rank} generalized inverse");
            (pinv.quadratic_form(&d), rank, true)
        }
    };
    let q = q.to_f64_lossy().max(0.0);
    let p =
        if dof == 0 { 1.0 } else { ChiSquared::new(dof as f64).map_err(|e| Error::Estimation(e.to_string()))?.sf(q) };
    Ok((q, dof, p, generalized))
}

pub fn hausman_iia<T: Real>(full: &FittedModel<T>, frame: &ModelFrame<T>, dropped: Level) -> Result<HausmanResult> {
    if full.kind != ModelKind::Mnl {
        return Err(Error::InvalidInput("the IIA test applies to the MNL model".into()));
    }
    let kept = match dropped {
        Level::Low => {
            return Err(Error::InvalidInput("the low level is the base alternative and cannot be dropped".into()))
        }
        Level::Medium => Level::High,
        Level::High => Level::Medium,
    };
    let restricted_frame = frame.filter(|r| r.chosen != dropped);
    let counts = restricted_frame.level_counts();
    if counts[Level::Low.index()] == 0 || counts[kept.index()] == 0 {
        return Err(Error::InvalidInput(
            "restricted choice set needs at least 2 alternatives present in the data".into(),
        ));
    }
    let model = BinaryLogitLikelihood { frame: &restricted_frame, alternative: kept };
    let opt = maximize(&model, &OptimOptions::default())?;
    if !opt.converged {
        return Err(Error::Estimation(format!("restricted fit did not converge ({:?})", opt.termination)));
    }
    let v_r = null_restricted_covariance(full, frame, kept, &model.param_names())?;

    // map the 14 full-model parameters onto the restricted parameterization
    let p = full.theta.len();
    let mut a = Matrix::<T>::zeros(RESTRICTED_N_PARAMS, p);
    let offset = match kept {
        Level::Medium => {
            a[(0, 1)] = T::one();
            2
        }
        _ => 8,
    };
    a[(0, 0)] = -T::one();
    for k in 0..N_COVARIATES {
        a[(k + 1, offset + k)] = T::one();
    }
    let b_f = a.mul_vec(&full.theta);
    let v_f = a.matmul(&full.classical_covariance).matmul(&a.transpose());
    let (statistic, dof, p_value, generalized_inverse) = hausman_statistic(&opt.theta, &b_f, &v_r, &v_f)?;
    Ok(HausmanResult {
        test: IIA_TEST_NAME.to_string(),
        dropped_alternative: dropped,
        statistic,
        dof,
        p_value,
        generalized_inverse,
        restricted_n_obs: restricted_frame.len(),
        names: model.param_names(),
        restricted: opt.theta.iter().map(|v| v.to_f64_lossy()).collect(),
        full: b_f.iter().map(|v| v.to_f64_lossy()).collect(),
    })
}

fn null_restricted_covariance<T: Real>(
    full: &FittedModel<T>,
    frame: &ModelFrame<T>,
    kept: Level,
    names: &[String],
) -> Result<Matrix<T>> {
    let mut info = Matrix::<T>::zeros(RESTRICTED_N_PARAMS, RESTRICTED_N_PARAMS);
    for r in frame.rows() {
        let p = full.probabilities(r)?;
        let (pl, pj) = (p.get(Level::Low), p.get(kept));
        let w = pl * pj / (pl + pj);
        if !(w > T::zero()) {
            continue;
        }
        let x = r.covariates();
        let mut z = [T::one(); RESTRICTED_N_PARAMS];
        z[1..].copy_from_slice(&x);
        for i in 0..RESTRICTED_N_PARAMS {
            for j in 0..RESTRICTED_N_PARAMS {
                info[(i, j)] = info[(i, j)] + w * z[i] * z[j];
            }
        }
    }
    Ok(invert_information(&info, names)?.symmetrize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_estimates_give_zero_statistic() {
        let b = [0.5, -1.0, 2.0];
        let mut vr = Matrix::<f64>::identity(3).scale(2.0);
        vr[(0, 1)] = 0.3;
        vr[(1, 0)] = 0.3;
        let vf = Matrix::<f64>::identity(3);
        let (q, dof, p, gen) = hausman_statistic(&b, &b, &vr, &vf).unwrap();
        assert_eq!((q, dof, p, gen), (0.0, 3, 1.0, false));
    }

    #[test]
    fn known_statistic() {
        let vr = Matrix::<f64>::identity(2).scale(3.0);
        let vf = Matrix::<f64>::identity(2);
        let (q, dof, p, _) = hausman_statistic(&[2.0, 0.0], &[0.0, 0.0], &vr, &vf).unwrap();
        assert!((q - 2.0).abs() < 1e-14);
        assert_eq!(dof, 2);
        // chi-square(2) survival at 2 is exp(-1)
        assert!((p - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn non_positive_definite_difference_falls_back() {
        let vr = Matrix::<f64>::identity(2);
        let vf = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 1.5]]);
        let (_, dof, _, gen) = hausman_statistic(&[1.0, 1.0], &[0.0, 0.0], &vr, &vf).unwrap();
        assert!(gen);
        assert_eq!(dof, 1);
    }
}
