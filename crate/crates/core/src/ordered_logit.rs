//! Dynamic proportional-odds ordered logit.
//!
//! A single index `U = η · x̃` is cut by two ordered thresholds:
//! `P(Y ≤ j) = σ(μ_j − U)`. The upper threshold is parameterized as
//! `μ₂ = μ₁ + exp(δ)`, so every parameter vector is admissible.

use crate::error::{Error, Result};
use crate::ingest::{FrameRow, ModelFrame, N_COVARIATES};
use crate::level::Level;
use crate::mnl::ProbabilityVector;
use crate::scalar::{log_logistic, logistic, pairwise_sum, pairwise_vec_sum, Real};

pub const OL_N_PARAMS: usize = N_COVARIATES + 2;

/// Labels of the free (estimation) parameters.
pub const OL_PARAM_NAMES: [&str; OL_N_PARAMS] = [
    "Eta_Link_Speed",
    "Eta_Link_Density_Per_Lane",
    "Eta_Free_Flow_Speed",
    "Eta_Number_of_Lanes",
    "Eta_Medium_GHG",
    "Eta_High_GHG",
    "Mu_Low_Medium",
    "Log_Threshold_Gap",
];

/// Labels of the reported parameters (thresholds back-transformed).
pub const OL_REPORTED_NAMES: [&str; OL_N_PARAMS] = [
    "Eta_Link_Speed",
    "Eta_Link_Density_Per_Lane",
    "Eta_Free_Flow_Speed",
    "Eta_Number_of_Lanes",
    "Eta_Medium_GHG",
    "Eta_High_GHG",
    "Mu_Low_Medium",
    "Mu_Medium_High",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OlParams<T> {
    pub eta: [T; N_COVARIATES],
    pub mu1: T,
    /// Log of the gap between the two thresholds.
    pub delta: T,
}

impl<T: Real> OlParams<T> {
    pub fn zeros() -> Self {
        Self { eta: [T::zero(); N_COVARIATES], mu1: T::zero(), delta: T::zero() }
    }

    pub fn from_thresholds(eta: [T; N_COVARIATES], mu1: T, mu2: T) -> Result<Self> {
        if !(mu2 > mu1) {
            return Err(Error::InvalidInput(format!("thresholds must satisfy mu1 < mu2, got {mu1} and {mu2}")));
        }
        Ok(Self { eta, mu1, delta: (mu2 - mu1).ln() })
    }

    /// Reference magnitudes used as the default synthetic ground truth,
    /// with the thresholds in increasing order.
    pub fn reference() -> Self {
        let l = T::lit;
        Self::from_thresholds([l(11.1), l(-0.28), l(5.78), l(0.33), l(0.18), l(1.02)], l(1.5), l(10.1))
            .expect("ordered thresholds")
    }

    #[inline]
    pub fn mu2(&self) -> T {
        self.mu1 + self.delta.exp()
    }

    pub fn to_vec(&self) -> Vec<T> {
        let mut v = self.eta.to_vec();
        v.push(self.mu1);
        v.push(self.delta);
        v
    }

    pub fn from_slice(theta: &[T]) -> Result<Self> {
        if theta.len() != OL_N_PARAMS {
            return Err(Error::InvalidInput(format!(
                "ordered logit needs {OL_N_PARAMS} parameters, got {}",
                theta.len()
            )));
        }
        let mut eta = [T::zero(); N_COVARIATES];
        eta.copy_from_slice(&theta[..N_COVARIATES]);
        Ok(Self { eta, mu1: theta[6], delta: theta[7] })
    }

    /// (η, μ₁, μ₂) in [`OL_REPORTED_NAMES`] order.
    pub fn reported(&self) -> Vec<T> {
        let mut v = self.eta.to_vec();
        v.push(self.mu1);
        v.push(self.mu2());
        v
    }
}

#[inline]
pub fn ol_index<T: Real>(params: &OlParams<T>, row: &FrameRow<T>) -> T {
    ol_index_from(params, &row.covariates())
}

#[inline]
pub fn ol_index_from<T: Real>(params: &OlParams<T>, x: &[T; N_COVARIATES]) -> T {
    params.eta.iter().zip(x).fold(T::zero(), |acc, (&e, &v)| acc + e * v)
}

fn check_cut<T: Real>(u: T, mu1: T, mu2: T) -> Result<()> {
    if !(u.is_finite() && mu1.is_finite() && mu2.is_finite()) {
        return Err(Error::NonFinite("ordered logit index or threshold"));
    }
    if !(mu1 < mu2) {
        return Err(Error::InvalidInput(format!("thresholds must satisfy mu1 < mu2, got {mu1} and {mu2}")));
    }
    Ok(())
}

/// Class probabilities. The middle class uses
/// `σ(b) − σ(a) = σ(b)·σ(−a)·(1 − e^{a−b})`, which stays accurate when both
/// cumulative probabilities are close to 0 or 1.
pub fn ol_class_probs<T: Real>(u: T, mu1: T, mu2: T) -> Result<ProbabilityVector<T>> {
    check_cut(u, mu1, mu2)?;
    let (a, b) = (mu1 - u, mu2 - u);
    let p1 = logistic(a);
    let p3 = logistic(-b);
    let p2 = logistic(b) * logistic(-a) * -(a - b).exp_m1();
    Ok(ProbabilityVector([p1, p2, p3]))
}

pub fn ol_log_probs<T: Real>(u: T, mu1: T, mu2: T) -> Result<[T; 3]> {
    check_cut(u, mu1, mu2)?;
    let (a, b) = (mu1 - u, mu2 - u);
    Ok([log_logistic(a), log_logistic(b) + log_logistic(-a) + (-(a - b).exp_m1()).ln(), log_logistic(-b)])
}

pub fn ol_probabilities<T: Real>(params: &OlParams<T>, row: &FrameRow<T>) -> Result<ProbabilityVector<T>> {
    ol_class_probs(ol_index(params, row), params.mu1, params.mu2())
}

pub fn ol_log_likelihood<T: Real>(params: &OlParams<T>, frame: &ModelFrame<T>) -> Result<T> {
    if frame.is_empty() {
        return Err(Error::Empty("log-likelihood of an empty frame"));
    }
    let mu2 = params.mu2();
    let terms = frame
        .rows()
        .iter()
        .map(|r| ol_log_probs(ol_index(params, r), params.mu1, mu2).map(|lp| lp[r.chosen.index()]))
        .collect::<Result<Vec<T>>>()?;
    Ok(pairwise_sum(&terms))
}

/// Gradient contribution of one row, in [`OL_PARAM_NAMES`] order.
pub fn ol_row_score<T: Real>(params: &OlParams<T>, row: &FrameRow<T>) -> Result<[T; OL_N_PARAMS]> {
    let x = row.covariates();
    let u = ol_index_from(params, &x);
    let gap = params.delta.exp();
    let mu2 = params.mu1 + gap;
    check_cut(u, params.mu1, mu2)?;
    let (a, b) = (params.mu1 - u, mu2 - u);
    // derivatives of the row log-likelihood w.r.t. the two cut arguments
    let (da, db) = match row.chosen {
        Level::Low => (logistic(-a), T::zero()),
        Level::High => (T::zero(), -logistic(b)),
        Level::Medium => {
            let inv = T::one() / (b - a).exp_m1();
            (-logistic(a) - inv, logistic(-b) + inv)
        }
    };
    let du = -(da + db);
    let mut g = [T::zero(); OL_N_PARAMS];
    for k in 0..N_COVARIATES {
        g[k] = du * x[k];
    }
    g[6] = da + db;
    g[7] = db * gap;
    Ok(g)
}

/// Analytic gradient of [`ol_log_likelihood`] w.r.t. (η, μ₁, δ).
pub fn ol_score<T: Real>(params: &OlParams<T>, frame: &ModelFrame<T>) -> Result<Vec<T>> {
    if frame.is_empty() {
        return Err(Error::Empty("log-likelihood of an empty frame"));
    }
    let rows = frame.rows().iter().map(|r| ol_row_score(params, r)).collect::<Result<Vec<_>>>()?;
    Ok(pairwise_vec_sum(rows.len(), OL_N_PARAMS, &|i, acc: &mut [T]| {
        for (a, &v) in acc.iter_mut().zip(&rows[i]) {
            *a = *a + v;
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RowKey;
    use proptest::prelude::*;

    fn row(x: [f64; 4], prev_medium: bool, prev_high: bool, chosen: Level) -> FrameRow<f64> {
        FrameRow { key: RowKey { scenario: 1, link_number: 1, time: 1 }, attributes: x, prev_medium, prev_high, chosen }
    }

    #[test]
    fn index_is_linear() {
        let r = row([0.5, 0.2, 0.1, 1.0], false, false, Level::Low);
        assert_eq!(ol_index(&OlParams::zeros(), &r), 0.0);
        let mut p = OlParams::zeros();
        p.eta[0] = 1.0;
        assert_eq!(ol_index(&p, &r), 0.5);
    }

    #[test]
    fn logistic_midpoint_and_saturation() {
        let p = ol_class_probs(0.7f64, 0.7, 3.0).unwrap();
        assert!((p.0[0] - 0.5).abs() < 1e-15);
        let p = ol_class_probs(0.0f64, 0.0, 20.0).unwrap();
        assert!((p.0[0] - 0.5).abs() < 1e-15);
        assert!((p.0[1] - 0.5).abs() < 1e-8);
        assert!(p.0[2] < 1e-8);
    }

    #[test]
    fn thresholds_must_be_ordered() {
        assert!(ol_class_probs(0.0, 1.0, 1.0).is_err());
        assert!(ol_class_probs(0.0, 2.0, 1.0).is_err());
        assert!(OlParams::from_thresholds([0.0; 6], 10.1, 1.5).is_err());
        assert!(ol_class_probs(f64::NAN, 0.0, 1.0).is_err());
    }

    #[test]
    fn equal_shares_point() {
        let p = OlParams::from_thresholds([0.0; 6], -(2f64.ln()), 2f64.ln()).unwrap();
        let pr = ol_class_probs(0.0, p.mu1, p.mu2()).unwrap();
        for v in pr.0 {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let frame = ModelFrame::new(vec![
            row([0.1, 0.2, 0.3, 0.4], false, false, Level::Low),
            row([0.5, 0.6, 0.7, 0.8], true, false, Level::Medium),
            row([0.9, 0.1, 0.2, 0.3], false, true, Level::High),
            row([0.4, 0.4, 0.4, 0.4], false, false, Level::Medium),
        ])
        .unwrap();
        let ll = ol_log_likelihood(&p, &frame).unwrap();
        assert!((ll + 4.0 * 3f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn far_tail_likelihood_is_very_negative() {
        let mut p = OlParams::from_thresholds([0.0; 6], 0.0, 1.0).unwrap();
        p.eta[0] = 40.0;
        let frame = ModelFrame::new(vec![row([1.0, 0.0, 0.0, 0.0], false, false, Level::Low)]).unwrap();
        let ll = ol_log_likelihood(&p, &frame).unwrap();
        assert!(ll < -30.0 && ll.is_finite());
    }

    #[test]
    fn symmetric_rows_cancel_eta_score() {
        let p = OlParams::from_thresholds([0.0; 6], -(2f64.ln()), 2f64.ln()).unwrap();
        let frame = ModelFrame::new(vec![
            row([0.6, 0.2, 0.0, 0.0], false, false, Level::Low),
            row([-0.6, -0.2, 0.0, 0.0], false, false, Level::Low),
            row([0.3, 0.9, 0.1, 0.5], false, false, Level::High),
            row([-0.3, -0.9, -0.1, -0.5], false, false, Level::High),
        ])
        .unwrap();
        let g = ol_score(&p, &frame).unwrap();
        for v in &g[..4] {
            assert!(v.abs() < 1e-15);
        }
    }

    #[test]
    fn reported_thresholds() {
        let p = OlParams::<f64>::reference();
        let r = p.reported();
        assert!((r[6] - 1.5).abs() < 1e-15);
        assert!((r[7] - 10.1).abs() < 1e-13);
        assert_eq!(OlParams::from_slice(&p.to_vec()).unwrap(), p);
    }

    proptest! {
        #[test]
        fn probabilities_are_a_distribution(u in -700.0f64..700.0, mu1 in -700.0f64..700.0, gap in 1e-6f64..700.0) {
            let p = ol_class_probs(u, mu1, mu1 + gap).unwrap();
            prop_assert!(p.0.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((p.0.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }

        #[test]
        fn stochastic_ordering(u in -20.0f64..20.0, step in 0.01f64..5.0, mu1 in -5.0f64..5.0, gap in 0.1f64..10.0) {
            let lo = ol_class_probs(u, mu1, mu1 + gap).unwrap();
            let hi = ol_class_probs(u + step, mu1, mu1 + gap).unwrap();
            prop_assert!(hi.0[0] < lo.0[0]);
            prop_assert!(hi.0[2] > lo.0[2]);
        }

        #[test]
        fn parallel_lines(u in -5.0f64..5.0, mu1 in -3.0f64..3.0, gap in 0.1f64..4.0) {
            let p = ol_class_probs(u, mu1, mu1 + gap).unwrap();
            let logit = |q: f64| (q / (1.0 - q)).ln();
            let diff = logit(p.0[0] + p.0[1]) - logit(p.0[0]);
            prop_assert!((diff - gap).abs() < 1e-8);
        }
    }
}
