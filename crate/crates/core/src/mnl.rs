//! Dynamic multinomial logit over the three emission levels.
//!
//! Utilities (x̃ is the covariate vector in [`Attribute::ALL`] order):
//!
//! ```text
//! V_low    = ASC_low
//! V_medium = ASC_medium + β_medium · x̃
//! V_high   =              β_high   · x̃
//! ```
//!
//! The high-level constant is fixed at zero and the low level carries no
//! slopes, which leaves 14 identified parameters.

use crate::error::{Error, Result};
use crate::ingest::{Attribute, FrameRow, ModelFrame, N_COVARIATES};
use crate::level::Level;
use crate::scalar::{log_sum_exp, pairwise_sum, pairwise_vec_sum, Real};

pub const MNL_N_PARAMS: usize = 2 + 2 * N_COVARIATES;

/// Serialized labels of the free parameters, in vector order.
pub const MNL_PARAM_NAMES: [&str; MNL_N_PARAMS] = [
    "ASC_Low",
    "ASC_Medium",
    "Beta_Medium_LinkSpeed",
    "Beta_Medium_Density",
    "Beta_Medium_FreeSpeed",
    "Beta_Medium_NumLanes",
    "Beta_Medium_PrevMediumGHG",
    "Beta_Medium_PrevHighGHG",
    "Beta_High_LinkSpeed",
    "Beta_High_Density",
    "Beta_High_FreeSpeed",
    "Beta_High_NumLanes",
    "Beta_High_PrevMediumGHG",
    "Beta_High_PrevHighGHG",
];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MnlParams<T> {
    pub asc_low: T,
    pub asc_medium: T,
    pub beta_medium: [T; N_COVARIATES],
    pub beta_high: [T; N_COVARIATES],
}

impl<T: Real> MnlParams<T> {
    pub fn zeros() -> Self {
        Self { asc_low: T::zero(), asc_medium: T::zero(), beta_medium: [T::zero(); 6], beta_high: [T::zero(); 6] }
    }

    /// Reference magnitudes used as the default synthetic ground truth. The
    /// two lag coefficients are shared between the medium and high utilities.
    pub fn reference() -> Self {
        let l = T::lit;
        Self {
            asc_low: l(22.0),
            asc_medium: l(11.8),
            beta_medium: [l(13.7), l(2.59), l(3.11), l(0.48), l(0.46), l(0.74)],
            beta_high: [l(11.7), l(-9.86), l(18.6), l(0.58), l(0.46), l(0.74)],
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        let mut v = Vec::with_capacity(MNL_N_PARAMS);
        v.push(self.asc_low);
        v.push(self.asc_medium);
        v.extend_from_slice(&self.beta_medium);
        v.extend_from_slice(&self.beta_high);
        v
    }

    pub fn from_slice(theta: &[T]) -> Result<Self> {
        if theta.len() != MNL_N_PARAMS {
            return Err(Error::InvalidInput(format!("MNL needs {MNL_N_PARAMS} parameters, got {}", theta.len())));
        }
        let mut beta_medium = [T::zero(); 6];
        let mut beta_high = [T::zero(); 6];
        beta_medium.copy_from_slice(&theta[2..8]);
        beta_high.copy_from_slice(&theta[8..14]);
        Ok(Self { asc_low: theta[0], asc_medium: theta[1], beta_medium, beta_high })
    }

    /// Coefficient of `attribute` in the utility of `level` (zero for the
    /// low level, which has no slopes).
    pub fn coefficient(&self, level: Level, attribute: Attribute) -> T {
        match level {
            Level::Low => T::zero(),
            Level::Medium => self.beta_medium[attribute.index()],
            Level::High => self.beta_high[attribute.index()],
        }
    }
}

/// Systematic utilities (low, medium, high).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityVector<T>(pub [T; 3]);

/// Probabilities of (low, medium, high).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbabilityVector<T>(pub [T; 3]);

impl<T: Real> ProbabilityVector<T> {
    pub fn get(&self, level: Level) -> T {
        self.0[level.index()]
    }

    /// Most probable level; ties go to the lower level.
    pub fn argmax(&self) -> Level {
        let mut best = 0;
        for j in 1..3 {
            if self.0[j] > self.0[best] {
                best = j;
            }
        }
        Level::from_index(best).expect("index below 3")
    }
}

#[inline]
fn dot<T: Real>(a: &[T; N_COVARIATES], b: &[T; N_COVARIATES]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

pub fn utilities<T: Real>(params: &MnlParams<T>, row: &FrameRow<T>) -> UtilityVector<T> {
    utilities_from(params, &row.covariates())
}

pub fn utilities_from<T: Real>(params: &MnlParams<T>, x: &[T; N_COVARIATES]) -> UtilityVector<T> {
    UtilityVector([params.asc_low, params.asc_medium + dot(&params.beta_medium, x), dot(&params.beta_high, x)])
}

/// Max-shifted softmax.
pub fn choice_probabilities<T: Real>(v: &UtilityVector<T>) -> Result<ProbabilityVector<T>> {
    if v.0.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite("utility"));
    }
    let max = v.0[0].max(v.0[1]).max(v.0[2]);
    let e = v.0.map(|u| (u - max).exp());
    let s = e[0] + e[1] + e[2];
    Ok(ProbabilityVector(e.map(|x| x / s)))
}

/// `ln P` for each level via log-sum-exp.
pub fn log_probabilities<T: Real>(v: &UtilityVector<T>) -> Result<[T; 3]> {
    if v.0.iter().any(|u| !u.is_finite()) {
        return Err(Error::NonFinite("utility"));
    }
    let lse = log_sum_exp(&v.0);
    Ok(v.0.map(|u| u - lse))
}

pub fn probabilities<T: Real>(params: &MnlParams<T>, row: &FrameRow<T>) -> Result<ProbabilityVector<T>> {
    choice_probabilities(&utilities(params, row))
}

fn ensure_non_empty<T: Real>(frame: &ModelFrame<T>) -> Result<()> {
    if frame.is_empty() {
        Err(Error::Empty("log-likelihood of an empty frame"))
    } else {
        Ok(())
    }
}

pub fn log_likelihood<T: Real>(params: &MnlParams<T>, frame: &ModelFrame<T>) -> Result<T> {
    ensure_non_empty(frame)?;
    let terms = frame
        .rows()
        .iter()
        .map(|r| log_probabilities(&utilities(params, r)).map(|lp| lp[r.chosen.index()]))
        .collect::<Result<Vec<T>>>()?;
    Ok(pairwise_sum(&terms))
}

/// Gradient contribution of one row, in [`MNL_PARAM_NAMES`] order.
pub fn row_score<T: Real>(params: &MnlParams<T>, row: &FrameRow<T>) -> Result<[T; MNL_N_PARAMS]> {
    let x = row.covariates();
    let p = choice_probabilities(&utilities_from(params, &x))?;
    let resid = |level: Level| {
        let y = if row.chosen == level { T::one() } else { T::zero() };
        y - p.get(level)
    };
    let (r_low, r_med, r_high) = (resid(Level::Low), resid(Level::Medium), resid(Level::High));
    let mut g = [T::zero(); MNL_N_PARAMS];
    g[0] = r_low;
    g[1] = r_med;
    for k in 0..N_COVARIATES {
        g[2 + k] = r_med * x[k];
        g[8 + k] = r_high * x[k];
    }
    Ok(g)
}

/// Analytic gradient of [`log_likelihood`].
pub fn score<T: Real>(params: &MnlParams<T>, frame: &ModelFrame<T>) -> Result<Vec<T>> {
    ensure_non_empty(frame)?;
    let rows = frame.rows().iter().map(|r| row_score(params, r)).collect::<Result<Vec<_>>>()?;
    Ok(pairwise_vec_sum(rows.len(), MNL_N_PARAMS, &|i, acc: &mut [T]| {
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
    fn zero_params_give_zero_utilities() {
        let r = row([0.3, 0.2, 0.9, 1.0], true, false, Level::Low);
        assert_eq!(utilities(&MnlParams::zeros(), &r).0, [0.0; 3]);
    }

    #[test]
    fn constants_only() {
        let p = MnlParams { asc_low: 22.0, asc_medium: 11.8, ..MnlParams::zeros() };
        let r = row([0.3, 0.2, 0.9, 1.0], false, true, Level::Low);
        assert_eq!(utilities(&p, &r).0, [22.0, 11.8, 0.0]);
    }

    #[test]
    fn softmax_closed_forms() {
        let p = choice_probabilities(&UtilityVector([0.0f64, 0.0, 0.0])).unwrap();
        for v in p.0 {
            assert!((v - 1.0 / 3.0).abs() < 1e-16);
        }
        let p = choice_probabilities(&UtilityVector([2f64.ln(), 0.0, 0.0])).unwrap();
        assert!((p.0[0] - 0.5).abs() < 1e-15);
        assert!((p.0[1] - 0.25).abs() < 1e-15);
        assert!((p.0[2] - 0.25).abs() < 1e-15);
        assert!(choice_probabilities(&UtilityVector([f64::NAN, 0.0, 0.0])).is_err());
        assert!(choice_probabilities(&UtilityVector([f64::INFINITY, 0.0, 0.0])).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(ProbabilityVector([0.2, 0.3, 0.5]).argmax(), Level::High);
        assert_eq!(ProbabilityVector([1.0 / 3.0; 3]).argmax(), Level::Low);
        assert_eq!(ProbabilityVector([0.1, 0.45, 0.45]).argmax(), Level::Medium);
    }

    #[test]
    fn uniform_log_likelihood() {
        let rows = vec![
            row([0.1, 0.2, 0.3, 0.0], false, false, Level::Low),
            row([0.4, 0.5, 0.6, 1.0], true, false, Level::Medium),
            row([0.7, 0.8, 0.9, 0.5], false, true, Level::High),
        ];
        let frame = ModelFrame::new(rows).unwrap();
        let ll = log_likelihood(&MnlParams::zeros(), &frame).unwrap();
        assert!((ll + 3.0 * 3f64.ln()).abs() < 1e-14);
        assert!((ll - -3.295836866004329).abs() < 1e-12);
        let big = frame.repeated(100);
        assert!((log_likelihood(&MnlParams::zeros(), &big).unwrap() + 300.0 * 3f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn empty_frame_rejected() {
        let frame = ModelFrame::<f64>::default();
        assert!(log_likelihood(&MnlParams::zeros(), &frame).is_err());
        assert!(score(&MnlParams::zeros(), &frame).is_err());
    }

    #[test]
    fn score_at_uniform_point() {
        let frame = ModelFrame::new(vec![row([1.0, 0.0, 0.0, 0.0], false, false, Level::Medium)]).unwrap();
        let g = score(&MnlParams::zeros(), &frame).unwrap();
        assert!((g[1] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g[2] - 2.0 / 3.0).abs() < 1e-15);
        assert!((g[8] + 1.0 / 3.0).abs() < 1e-15);
        assert!((g[0] + 1.0 / 3.0).abs() < 1e-15);
        assert!(g[3..8].iter().chain(&g[9..]).all(|&v| v == 0.0));
    }

    #[test]
    fn vector_round_trip_and_names() {
        let p = MnlParams::<f64>::reference();
        assert_eq!(MnlParams::from_slice(&p.to_vec()).unwrap(), p);
        assert_eq!(p.to_vec().len(), MNL_PARAM_NAMES.len());
        assert_eq!(p.coefficient(Level::High, Attribute::FreeFlowSpeed), 18.6);
        assert_eq!(p.coefficient(Level::Low, Attribute::FreeFlowSpeed), 0.0);
        assert!(MnlParams::<f64>::from_slice(&[0.0; 13]).is_err());
    }

    #[test]
    fn single_precision_agrees_with_double() {
        let r = row([0.3, 0.2, 0.9, 1.0], false, true, Level::Medium);
        let p64 = probabilities(&MnlParams::<f64>::reference(), &r).unwrap();
        let p32 = probabilities(&MnlParams::<f32>::reference(), &r.cast::<f32>()).unwrap();
        for j in 0..3 {
            assert!((p64.0[j] - f64::from(p32.0[j])).abs() < 1e-5);
        }
    }

    fn rand_frame(seed: u64, n: usize) -> ModelFrame<f64> {
        let mut rng = crate::rng::StreamRng::new(seed, 0);
        let rows = (0..n)
            .map(|_| {
                let x = [rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()];
                let lag = rng.below(3);
                row(x, lag == 1, lag == 2, Level::from_index(rng.below(3) as usize).unwrap())
            })
            .collect();
        ModelFrame::new(rows).unwrap()
    }

    proptest! {
        #[test]
        fn translation_invariance(v in prop::array::uniform3(-300.0f64..300.0), c in -300.0f64..300.0) {
            let a = choice_probabilities(&UtilityVector(v)).unwrap();
            let b = choice_probabilities(&UtilityVector(v.map(|u| u + c))).unwrap();
            for j in 0..3 {
                prop_assert!((a.0[j] - b.0[j]).abs() <= 1e-12);
            }
        }

        #[test]
        fn log_likelihood_is_concave(
            a in prop::collection::vec(-5.0f64..5.0, MNL_N_PARAMS),
            b in prop::collection::vec(-5.0f64..5.0, MNL_N_PARAMS),
            lambda in 0.01f64..0.99,
        ) {
            let frame = rand_frame(17, 40);
            let pa = MnlParams::from_slice(&a).unwrap();
            let pb = MnlParams::from_slice(&b).unwrap();
            let mix: Vec<f64> = a.iter().zip(&b).map(|(x, y)| lambda * x + (1.0 - lambda) * y).collect();
            let pm = MnlParams::from_slice(&mix).unwrap();
            let lhs = log_likelihood(&pm, &frame).unwrap();
            let rhs = lambda * log_likelihood(&pa, &frame).unwrap() + (1.0 - lambda) * log_likelihood(&pb, &frame).unwrap();
            prop_assert!(lhs >= rhs - 1e-9);
        }

        #[test]
        fn log_likelihood_never_positive(theta in prop::collection::vec(-30.0f64..30.0, MNL_N_PARAMS)) {
            let frame = rand_frame(3, 25);
            prop_assert!(log_likelihood(&MnlParams::from_slice(&theta).unwrap(), &frame).unwrap() <= 0.0);
        }
    }
}
