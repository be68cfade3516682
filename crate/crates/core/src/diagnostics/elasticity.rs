//! Direct point elasticities `E = (1 − P_i) · x_k · β_k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{FittedModel, ModelKind};
use crate::ingest::{Attribute, FrameRow, ModelFrame, N_COVARIATES};
use crate::level::Level;
use crate::ordered_logit::{ol_index_from, ol_log_probs};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber<T> {
    pub min: T,
    pub q1: T,
    pub median: T,
    pub q3: T,
    pub max: T,
}

/// Min, quartiles (linear interpolation between order statistics) and max.
pub fn five_number_summary<T: Real>(values: &[T]) -> Result<FiveNumber<T>> {
    if values.is_empty() {
        return Err(Error::Empty("summary of zero values"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("summary input"));
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    let q = |p: f64| {
        let pos = p * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        let w = T::lit(pos - lo as f64);
        v[lo] + (v[hi] - v[lo]) * w
    };
    Ok(FiveNumber { min: v[0], q1: q(0.25), median: q(0.5), q3: q(0.75), max: v[v.len() - 1] })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticityReport<T> {
    pub model: ModelKind,
    pub alternative: Level,
    pub attribute: Attribute,
    pub coefficient: T,
    /// Per-row elasticities from the closed form.
    pub values: Vec<T>,
    pub summary: FiveNumber<T>,
    /// Ordered logit only: central finite-difference elasticity of
    /// `P(alternative)`, reported alongside as a diagnostic.
    pub finite_difference: Option<Vec<T>>,
    pub finite_difference_summary: Option<FiveNumber<T>>,
}

const FD_STEP: f64 = 1e-6;

pub fn direct_elasticity<T: Real>(
    model: &FittedModel<T>,
    frame: &ModelFrame<T>,
    alternative: Level,
    attribute: Attribute,
) -> Result<ElasticityReport<T>> {
    let coefficient = match model.kind {
        ModelKind::Mnl => model
            .mnl_params()
            .ok_or_else(|| Error::InvalidInput("malformed MNL parameter vector".into()))?
            .coefficient(alternative, attribute),
        ModelKind::Ol => {
            model.ol_params().ok_or_else(|| Error::InvalidInput("malformed OL parameter vector".into()))?.eta
                [attribute.index()]
        }
    };
    let k = attribute.index();
    let values = frame
        .rows()
        .iter()
        .map(|r| {
            // 1 - P as the sum of the other classes keeps precision when P is near 1
            let p = model.probabilities(r)?;
            let rest = Level::ALL.iter().filter(|&&l| l != alternative).fold(T::zero(), |acc, &l| acc + p.get(l));
            Ok(rest * r.covariates()[k] * coefficient)
        })
        .collect::<Result<Vec<T>>>()?;
    let summary = five_number_summary(&values)?;

    let (finite_difference, finite_difference_summary) = if model.kind == ModelKind::Ol {
        let params = model.ol_params().expect("checked above");
        let fd =
            frame.rows().iter().map(|r| ol_fd_elasticity(&params, r, alternative, k)).collect::<Result<Vec<T>>>()?;
        let s = five_number_summary(&fd)?;
        (Some(fd), Some(s))
    } else {
        (None, None)
    };

    Ok(ElasticityReport {
        model: model.kind,
        alternative,
        attribute,
        coefficient,
        values,
        summary,
        finite_difference,
        finite_difference_summary,
    })
}

fn ol_fd_elasticity<T: Real>(
    params: &crate::ordered_logit::OlParams<T>,
    row: &FrameRow<T>,
    alternative: Level,
    k: usize,
) -> Result<T> {
    let x = row.covariates();
    if x[k] == T::zero() {
        return Ok(T::zero());
    }
    let h = T::lit(FD_STEP);
    let log_p = |factor: T| -> Result<T> {
        let mut xp: [T; N_COVARIATES] = x;
        xp[k] = x[k] * factor;
        Ok(ol_log_probs(ol_index_from(params, &xp), params.mu1, params.mu2())?[alternative.index()])
    };
    Ok((log_p(T::one() + h)? - log_p(T::one() - h)?) / (h + h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn quartiles_interpolate() {
        let s = five_number_summary(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!((s.min, s.q1, s.median, s.q3, s.max), (1.0, 2.0, 3.0, 4.0, 5.0));
        let s = five_number_summary(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (1.75, 2.5, 3.25));
        assert!(five_number_summary::<f64>(&[]).is_err());
    }

    proptest! {
        #[test]
        fn summary_is_ordered_and_permutation_invariant(mut v in prop::collection::vec(-1e3f64..1e3, 1..50), seed in 0u64..100) {
            let s = five_number_summary(&v).unwrap();
            prop_assert!(s.min <= s.q1 && s.q1 <= s.median && s.median <= s.q3 && s.q3 <= s.max);
            let mut rng = crate::rng::StreamRng::new(seed, 0);
            for i in (1..v.len()).rev() {
                let j = rng.below(i as u64 + 1) as usize;
                v.swap(i, j);
            }
            prop_assert_eq!(five_number_summary(&v).unwrap(), s);
        }
    }
}
