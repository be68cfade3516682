use crate::error::Result;
use crate::ingest::ModelFrame;
use crate::mnl::{self, MnlParams, MNL_N_PARAMS, MNL_PARAM_NAMES};
use crate::ordered_logit::{self as ol, OlParams, OL_N_PARAMS, OL_PARAM_NAMES};
use crate::scalar::Real;

/// A frame-bound log-likelihood over a flat parameter vector.
pub trait Likelihood<T: Real> {
    fn n_params(&self) -> usize;

    fn n_obs(&self) -> usize;

    fn param_names(&self) -> Vec<String>;

    fn log_likelihood(&self, theta: &[T]) -> Result<T>;

    fn score(&self, theta: &[T]) -> Result<Vec<T>>;

    /// Per-observation gradient contributions (for the outer-product term
    /// of the sandwich).
    fn row_scores(&self, theta: &[T]) -> Result<Vec<Vec<T>>>;
}

pub struct MnlLikelihood<'a, T> {
    pub frame: &'a ModelFrame<T>,
}

impl<T: Real> Likelihood<T> for MnlLikelihood<'_, T> {
    fn n_params(&self) -> usize {
        MNL_N_PARAMS
    }

    fn n_obs(&self) -> usize {
        self.frame.len()
    }

    fn param_names(&self) -> Vec<String> {
        MNL_PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn log_likelihood(&self, theta: &[T]) -> Result<T> {
        mnl::log_likelihood(&MnlParams::from_slice(theta)?, self.frame)
    }

    fn score(&self, theta: &[T]) -> Result<Vec<T>> {
        mnl::score(&MnlParams::from_slice(theta)?, self.frame)
    }

    fn row_scores(&self, theta: &[T]) -> Result<Vec<Vec<T>>> {
        let p = MnlParams::from_slice(theta)?;
        self.frame.rows().iter().map(|r| mnl::row_score(&p, r).map(|g| g.to_vec())).collect()
    }
}

pub struct OlLikelihood<'a, T> {
    pub frame: &'a ModelFrame<T>,
}

impl<T: Real> Likelihood<T> for OlLikelihood<'_, T> {
    fn n_params(&self) -> usize {
        OL_N_PARAMS
    }

    fn n_obs(&self) -> usize {
        self.frame.len()
    }

    fn param_names(&self) -> Vec<String> {
        OL_PARAM_NAMES.iter().map(|s| s.to_string()).collect()
    }

    fn log_likelihood(&self, theta: &[T]) -> Result<T> {
        ol::ol_log_likelihood(&OlParams::from_slice(theta)?, self.frame)
    }

    fn score(&self, theta: &[T]) -> Result<Vec<T>> {
        ol::ol_score(&OlParams::from_slice(theta)?, self.frame)
    }

    fn row_scores(&self, theta: &[T]) -> Result<Vec<Vec<T>>> {
        let p = OlParams::from_slice(theta)?;
        self.frame.rows().iter().map(|r| ol::ol_row_score(&p, r).map(|g| g.to_vec())).collect()
    }
}
