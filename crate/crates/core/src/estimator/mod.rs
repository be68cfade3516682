//! Maximum-likelihood machinery shared by both models: optimizer, robust
//! covariance, Wald statistics and the likelihood ratio index.

mod covariance;
mod likelihood;
mod model;
mod optimize;
mod report;
mod wald;

pub use covariance::{invert_information, observed_information, sandwich_covariance, score_outer_product, Covariances};
pub use likelihood::{Likelihood, MnlLikelihood, OlLikelihood};
pub use model::{
    check_levels, fit, fit_mnl, fit_ol, null_log_likelihood, probabilities_for, restat, sandwich_covariance_for,
    FittedModel, ModelKind, SEPARATION_GUARD,
};
pub use optimize::{maximize, OptimOptions, OptimResult, Termination};
pub use report::{lenient_f64, ConvergenceBlock, FittedModelReport, LabeledMatrix, NamedValue, ParameterRow};
pub use wald::{ll_ratio, normal_two_sided_p, wald_stats, WaldStat};
