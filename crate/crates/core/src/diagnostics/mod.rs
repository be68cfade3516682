//! Prediction, confusion matrices, elasticities and the IIA test.

mod confusion;
mod elasticity;
mod iia;

pub use confusion::{
    confusion_matrix, confusion_matrix_from_codes, majority_baseline, predict_levels, ConfusionMatrix,
};
pub use elasticity::{direct_elasticity, five_number_summary, ElasticityReport, FiveNumber};
pub use iia::{hausman_iia, hausman_statistic, BinaryLogitLikelihood, HausmanResult, IIA_TEST_NAME};
