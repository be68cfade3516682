use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::FittedModel;
use crate::ingest::ModelFrame;
use crate::level::Level;
use crate::scalar::Real;

/// Most probable level per row (ties to the lower level).
pub fn predict_levels<T: Real>(model: &FittedModel<T>, frame: &ModelFrame<T>) -> Result<Vec<Level>> {
    if !model.converged {
        log::warn!("predicting with a {} model that did not converge", model.kind.label());
    }
    frame.rows().iter().map(|r| model.probabilities(r).map(|p| p.argmax())).collect()
}

/// Rows are actual levels, columns predicted levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[usize; 3]; 3],
    pub overall_accuracy: f64,
    /// Recall per actual level; `None` when that level never occurs.
    pub per_class_recall: [Option<f64>; 3],
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> usize {
        (0..3).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion_matrix(predicted: &[Level], actual: &[Level]) -> Result<ConfusionMatrix> {
    if predicted.len() != actual.len() {
        return Err(Error::InvalidInput(format!("{} predictions for {} actual levels", predicted.len(), actual.len())));
    }
    if actual.is_empty() {
        return Err(Error::Empty("confusion matrix of zero rows"));
    }
    let mut counts = [[0usize; 3]; 3];
    for (p, a) in predicted.iter().zip(actual) {
        counts[a.index()][p.index()] += 1;
    }
    let total = actual.len() as f64;
    let trace: usize = (0..3).map(|i| counts[i][i]).sum();
    let per_class_recall = std::array::from_fn(|j| {
        let row: usize = counts[j].iter().sum();
        (row > 0).then(|| counts[j][j] as f64 / row as f64)
    });
    Ok(ConfusionMatrix { counts, overall_accuracy: trace as f64 / total, per_class_recall })
}

/// Confusion matrix from raw integer codes, validating the range first.
pub fn confusion_matrix_from_codes(predicted: &[i64], actual: &[i64]) -> Result<ConfusionMatrix> {
    let conv = |v: &[i64]| v.iter().map(|&x| Level::try_from(x)).collect::<Result<Vec<_>>>();
    confusion_matrix(&conv(predicted)?, &conv(actual)?)
}

/// Accuracy of always predicting the most frequent actual level.
pub fn majority_baseline(actual: &[Level]) -> f64 {
    if actual.is_empty() {
        return f64::NAN;
    }
    let mut counts = [0usize; 3];
    for a in actual {
        counts[a.index()] += 1;
    }
    *counts.iter().max().expect("three counts") as f64 / actual.len() as f64
}
