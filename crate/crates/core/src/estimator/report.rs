//! Serializable form of a fitted model.

use serde::{Deserialize, Serialize};

use super::model::{restat, FittedModel, ModelKind};
use super::optimize::Termination;
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::SCHEMA_VERSION;

/// Numbers that may be infinite (e.g. a t-statistic with zero standard
/// error) are written as strings `"inf"`, `"-inf"` or `"nan"`.
pub mod lenient_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other:?}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// One row of the parameter table: value, robust standard error, robust
/// p-value and robust t-test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterRow {
    pub name: String,
    pub value: f64,
    #[serde(with = "lenient_f64")]
    pub rb_std_err: f64,
    #[serde(with = "lenient_f64")]
    pub rb_p_val: f64,
    #[serde(with = "lenient_f64")]
    pub rb_t_test: f64,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMatrix {
    pub names: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceBlock {
    pub converged: bool,
    pub iterations: usize,
    pub termination: Termination,
    pub score_inf_norm: f64,
    pub grad_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedModelReport {
    pub spec_version: String,
    pub model: ModelKind,
    pub n_obs: usize,
    pub parameters: Vec<ParameterRow>,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub ll_ratio: f64,
    pub free_parameters: Vec<NamedValue>,
    /// Robust covariance of the free parameters.
    pub covariance: LabeledMatrix,
    pub classical_covariance: LabeledMatrix,
    pub convergence: ConvergenceBlock,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl FittedModel<f64> {
    pub fn to_report(&self) -> FittedModelReport {
        let parameters = self
            .reported_names
            .iter()
            .zip(&self.stats)
            .map(|(name, s)| ParameterRow {
                name: name.clone(),
                value: s.value,
                rb_std_err: s.se,
                rb_p_val: s.p,
                rb_t_test: s.t,
                flagged: s.flagged,
            })
            .collect();
        let labeled = |m: &Matrix<f64>| LabeledMatrix { names: self.free_names.clone(), matrix: m.to_rows() };
        FittedModelReport {
            spec_version: SCHEMA_VERSION.to_string(),
            model: self.kind,
            n_obs: self.n_obs,
            parameters,
            log_likelihood: self.ll,
            null_log_likelihood: self.ll_null,
            ll_ratio: self.ll_ratio,
            free_parameters: self
                .free_names
                .iter()
                .zip(&self.theta)
                .map(|(n, &v)| NamedValue { name: n.clone(), value: v })
                .collect(),
            covariance: labeled(&self.covariance),
            classical_covariance: labeled(&self.classical_covariance),
            convergence: ConvergenceBlock {
                converged: self.converged,
                iterations: self.iterations,
                termination: self.termination,
                score_inf_norm: self.score_inf_norm,
                grad_tol: self.grad_tol,
            },
            warnings: self.warnings.clone(),
        }
    }

    pub fn from_report(report: &FittedModelReport) -> Result<Self> {
        let theta: Vec<f64> = report.free_parameters.iter().map(|p| p.value).collect();
        let free_names: Vec<String> = report.free_parameters.iter().map(|p| p.name.clone()).collect();
        let square = |m: &LabeledMatrix| -> Result<Matrix<f64>> {
            if m.matrix.len() != theta.len() || m.matrix.iter().any(|r| r.len() != theta.len()) {
                return Err(Error::InvalidInput("covariance shape does not match the parameter vector".into()));
            }
            Ok(Matrix::from_rows(&m.matrix))
        };
        let covariance = square(&report.covariance)?;
        let classical_covariance = square(&report.classical_covariance)?;
        let (reported_names, stats) = restat(report.model, &theta, &covariance)?;
        Ok(Self {
            kind: report.model,
            theta,
            free_names,
            covariance,
            classical_covariance,
            ll: report.log_likelihood,
            ll_null: report.null_log_likelihood,
            ll_ratio: report.ll_ratio,
            n_obs: report.n_obs,
            converged: report.convergence.converged,
            iterations: report.convergence.iterations,
            termination: report.convergence.termination,
            score_inf_norm: report.convergence.score_inf_norm,
            grad_tol: report.convergence.grad_tol,
            reported_names,
            stats,
            warnings: report.warnings.clone(),
        })
    }
}
