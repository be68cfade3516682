//! End-to-end run: ingest, discretize, lag, split, scale, fit, evaluate,
//! elasticities.

use std::fmt;
use std::path::PathBuf;

use linkdcm::ingest::Attribute;
use linkdcm::rng::derive_seed;
use linkdcm::Level;
use serde::Serialize;

use crate::commands::{self, ModelMetrics, SplitSummary};
use crate::config::PipelineConfig;
use crate::output::Bundle;

pub const STAGE_DISCRETIZE: &str = "discretize";
pub const STAGE_SPLIT: &str = "split";

/// A failure tagged with the stage it happened in.
#[derive(Debug)]
pub struct StageError {
    pub stage: &'static str,
    pub error: anyhow::Error,
}

impl fmt::Display for StageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} stage failed: {:#}", self.stage, self.error)
    }
}

impl std::error::Error for StageError {}

pub trait StageContext<T> {
    fn stage(self, stage: &'static str) -> Result<T, StageError>;
}

impl<T, E: Into<anyhow::Error>> StageContext<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, StageError> {
        self.map_err(|e| StageError { stage, error: e.into() })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    pub seed: u64,
    pub input_rows: usize,
    pub frame_rows: usize,
    pub split: SplitSummary,
    pub models: Vec<ModelMetrics>,
}

#[derive(Debug)]
pub struct PipelineOutcome {
    pub metrics: Metrics,
    pub files: Vec<PathBuf>,
}

/// Runs every stage and writes the report bundle into `cfg.out_dir`. On
/// failure the partial bundle is removed and `error.json` names the stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineOutcome, StageError> {
    let mut bundle = Bundle::create(&cfg.out_dir).stage("output")?;
    match run_stages(cfg, &mut bundle) {
        Ok(metrics) => Ok(PipelineOutcome { metrics, files: bundle.written().to_vec() }),
        Err(e) => {
            if let Err(io) = bundle.abort(e.stage, &e.error) {
                log::error!("could not write the error record: {io:#}");
            }
            Err(e)
        }
    }
}

fn run_stages(cfg: &PipelineConfig, bundle: &mut Bundle) -> Result<Metrics, StageError> {
    let table = commands::load_table(&cfg.input).stage("ingest")?;

    let kmeans = cfg.kmeans_options(derive_seed(cfg.seed, STAGE_DISCRETIZE));
    let (clustering, levels) = commands::run_discretize(&table, &kmeans).stage(STAGE_DISCRETIZE)?;
    bundle.write_versioned("clustering.json", &clustering).stage(STAGE_DISCRETIZE)?;
    commands::write_levels(bundle, &table, &levels).stage(STAGE_DISCRETIZE)?;

    let (lagged, _) = commands::run_frame(&table, &levels).stage("frame")?;

    let split = commands::run_split(&lagged.frame, cfg.n_train, cfg.n_test, derive_seed(cfg.seed, STAGE_SPLIT))
        .stage(STAGE_SPLIT)?;
    bundle.write_versioned("scaler.json", &split.scaler).stage(STAGE_SPLIT)?;
    commands::write_frame(bundle, "train_frame.csv", &split.train).stage(STAGE_SPLIT)?;
    commands::write_frame(bundle, "test_frame.csv", &split.test).stage(STAGE_SPLIT)?;

    let mut models = Vec::new();
    for kind in cfg.model.kinds() {
        let fit_stage = match kind {
            linkdcm::estimator::ModelKind::Mnl => "fit-mnl",
            linkdcm::estimator::ModelKind::Ol => "fit-ol",
        };
        let fitted = commands::run_fit(kind, &split.train, &cfg.optimizer).stage(fit_stage)?;
        commands::write_fitted(bundle, &fitted).stage(fit_stage)?;

        let eval = commands::run_evaluate(&fitted, &split.test).stage("evaluate")?;
        commands::write_predictions(bundle, kind, &split.test, &eval).stage("evaluate")?;
        commands::write_confusion(bundle, kind, &eval.confusion).stage("evaluate")?;
        models.push(commands::model_metrics(&fitted, &eval));

        let reports =
            commands::run_elasticity(&fitted, &split.test, &Level::ALL, &Attribute::SCALED).stage("elasticity")?;
        commands::write_elasticity(bundle, &fitted, &split.test, &reports).stage("elasticity")?;
    }

    let metrics = Metrics {
        seed: cfg.seed,
        input_rows: table.len(),
        frame_rows: lagged.frame.len(),
        split: split.summary,
        models,
    };
    bundle.write_versioned("metrics.json", &metrics).stage("evaluate")?;
    Ok(metrics)
}
