//! Individual pipeline steps. Each subcommand and the full pipeline are
//! built from these functions.

use std::path::Path;

use anyhow::{ensure, Context, Result};
use linkdcm::diagnostics::{
    confusion_matrix, direct_elasticity, hausman_iia, majority_baseline, ConfusionMatrix, ElasticityReport, FiveNumber,
    HausmanResult,
};
use linkdcm::discretizer::{discretize, Clustering, KMeansOptions, LevelSeries};
use linkdcm::estimator::{fit, FittedModel, FittedModelReport, ModelKind, OptimOptions};
use linkdcm::ingest::{
    build_lagged, load_csv, read_frame_csv, write_csv, write_frame_csv, Attribute, Column, LaggedFrame, ModelFrame,
    ObservationTable, ScalerParams,
};
use linkdcm::synthgen::{bayes_accuracy_frame, generate_panel, GeneratorSpec, SyntheticPanel, TruthSpec};
use linkdcm::Level;
use serde::Serialize;

use crate::output::{confusion_rows, key_cells, level_rows, versioned, Bundle, CONFUSION_HEADER, LEVEL_HEADER};

pub fn model_tag(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Mnl => "mnl",
        ModelKind::Ol => "ol",
    }
}

pub fn load_table(path: &Path) -> Result<ObservationTable> {
    let table = load_csv(path).with_context(|| format!("loading {}", path.display()))?;
    log::info!("loaded {} rows from {}", table.len(), path.display());
    Ok(table)
}

pub fn load_frame(path: &Path) -> Result<ModelFrame<f64>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_frame_csv(file).with_context(|| format!("reading frame {}", path.display()))
}

pub fn load_fitted(path: &Path) -> Result<FittedModel<f64>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let report: FittedModelReport =
        serde_json::from_str(&text).with_context(|| format!("parsing fitted model {}", path.display()))?;
    Ok(FittedModel::from_report(&report)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnSummary {
    pub column: &'static str,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestSummary {
    pub rows: usize,
    pub link_groups: usize,
    pub columns: Vec<ColumnSummary>,
}

pub fn ingest_summary(table: &ObservationTable) -> IngestSummary {
    let columns = Column::ALL
        .iter()
        .map(|&c| {
            let v = table.column(c);
            let n = v.len().max(1) as f64;
            ColumnSummary {
                column: c.header(),
                min: v.iter().copied().fold(f64::INFINITY, f64::min),
                max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean: v.iter().sum::<f64>() / n,
            }
        })
        .collect();
    IngestSummary { rows: table.len(), link_groups: table.group_count(), columns }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusteringSummary {
    pub k: usize,
    pub seed: u64,
    pub restarts: usize,
    /// Centroids in ascending order (level 1 first).
    pub centroids: Vec<f64>,
    pub thresholds: [f64; 2],
    pub inertia: f64,
    pub iterations: usize,
    pub converged: bool,
    pub level_counts: [usize; 3],
}

pub fn run_discretize(table: &ObservationTable, opts: &KMeansOptions) -> Result<(ClusteringSummary, LevelSeries)> {
    let values = table.column(Column::GhgEr);
    let (clustering, series): (Clustering<f64>, LevelSeries) = discretize(&values, opts)?;
    let mut centroids = clustering.centroids.clone();
    centroids.sort_by(|a, b| a.total_cmp(b));
    let mut level_counts = [0usize; 3];
    for l in &series.levels {
        level_counts[l.index()] += 1;
    }
    let summary = ClusteringSummary {
        k: opts.k,
        seed: opts.seed,
        restarts: opts.restarts,
        centroids,
        thresholds: series.thresholds.context("clustering produced no thresholds")?,
        inertia: clustering.inertia,
        iterations: clustering.iterations,
        converged: clustering.converged,
        level_counts,
    };
    Ok((summary, series))
}

pub fn write_levels(bundle: &mut Bundle, table: &ObservationTable, levels: &LevelSeries) -> Result<()> {
    bundle.write_csv("levels.csv", &LEVEL_HEADER, &level_rows(table, levels))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FrameSummary {
    pub rows: usize,
    pub singleton_groups: usize,
    pub level_counts: [usize; 3],
}

pub fn run_frame(table: &ObservationTable, levels: &LevelSeries) -> Result<(LaggedFrame<f64>, FrameSummary)> {
    let lagged = build_lagged(table, levels)?;
    let summary = FrameSummary {
        rows: lagged.frame.len(),
        singleton_groups: lagged.singleton_groups,
        level_counts: lagged.frame.level_counts(),
    };
    Ok((lagged, summary))
}

pub fn write_frame(bundle: &mut Bundle, name: &str, frame: &ModelFrame<f64>) -> Result<()> {
    bundle.write_with(name, |w| write_frame_csv(frame, w))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSummary {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub out_of_range_test: usize,
}

pub struct SplitFrames {
    pub train: ModelFrame<f64>,
    pub test: ModelFrame<f64>,
    pub scaler: ScalerParams,
    pub summary: SplitSummary,
}

/// Splits frame rows, fits the min-max scaler on the training rows and
/// scales both parts with it.
pub fn run_split(frame: &ModelFrame<f64>, n_train: usize, n_test: usize, seed: u64) -> Result<SplitFrames> {
    let (train_idx, test_idx) = linkdcm::ingest::split_indices(frame.len(), n_train, n_test, seed)?;
    let train_raw = frame.select(&train_idx);
    let test_raw = frame.select(&test_idx);
    let scaler = train_raw.fit_scaler()?;
    let train = train_raw.scale(&scaler)?.data;
    let test = test_raw.scale(&scaler)?;
    let summary = SplitSummary { seed, n_train, n_test, out_of_range_test: test.out_of_range.len() };
    Ok(SplitFrames { train, test: test.data, scaler, summary })
}

pub fn run_fit(kind: ModelKind, frame: &ModelFrame<f64>, options: &OptimOptions) -> Result<FittedModel<f64>> {
    let fitted = fit(kind, frame, options)?;
    for w in &fitted.warnings {
        log::warn!("{}: {w}", kind.label());
    }
    log::info!(
        "{} fit: ll = {:.4}, ll_ratio = {:.4}, {} iterations",
        kind.label(),
        fitted.ll,
        fitted.ll_ratio,
        fitted.iterations
    );
    Ok(fitted)
}

pub fn write_fitted(bundle: &mut Bundle, model: &FittedModel<f64>) -> Result<String> {
    let name = format!("fitted_{}.json", model_tag(model.kind));
    bundle.write_json(&name, &model.to_report())?;
    Ok(name)
}

pub struct Evaluation {
    pub predicted: Vec<Level>,
    pub probabilities: Vec<[f64; 3]>,
    pub confusion: ConfusionMatrix,
    pub majority_baseline: f64,
}

pub fn run_evaluate(model: &FittedModel<f64>, frame: &ModelFrame<f64>) -> Result<Evaluation> {
    let probabilities =
        frame.rows().iter().map(|r| model.probabilities(r).map(|p| p.0)).collect::<linkdcm::Result<Vec<_>>>()?;
    let predicted: Vec<Level> = probabilities.iter().map(|p| linkdcm::mnl::ProbabilityVector(*p).argmax()).collect();
    let actual = frame.chosen();
    let confusion = confusion_matrix(&predicted, &actual)?;
    Ok(Evaluation { predicted, probabilities, confusion, majority_baseline: majority_baseline(&actual) })
}

pub const PREDICTION_HEADER: [&str; 8] =
    ["Scenario", "Link Number", "Time", "Actual", "Predicted", "P_Low", "P_Medium", "P_High"];

pub fn write_predictions(
    bundle: &mut Bundle,
    kind: ModelKind,
    frame: &ModelFrame<f64>,
    eval: &Evaluation,
) -> Result<()> {
    let rows: Vec<Vec<String>> = frame
        .rows()
        .iter()
        .zip(&eval.predicted)
        .zip(&eval.probabilities)
        .map(|((r, p), probs)| {
            let mut row = key_cells(&r.key);
            row.push(r.chosen.value().to_string());
            row.push(p.value().to_string());
            row.extend(probs.iter().map(|v| v.to_string()));
            row
        })
        .collect();
    bundle.write_csv(&format!("predictions_{}.csv", model_tag(kind)), &PREDICTION_HEADER, &rows)?;
    Ok(())
}

pub fn write_confusion(bundle: &mut Bundle, kind: ModelKind, cm: &ConfusionMatrix) -> Result<()> {
    bundle.write_csv(&format!("confusion_{}.csv", model_tag(kind)), &CONFUSION_HEADER, &confusion_rows(cm))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelMetrics {
    pub model: ModelKind,
    pub n_eval: usize,
    pub accuracy: f64,
    pub per_class_recall: [Option<f64>; 3],
    pub confusion: [[usize; 3]; 3],
    pub majority_baseline: f64,
    pub n_obs: usize,
    pub log_likelihood: f64,
    pub null_log_likelihood: f64,
    pub ll_ratio: f64,
    pub converged: bool,
}

pub fn model_metrics(model: &FittedModel<f64>, eval: &Evaluation) -> ModelMetrics {
    ModelMetrics {
        model: model.kind,
        n_eval: eval.predicted.len(),
        accuracy: eval.confusion.overall_accuracy,
        per_class_recall: eval.confusion.per_class_recall,
        confusion: eval.confusion.counts,
        majority_baseline: eval.majority_baseline,
        n_obs: model.n_obs,
        log_likelihood: model.ll,
        null_log_likelihood: model.ll_null,
        ll_ratio: model.ll_ratio,
        converged: model.converged,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ElasticityEntry {
    pub alternative: Level,
    pub attribute: &'static str,
    pub coefficient: f64,
    pub summary: FiveNumber<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finite_difference_summary: Option<FiveNumber<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ElasticitySummary {
    pub model: ModelKind,
    pub n_obs: usize,
    pub entries: Vec<ElasticityEntry>,
}

pub fn run_elasticity(
    model: &FittedModel<f64>,
    frame: &ModelFrame<f64>,
    alternatives: &[Level],
    attributes: &[Attribute],
) -> Result<Vec<ElasticityReport<f64>>> {
    let mut out = Vec::with_capacity(alternatives.len() * attributes.len());
    for &alt in alternatives {
        for &attr in attributes {
            out.push(direct_elasticity(model, frame, alt, attr)?);
        }
    }
    Ok(out)
}

pub fn write_elasticity(
    bundle: &mut Bundle,
    model: &FittedModel<f64>,
    frame: &ModelFrame<f64>,
    reports: &[ElasticityReport<f64>],
) -> Result<()> {
    let tag = model_tag(model.kind);
    let mut header: Vec<String> = crate::output::KEY_HEADER.iter().map(|s| s.to_string()).collect();
    for r in reports {
        header.push(format!("E_{}_{}", r.alternative.value(), r.attribute.name()));
        if r.finite_difference.is_some() {
            header.push(format!("FD_{}_{}", r.alternative.value(), r.attribute.name()));
        }
    }
    let rows: Vec<Vec<String>> = frame
        .rows()
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut cells = key_cells(&row.key);
            for r in reports {
                cells.push(r.values[i].to_string());
                if let Some(fd) = &r.finite_difference {
                    cells.push(fd[i].to_string());
                }
            }
            cells
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    bundle.write_csv(&format!("elasticity_{tag}.csv"), &header_refs, &rows)?;
    let summary = ElasticitySummary {
        model: model.kind,
        n_obs: frame.len(),
        entries: reports
            .iter()
            .map(|r| ElasticityEntry {
                alternative: r.alternative,
                attribute: r.attribute.name(),
                coefficient: r.coefficient,
                summary: r.summary,
                finite_difference_summary: r.finite_difference_summary,
            })
            .collect(),
    };
    bundle.write_versioned(&format!("elasticity_{tag}.json"), &summary)?;
    Ok(())
}

pub fn run_iia(model: &FittedModel<f64>, frame: &ModelFrame<f64>, dropped: Level) -> Result<HausmanResult> {
    ensure!(model.kind == ModelKind::Mnl, "the IIA test needs a fitted MNL model");
    Ok(hausman_iia(model, frame, dropped)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct TruthRecord {
    pub truth: TruthSpec,
    pub generator: GeneratorSpec,
    pub rows: usize,
    pub frame_rows: usize,
    pub level_counts: [usize; 3],
    pub bayes_accuracy: f64,
}

pub fn run_synth(spec: &GeneratorSpec) -> Result<(SyntheticPanel, TruthRecord)> {
    let panel = generate_panel(spec)?;
    let mut level_counts = [0usize; 3];
    for l in &panel.levels.levels {
        level_counts[l.index()] += 1;
    }
    let record = TruthRecord {
        truth: panel.truth.to_spec(),
        generator: spec.clone(),
        rows: panel.table.len(),
        frame_rows: panel.frame.len(),
        level_counts,
        bayes_accuracy: bayes_accuracy_frame(&panel.truth, &panel.frame)?,
    };
    Ok((panel, record))
}

pub fn write_synth(bundle: &mut Bundle, panel: &SyntheticPanel, record: &TruthRecord) -> Result<()> {
    bundle.write_with("table.csv", |w| write_csv(&panel.table, w))?;
    write_levels(bundle, &panel.table, &panel.levels)?;
    bundle.write_json("truth.json", &versioned(record))?;
    Ok(())
}
