//! Synthetic link panels with known generating parameters.
//!
//! Attributes are drawn on the unit interval and mapped to raw units through
//! a fixed [`ScalerParams`]. Each link follows its own random stream, so the
//! panel does not depend on generation order.

use std::collections::BTreeMap;

use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::discretizer::LevelSeries;
use crate::error::{Error, Result};
use crate::estimator::ModelKind;
use crate::ingest::{
    build_lagged, Attribute, ColumnRange, FrameRow, LinkRecord, ModelFrame, ObservationTable, RowKey, ScalerParams,
    N_COVARIATES,
};
use crate::level::Level;
use crate::mnl::{choice_probabilities, utilities_from, MnlParams, ProbabilityVector, MNL_PARAM_NAMES};
use crate::ordered_logit::{ol_class_probs, ol_index_from, OlParams, OL_REPORTED_NAMES};
use crate::rng::StreamRng;

/// Capacity per lane used to fill the flow-over-capacity column.
pub const LANE_CAPACITY: f64 = 1900.0;
/// Link length in km used to fill the delay column.
pub const LINK_LENGTH_KM: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnitLaw {
    Uniform,
    Beta {
        alpha: f64,
        beta: f64,
    },
    /// Uniform over `levels` equally spaced points including 0 and 1.
    Discrete {
        levels: u32,
    },
}

impl UnitLaw {
    fn validate(&self) -> Result<()> {
        match *self {
            UnitLaw::Uniform => Ok(()),
            UnitLaw::Beta { alpha, beta } if alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite() => {
                Ok(())
            }
            UnitLaw::Beta { alpha, beta } => {
                Err(Error::InvalidInput(format!("beta law needs positive shapes, got ({alpha}, {beta})")))
            }
            UnitLaw::Discrete { levels } if levels >= 2 => Ok(()),
            UnitLaw::Discrete { levels } => {
                Err(Error::InvalidInput(format!("discrete law needs at least 2 levels, got {levels}")))
            }
        }
    }

    fn sample(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            UnitLaw::Uniform => rng.uniform(),
            UnitLaw::Beta { alpha, beta } => Beta::new(alpha, beta).expect("validated shapes").sample(rng),
            UnitLaw::Discrete { levels } => rng.below(u64::from(levels)) as f64 / f64::from(levels - 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeLaw {
    #[serde(flatten)]
    pub law: UnitLaw,
    /// Probability of keeping the previous step's value.
    #[serde(default)]
    pub persistence: f64,
}

impl AttributeLaw {
    pub fn uniform() -> Self {
        Self { law: UnitLaw::Uniform, persistence: 0.0 }
    }
}

/// Generating parameters as `{model, parameters}` with parameters keyed by
/// their reported names. Ordered-logit thresholds are given as (μ₁, μ₂).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthSpec {
    pub model: ModelKind,
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truth {
    Mnl(MnlParams<f64>),
    Ol(OlParams<f64>),
}

impl Truth {
    pub fn kind(&self) -> ModelKind {
        match self {
            Truth::Mnl(_) => ModelKind::Mnl,
            Truth::Ol(_) => ModelKind::Ol,
        }
    }

    /// Parameters in the reported order of the model.
    pub fn reported(&self) -> Vec<f64> {
        match self {
            Truth::Mnl(p) => p.to_vec(),
            Truth::Ol(p) => p.reported(),
        }
    }

    pub fn reported_names(&self) -> &'static [&'static str] {
        match self {
            Truth::Mnl(_) => &MNL_PARAM_NAMES,
            Truth::Ol(_) => &OL_REPORTED_NAMES,
        }
    }

    pub fn probabilities(&self, x: &[f64; N_COVARIATES]) -> Result<ProbabilityVector<f64>> {
        match self {
            Truth::Mnl(p) => choice_probabilities(&utilities_from(p, x)),
            Truth::Ol(p) => ol_class_probs(ol_index_from(p, x), p.mu1, p.mu2()),
        }
    }

    pub fn to_spec(&self) -> TruthSpec {
        let parameters = self.reported_names().iter().zip(self.reported()).map(|(n, v)| (n.to_string(), v)).collect();
        TruthSpec { model: self.kind(), parameters }
    }
}

impl TruthSpec {
    pub fn to_truth(&self) -> Result<Truth> {
        let names: &[&str] = match self.model {
            ModelKind::Mnl => &MNL_PARAM_NAMES,
            ModelKind::Ol => &OL_REPORTED_NAMES,
        };
        if let Some(unknown) = self.parameters.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(Error::InvalidInput(format!("unknown {} parameter \"{unknown}\"", self.model.label())));
        }
        let values = names
            .iter()
            .map(|n| {
                self.parameters
                    .get(*n)
                    .copied()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::InvalidInput(format!("truth is missing a finite value for \"{n}\"")))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(match self.model {
            ModelKind::Mnl => Truth::Mnl(MnlParams::from_slice(&values)?),
            ModelKind::Ol => {
                let mut eta = [0.0; N_COVARIATES];
                eta.copy_from_slice(&values[..N_COVARIATES]);
                Truth::Ol(OlParams::from_thresholds(eta, values[6], values[7])?)
            }
        })
    }
}

impl From<Truth> for TruthSpec {
    fn from(t: Truth) -> Self {
        t.to_spec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_links: usize,
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default = "default_scenario")]
    pub scenario: i64,
    pub truth: TruthSpec,
    /// Laws for link speed, density per lane, free-flow speed and lanes.
    #[serde(default = "default_attribute_laws")]
    pub attribute_laws: [AttributeLaw; 4],
    #[serde(default = "default_initial_level_law")]
    pub initial_level_law: [f64; 3],
    /// Raw-unit ranges used to map unit attributes back to the table.
    #[serde(default = "default_raw_scale")]
    pub raw_scale: ScalerParams,
    /// Emission-rate interval per level, in g/s.
    #[serde(default = "default_ghg_bands")]
    pub ghg_bands: [[f64; 2]; 3],
}

fn default_scenario() -> i64 {
    1
}

pub fn default_attribute_laws() -> [AttributeLaw; 4] {
    let u = AttributeLaw::uniform();
    [u, u, u, AttributeLaw { law: UnitLaw::Discrete { levels: 4 }, persistence: 0.0 }]
}

fn default_initial_level_law() -> [f64; 3] {
    [1.0 / 3.0; 3]
}

pub fn default_raw_scale() -> ScalerParams {
    let range = |a: Attribute, min: f64, max: f64| ColumnRange {
        column: a.source_column().expect("scaled attribute").header().to_string(),
        min,
        max,
        constant: false,
    };
    ScalerParams {
        columns: vec![
            range(Attribute::LinkSpeed, 5.0, 100.0),
            range(Attribute::DensityPerLane, 0.0, 120.0),
            range(Attribute::FreeFlowSpeed, 40.0, 100.0),
            range(Attribute::NumberOfLanes, 1.0, 4.0),
        ],
    }
}

fn default_ghg_bands() -> [[f64; 2]; 3] {
    [[0.5, 1.5], [4.0, 6.0], [10.0, 12.0]]
}

impl GeneratorSpec {
    pub fn new(n_links: usize, n_steps: usize, seed: u64, truth: Truth) -> Self {
        Self {
            n_links,
            n_steps,
            seed,
            scenario: default_scenario(),
            truth: truth.to_spec(),
            attribute_laws: default_attribute_laws(),
            initial_level_law: default_initial_level_law(),
            raw_scale: default_raw_scale(),
            ghg_bands: default_ghg_bands(),
        }
    }

    pub fn validate(&self) -> Result<Truth> {
        if self.n_links == 0 || self.n_steps == 0 {
            return Err(Error::InvalidInput("n_links and n_steps must be at least 1".into()));
        }
        for (a, law) in Attribute::SCALED.iter().zip(&self.attribute_laws) {
            law.law.validate()?;
            if !(0.0..1.0).contains(&law.persistence) {
                return Err(Error::InvalidInput(format!(
                    "persistence for {} must lie in [0, 1), got {}",
                    a.name(),
                    law.persistence
                )));
            }
        }
        let w = self.initial_level_law;
        if w.iter().any(|&p| !(p >= 0.0 && p.is_finite())) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput("initial_level_law needs non-negative weights with a positive sum".into()));
        }
        for a in Attribute::SCALED {
            let r = self.raw_scale.require(a.source_column().expect("scaled attribute").header())?;
            if !(r.max > r.min && r.min >= 0.0 && r.max.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "raw range for {} must be non-negative and increasing",
                    r.column
                )));
            }
        }
        let lanes = self.raw_scale.require(Attribute::NumberOfLanes.source_column().expect("lanes").header())?;
        if lanes.min < 1.0 {
            return Err(Error::InvalidInput("lane range must start at 1 or more".into()));
        }
        let b = self.ghg_bands;
        let ordered =
            b.iter().all(|[lo, hi]| *lo >= 0.0 && hi > lo && hi.is_finite()) && b[0][1] < b[1][0] && b[1][1] < b[2][0];
        if !ordered {
            return Err(Error::InvalidInput("ghg_bands must be non-negative, increasing and disjoint".into()));
        }
        self.truth.to_truth()
    }
}

/// Generator output: the raw table, its levels, and the unit-scale frame
/// with the true class probabilities of every frame row.
#[derive(Debug, Clone)]
pub struct SyntheticPanel {
    pub table: ObservationTable,
    pub levels: LevelSeries,
    pub frame: ModelFrame<f64>,
    pub probabilities: Vec<[f64; 3]>,
    pub truth: Truth,
}

fn raw_record(spec: &GeneratorSpec, key: RowKey, unit: &[f64; 4], ghg_er: f64) -> Result<LinkRecord> {
    let mut raw = [0.0; 4];
    for (k, a) in Attribute::SCALED.iter().enumerate() {
        raw[k] = spec.raw_scale.require(a.source_column().expect("scaled attribute").header())?.invert(unit[k]);
    }
    let [speed, density, ffs, lanes] = raw;
    let lanes = lanes.round();
    let flow_per_lane = speed * density;
    let total_flow = flow_per_lane * lanes;
    let delay = (3600.0 * LINK_LENGTH_KM * (1.0 / speed - 1.0 / ffs)).max(0.0);
    Ok(LinkRecord {
        scenario: key.scenario,
        link_number: key.link_number,
        time: key.time,
        free_flow_speed: ffs,
        number_of_lanes: lanes,
        link_speed: speed,
        link_total_density: density * lanes,
        link_density_per_lane: density,
        link_total_flow: total_flow,
        link_flow_per_lane: flow_per_lane,
        delay_on_link: delay,
        in_links_density_per_lane: density,
        in_links_total_flow: total_flow,
        in_links_flow_per_lane: flow_per_lane,
        flow_over_capacity: flow_per_lane / LANE_CAPACITY,
        ghg_er,
    })
}

pub fn generate_panel(spec: &GeneratorSpec) -> Result<SyntheticPanel> {
    let truth = spec.validate()?;
    let n = spec.n_links * spec.n_steps;
    let mut records = Vec::with_capacity(n);
    let mut levels = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(spec.n_links * (spec.n_steps - 1));
    let mut probabilities = Vec::with_capacity(rows.capacity());

    for link in 0..spec.n_links {
        let mut rng = StreamRng::new(spec.seed, link as u64);
        let mut unit = [0.0; 4];
        let mut prev: Option<Level> = None;
        for t in 0..spec.n_steps {
            for (k, law) in spec.attribute_laws.iter().enumerate() {
                let keep = t > 0 && law.persistence > 0.0 && rng.uniform() < law.persistence;
                if !keep {
                    unit[k] = law.law.sample(&mut rng);
                }
            }
            let key = RowKey { scenario: spec.scenario, link_number: link as i64 + 1, time: t as i64 };
            let level = match prev {
                None => Level::from_index(rng.weighted_index(&spec.initial_level_law)).expect("three weights"),
                Some(p) => {
                    let row = FrameRow {
                        key,
                        attributes: unit,
                        prev_medium: p == Level::Medium,
                        prev_high: p == Level::High,
                        chosen: Level::Low,
                    };
                    let probs = truth.probabilities(&row.covariates())?.0;
                    let level = Level::from_index(rng.weighted_index(&probs)).expect("three weights");
                    rows.push(FrameRow { chosen: level, ..row });
                    probabilities.push(probs);
                    level
                }
            };
            let [lo, hi] = spec.ghg_bands[level.index()];
            let ghg = lo + (hi - lo) * rng.uniform();
            records.push(raw_record(spec, key, &unit, ghg)?);
            levels.push(level);
            prev = Some(level);
        }
    }

    if levels.iter().all(|&l| l == levels[0]) {
        log::warn!("every generated level is {}; downstream fits will reject this panel", levels[0]);
    }
    Ok(SyntheticPanel {
        table: ObservationTable::new(records)?,
        levels: LevelSeries::from_levels(levels),
        frame: ModelFrame::new(rows)?,
        probabilities,
        truth,
    })
}

pub fn generate(spec: &GeneratorSpec) -> Result<(ObservationTable, LevelSeries)> {
    let panel = generate_panel(spec)?;
    Ok((panel.table, panel.levels))
}

/// Accuracy of the argmax-under-truth classifier on a unit-scale frame.
pub fn bayes_accuracy_frame(truth: &Truth, frame: &ModelFrame<f64>) -> Result<f64> {
    if frame.is_empty() {
        return Err(Error::Empty("Bayes accuracy of an empty frame"));
    }
    let mut hits = 0usize;
    for row in frame.rows() {
        if truth.probabilities(&row.covariates())?.argmax() == row.chosen {
            hits += 1;
        }
    }
    Ok(hits as f64 / frame.len() as f64)
}

/// Accuracy of the argmax-under-truth classifier on a realized panel. Raw
/// attributes are mapped back to the unit scale through the spec's ranges.
pub fn bayes_accuracy(spec: &GeneratorSpec, table: &ObservationTable, levels: &LevelSeries) -> Result<f64> {
    let truth = spec.validate()?;
    let lagged = build_lagged(table, levels)?;
    let unit = lagged.frame.scale(&spec.raw_scale)?.data;
    bayes_accuracy_frame(&truth, &unit)
}
