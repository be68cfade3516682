//! Estimation frame: four link attributes, lagged level dummies and the
//! realized level for every observation that has a predecessor.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::scaler::{ColumnRange, OutOfRange, Scaled, ScalerParams};
use super::table::{Column, ObservationTable, RowKey};
use crate::discretizer::LevelSeries;
use crate::error::{Error, Result};
use crate::level::Level;
use crate::scalar::Real;

/// Number of covariates entering every utility / index.
pub const N_COVARIATES: usize = 6;

/// Covariate order shared by both models and by every serialized vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Attribute {
    LinkSpeed,
    DensityPerLane,
    FreeFlowSpeed,
    NumberOfLanes,
    PrevMediumGhg,
    PrevHighGhg,
}

impl Attribute {
    pub const ALL: [Attribute; N_COVARIATES] = [
        Attribute::LinkSpeed,
        Attribute::DensityPerLane,
        Attribute::FreeFlowSpeed,
        Attribute::NumberOfLanes,
        Attribute::PrevMediumGhg,
        Attribute::PrevHighGhg,
    ];

    /// The four continuous attributes taken from the observation table.
    pub const SCALED: [Attribute; 4] =
        [Attribute::LinkSpeed, Attribute::DensityPerLane, Attribute::FreeFlowSpeed, Attribute::NumberOfLanes];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn source_column(self) -> Option<Column> {
        match self {
            Attribute::LinkSpeed => Some(Column::LinkSpeed),
            Attribute::DensityPerLane => Some(Column::LinkDensityPerLane),
            Attribute::FreeFlowSpeed => Some(Column::FreeFlowSpeed),
            Attribute::NumberOfLanes => Some(Column::NumberOfLanes),
            Attribute::PrevMediumGhg | Attribute::PrevHighGhg => None,
        }
    }

    /// Short snake-case name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            Attribute::LinkSpeed => "link_speed",
            Attribute::DensityPerLane => "density_per_lane",
            Attribute::FreeFlowSpeed => "free_flow_speed",
            Attribute::NumberOfLanes => "num_lanes",
            Attribute::PrevMediumGhg => "prev_medium",
            Attribute::PrevHighGhg => "prev_high",
        }
    }

    fn frame_header(self) -> &'static str {
        match self {
            Attribute::PrevMediumGhg => "Prev Medium GHG",
            Attribute::PrevHighGhg => "Prev High GHG",
            other => other.source_column().map(Column::header).unwrap_or_default(),
        }
    }
}

impl FromStr for Attribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Attribute::ALL
            .into_iter()
            .find(|a| a.name() == norm || a.frame_header().to_ascii_lowercase().replace(' ', "_") == norm)
            .ok_or_else(|| Error::InvalidInput(format!("unknown attribute \"{s}\"")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameRow<T> {
    pub key: RowKey,
    /// Link speed, density per lane, free-flow speed, number of lanes.
    pub attributes: [T; 4],
    pub prev_medium: bool,
    pub prev_high: bool,
    pub chosen: Level,
}

impl<T: Real> FrameRow<T> {
    /// Covariate vector in [`Attribute::ALL`] order.
    #[inline]
    pub fn covariates(&self) -> [T; N_COVARIATES] {
        let flag = |b: bool| if b { T::one() } else { T::zero() };
        let [a, b, c, d] = self.attributes;
        [a, b, c, d, flag(self.prev_medium), flag(self.prev_high)]
    }

    pub fn cast<U: Real>(&self) -> FrameRow<U> {
        FrameRow {
            key: self.key,
            attributes: self.attributes.map(|v| U::lit(v.to_f64_lossy())),
            prev_medium: self.prev_medium,
            prev_high: self.prev_high,
            chosen: self.chosen,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelFrame<T> {
    rows: Vec<FrameRow<T>>,
}

impl<T: Real> ModelFrame<T> {
    pub fn new(rows: Vec<FrameRow<T>>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| r.prev_medium && r.prev_high) {
            return Err(Error::InvalidInput(format!("row {:?} has both lagged medium and lagged high set", r.key)));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[FrameRow<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn chosen(&self) -> Vec<Level> {
        self.rows.iter().map(|r| r.chosen).collect()
    }

    pub fn level_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for r in &self.rows {
            counts[r.chosen.index()] += 1;
        }
        counts
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self { rows: indices.iter().map(|&i| self.rows[i]).collect() }
    }

    pub fn filter(&self, keep: impl Fn(&FrameRow<T>) -> bool) -> Self {
        Self { rows: self.rows.iter().filter(|r| keep(r)).copied().collect() }
    }

    /// The frame with every row repeated `times` times, in order.
    pub fn repeated(&self, times: usize) -> Self {
        Self { rows: (0..times).flat_map(|_| self.rows.iter().copied()).collect() }
    }

    pub fn cast<U: Real>(&self) -> ModelFrame<U> {
        ModelFrame { rows: self.rows.iter().map(FrameRow::cast).collect() }
    }

    pub fn attribute_column(&self, attribute: Attribute) -> Vec<T> {
        self.rows.iter().map(|r| r.covariates()[attribute.index()]).collect()
    }

    /// Fits a min-max range to each of the four continuous attributes.
    pub fn fit_scaler(&self) -> Result<ScalerParams> {
        if self.is_empty() {
            return Err(Error::Empty("cannot fit a scaler on an empty frame"));
        }
        let columns = Attribute::SCALED
            .iter()
            .map(|&a| {
                let header = a.source_column().expect("scaled attributes have a source column").header();
                ColumnRange::fit(header, self.rows.iter().map(|r| r.attributes[a.index()].to_f64_lossy()))
            })
            .collect::<Result<_>>()?;
        Ok(ScalerParams { columns })
    }

    /// Applies a min-max scaler to the four continuous attributes. Values
    /// outside `[0, 1]` are passed through and reported.
    pub fn scale(&self, scaler: &ScalerParams) -> Result<Scaled<Self>> {
        let ranges: Vec<&ColumnRange> = Attribute::SCALED
            .iter()
            .map(|a| scaler.require(a.source_column().expect("scaled attribute").header()))
            .collect::<Result<_>>()?;
        let mut out_of_range = Vec::new();
        let rows = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = *r;
                for (k, range) in ranges.iter().enumerate() {
                    let v = range.apply(r.attributes[k].to_f64_lossy());
                    if !(0.0..=1.0).contains(&v) {
                        out_of_range.push(OutOfRange { row: i, column: range.column.clone(), value: v });
                    }
                    row.attributes[k] = T::lit(v);
                }
                row
            })
            .collect();
        if !out_of_range.is_empty() {
            log::warn!("{} scaled frame value(s) fall outside [0, 1]", out_of_range.len());
        }
        Ok(Scaled { data: Self { rows }, out_of_range })
    }
}

/// Result of [`build_lagged`].
#[derive(Debug, Clone)]
pub struct LaggedFrame<T> {
    pub frame: ModelFrame<T>,
    /// Groups with a single timestep; they contribute no rows.
    pub singleton_groups: usize,
    /// Position in the source table of each frame row.
    pub source_rows: Vec<usize>,
}

/// Groups rows by (scenario, link), orders each group by time, and emits one
/// frame row per observation that has a predecessor in its group. The
/// predecessor's level sets the lagged dummies.
pub fn build_lagged(table: &ObservationTable, levels: &LevelSeries) -> Result<LaggedFrame<f64>> {
    if levels.len() != table.len() {
        return Err(Error::InvalidInput(format!(
            "level series has {} entries but the table has {} rows",
            levels.len(),
            table.len()
        )));
    }
    let mut groups: BTreeMap<(i64, i64), Vec<usize>> = BTreeMap::new();
    for (i, r) in table.records().iter().enumerate() {
        groups.entry(r.key().group()).or_default().push(i);
    }

    let mut rows = Vec::with_capacity(table.len());
    let mut source_rows = Vec::with_capacity(table.len());
    let mut singleton_groups = 0;
    for members in groups.values_mut() {
        members.sort_by_key(|&i| table.records()[i].time);
        if members.len() < 2 {
            singleton_groups += 1;
            continue;
        }
        for pair in members.windows(2) {
            let (prev, cur) = (pair[0], pair[1]);
            let r = &table.records()[cur];
            let prev_level = levels.levels[prev];
            rows.push(FrameRow {
                key: r.key(),
                attributes: [r.link_speed, r.link_density_per_lane, r.free_flow_speed, r.number_of_lanes],
                prev_medium: prev_level == Level::Medium,
                prev_high: prev_level == Level::High,
                chosen: levels.levels[cur],
            });
            source_rows.push(cur);
        }
    }
    if singleton_groups > 0 {
        log::warn!("{singleton_groups} link group(s) have a single timestep and contribute no rows");
    }
    Ok(LaggedFrame { frame: ModelFrame { rows }, singleton_groups, source_rows })
}

const KEY_HEADERS: [&str; 3] = ["Scenario", "Link Number", "Time"];
const LEVEL_HEADER: &str = "Level";

pub fn write_frame_csv<T: Real, W: Write>(frame: &ModelFrame<T>, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = KEY_HEADERS.to_vec();
    header.extend(Attribute::ALL.iter().map(|a| a.frame_header()));
    header.push(LEVEL_HEADER);
    w.write_record(&header)?;
    for r in frame.rows() {
        let mut rec = vec![r.key.scenario.to_string(), r.key.link_number.to_string(), r.key.time.to_string()];
        rec.extend(r.attributes.iter().map(|v| v.to_string()));
        rec.push(u8::from(r.prev_medium).to_string());
        rec.push(u8::from(r.prev_high).to_string());
        rec.push(r.chosen.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_frame_csv<R: Read>(reader: R) -> Result<ModelFrame<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut wanted: Vec<&str> = KEY_HEADERS.to_vec();
    wanted.extend(Attribute::ALL.iter().map(|a| a.frame_header()));
    wanted.push(LEVEL_HEADER);
    let pos: Vec<usize> = wanted
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == *name).ok_or_else(|| Error::MissingColumn { column: name.to_string() })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let cell = |k: usize| rec.get(pos[k]).unwrap_or("");
        let err = |k: usize| Error::Parse { row: i + 1, column: wanted[k].to_string(), value: cell(k).to_string() };
        let int = |k: usize| cell(k).parse::<i64>().map_err(|_| err(k));
        let real = |k: usize| cell(k).parse::<f64>().map_err(|_| err(k));
        let flag = |k: usize| match cell(k) {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(err(k)),
        };
        rows.push(FrameRow {
            key: RowKey { scenario: int(0)?, link_number: int(1)?, time: int(2)? },
            attributes: [real(3)?, real(4)?, real(5)?, real(6)?],
            prev_medium: flag(7)?,
            prev_high: flag(8)?,
            chosen: Level::try_from(int(9)?).map_err(|_| err(9))?,
        });
    }
    ModelFrame::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::table::LinkRecord;

    fn rec(link: i64, time: i64) -> LinkRecord {
        LinkRecord {
            scenario: 1,
            link_number: link,
            time,
            free_flow_speed: 50.0,
            number_of_lanes: 2.0,
            link_speed: 10.0 * time as f64,
            link_total_density: 20.0,
            link_density_per_lane: 10.0,
            link_total_flow: 100.0,
            link_flow_per_lane: 50.0,
            delay_on_link: 0.0,
            in_links_density_per_lane: 0.0,
            in_links_total_flow: 0.0,
            in_links_flow_per_lane: 0.0,
            flow_over_capacity: 0.0,
            ghg_er: 1.0,
        }
    }

    fn series(levels: &[u8]) -> LevelSeries {
        LevelSeries::from_levels(levels.iter().map(|&l| Level::try_from(l).unwrap()).collect())
    }

    #[test]
    fn lags_single_link() {
        let table = ObservationTable::new(vec![rec(1, 0), rec(1, 1), rec(1, 2)]).unwrap();
        let out = build_lagged(&table, &series(&[1, 2, 3])).unwrap();
        let rows = out.frame.rows();
        assert_eq!(rows.len(), 2);
        assert_eq!(
            (rows[0].key.time, rows[0].prev_medium, rows[0].prev_high, rows[0].chosen),
            (1, false, false, Level::Medium)
        );
        assert_eq!(
            (rows[1].key.time, rows[1].prev_medium, rows[1].prev_high, rows[1].chosen),
            (2, true, false, Level::High)
        );
        assert_eq!(out.source_rows, vec![1, 2]);
    }

    #[test]
    fn unsorted_input_is_ordered_by_time() {
        let table = ObservationTable::new(vec![rec(1, 2), rec(1, 0), rec(1, 1)]).unwrap();
        let out = build_lagged(&table, &series(&[3, 1, 3])).unwrap();
        let rows = out.frame.rows();
        assert_eq!(rows[0].key.time, 1);
        assert!(!rows[0].prev_high && !rows[0].prev_medium);
        assert_eq!(rows[1].key.time, 2);
        assert!(rows[1].prev_high);
    }

    #[test]
    fn single_timestep_group_contributes_nothing() {
        let table = ObservationTable::new(vec![rec(1, 0)]).unwrap();
        let out = build_lagged(&table, &series(&[2])).unwrap();
        assert!(out.frame.is_empty());
        assert_eq!(out.singleton_groups, 1);
    }

    #[test]
    fn two_links_three_steps() {
        let recs = vec![rec(1, 0), rec(2, 0), rec(1, 1), rec(2, 1), rec(1, 2), rec(2, 2)];
        let table = ObservationTable::new(recs).unwrap();
        let out = build_lagged(&table, &series(&[1, 3, 2, 3, 1, 2])).unwrap();
        assert_eq!(out.frame.len(), 4);
        let link2: Vec<_> = out.frame.rows().iter().filter(|r| r.key.link_number == 2).collect();
        assert!(link2[0].prev_high && link2[0].chosen == Level::High);
        assert!(link2[1].prev_high && link2[1].chosen == Level::Medium);
    }

    #[test]
    fn misaligned_levels_rejected() {
        let table = ObservationTable::new(vec![rec(1, 0), rec(1, 1)]).unwrap();
        assert!(build_lagged(&table, &series(&[1])).is_err());
    }

    #[test]
    fn both_lag_flags_rejected() {
        let row = FrameRow {
            key: RowKey { scenario: 0, link_number: 0, time: 0 },
            attributes: [0.0; 4],
            prev_medium: true,
            prev_high: true,
            chosen: Level::Low,
        };
        assert!(ModelFrame::new(vec![row]).is_err());
    }

    #[test]
    fn frame_csv_round_trip() {
        let recs = vec![rec(1, 0), rec(1, 1), rec(1, 2), rec(4, 0), rec(4, 1)];
        let table = ObservationTable::new(recs).unwrap();
        let frame = build_lagged(&table, &series(&[2, 3, 1, 1, 2])).unwrap().frame;
        let mut buf = Vec::new();
        write_frame_csv(&frame, &mut buf).unwrap();
        assert_eq!(read_frame_csv(buf.as_slice()).unwrap(), frame);
    }

    #[test]
    fn frame_scaling_uses_attribute_columns() {
        let table = ObservationTable::new(vec![rec(1, 0), rec(1, 1), rec(1, 2), rec(1, 3)]).unwrap();
        let frame = build_lagged(&table, &series(&[1, 1, 2, 3])).unwrap().frame;
        let scaler = frame.fit_scaler().unwrap();
        let scaled = frame.scale(&scaler).unwrap();
        assert_eq!(scaled.data.attribute_column(Attribute::LinkSpeed), vec![0.0, 0.5, 1.0]);
        // constant attributes collapse to zero
        assert_eq!(scaled.data.attribute_column(Attribute::NumberOfLanes), vec![0.0; 3]);
        assert!(scaled.out_of_range.is_empty());
    }

    #[test]
    fn attribute_names_parse() {
        assert_eq!("free_flow_speed".parse::<Attribute>().unwrap(), Attribute::FreeFlowSpeed);
        assert_eq!("Link Speed".parse::<Attribute>().unwrap(), Attribute::LinkSpeed);
        assert_eq!("Prev High GHG".parse::<Attribute>().unwrap(), Attribute::PrevHighGhg);
        assert!("ghg".parse::<Attribute>().is_err());
    }
}
