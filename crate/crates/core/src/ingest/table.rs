//! Link-level observation table and its CSV representation.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns of the observation CSV, in canonical output order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Column {
    Scenario,
    LinkNumber,
    Time,
    FreeFlowSpeed,
    NumberOfLanes,
    LinkSpeed,
    LinkTotalDensity,
    LinkDensityPerLane,
    LinkTotalFlow,
    LinkFlowPerLane,
    DelayOnLink,
    InLinksDensityPerLane,
    InLinksTotalFlow,
    InLinksFlowPerLane,
    FlowOverCapacity,
    GhgEr,
}

impl Column {
    pub const ALL: [Column; 16] = [
        Column::Scenario,
        Column::LinkNumber,
        Column::Time,
        Column::FreeFlowSpeed,
        Column::NumberOfLanes,
        Column::LinkSpeed,
        Column::LinkTotalDensity,
        Column::LinkDensityPerLane,
        Column::LinkTotalFlow,
        Column::LinkFlowPerLane,
        Column::DelayOnLink,
        Column::InLinksDensityPerLane,
        Column::InLinksTotalFlow,
        Column::InLinksFlowPerLane,
        Column::FlowOverCapacity,
        Column::GhgEr,
    ];

    /// Exact CSV header label.
    pub fn header(self) -> &'static str {
        match self {
            Column::Scenario => "Scenario",
            Column::LinkNumber => "Link Number",
            Column::Time => "Time",
            Column::FreeFlowSpeed => "Free Flow Speed",
            Column::NumberOfLanes => "Number of Lanes",
            Column::LinkSpeed => "Link Speed",
            Column::LinkTotalDensity => "Link Total Density",
            Column::LinkDensityPerLane => "Link Density per Lane",
            Column::LinkTotalFlow => "Link Total Flow",
            Column::LinkFlowPerLane => "Link Flow per Lane",
            Column::DelayOnLink => "Delay on Link",
            Column::InLinksDensityPerLane => "In-Links Density per Lane",
            Column::InLinksTotalFlow => "In-Links Total Flow",
            Column::InLinksFlowPerLane => "In-Links Flow per Lane",
            Column::FlowOverCapacity => "Flow over Capacity",
            Column::GhgEr => "GHG ER g/sec",
        }
    }

    pub fn from_header(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.header() == name)
    }

    fn is_integer(self) -> bool {
        matches!(self, Column::Scenario | Column::LinkNumber | Column::Time | Column::NumberOfLanes)
    }
}

/// (scenario, link, time) identity of one observation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub scenario: i64,
    pub link_number: i64,
    pub time: i64,
}

impl RowKey {
    pub fn group(&self) -> (i64, i64) {
        (self.scenario, self.link_number)
    }
}

/// One per-link per-timestep record. `number_of_lanes` is held as a real so
/// that min-max scaled tables share the type; it is validated as an integer
/// count on load.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkRecord {
    pub scenario: i64,
    pub link_number: i64,
    pub time: i64,
    pub free_flow_speed: f64,
    pub number_of_lanes: f64,
    pub link_speed: f64,
    pub link_total_density: f64,
    pub link_density_per_lane: f64,
    pub link_total_flow: f64,
    pub link_flow_per_lane: f64,
    pub delay_on_link: f64,
    pub in_links_density_per_lane: f64,
    pub in_links_total_flow: f64,
    pub in_links_flow_per_lane: f64,
    pub flow_over_capacity: f64,
    pub ghg_er: f64,
}

impl LinkRecord {
    pub fn key(&self) -> RowKey {
        RowKey { scenario: self.scenario, link_number: self.link_number, time: self.time }
    }

    pub fn get(&self, column: Column) -> f64 {
        match column {
            Column::Scenario => self.scenario as f64,
            Column::LinkNumber => self.link_number as f64,
            Column::Time => self.time as f64,
            Column::FreeFlowSpeed => self.free_flow_speed,
            Column::NumberOfLanes => self.number_of_lanes,
            Column::LinkSpeed => self.link_speed,
            Column::LinkTotalDensity => self.link_total_density,
            Column::LinkDensityPerLane => self.link_density_per_lane,
            Column::LinkTotalFlow => self.link_total_flow,
            Column::LinkFlowPerLane => self.link_flow_per_lane,
            Column::DelayOnLink => self.delay_on_link,
            Column::InLinksDensityPerLane => self.in_links_density_per_lane,
            Column::InLinksTotalFlow => self.in_links_total_flow,
            Column::InLinksFlowPerLane => self.in_links_flow_per_lane,
            Column::FlowOverCapacity => self.flow_over_capacity,
            Column::GhgEr => self.ghg_er,
        }
    }

    /// Sets a real-valued column. Key columns are not settable.
    pub fn set(&mut self, column: Column, value: f64) -> Result<()> {
        let slot = match column {
            Column::Scenario | Column::LinkNumber | Column::Time => {
                return Err(Error::InvalidInput(format!("key column \"{}\" cannot be rescaled", column.header())))
            }
            Column::FreeFlowSpeed => &mut self.free_flow_speed,
            Column::NumberOfLanes => &mut self.number_of_lanes,
            Column::LinkSpeed => &mut self.link_speed,
            Column::LinkTotalDensity => &mut self.link_total_density,
            Column::LinkDensityPerLane => &mut self.link_density_per_lane,
            Column::LinkTotalFlow => &mut self.link_total_flow,
            Column::LinkFlowPerLane => &mut self.link_flow_per_lane,
            Column::DelayOnLink => &mut self.delay_on_link,
            Column::InLinksDensityPerLane => &mut self.in_links_density_per_lane,
            Column::InLinksTotalFlow => &mut self.in_links_total_flow,
            Column::InLinksFlowPerLane => &mut self.in_links_flow_per_lane,
            Column::FlowOverCapacity => &mut self.flow_over_capacity,
            Column::GhgEr => &mut self.ghg_er,
        };
        *slot = value;
        Ok(())
    }

    /// Checks the raw-unit invariants of a freshly loaded record.
    pub fn validate(&self) -> std::result::Result<(), String> {
        for c in Column::ALL.into_iter().filter(|c| !c.is_integer() || *c == Column::NumberOfLanes) {
            let v = self.get(c);
            if !v.is_finite() {
                return Err(format!("\"{}\" is not finite", c.header()));
            }
            if v < 0.0 {
                return Err(format!("\"{}\" is negative ({v})", c.header()));
            }
        }
        if self.number_of_lanes < 1.0 || self.number_of_lanes.fract() != 0.0 {
            return Err(format!("\"Number of Lanes\" must be a positive integer, got {}", self.number_of_lanes));
        }
        let slack = |total: f64| total * 1e-12;
        if self.link_density_per_lane > self.link_total_density + slack(self.link_total_density) {
            return Err("\"Link Density per Lane\" exceeds \"Link Total Density\"".into());
        }
        if self.link_flow_per_lane > self.link_total_flow + slack(self.link_total_flow) {
            return Err("\"Link Flow per Lane\" exceeds \"Link Total Flow\"".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationTable {
    records: Vec<LinkRecord>,
    column_index: BTreeMap<String, usize>,
}

impl ObservationTable {
    /// Builds a table from records, checking key uniqueness. Record-level
    /// unit checks are left to [`LinkRecord::validate`] so that scaled tables
    /// can be represented too.
    pub fn new(records: Vec<LinkRecord>) -> Result<Self> {
        let column_index = Column::ALL.iter().enumerate().map(|(i, c)| (c.header().to_string(), i)).collect();
        Self::with_index(records, column_index)
    }

    fn with_index(records: Vec<LinkRecord>, column_index: BTreeMap<String, usize>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if !seen.insert(r.key()) {
                return Err(Error::Integrity(format!(
                    "duplicate (scenario {}, link {}, time {}) at data row {}",
                    r.scenario,
                    r.link_number,
                    r.time,
                    i + 1
                )));
            }
        }
        Ok(Self { records, column_index })
    }

    pub fn records(&self) -> &[LinkRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Header name to source-file position.
    pub fn column_index(&self) -> &BTreeMap<String, usize> {
        &self.column_index
    }

    pub fn column(&self, column: Column) -> Vec<f64> {
        self.records.iter().map(|r| r.get(column)).collect()
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        Self { records: indices.iter().map(|&i| self.records[i]).collect(), column_index: self.column_index.clone() }
    }

    pub(crate) fn map_records(&self, records: Vec<LinkRecord>) -> Self {
        Self { records, column_index: self.column_index.clone() }
    }

    /// Number of distinct (scenario, link) groups.
    pub fn group_count(&self) -> usize {
        self.records.iter().map(|r| r.key().group()).collect::<HashSet<_>>().len()
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<ObservationTable> {
    let file = std::fs::File::open(path.as_ref())?;
    let table = read_csv(file)?;
    log::info!("loaded {} rows from {}", table.len(), path.as_ref().display());
    Ok(table)
}

pub fn read_csv<R: Read>(reader: R) -> Result<ObservationTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut positions = [0usize; 16];
    let mut column_index = BTreeMap::new();
    for (slot, column) in positions.iter_mut().zip(Column::ALL) {
        let pos = headers
            .iter()
            .position(|h| h == column.header())
            .ok_or_else(|| Error::MissingColumn { column: column.header().to_string() })?;
        *slot = pos;
        column_index.insert(column.header().to_string(), pos);
    }

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let data_row = i + 1;
        let mut values = [0.0f64; 16];
        let mut ints = [0i64; 3];
        for (k, (&pos, column)) in positions.iter().zip(Column::ALL).enumerate() {
            let cell = row.get(pos).unwrap_or("");
            let parse_err =
                || Error::Parse { row: data_row, column: column.header().to_string(), value: cell.to_string() };
            if k < 3 {
                ints[k] = parse_integer(cell).ok_or_else(parse_err)?;
            } else {
                let v: f64 = cell.parse().map_err(|_| parse_err())?;
                if column == Column::NumberOfLanes && parse_integer(cell).is_none() {
                    return Err(parse_err());
                }
                values[k] = v;
            }
        }
        let record = LinkRecord {
            scenario: ints[0],
            link_number: ints[1],
            time: ints[2],
            free_flow_speed: values[3],
            number_of_lanes: values[4],
            link_speed: values[5],
            link_total_density: values[6],
            link_density_per_lane: values[7],
            link_total_flow: values[8],
            link_flow_per_lane: values[9],
            delay_on_link: values[10],
            in_links_density_per_lane: values[11],
            in_links_total_flow: values[12],
            in_links_flow_per_lane: values[13],
            flow_over_capacity: values[14],
            ghg_er: values[15],
        };
        record.validate().map_err(|msg| Error::Integrity(format!("data row {data_row}: {msg}")))?;
        records.push(record);
    }
    ObservationTable::with_index(records, column_index)
}

/// Accepts "12" and integral decimals such as "12.0".
fn parse_integer(cell: &str) -> Option<i64> {
    if let Ok(v) = cell.parse::<i64>() {
        return Some(v);
    }
    let v: f64 = cell.parse().ok()?;
    (v.is_finite() && v.fract() == 0.0 && v.abs() < 9.0e15).then_some(v as i64)
}

pub fn write_csv<W: Write>(table: &ObservationTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(Column::ALL.iter().map(|c| c.header()))?;
    for r in table.records() {
        let row: Vec<String> = Column::ALL
            .iter()
            .map(|&c| match c {
                Column::Scenario => r.scenario.to_string(),
                Column::LinkNumber => r.link_number.to_string(),
                Column::Time => r.time.to_string(),
                other => r.get(other).to_string(),
            })
            .collect();
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_csv(table: &ObservationTable, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(table, std::io::BufWriter::new(file))
}
