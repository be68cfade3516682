//! Min-max normalization to the unit interval.

use serde::{Deserialize, Serialize};

use super::table::{Column, ObservationTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnRange {
    pub column: String,
    pub min: f64,
    pub max: f64,
    /// Set when every fitted value was identical; such a column maps to 0.
    pub constant: bool,
}

impl ColumnRange {
    pub fn fit(column: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let column = column.into();
        let (mut min, mut max, mut n) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
        for v in values.into_iter().filter(|v| v.is_finite()) {
            min = min.min(v);
            max = max.max(v);
            n += 1;
        }
        if n == 0 {
            return Err(Error::InvalidInput(format!("column \"{column}\" has no finite values")));
        }
        let constant = min == max;
        if constant {
            log::warn!("column \"{column}\" is constant ({min}); it will scale to 0");
        }
        Ok(Self { column, min, max, constant })
    }

    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if self.constant {
            0.0
        } else {
            (x - self.min) / (self.max - self.min)
        }
    }

    #[inline]
    pub fn invert(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScalerParams {
    pub columns: Vec<ColumnRange>,
}

impl ScalerParams {
    pub fn get(&self, column: &str) -> Option<&ColumnRange> {
        self.columns.iter().find(|c| c.column == column)
    }

    pub fn require(&self, column: &str) -> Result<&ColumnRange> {
        self.get(column).ok_or_else(|| Error::InvalidInput(format!("scaler has no range for column \"{column}\"")))
    }
}

/// A scaled value that fell outside `[0, 1]`; kept unclamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfRange {
    pub row: usize,
    pub column: String,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub struct Scaled<T> {
    pub data: T,
    pub out_of_range: Vec<OutOfRange>,
}

pub fn minmax_fit(table: &ObservationTable, columns: &[Column]) -> Result<ScalerParams> {
    if table.is_empty() {
        return Err(Error::Empty("cannot fit a scaler on an empty table"));
    }
    let columns = columns
        .iter()
        .map(|&c| ColumnRange::fit(c.header(), table.records().iter().map(|r| r.get(c))))
        .collect::<Result<_>>()?;
    Ok(ScalerParams { columns })
}

pub fn minmax_apply(table: &ObservationTable, scaler: &ScalerParams) -> Result<Scaled<ObservationTable>> {
    let targets: Vec<(Column, &ColumnRange)> = scaler
        .columns
        .iter()
        .map(|range| {
            Column::from_header(&range.column)
                .map(|c| (c, range))
                .ok_or_else(|| Error::InvalidInput(format!("unknown column \"{}\" in scaler", range.column)))
        })
        .collect::<Result<_>>()?;

    let mut out_of_range = Vec::new();
    let mut records = table.records().to_vec();
    for (row, record) in records.iter_mut().enumerate() {
        for &(column, range) in &targets {
            let v = range.apply(record.get(column));
            if !(0.0..=1.0).contains(&v) {
                out_of_range.push(OutOfRange { row, column: range.column.clone(), value: v });
            }
            record.set(column, v)?;
        }
    }
    if !out_of_range.is_empty() {
        log::warn!("{} scaled value(s) fall outside [0, 1]", out_of_range.len());
    }
    Ok(Scaled { data: table.map_records(records), out_of_range })
}
