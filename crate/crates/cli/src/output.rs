//! Output directory handling and the CSV / JSON artifact formats.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use linkdcm::diagnostics::ConfusionMatrix;
use linkdcm::discretizer::LevelSeries;
use linkdcm::ingest::{ObservationTable, RowKey};
use linkdcm::{Level, SCHEMA_VERSION};
use serde::Serialize;

pub const ERROR_FILE: &str = "error.json";

/// Wraps a JSON body with the schema version.
#[derive(Serialize)]
pub struct Versioned<'a, T: Serialize> {
    pub spec_version: &'static str,
    #[serde(flatten)]
    pub body: &'a T,
}

pub fn versioned<T: Serialize>(body: &T) -> Versioned<'_, T> {
    Versioned { spec_version: SCHEMA_VERSION, body }
}

#[derive(Serialize)]
struct ErrorRecord<'a> {
    spec_version: &'static str,
    stage: &'a str,
    message: String,
}

/// Files written by one command. On failure they are removed and replaced
/// by an error record.
#[derive(Debug)]
pub struct Bundle {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Bundle {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let stale = dir.join(ERROR_FILE);
        if stale.exists() {
            fs::remove_file(&stale)?;
        }
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn track(&mut self, name: &str) -> PathBuf {
        let path = self.dir.join(name);
        if !self.written.contains(&path) {
            self.written.push(path.clone());
        }
        path
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.track(name);
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    /// Pretty JSON with a trailing newline.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_versioned<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        self.write_json(name, &versioned(value))
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<PathBuf> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
        self.write_bytes(name, &bytes)
    }

    pub fn write_with<F>(&mut self, name: &str, f: F) -> Result<PathBuf>
    where
        F: FnOnce(&mut Vec<u8>) -> linkdcm::Result<()>,
    {
        let mut bytes = Vec::new();
        f(&mut bytes)?;
        self.write_bytes(name, &bytes)
    }

    /// Removes everything written so far and leaves `error.json`.
    pub fn abort(self, stage: &str, error: &anyhow::Error) -> Result<PathBuf> {
        for p in &self.written {
            if p.exists() {
                fs::remove_file(p).with_context(|| format!("removing {}", p.display()))?;
            }
        }
        let record = ErrorRecord { spec_version: SCHEMA_VERSION, stage, message: format!("{error:#}") };
        let path = self.dir.join(ERROR_FILE);
        let mut bytes = serde_json::to_vec_pretty(&record)?;
        bytes.push(b'\n');
        fs::write(&path, bytes)?;
        Ok(path)
    }
}

pub const KEY_HEADER: [&str; 3] = ["Scenario", "Link Number", "Time"];

pub fn key_cells(k: &RowKey) -> Vec<String> {
    vec![k.scenario.to_string(), k.link_number.to_string(), k.time.to_string()]
}

pub fn parse_level(s: &str) -> Result<Level> {
    Ok(match s.trim().to_ascii_lowercase().as_str() {
        "1" | "low" => Level::Low,
        "2" | "medium" | "med" => Level::Medium,
        "3" | "high" => Level::High,
        other => bail!("unknown level {other:?} (expected 1/2/3 or low/medium/high)"),
    })
}

pub fn level_rows(table: &ObservationTable, levels: &LevelSeries) -> Vec<Vec<String>> {
    table
        .records()
        .iter()
        .zip(&levels.levels)
        .map(|(r, l)| {
            let mut row = key_cells(&r.key());
            row.push(l.value().to_string());
            row
        })
        .collect()
}

pub const LEVEL_HEADER: [&str; 4] = ["Scenario", "Link Number", "Time", "Level"];

/// Reads a level CSV and aligns it with the rows of `table`.
pub fn read_levels(path: &Path, table: &ObservationTable) -> Result<LevelSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let pos = |name: &str| {
        header.iter().position(|h| h == name).with_context(|| format!("{} has no {name:?} column", path.display()))
    };
    let idx = [pos("Scenario")?, pos("Link Number")?, pos("Time")?, pos("Level")?];
    let mut by_key = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let int = |j: usize| -> Result<i64> {
            rec[idx[j]].parse().with_context(|| format!("row {}: bad {:?}", i + 1, LEVEL_HEADER[j]))
        };
        let key = RowKey { scenario: int(0)?, link_number: int(1)?, time: int(2)? };
        let level = parse_level(&rec[idx[3]]).with_context(|| format!("row {}", i + 1))?;
        if by_key.insert(key, level).is_some() {
            bail!("duplicate level row for {key:?}");
        }
    }
    let levels = table
        .records()
        .iter()
        .map(|r| by_key.get(&r.key()).copied().with_context(|| format!("no level for {:?}", r.key())))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelSeries::from_levels(levels))
}

pub const CONFUSION_HEADER: [&str; 4] = ["actual", "predicted_1", "predicted_2", "predicted_3"];

pub fn confusion_rows(cm: &ConfusionMatrix) -> Vec<Vec<String>> {
    Level::ALL
        .iter()
        .map(|l| {
            let mut row = vec![l.value().to_string()];
            row.extend(cm.counts[l.index()].iter().map(|c| c.to_string()));
            row
        })
        .collect()
}
