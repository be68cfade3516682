//! Pipeline configuration: a JSON file, command-line overrides, and the
//! `LINKDCM_SEED` environment fallback.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use linkdcm::discretizer::KMeansOptions;
use linkdcm::estimator::{ModelKind, OptimOptions};
use serde::{Deserialize, Serialize};

pub const SEED_ENV: &str = "LINKDCM_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelSelection {
    Mnl,
    Ol,
    #[default]
    Both,
}

impl ModelSelection {
    pub fn kinds(self) -> Vec<ModelKind> {
        match self {
            ModelSelection::Mnl => vec![ModelKind::Mnl],
            ModelSelection::Ol => vec![ModelKind::Ol],
            ModelSelection::Both => vec![ModelKind::Mnl, ModelKind::Ol],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        let d = KMeansOptions::default();
        Self { restarts: d.restarts, tol: d.tol, max_iter: d.max_iter }
    }
}

/// Contents of a `--config` file. Every field is optional.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub k: Option<usize>,
    pub model: Option<ModelSelection>,
    pub optimizer: Option<OptimOptions>,
    pub kmeans: Option<KMeansConfig>,
}

impl ConfigFile {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: ConfigFile =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.input, &mut cfg.out_dir].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }
}

/// Values given on the command line; they take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub n_train: Option<usize>,
    pub n_test: Option<usize>,
    pub model: Option<ModelSelection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub input: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub k: usize,
    pub model: ModelSelection,
    pub optimizer: OptimOptions,
    pub kmeans: KMeansConfig,
}

pub const DEFAULT_N_TRAIN: usize = 5000;
pub const DEFAULT_N_TEST: usize = 1000;

/// Seed precedence: flag, config file, `LINKDCM_SEED`, then 0.
pub fn resolve_seed(flag: Option<u64>, file: Option<u64>, env: Option<&str>) -> Result<u64> {
    if let Some(s) = flag.or(file) {
        return Ok(s);
    }
    match env {
        Some(v) => v.trim().parse().with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer")),
        None => Ok(0),
    }
}

pub fn env_seed() -> Option<String> {
    std::env::var(SEED_ENV).ok().filter(|s| !s.trim().is_empty())
}

impl PipelineConfig {
    pub fn resolve(file: ConfigFile, flags: Overrides, env: Option<&str>) -> Result<Self> {
        let Some(input) = flags.input.or(file.input) else {
            bail!("no input table given (--input or config \"input\")")
        };
        let Some(out_dir) = flags.out_dir.or(file.out_dir) else {
            bail!("no output directory given (--out-dir or config \"out_dir\")")
        };
        let cfg = Self {
            input,
            out_dir,
            seed: resolve_seed(flags.seed, file.seed, env)?,
            n_train: flags.n_train.or(file.n_train).unwrap_or(DEFAULT_N_TRAIN),
            n_test: flags.n_test.or(file.n_test).unwrap_or(DEFAULT_N_TEST),
            k: file.k.unwrap_or(3),
            model: flags.model.or(file.model).unwrap_or_default(),
            optimizer: file.optimizer.unwrap_or_default(),
            kmeans: file.kmeans.unwrap_or_default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_train >= 1 && self.n_test >= 1, "n_train and n_test must be at least 1");
        ensure!(self.k == 3, "k is fixed at 3 emission levels, got {}", self.k);
        ensure!(self.kmeans.restarts >= 1, "kmeans.restarts must be at least 1");
        self.optimizer.validate()?;
        ensure!(self.input.exists(), "input {} does not exist", self.input.display());
        Ok(())
    }

    pub fn kmeans_options(&self, seed: u64) -> KMeansOptions {
        KMeansOptions {
            k: self.k,
            seed,
            restarts: self.kmeans.restarts,
            tol: self.kmeans.tol,
            max_iter: self.kmeans.max_iter,
        }
    }
}
