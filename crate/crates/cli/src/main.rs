use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use linkdcm::estimator::{ModelKind, OptimOptions};
use linkdcm::ingest::Attribute;
use linkdcm::rng::derive_seed;
use linkdcm::synthgen::GeneratorSpec;
use linkdcm::Level;
use linkdcm_cli::commands::{self, model_tag};
use linkdcm_cli::config::{
    env_seed, resolve_seed, ConfigFile, KMeansConfig, ModelSelection, Overrides, PipelineConfig,
};
use linkdcm_cli::output::{parse_level, Bundle};
use linkdcm_cli::pipeline::{run_pipeline, STAGE_DISCRETIZE, STAGE_SPLIT};

#[derive(Parser)]
#[command(name = "linkdcm", version, about = "Discrete choice models of link-level GHG emission levels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Io {
    /// Input file (observation table, frame CSV, or generator spec).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Directory for outputs.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// JSON config; flags take precedence over its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Root seed; falls back to the config file, then LINKDCM_SEED.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone)]
struct FittedArgs {
    #[command(flatten)]
    io: Io,
    /// Fitted model JSON written by fit-mnl / fit-ol.
    #[arg(long)]
    fitted: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate an observation table and summarize its columns.
    Ingest(Io),
    /// Cluster the emission rate into three ordered levels.
    Discretize(Io),
    /// Build the lagged estimation frame from a table and its levels.
    Frame {
        #[command(flatten)]
        io: Io,
        #[arg(long)]
        levels: PathBuf,
    },
    /// Split a frame, fit the scaler on the training rows, scale both parts.
    Split {
        #[command(flatten)]
        io: Io,
        /// Training rows (default 5000)
        #[arg(long)]
        n_train: Option<usize>,
        /// Test rows (default 1000)
        #[arg(long)]
        n_test: Option<usize>,
    },
    /// Fit the multinomial logit to a scaled frame.
    FitMnl(Io),
    /// Fit the ordered logit to a scaled frame.
    FitOl(Io),
    /// Predicted levels and class probabilities.
    Predict(FittedArgs),
    /// Confusion matrix and accuracy.
    Evaluate(FittedArgs),
    /// Direct elasticities per observation with summaries.
    Elasticity {
        #[command(flatten)]
        args: FittedArgs,
        /// 1/2/3 or low/medium/high; all levels when absent.
        #[arg(long)]
        alternative: Option<String>,
        /// Attribute name (e.g. link_speed); the four traffic attributes when absent.
        #[arg(long)]
        attribute: Option<String>,
    },
    /// Hausman-McFadden test of independence from irrelevant alternatives.
    Iia {
        #[command(flatten)]
        args: FittedArgs,
        /// Alternative removed from the choice set (medium or high).
        #[arg(long)]
        dropped: String,
    },
    /// Generate a synthetic panel from a generator spec.
    Synth(Io),
    /// Run every stage and write the report bundle.
    Pipeline {
        #[command(flatten)]
        io: Io,
        /// Training rows (default 5000)
        #[arg(long)]
        n_train: Option<usize>,
        /// Test rows (default 1000)
        #[arg(long)]
        n_test: Option<usize>,
        /// Models to fit (default both)
        #[arg(long, value_enum)]
        model: Option<ModelSelection>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(io: &Io) -> Result<ConfigFile> {
    io.config.as_deref().map(ConfigFile::load).transpose().map(Option::unwrap_or_default)
}

fn required(flag: Option<PathBuf>, file: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or(file).with_context(|| format!("--{what} is required"))
}

/// Runs `body` against a fresh bundle; on failure the bundle is replaced by
/// an error record naming `stage`.
fn with_bundle(out_dir: &Path, stage: &str, body: impl FnOnce(&mut Bundle) -> Result<()>) -> Result<(), String> {
    let mut bundle = Bundle::create(out_dir).map_err(|e| format!("{e:#}"))?;
    match body(&mut bundle) {
        Ok(()) => {
            for p in bundle.written() {
                println!("{}", p.display());
            }
            Ok(())
        }
        Err(e) => {
            let msg = format!("{stage}: {e:#}");
            if let Err(io) = bundle.abort(stage, &e) {
                return Err(format!("{msg} (and writing error.json failed: {io:#})"));
            }
            Err(msg)
        }
    }
}

struct Resolved {
    input: PathBuf,
    out_dir: PathBuf,
    seed: u64,
    file: ConfigFile,
}

fn resolve(io: &Io) -> Result<Resolved> {
    let file = load_config(io)?;
    Ok(Resolved {
        input: required(io.input.clone(), file.input.clone(), "input")?,
        out_dir: required(io.out_dir.clone(), file.out_dir.clone(), "out-dir")?,
        seed: resolve_seed(io.seed, file.seed, env_seed().as_deref())?,
        file,
    })
}

fn dispatch(command: Command) -> Result<(), String> {
    let stage = stage_name(&command);
    // configuration problems have no output directory to report into
    let early = |e: anyhow::Error| format!("{stage}: {e:#}");
    match command {
        Command::Ingest(io) => {
            let r = resolve(&io).map_err(early)?;
            with_bundle(&r.out_dir, stage, |b| {
                let table = commands::load_table(&r.input)?;
                b.write_versioned("ingest.json", &commands::ingest_summary(&table))?;
                Ok(())
            })
        }
        Command::Discretize(io) => {
            let r = resolve(&io).map_err(early)?;
            with_bundle(&r.out_dir, stage, |b| {
                let table = commands::load_table(&r.input)?;
                let km = r.file.kmeans.clone().unwrap_or_default();
                let opts = kmeans_options(&km, derive_seed(r.seed, STAGE_DISCRETIZE));
                let (summary, levels) = commands::run_discretize(&table, &opts)?;
                commands::write_levels(b, &table, &levels)?;
                b.write_versioned("clustering.json", &summary)?;
                Ok(())
            })
        }
        Command::Frame { io, levels } => {
            let r = resolve(&io).map_err(early)?;
            with_bundle(&r.out_dir, stage, |b| {
                let table = commands::load_table(&r.input)?;
                let series = linkdcm_cli::output::read_levels(&levels, &table)?;
                let (lagged, summary) = commands::run_frame(&table, &series)?;
                commands::write_frame(b, "frame.csv", &lagged.frame)?;
                b.write_versioned("frame.json", &summary)?;
                Ok(())
            })
        }
        Command::Split { io, n_train, n_test } => {
            let r = resolve(&io).map_err(early)?;
            let n_train = n_train.or(r.file.n_train).unwrap_or(linkdcm_cli::config::DEFAULT_N_TRAIN);
            let n_test = n_test.or(r.file.n_test).unwrap_or(linkdcm_cli::config::DEFAULT_N_TEST);
            with_bundle(&r.out_dir, stage, |b| {
                let frame = commands::load_frame(&r.input)?;
                let s = commands::run_split(&frame, n_train, n_test, derive_seed(r.seed, STAGE_SPLIT))?;
                commands::write_frame(b, "train_frame.csv", &s.train)?;
                commands::write_frame(b, "test_frame.csv", &s.test)?;
                b.write_versioned("scaler.json", &s.scaler)?;
                b.write_versioned("split.json", &s.summary)?;
                Ok(())
            })
        }
        Command::FitMnl(io) | Command::FitOl(io) => {
            let kind = if stage == "fit-mnl" { ModelKind::Mnl } else { ModelKind::Ol };
            let r = resolve(&io).map_err(early)?;
            let options: OptimOptions = r.file.optimizer.clone().unwrap_or_default();
            with_bundle(&r.out_dir, stage, |b| {
                let frame = commands::load_frame(&r.input)?;
                let fitted = commands::run_fit(kind, &frame, &options)?;
                commands::write_fitted(b, &fitted)?;
                Ok(())
            })
        }
        Command::Predict(args) => {
            let r = resolve(&args.io).map_err(early)?;
            with_bundle(&r.out_dir, stage, |b| {
                let model = commands::load_fitted(&args.fitted)?;
                let frame = commands::load_frame(&r.input)?;
                let eval = commands::run_evaluate(&model, &frame)?;
                commands::write_predictions(b, model.kind, &frame, &eval)
            })
        }
        Command::Evaluate(args) => {
            let r = resolve(&args.io).map_err(early)?;
            with_bundle(&r.out_dir, stage, |b| {
                let model = commands::load_fitted(&args.fitted)?;
                let frame = commands::load_frame(&r.input)?;
                let eval = commands::run_evaluate(&model, &frame)?;
                commands::write_confusion(b, model.kind, &eval.confusion)?;
                let name = format!("metrics_{}.json", model_tag(model.kind));
                b.write_versioned(&name, &commands::model_metrics(&model, &eval))?;
                Ok(())
            })
        }
        Command::Elasticity { args, alternative, attribute } => {
            let r = resolve(&args.io).map_err(early)?;
            let alternatives = match &alternative {
                Some(a) => vec![parse_level(a).map_err(early)?],
                None => Level::ALL.to_vec(),
            };
            let attributes = match &attribute {
                Some(a) => vec![a.parse::<Attribute>().map_err(|e| early(e.into()))?],
                None => Attribute::SCALED.to_vec(),
            };
            with_bundle(&r.out_dir, stage, |b| {
                let model = commands::load_fitted(&args.fitted)?;
                let frame = commands::load_frame(&r.input)?;
                let reports = commands::run_elasticity(&model, &frame, &alternatives, &attributes)?;
                commands::write_elasticity(b, &model, &frame, &reports)
            })
        }
        Command::Iia { args, dropped } => {
            let r = resolve(&args.io).map_err(early)?;
            let dropped = parse_level(&dropped).map_err(early)?;
            with_bundle(&r.out_dir, stage, |b| {
                let model = commands::load_fitted(&args.fitted)?;
                let frame = commands::load_frame(&r.input)?;
                let result = commands::run_iia(&model, &frame, dropped)?;
                b.write_versioned(&format!("iia_drop_{}.json", dropped.value()), &result)?;
                Ok(())
            })
        }
        Command::Synth(io) => {
            let file = load_config(&io).map_err(early)?;
            let input = required(io.input.clone(), file.input.clone(), "input").map_err(early)?;
            let out_dir = required(io.out_dir.clone(), file.out_dir.clone(), "out-dir").map_err(early)?;
            with_bundle(&out_dir, stage, |b| {
                let text = std::fs::read_to_string(&input).with_context(|| format!("reading {}", input.display()))?;
                let mut spec: GeneratorSpec = serde_json::from_str(&text).context("parsing generator spec")?;
                if let Some(seed) = io.seed {
                    spec.seed = seed;
                }
                let (panel, record) = commands::run_synth(&spec)?;
                commands::write_synth(b, &panel, &record)
            })
        }
        Command::Pipeline { io, n_train, n_test, model } => {
            let cfg = load_config(&io)
                .and_then(|file| {
                    let flags =
                        Overrides { input: io.input, out_dir: io.out_dir, seed: io.seed, n_train, n_test, model };
                    PipelineConfig::resolve(file, flags, env_seed().as_deref())
                })
                .map_err(|e| format!("config: {e:#}"))?;
            let outcome = run_pipeline(&cfg).map_err(|e| e.to_string())?;
            for p in &outcome.files {
                println!("{}", p.display());
            }
            for m in &outcome.metrics.models {
                eprintln!("{}: accuracy {:.4} (baseline {:.4})", m.model.label(), m.accuracy, m.majority_baseline);
            }
            Ok(())
        }
    }
}

fn kmeans_options(km: &KMeansConfig, seed: u64) -> linkdcm::discretizer::KMeansOptions {
    linkdcm::discretizer::KMeansOptions { k: 3, seed, restarts: km.restarts, tol: km.tol, max_iter: km.max_iter }
}

fn stage_name(c: &Command) -> &'static str {
    match c {
        Command::Ingest(_) => "ingest",
        Command::Discretize(_) => "discretize",
        Command::Frame { .. } => "frame",
        Command::Split { .. } => "split",
        Command::FitMnl(_) => "fit-mnl",
        Command::FitOl(_) => "fit-ol",
        Command::Predict(_) => "predict",
        Command::Evaluate(_) => "evaluate",
        Command::Elasticity { .. } => "elasticity",
        Command::Iia { .. } => "iia",
        Command::Synth(_) => "synth",
        Command::Pipeline { .. } => "pipeline",
    }
}
