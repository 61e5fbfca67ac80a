//! Command-line front end. Exit codes: 0 success, 1 runtime failure,
//! 2 malformed or invalid arguments.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::constructions::by_name;
use crate::datasets::{generate_synthetic, load_bundle, save_bundle, DatasetBundle, BUNDLE_FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::exact::{simulate_dynamics, ResponseConfig, TRACE_FORMAT_VERSION};
use crate::experiments::{aggregate, aggregate_csv, evaluate, run_sweep, sweep_csv, ExperimentConfig, MetricsRow};
use crate::graph::LinearGraphClassifier;
use crate::train::{
    default_threshold_grid, line_search_threshold, train, TrainConfig, TrainedModel, MODEL_FORMAT_VERSION,
};

#[derive(Debug, Parser)]
#[command(name = "stratgraph", about = "Strategic responses to linear graph classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic bundle with `n` train and `n` test nodes.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Bundle directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a classifier on the bundle's train split.
    Train {
        #[arg(long)]
        bundle: PathBuf,
        /// JSON training configuration; defaults apply otherwise.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        layers: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        max_distance: Option<f64>,
        /// Fit a threshold on one-dimensional features instead of gradient training.
        #[arg(long)]
        line_search: bool,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the exact dynamics on the whole bundle graph and emit the trace.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        max_distance: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Static and strategic metrics on the bundle's test split.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long)]
        max_distance: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an experiment configuration and emit one CSV row per (value, seed).
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Replaces the seed list by `seed, seed + 1, ...` of the same length.
        #[arg(long)]
        seed: Option<u64>,
        /// Emit mean and standard error per (value, arm) instead.
        #[arg(long)]
        aggregate: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a named construction as a bundle plus `model.json`.
    Construct {
        /// hitchhike, cascade, late-movers, large-gap, no-gap or circular.
        name: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn version_string() -> String {
    format!(
        "{} (bundle format {BUNDLE_FORMAT_VERSION}, model format {MODEL_FORMAT_VERSION}, trace format {TRACE_FORMAT_VERSION})",
        env!("CARGO_PKG_VERSION")
    )
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = Cli::command()
        .version(version_string())
        .try_get_matches_from(argv)
        .and_then(|m| Cli::from_arg_matches(&m));
    let cli = match parsed {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) => 2,
                _ => 1,
            }
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Override, else the bundle's own response model, else the model's.
fn response_for(bundle: &DatasetBundle, model: &TrainedModel, max_distance: Option<f64>) -> Result<ResponseConfig> {
    if let Some(d) = max_distance {
        return Ok(ResponseConfig::from_max_distance(d)?.with_tol(model.config.tol));
    }
    Ok(bundle.meta.response.clone().unwrap_or_else(|| model.config.response()))
}

fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from("strategic,accuracy,moved,crossed,moved_pos,moved_neg,crossed_pos,crossed_neg,rounds\n");
    for r in rows {
        let m = &r.movement;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.strategic,
            r.accuracy,
            m.moved_fraction,
            m.crossed_fraction,
            m.moved_fraction_pos,
            m.moved_fraction_neg,
            m.crossed_fraction_pos,
            m.crossed_fraction_neg,
            m.rounds
        ));
    }
    out
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth { n, alpha, seed, out } => save_bundle(&generate_synthetic(n, alpha, seed)?, out),
        Command::Train { bundle, config, layers, epochs, tau, max_distance, line_search, seed, out } => {
            let mut cfg: TrainConfig = match config {
                Some(p) => read_json(&p)?,
                None => TrainConfig::default(),
            };
            if let Some(t) = layers {
                cfg.layers = t;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(t) = tau {
                cfg.tau = t;
            }
            if let Some(d) = max_distance {
                cfg.beta = ResponseConfig::from_max_distance(d)?.beta;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let view = load_bundle(&bundle)?.train_view()?;
            let model = if line_search {
                let (b, _) =
                    line_search_threshold(&view.features, &view.weights, &view.labels, &view.eval, None, &default_threshold_grid())?;
                TrainedModel {
                    format_version: MODEL_FORMAT_VERSION,
                    classifier: LinearGraphClassifier::threshold(b),
                    loss_curve: Vec::new(),
                    config: TrainConfig { layers: 0, ..cfg },
                }
            } else {
                train(&view, &cfg)?
            };
            emit(out.as_deref(), &(serde_json::to_string_pretty(&model)? + "\n"))
        }
        Command::Simulate { model, bundle, max_distance, out } => {
            let model = TrainedModel::load(&model)?;
            let bundle = load_bundle(&bundle)?;
            let response = response_for(&bundle, &model, max_distance)?;
            let view = bundle.full_view()?;
            let trace = simulate_dynamics(&model.classifier, &view.features, &view.weights, &response)?;
            let export = trace.to_export(bundle.meta.node_names.as_deref());
            emit(out.as_deref(), &(serde_json::to_string_pretty(&export)? + "\n"))
        }
        Command::Eval { model, bundle, max_distance, out } => {
            let model = TrainedModel::load(&model)?;
            let bundle = load_bundle(&bundle)?;
            let response = response_for(&bundle, &model, max_distance)?;
            let view = bundle.test_view()?;
            let rows = [
                evaluate(&model.classifier, &view, &response, false)?,
                evaluate(&model.classifier, &view, &response, true)?,
            ];
            emit(out.as_deref(), &metrics_csv(&rows))
        }
        Command::Sweep { config, seed, aggregate: agg, out } => {
            let mut cfg: ExperimentConfig = read_json(&config)?;
            if let Some(s) = seed {
                cfg.seeds = (s..s + cfg.seeds.len() as u64).collect();
            }
            let records = run_sweep(&cfg)?;
            let text = if agg {
                aggregate_csv(cfg.axis, &aggregate(&records))
            } else {
                sweep_csv(cfg.axis, &cfg.arms, &records)
            };
            emit(out.as_deref(), &text)
        }
        Command::Construct { name, n, k, out } => {
            let inst = by_name(&name, n, k)?;
            inst.verify()?;
            save_bundle(&inst.to_bundle()?, &out)?;
            let model = TrainedModel {
                format_version: MODEL_FORMAT_VERSION,
                classifier: inst.classifier.clone(),
                loss_curve: Vec::new(),
                config: TrainConfig {
                    layers: 0,
                    beta: inst.response.beta,
                    tol: inst.response.tol,
                    ..TrainConfig::default()
                },
            };
            model.save(out.join("model.json"))
        }
    }
}
