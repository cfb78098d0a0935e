//! The `lumix` command-line interface.
//!
//! Subcommands: `train`, `eval-occlusion`, `eval-shuffle`, `sweep`,
//! `gen-data`. All of them resolve a run config the same way: defaults, then
//! `--config FILE`, then each `--set key=value` in order, then the dedicated
//! `--seed` / `--dataset` flags.

use crate::config::{DataKind, RunConfig};
use crate::error::LabError;
use crate::idx;
use crate::model_io;
use crate::robustness::{
    eval_occlusion, eval_shuffle, occlusion_csv, shuffle_csv, OcclusionMode,
};
use crate::sweep::{run_sweep, sweep_csv, SweepSpec};
use crate::train::{load_data, run_training, write_run_outputs};
use clap::{Args, Parser, Subcommand};
use lumix_core::sampling::{RngState, Stream};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "lumix",
    about = "A desk-scale laboratory for label-uncertainty image mixing",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub cmd: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Train one model and write its artifacts (config, metrics, checkpoint).
    Train(TrainArgs),
    /// Occlusion-robustness sweep of a trained checkpoint on the test split.
    EvalOcclusion(EvalOcclusionArgs),
    /// Patch-shuffle evaluation of a trained checkpoint on the test split.
    EvalShuffle(EvalShuffleArgs),
    /// Run a multi-seed sweep spec and write the aggregated table.
    Sweep(SweepArgs),
    /// Generate a dataset and save it as idx files.
    GenData(GenDataArgs),
}

/// Config resolution flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonCfg {
    /// Config file (`key = value` lines); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override one config key, e.g. --set opt.lr=0.01 (repeatable, applied
    /// in order after the file).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Root seed; takes precedence over the file and --set.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dataset selector: collage, blobs, or idx:<dir>; takes precedence over
    /// the file and --set.
    #[arg(long)]
    pub dataset: Option<String>,
}

impl CommonCfg {
    pub fn resolve(&self) -> Result<RunConfig, LabError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        for kv in &self.set {
            cfg.apply_set(kv)?;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(ds) = &self.dataset {
            cfg.apply_kv("data.kind", ds)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub cfg: CommonCfg,
    /// Output directory for the run artifacts.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Dump the first N images of the first mixed batch as PPM files.
    #[arg(long, default_value_t = 0, value_name = "N")]
    pub dump_mixed: usize,
}

#[derive(Debug, Args)]
pub struct EvalOcclusionArgs {
    #[command(flatten)]
    pub cfg: CommonCfg,
    /// Trained checkpoint to evaluate.
    #[arg(long)]
    pub model: PathBuf,
    /// Cell selection: random, salient_proxy, or nonsalient_proxy.
    #[arg(long, default_value = "random")]
    pub mode: String,
    /// Occlusion cell grid (grid x grid cells per image).
    #[arg(long, default_value_t = 4)]
    pub grid: usize,
    /// Comma-separated occlusion fractions; default 0,0.1,...,0.9.
    #[arg(long)]
    pub fractions: Option<String>,
    /// Output directory for occlusion.csv.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalShuffleArgs {
    #[command(flatten)]
    pub cfg: CommonCfg,
    /// Trained checkpoint to evaluate.
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated patch grids to evaluate; 1 is the identity.
    #[arg(long, default_value = "1,2,4,8")]
    pub grids: String,
    /// Output directory for shuffle.csv.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub cfg: CommonCfg,
    /// Sweep spec file (seeds, global overrides, [cell] sections).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output directory for sweep.csv.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads (default: the LUMIX_THREADS variable, else automatic).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[command(flatten)]
    pub cfg: CommonCfg,
    /// Directory for the four idx files.
    #[arg(long, default_value = "out/data")]
    pub out: PathBuf,
}

fn write_text(dir: &Path, name: &str, text: String) -> Result<(), LabError> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, LabError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| LabError::Config(format!("bad {what} entry `{t}`")))
        })
        .collect()
}

fn parse_usize_list(s: &str, what: &str) -> Result<Vec<usize>, LabError> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| LabError::Config(format!("bad {what} entry `{t}`")))
        })
        .collect()
}

/// Test-split data for the eval subcommands, checked against a checkpoint.
fn eval_setup(
    common: &CommonCfg,
    model_path: &Path,
) -> Result<(RunConfig, lumix_core::nn::Model, lumix_core::data::Dataset), LabError> {
    let cfg = common.resolve()?;
    let model = model_io::load_model(model_path)?;
    let (_train, test) = load_data(&cfg)?;
    if model.input_shape != test.input_shape() {
        return Err(LabError::Data(format!(
            "checkpoint expects {:?} inputs but the dataset provides {:?}",
            model.input_shape,
            test.input_shape()
        )));
    }
    if model.num_classes != test.num_classes {
        return Err(LabError::Data(format!(
            "checkpoint has {} classes but the dataset has {}",
            model.num_classes, test.num_classes
        )));
    }
    Ok((cfg, model, test))
}

impl Cli {
    pub fn run(self) -> Result<(), LabError> {
        match self.cmd {
            Cmd::Train(args) => {
                let cfg = args.cfg.resolve()?;
                let outcome = run_training(&cfg, args.dump_mixed, |row| {
                    println!(
                        "epoch {:>3}  train_loss {:.4}  train_acc {:.4}  test_acc {:.4}  lambda_final {:.4}",
                        row.epoch, row.train_loss, row.train_acc, row.test_acc, row.mean_lambda_final
                    );
                })?;
                write_run_outputs(&args.out, &cfg, &outcome)?;
                println!(
                    "done: {} epochs, final test accuracy {:.4}; artifacts in {}",
                    cfg.epochs,
                    outcome.final_test_acc,
                    args.out.display()
                );
                Ok(())
            }
            Cmd::EvalOcclusion(args) => {
                let (cfg, model, test) = eval_setup(&args.cfg, &args.model)?;
                let mode = OcclusionMode::parse(&args.mode)?;
                let fractions = match &args.fractions {
                    Some(s) => parse_f64_list(s, "fraction")?,
                    None => (0..10).map(|i| i as f64 / 10.0).collect(),
                };
                let mut rng = RngState::stream(cfg.seed, Stream::Eval);
                let points = eval_occlusion(&model, &test, &fractions, mode, args.grid, &mut rng)?;
                for p in &points {
                    println!("occlusion {:.2}: accuracy {:.4}", p.fraction, p.accuracy);
                }
                write_text(&args.out, "occlusion.csv", occlusion_csv(mode, args.grid, &points))
            }
            Cmd::EvalShuffle(args) => {
                let (cfg, model, test) = eval_setup(&args.cfg, &args.model)?;
                let grids = parse_usize_list(&args.grids, "grid")?;
                let mut rng = RngState::stream(cfg.seed, Stream::Eval);
                let points = eval_shuffle(&model, &test, &grids, &mut rng)?;
                for p in &points {
                    println!("shuffle grid {}: accuracy {:.4}", p.grid, p.accuracy);
                }
                write_text(&args.out, "shuffle.csv", shuffle_csv(&points))
            }
            Cmd::Sweep(args) => {
                let base = args.cfg.resolve()?;
                let spec = SweepSpec::from_file(&args.spec)?;
                let threads = match args.threads {
                    Some(t) => t,
                    None => std::env::var("LUMIX_THREADS")
                        .ok()
                        .and_then(|v| v.parse().ok())
                        .unwrap_or(0),
                };
                let results = run_sweep(&base, &spec, threads, |line| println!("{line}"))?;
                for r in &results {
                    println!(
                        "cell {:<24} test_acc {:.4} +/- {:.4}  ({} seeds)",
                        r.name, r.test_acc_mean, r.test_acc_std, r.n_seeds
                    );
                }
                write_text(&args.out, "sweep.csv", sweep_csv(&results))
            }
            Cmd::GenData(args) => {
                let cfg = args.cfg.resolve()?;
                if matches!(cfg.data_kind, DataKind::Idx(_)) {
                    return Err(LabError::Config(
                        "gen-data needs a generative data.kind (collage or blobs), not idx".into(),
                    ));
                }
                let (train, test) = load_data(&cfg)?;
                idx::save_dataset(&args.out, &train, &test)?;
                println!(
                    "wrote {} train and {} test samples ({} classes) to {}",
                    train.len(),
                    test.len(),
                    train.num_classes,
                    args.out.display()
                );
                Ok(())
            }
        }
    }
}
