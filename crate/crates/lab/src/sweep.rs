//! Multi-seed experiment sweeps.
//!
//! A sweep spec is a small text file:
//!
//! ```text
//! seeds = 1 2 3 4 5
//! opt.epochs = 10            # optional global overrides for every cell
//!
//! [baseline]
//! aug.lumix = false
//!
//! [full]
//! # empty cell: just the base config + globals
//! ```
//!
//! `seeds` is required. Lines before the first `[cell]` section are global
//! overrides; each section then lists per-cell overrides using the same
//! `key = value` grammar as run configs. Every cell runs once per seed; the
//! jobs are independent and run on a local thread pool, but results are
//! assembled in spec order, so `sweep.csv` is byte-reproducible regardless
//! of scheduling.
//!
//! Per cell, the summary aggregates each run's final epoch: mean and sample
//! standard deviation (n - 1 denominator, 0 for a single seed) of test
//! accuracy and clean train loss, plus the means of the lambda_final and
//! regularizer diagnostics.

use crate::config::RunConfig;
use crate::error::LabError;
use crate::train::run_training;
use rayon::prelude::*;
use std::fmt::Write as _;

/// One named configuration cell: the overrides it applies on the base.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub name: String,
    pub overrides: Vec<(String, String)>,
}

/// A parsed sweep spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub seeds: Vec<u64>,
    pub globals: Vec<(String, String)>,
    pub cells: Vec<SweepCell>,
}

/// Aggregated results of one cell across its seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub name: String,
    pub n_seeds: usize,
    pub test_acc_mean: f64,
    pub test_acc_std: f64,
    pub train_loss_mean: f64,
    pub train_loss_std: f64,
    pub lambda_final_mean: f64,
    pub reg_mean: f64,
}

fn strip_comment(line: &str) -> &str {
    let bytes = line.as_bytes();
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'#' && (i == 0 || bytes[i - 1].is_ascii_whitespace()) {
            return &line[..i];
        }
    }
    line
}

impl SweepSpec {
    pub fn parse(text: &str) -> Result<SweepSpec, LabError> {
        let mut seeds: Option<Vec<u64>> = None;
        let mut globals = Vec::new();
        let mut cells: Vec<SweepCell> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            let at = |msg: String| LabError::Config(format!("line {}: {msg}", lineno + 1));
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| at(format!("unterminated section header `{line}`")))?
                    .trim();
                if name.is_empty() {
                    return Err(at("empty cell name".into()));
                }
                if cells.iter().any(|c| c.name == name) {
                    return Err(at(format!("duplicate cell name `{name}`")));
                }
                cells.push(SweepCell { name: name.to_string(), overrides: Vec::new() });
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key == "seeds" {
                if !cells.is_empty() {
                    return Err(at("seeds must appear before the first cell section".into()));
                }
                let parsed: Result<Vec<u64>, _> =
                    value.split_whitespace().map(|s| s.parse::<u64>()).collect();
                let list = parsed.map_err(|_| at(format!("bad seeds list `{value}`")))?;
                if list.is_empty() {
                    return Err(at("seeds list is empty".into()));
                }
                seeds = Some(list);
                continue;
            }
            match cells.last_mut() {
                Some(cell) => cell.overrides.push((key.to_string(), value.to_string())),
                None => globals.push((key.to_string(), value.to_string())),
            }
        }
        let seeds = seeds.ok_or_else(|| {
            LabError::Config("sweep spec needs a `seeds = <list>` line".into())
        })?;
        if cells.is_empty() {
            return Err(LabError::Config("sweep spec defines no [cell] sections".into()));
        }
        Ok(SweepSpec { seeds, globals, cells })
    }

    pub fn from_file(path: &std::path::Path) -> Result<SweepSpec, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::io(format!("reading sweep spec {}", path.display()), e))?;
        SweepSpec::parse(&text).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))
    }

    /// Materializes each cell's full config (without the seed applied).
    pub fn cell_configs(&self, base: &RunConfig) -> Result<Vec<RunConfig>, LabError> {
        self.cells
            .iter()
            .map(|cell| {
                let mut cfg = base.clone();
                for (k, v) in self.globals.iter().chain(cell.overrides.iter()) {
                    cfg.apply_kv(k, v)
                        .map_err(|e| LabError::Config(format!("cell [{}]: {e}", cell.name)))?;
                }
                cfg.validate()
                    .map_err(|e| LabError::Config(format!("cell [{}]: {e}", cell.name)))?;
                Ok(cfg)
            })
            .collect()
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every cell x seed job and aggregates per cell, in spec order.
///
/// `threads` sizes the local worker pool (0 picks the library default). Each
/// job is an independent deterministic training; `progress` is called with a
/// short line as each job finishes (out of order under parallelism).
pub fn run_sweep(
    base: &RunConfig,
    spec: &SweepSpec,
    threads: usize,
    progress: impl Fn(&str) + Sync,
) -> Result<Vec<CellResult>, LabError> {
    let configs = spec.cell_configs(base)?;
    let mut jobs = Vec::new();
    for (ci, cfg) in configs.iter().enumerate() {
        for &seed in &spec.seeds {
            let mut cfg = cfg.clone();
            cfg.seed = seed;
            jobs.push((ci, seed, cfg));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("could not build the worker pool: {e}")))?;
    let results: Result<Vec<_>, LabError> = pool.install(|| {
        jobs.par_iter()
            .map(|(ci, seed, cfg)| {
                let outcome = run_training(cfg, 0, |_| {})?;
                let last = outcome.metrics.last();
                let summary = (
                    *ci,
                    outcome.final_test_acc,
                    last.map_or(f64::NAN, |r| r.train_loss),
                    last.map_or(f64::NAN, |r| r.mean_lambda_final),
                    last.map_or(f64::NAN, |r| r.mean_reg),
                );
                progress(&format!(
                    "[{}] seed {seed}: test_acc {:.4}",
                    spec.cells[*ci].name, outcome.final_test_acc
                ));
                Ok(summary)
            })
            .collect()
    });
    let results = results?;

    let mut out = Vec::with_capacity(spec.cells.len());
    for (ci, cell) in spec.cells.iter().enumerate() {
        // Jobs were laid out cell-major, so this filter keeps seed order.
        let rows: Vec<_> = results.iter().filter(|r| r.0 == ci).collect();
        let accs: Vec<f64> = rows.iter().map(|r| r.1).collect();
        let losses: Vec<f64> = rows.iter().map(|r| r.2).collect();
        let (test_acc_mean, test_acc_std) = mean_std(&accs);
        let (train_loss_mean, train_loss_std) = mean_std(&losses);
        let lambda_final_mean = rows.iter().map(|r| r.3).sum::<f64>() / rows.len() as f64;
        let reg_mean = rows.iter().map(|r| r.4).sum::<f64>() / rows.len() as f64;
        out.push(CellResult {
            name: cell.name.clone(),
            n_seeds: rows.len(),
            test_acc_mean,
            test_acc_std,
            train_loss_mean,
            train_loss_std,
            lambda_final_mean,
            reg_mean,
        });
    }
    Ok(out)
}

/// Renders `sweep.csv`.
pub fn sweep_csv(results: &[CellResult]) -> String {
    let mut s = String::from("schema,lumix.sweep.v1\n");
    s.push_str("cell,n_seeds,test_acc_mean,test_acc_std,train_loss_mean,train_loss_std,lambda_final_mean,reg_mean\n");
    for r in results {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.name,
            r.n_seeds,
            r.test_acc_mean,
            r.test_acc_std,
            r.train_loss_mean,
            r.train_loss_std,
            r.lambda_final_mean,
            r.reg_mean
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DataKind;

    fn fast_base() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.data_kind = DataKind::Blobs;
        cfg.train_n = 96;
        cfg.test_n = 48;
        cfg.model = lumix_core::nn::ModelKind::Linear;
        cfg.epochs = 2;
        cfg.batch_size = 32;
        cfg.metrics_subset = 96;
        cfg
    }

    #[test]
    fn spec_parsing_handles_sections_globals_and_errors() {
        let spec = SweepSpec::parse(
            "# sweep\nseeds = 1 2\nopt.epochs = 3\n\n[a]\naug.lumix = false\n[b]\n",
        )
        .unwrap();
        assert_eq!(spec.seeds, vec![1, 2]);
        assert_eq!(spec.globals, vec![("opt.epochs".to_string(), "3".to_string())]);
        assert_eq!(spec.cells.len(), 2);
        assert_eq!(spec.cells[0].overrides.len(), 1);
        assert!(spec.cells[1].overrides.is_empty());

        assert!(SweepSpec::parse("[a]\n").unwrap_err().to_string().contains("seeds"));
        assert!(SweepSpec::parse("seeds = 1\n").unwrap_err().to_string().contains("no [cell]"));
        assert!(SweepSpec::parse("seeds = 1\n[a]\n[a]\n")
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
        assert!(SweepSpec::parse("seeds = x\n[a]\n").unwrap_err().to_string().contains("bad seeds"));
        assert!(SweepSpec::parse("seeds = 1\n[a]\nseeds = 2\n")
            .unwrap_err()
            .to_string()
            .contains("before the first cell"));
    }

    #[test]
    fn cell_configs_apply_globals_then_cell_overrides() {
        let spec =
            SweepSpec::parse("seeds = 1\nopt.epochs = 7\n[a]\nopt.epochs = 9\n[b]\nseed = 5\n")
                .unwrap();
        // `seed = 5` inside a cell is allowed grammar-wise but gets overridden
        // per job; epochs show layering.
        let cfgs = spec.cell_configs(&fast_base()).unwrap();
        assert_eq!(cfgs[0].epochs, 9);
        assert_eq!(cfgs[1].epochs, 7);

        let bad = SweepSpec::parse("seeds = 1\n[a]\nlumix.r1 = 0.9\nlumix.r2 = 0.9\n").unwrap();
        let e = bad.cell_configs(&fast_base()).unwrap_err().to_string();
        assert!(e.contains("cell [a]"), "{e}");
    }

    #[test]
    fn sweep_runs_are_deterministic_and_aggregate_in_order() {
        let base = fast_base();
        let spec = SweepSpec::parse("seeds = 1 2 3\n[plain]\naug.lumix = false\n[lumix]\n").unwrap();
        let a = run_sweep(&base, &spec, 2, |_| {}).unwrap();
        let b = run_sweep(&base, &spec, 1, |_| {}).unwrap();
        assert_eq!(a, b, "thread count must not affect results");
        assert_eq!(a[0].name, "plain");
        assert_eq!(a[1].name, "lumix");
        assert_eq!(a[0].n_seeds, 3);
        assert!(a.iter().all(|c| c.test_acc_std >= 0.0));
        assert_eq!(sweep_csv(&a), sweep_csv(&b));
    }

    #[test]
    fn single_seed_std_is_zero() {
        let base = fast_base();
        let mut spec = SweepSpec::parse("seeds = 4\n[only]\n").unwrap();
        spec.cells[0].overrides.push(("aug.mode".into(), "mixup".into()));
        let res = run_sweep(&base, &spec, 1, |_| {}).unwrap();
        assert_eq!(res[0].n_seeds, 1);
        assert_eq!(res[0].test_acc_std, 0.0);
        assert_eq!(res[0].train_loss_std, 0.0);
    }

    #[test]
    fn mean_std_matches_hand_computation() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        // Sample variance of 1..4 is 5/3.
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
