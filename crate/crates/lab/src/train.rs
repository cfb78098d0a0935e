//! The training loop and its artifacts.
//!
//! One run is fully determined by `(config, seed)`: data generation, weight
//! init, epoch shuffles, pairing, mix geometry, and the per-sample random
//! lambda term each consume their own named randomness stream, so changing
//! e.g. the lambda distribution never perturbs the data or the pairing.
//!
//! Per-batch flow for a mixing mode: resolve the mode (the combined
//! mixup/cutmix mode flips one fair coin from the geometry stream first),
//! sample the mix plan (pairing permutation, then geometry), mix the inputs,
//! build the two smoothed label batches (partner = A, self = B), forward,
//! then score with either the label-uncertainty loss or the plain mixed soft
//! loss at lambda0. A non-finite loss aborts the run with the config and the
//! last lambda breakdown attached.
//!
//! Metrics are deterministic: `metrics.csv` carries per-epoch clean train
//! loss/accuracy on a fixed subset (the first `eval.metrics_subset` training
//! samples in generation order, scored against unsmoothed one-hot labels),
//! test accuracy, lambda diagnostics, and the mean regularizer value.
//! Wall-clock numbers go to a separate `timing.csv` so byte-comparing
//! metrics across runs stays meaningful.

use crate::config::{AugMode, DataKind, RunConfig};
use crate::error::LabError;
use crate::idx;
use crate::model_io;
use crate::ppm;
use lumix_core::data::{gen_blobs, gen_collage, BlobsSpec, CollageSpec, Dataset};
use lumix_core::lumix::{
    build_labels, lumix_loss, mix_labels, LambdaBreakdown, LossKind,
};
use lumix_core::mixing::{apply_mix_plan, sample_mix_plan};
use lumix_core::nn::{
    argmax_rows, bce_loss, init_stream, soft_ce_loss, Model, Sgd,
};
use lumix_core::sampling::{RngState, Stream};
use lumix_core::Tensor;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// Batch size for evaluation-only passes.
pub const EVAL_BATCH: usize = 256;

/// One epoch's row of `metrics.csv`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsRow {
    pub epoch: usize,
    /// Clean cross-entropy on the fixed metrics subset (one-hot targets).
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    /// Sample-weighted epoch means of the lambda diagnostics. Unmixed
    /// training logs lambda0 = lambda_r = lambda_final = 0 and lambda_s = 0.5
    /// (all label weight on the sample's own class).
    pub mean_lambda0: f64,
    pub mean_lambda_r: f64,
    pub mean_lambda_s: f64,
    pub mean_lambda_final: f64,
    /// Mean regularizer value (not scaled by eta); 0 when disabled.
    pub mean_reg: f64,
}

/// Everything a finished run hands back to callers.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Vec<MetricsRow>,
    /// Total training loss of every batch, in order — the bit-level
    /// fingerprint of the optimization trajectory.
    pub batch_losses: Vec<f64>,
    pub model: Model,
    pub final_test_acc: f64,
    /// Wall-clock seconds per epoch (goes to timing.csv, never metrics.csv).
    pub epoch_seconds: Vec<f64>,
    /// First `preview` images of the first mixed batch, when requested and
    /// the run mixes at all.
    pub mixed_preview: Option<Tensor>,
}

/// Generates or loads the two splits for a config.
pub fn load_data(cfg: &RunConfig) -> Result<(Dataset, Dataset), LabError> {
    match &cfg.data_kind {
        DataKind::Collage => {
            let base = CollageSpec {
                n: cfg.train_n,
                classes: cfg.classes,
                height: cfg.height,
                width: cfg.width,
                object_min_frac: cfg.object_min_frac,
                object_max_frac: cfg.object_max_frac,
                clutter: cfg.clutter,
            };
            let train = gen_collage(&base, &mut RngState::stream(cfg.seed, Stream::DataTrain))?;
            let spec = CollageSpec { n: cfg.test_n, ..base };
            let test = gen_collage(&spec, &mut RngState::stream(cfg.seed, Stream::DataTest))?;
            Ok((train, test))
        }
        DataKind::Blobs => {
            let base = BlobsSpec {
                n: cfg.train_n,
                classes: cfg.classes,
                dim: cfg.blob_dim,
                separation: cfg.blob_separation,
            };
            let train = gen_blobs(&base, &mut RngState::stream(cfg.seed, Stream::DataTrain))?;
            let spec = BlobsSpec { n: cfg.test_n, ..base };
            let test = gen_blobs(&spec, &mut RngState::stream(cfg.seed, Stream::DataTest))?;
            Ok((train, test))
        }
        DataKind::Idx(dir) => idx::load_dataset(Path::new(dir)),
    }
}

/// Mean clean cross-entropy and accuracy of `model` on `(images, labels)`
/// against unsmoothed one-hot targets, evaluated in fixed-size batches.
fn clean_eval(model: &Model, data: &Dataset, limit: usize) -> Result<(f64, f64), LabError> {
    let n = data.len().min(limit);
    let mut loss_sum = 0.0;
    let mut correct = 0usize;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_BATCH).min(n);
        let idx: Vec<usize> = (start..end).collect();
        let (images, classes) = data.gather(&idx)?;
        let logits = model.predict(&images)?;
        let targets = build_labels(&classes, data.num_classes, 0.0)?;
        let out = soft_ce_loss(&logits, &targets)?;
        loss_sum += out.value * (end - start) as f64;
        for (pred, truth) in argmax_rows(&logits).into_iter().zip(&classes) {
            if pred == *truth {
                correct += 1;
            }
        }
        start = end;
    }
    Ok((loss_sum / n as f64, correct as f64 / n as f64))
}

/// Clean cross-entropy of a freshly initialized model on the training
/// subset that `metrics.csv` tracks: the "before any updates" reference a
/// convergence check compares the final train loss against.
pub fn initial_train_loss(cfg: &RunConfig) -> Result<f64, LabError> {
    cfg.validate()?;
    let (train, _) = load_data(cfg)?;
    let (_, h, w) = train.input_shape();
    cfg.check_grids(h, w)?;
    let model = Model::build(cfg.model, train.input_shape(), train.num_classes, &mut init_stream(cfg.seed))?;
    let (loss, _) = clean_eval(&model, &train, cfg.metrics_subset)?;
    Ok(loss)
}

/// Accuracy of `model` over a full image tensor with given labels, batched.
pub fn accuracy_on(model: &Model, images: &Tensor, labels: &[usize]) -> Result<f64, LabError> {
    let s = images.shape();
    let (n, plane) = (s[0], s[1] * s[2] * s[3]);
    debug_assert_eq!(n, labels.len());
    let mut correct = 0usize;
    let mut start = 0;
    while start < n {
        let end = (start + EVAL_BATCH).min(n);
        let chunk = Tensor::from_vec(
            &[end - start, s[1], s[2], s[3]],
            images.as_slice()[start * plane..end * plane].to_vec(),
        )?;
        let logits = model.predict(&chunk)?;
        for (pred, truth) in argmax_rows(&logits).into_iter().zip(&labels[start..end]) {
            if pred == *truth {
                correct += 1;
            }
        }
        start = end;
    }
    Ok(correct as f64 / n as f64)
}

struct LambdaSums {
    lambda0: f64,
    lambda_r: f64,
    lambda_s: f64,
    lambda_final: f64,
    reg: f64,
    samples: f64,
}

impl LambdaSums {
    fn new() -> LambdaSums {
        LambdaSums { lambda0: 0.0, lambda_r: 0.0, lambda_s: 0.0, lambda_final: 0.0, reg: 0.0, samples: 0.0 }
    }

    fn add_batch(&mut self, lambdas: &[LambdaBreakdown], reg: f64) {
        for l in lambdas {
            self.lambda0 += l.lambda0;
            self.lambda_r += l.lambda_r;
            self.lambda_s += l.lambda_s;
            self.lambda_final += l.lambda_final;
        }
        self.reg += reg * lambdas.len() as f64;
        self.samples += lambdas.len() as f64;
    }

    fn mean(&self) -> (f64, f64, f64, f64, f64) {
        let n = if self.samples == 0.0 { 1.0 } else { self.samples };
        (self.lambda0 / n, self.lambda_r / n, self.lambda_s / n, self.lambda_final / n, self.reg / n)
    }
}

fn numeric_abort(
    value: f64,
    epoch: usize,
    batch: usize,
    last: Option<LambdaBreakdown>,
    cfg: &RunConfig,
) -> LabError {
    let lam = match last {
        Some(l) => format!(
            "last lambda breakdown: lambda0={} lambda_r={} lambda_s={} lambda_final={}",
            l.lambda0, l.lambda_r, l.lambda_s, l.lambda_final
        ),
        None => "no lambda breakdown recorded yet".to_string(),
    };
    LabError::Numeric(format!(
        "loss became non-finite ({value}) at epoch {epoch}, batch {batch}; {lam}; config:\n{}",
        cfg.to_canonical_string()
    ))
}

/// Runs one full training. `preview` > 0 captures that many images of the
/// first mixed batch for `--dump-mixed`. `progress` sees each finished
/// epoch's metrics row.
pub fn run_training(
    cfg: &RunConfig,
    preview: usize,
    mut progress: impl FnMut(&MetricsRow),
) -> Result<TrainOutcome, LabError> {
    cfg.validate()?;
    let (train, test) = load_data(cfg)?;
    if train.is_empty() || test.is_empty() {
        return Err(LabError::Data("training needs non-empty train and test splits".into()));
    }
    let (c, h, w) = train.input_shape();
    cfg.check_grids(h, w)?;
    let num_classes = train.num_classes;

    let mut model = Model::build(cfg.model, (c, h, w), num_classes, &mut init_stream(cfg.seed))?;
    let mut opt = Sgd::new(cfg.momentum, cfg.weight_decay);
    let mut grads = model.zero_grads();

    let mut shuffle_rng = RngState::stream(cfg.seed, Stream::EpochShuffle);
    let mut pairing_rng = RngState::stream(cfg.seed, Stream::Pairing);
    let mut geom_rng = RngState::stream(cfg.seed, Stream::MixGeometry);
    let mut lambda_r_rng = RngState::stream(cfg.seed, Stream::LambdaR);

    let mut metrics = Vec::with_capacity(cfg.epochs);
    let mut batch_losses = Vec::new();
    let mut epoch_seconds = Vec::with_capacity(cfg.epochs);
    let mut mixed_preview = None;
    let mut last_lambda: Option<LambdaBreakdown> = None;

    for epoch in 0..cfg.epochs {
        let t0 = Instant::now();
        let lr = if cfg.warmup_epochs > 0 && epoch < cfg.warmup_epochs {
            cfg.lr * (epoch + 1) as f64 / cfg.warmup_epochs as f64
        } else {
            cfg.lr
        };

        let order = shuffle_rng.permutation(train.len());
        let mut sums = LambdaSums::new();

        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let (images, classes_b) = train.gather(chunk)?;
            let b = chunk.len();

            let coin_is_cutmix = if cfg.aug_mode == AugMode::MixupCutmix {
                geom_rng.sample_uniform() < 0.5
            } else {
                false
            };

            let (loss_out, lambdas, reg) = match cfg.mix_mode(coin_is_cutmix) {
                Some(mode) => {
                    let plan =
                        sample_mix_plan(b, h, w, mode, cfg.lambda0_dist(), &mut pairing_rng, &mut geom_rng)?;
                    let mixed = apply_mix_plan(&images, &plan)?;
                    if preview > 0 && mixed_preview.is_none() {
                        let k = preview.min(b);
                        let plane = c * h * w;
                        mixed_preview = Some(Tensor::from_vec(
                            &[k, c, h, w],
                            mixed.as_slice()[..k * plane].to_vec(),
                        )?);
                    }
                    let labels_b = build_labels(&classes_b, num_classes, cfg.lumix.smoothing_eps)?;
                    let classes_a: Vec<usize> = plan.pairing.iter().map(|&j| classes_b[j]).collect();
                    let labels_a = build_labels(&classes_a, num_classes, cfg.lumix.smoothing_eps)?;

                    let (logits, cache) = model
                        .forward(&mixed)
                        .map_err(|e| match LabError::from(e) {
                            LabError::Numeric(_) => {
                                numeric_abort(f64::NAN, epoch, batch_idx, last_lambda, cfg)
                            }
                            other => other,
                        })?;

                    if cfg.use_lumix {
                        let res = lumix_loss(
                            &logits,
                            &labels_a,
                            &labels_b,
                            plan.lambda0,
                            &cfg.lumix,
                            &mut lambda_r_rng,
                        )?;
                        model.backward(&cache, &res.loss.grad, grads_reset(&mut grads))?;
                        (res.loss, res.lambdas, res.reg)
                    } else {
                        let lams_vec = vec![plan.lambda0; b];
                        let targets = mix_labels(&labels_a, &labels_b, &lams_vec)?;
                        let out = match cfg.lumix.loss {
                            LossKind::SoftmaxCe => soft_ce_loss(&logits, &targets)?,
                            LossKind::Bce => bce_loss(&logits, &targets)?,
                        };
                        let lams: Vec<LambdaBreakdown> = lams_vec
                            .iter()
                            .map(|&l| LambdaBreakdown {
                                lambda0: l,
                                lambda_r: 0.0,
                                lambda_s: 0.5,
                                lambda_final: l,
                            })
                            .collect();
                        model.backward(&cache, &out.grad, grads_reset(&mut grads))?;
                        (out, lams, 0.0)
                    }
                }
                None => {
                    let targets = build_labels(&classes_b, num_classes, cfg.lumix.smoothing_eps)?;
                    let (logits, cache) = model
                        .forward(&images)
                        .map_err(|e| match LabError::from(e) {
                            LabError::Numeric(_) => {
                                numeric_abort(f64::NAN, epoch, batch_idx, last_lambda, cfg)
                            }
                            other => other,
                        })?;
                    let out = match cfg.lumix.loss {
                        LossKind::SoftmaxCe => soft_ce_loss(&logits, &targets)?,
                        LossKind::Bce => bce_loss(&logits, &targets)?,
                    };
                    let lams: Vec<LambdaBreakdown> = (0..b)
                        .map(|_| LambdaBreakdown {
                            lambda0: 0.0,
                            lambda_r: 0.0,
                            lambda_s: 0.5,
                            lambda_final: 0.0,
                        })
                        .collect();
                    model.backward(&cache, &out.grad, grads_reset(&mut grads))?;
                    (out, lams, 0.0)
                }
            };

            if !loss_out.value.is_finite() {
                return Err(numeric_abort(loss_out.value, epoch, batch_idx, last_lambda, cfg));
            }
            batch_losses.push(loss_out.value);
            last_lambda = lambdas.last().copied();
            sums.add_batch(&lambdas, reg);
            opt.step(&mut model, &grads, lr);
        }

        let (train_loss, train_acc) = clean_eval(&model, &train, cfg.metrics_subset)?;
        let test_acc = accuracy_on(&model, &test.images, &test.labels)?;
        let (l0, lr_, ls, lf, reg) = sums.mean();
        let row = MetricsRow {
            epoch,
            train_loss,
            train_acc,
            test_acc,
            mean_lambda0: l0,
            mean_lambda_r: lr_,
            mean_lambda_s: ls,
            mean_lambda_final: lf,
            mean_reg: reg,
        };
        progress(&row);
        metrics.push(row);
        epoch_seconds.push(t0.elapsed().as_secs_f64());
    }

    let final_test_acc = match metrics.last() {
        Some(row) => row.test_acc,
        None => accuracy_on(&model, &test.images, &test.labels)?,
    };

    Ok(TrainOutcome {
        metrics,
        batch_losses,
        model,
        final_test_acc,
        epoch_seconds,
        mixed_preview,
    })
}

/// Zeroes and hands back the same gradient buffers (a tiny borrow helper so
/// the batch arms stay expressions).
fn grads_reset(grads: &mut lumix_core::nn::Gradients) -> &mut lumix_core::nn::Gradients {
    grads.zero();
    grads
}

/// Renders `metrics.csv` (versioned header, deterministic float text).
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from("schema,lumix.metrics.v1\n");
    s.push_str("epoch,train_loss,train_acc,test_acc,mean_lambda0,mean_lambda_r,mean_lambda_s,mean_lambda_final,mean_reg\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            r.epoch,
            r.train_loss,
            r.train_acc,
            r.test_acc,
            r.mean_lambda0,
            r.mean_lambda_r,
            r.mean_lambda_s,
            r.mean_lambda_final,
            r.mean_reg
        );
    }
    s
}

/// Renders the wall-clock sidecar `timing.csv`.
pub fn timing_csv(epoch_seconds: &[f64]) -> String {
    let mut s = String::from("schema,lumix.timing.v1\nepoch,seconds\n");
    for (e, sec) in epoch_seconds.iter().enumerate() {
        let _ = writeln!(s, "{e},{sec}");
    }
    s
}

/// Writes the full artifact set of one run into `dir`: resolved config,
/// metrics, timing sidecar, checkpoint, and any mixed-batch previews.
pub fn write_run_outputs(dir: &Path, cfg: &RunConfig, outcome: &TrainOutcome) -> Result<(), LabError> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(format!("creating {}", dir.display()), e))?;
    let write = |name: &str, text: String| -> Result<(), LabError> {
        let path = dir.join(name);
        std::fs::write(&path, text).map_err(|e| LabError::io(format!("writing {}", path.display()), e))
    };
    write("config.cfg", cfg.to_canonical_string())?;
    write("metrics.csv", metrics_csv(&outcome.metrics))?;
    write("timing.csv", timing_csv(&outcome.epoch_seconds))?;
    model_io::save_model(&dir.join("model.bin"), &outcome.model)?;
    if let Some(preview) = &outcome.mixed_preview {
        for i in 0..preview.shape()[0] {
            ppm::write_ppm(&dir.join(format!("mixed_{i:04}.ppm")), preview, i)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use lumix_core::lumix::LambdaRDist;

    fn tiny_blobs_cfg() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.data_kind = DataKind::Blobs;
        cfg.train_n = 128;
        cfg.test_n = 64;
        cfg.blob_dim = 16;
        cfg.blob_separation = 8.0;
        cfg.model = lumix_core::nn::ModelKind::Mlp;
        cfg.epochs = 3;
        cfg.batch_size = 32;
        cfg.lr = 0.1;
        cfg.metrics_subset = 128;
        cfg
    }

    #[test]
    fn training_is_deterministic_batch_for_batch() {
        let cfg = tiny_blobs_cfg();
        let a = run_training(&cfg, 0, |_| {}).unwrap();
        let b = run_training(&cfg, 0, |_| {}).unwrap();
        assert_eq!(a.batch_losses, b.batch_losses);
        assert_eq!(a.model.param_vec(), b.model.param_vec());
        assert_eq!(metrics_csv(&a.metrics), metrics_csv(&b.metrics));
        assert_eq!(a.metrics.len(), 3);
        assert_eq!(a.batch_losses.len(), 3 * 4);
    }

    #[test]
    fn clean_training_learns_well_separated_blobs() {
        let mut cfg = tiny_blobs_cfg();
        cfg.aug_mode = AugMode::None;
        cfg.train_n = 512;
        cfg.epochs = 6;
        let out = run_training(&cfg, 0, |_| {}).unwrap();
        assert!(out.final_test_acc > 0.9, "final test acc {}", out.final_test_acc);
        // Loss drops on the clean subset.
        assert!(out.metrics[5].train_loss < out.metrics[0].train_loss);
    }

    #[test]
    fn different_seeds_diverge() {
        let mut cfg = tiny_blobs_cfg();
        let a = run_training(&cfg, 0, |_| {}).unwrap();
        cfg.seed = 2;
        let b = run_training(&cfg, 0, |_| {}).unwrap();
        assert_ne!(a.batch_losses, b.batch_losses);
    }

    #[test]
    fn unmixed_training_logs_neutral_lambdas() {
        let mut cfg = tiny_blobs_cfg();
        cfg.aug_mode = AugMode::None;
        cfg.epochs = 1;
        let out = run_training(&cfg, 0, |_| {}).unwrap();
        let row = &out.metrics[0];
        assert_eq!(row.mean_lambda0, 0.0);
        assert_eq!(row.mean_lambda_r, 0.0);
        assert_eq!(row.mean_lambda_s, 0.5);
        assert_eq!(row.mean_lambda_final, 0.0);
        assert_eq!(row.mean_reg, 0.0);
    }

    #[test]
    fn every_aug_mode_runs_one_epoch() {
        for mode in [
            AugMode::None,
            AugMode::Mixup,
            AugMode::Cutmix,
            AugMode::MixupCutmix,
            AugMode::CutmixShuffle,
            AugMode::PerPatchLambda,
        ] {
            let mut cfg = tiny_blobs_cfg();
            cfg.aug_mode = mode;
            cfg.epochs = 1;
            cfg.shuffle_grid = 2;
            cfg.patch_grid = 2;
            let out = run_training(&cfg, 0, |_| {}).unwrap();
            assert_eq!(out.metrics.len(), 1, "mode {mode:?}");
            assert!(out.batch_losses.iter().all(|l| l.is_finite()), "mode {mode:?}");
        }
    }

    #[test]
    fn lambda_r_stream_is_isolated_from_geometry() {
        // Changing the lambda_r distribution must not change the mixed inputs,
        // i.e. the first batch losses under a zero-eta, lambda-only change
        // still refer to the same data. We check stream isolation indirectly:
        // pairing and geometry streams produce the same plan regardless.
        let mut cfg = tiny_blobs_cfg();
        cfg.epochs = 1;
        cfg.lumix.r1 = 0.0;
        cfg.lumix.r2 = 0.0;
        cfg.lumix.lambda_r = LambdaRDist::Beta(2.0);
        let a = run_training(&cfg, 0, |_| {}).unwrap();
        cfg.lumix.lambda_r = LambdaRDist::Gaussian { mu: 0.5, sigma: 0.1 };
        let b = run_training(&cfg, 0, |_| {}).unwrap();
        // r1 = 0 makes lambda_r's weight zero, so identical trajectories.
        assert_eq!(a.batch_losses, b.batch_losses);
    }

    #[test]
    fn warmup_scales_the_early_learning_rate() {
        // With warmup, the first-epoch step is smaller, so the parameters
        // after one epoch differ from the no-warmup run; by the ramp's end
        // both configs use the same lr.
        let mut cfg = tiny_blobs_cfg();
        cfg.epochs = 1;
        let a = run_training(&cfg, 0, |_| {}).unwrap();
        cfg.warmup_epochs = 4;
        let b = run_training(&cfg, 0, |_| {}).unwrap();
        assert_ne!(a.model.param_vec(), b.model.param_vec());
    }

    #[test]
    fn preview_capture_has_the_requested_shape() {
        let mut cfg = tiny_blobs_cfg();
        cfg.epochs = 1;
        let out = run_training(&cfg, 3, |_| {}).unwrap();
        let p = out.mixed_preview.expect("preview");
        assert_eq!(p.shape(), &[3, 1, 4, 4]);
        // Unmixed training has nothing to preview.
        cfg.aug_mode = AugMode::None;
        let out = run_training(&cfg, 3, |_| {}).unwrap();
        assert!(out.mixed_preview.is_none());
    }

    #[test]
    fn metrics_csv_is_versioned_and_stable() {
        let rows = vec![MetricsRow {
            epoch: 0,
            train_loss: 1.25,
            train_acc: 0.5,
            test_acc: 0.25,
            mean_lambda0: 0.125,
            mean_lambda_r: 0.0,
            mean_lambda_s: 0.5,
            mean_lambda_final: 0.125,
            mean_reg: 0.0625,
        }];
        let csv = metrics_csv(&rows);
        assert!(csv.starts_with("schema,lumix.metrics.v1\nepoch,"));
        assert!(csv.contains("0,1.25,0.5,0.25,0.125,0,0.5,0.125,0.0625\n"));
    }

    #[test]
    fn run_outputs_land_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_blobs_cfg();
        cfg.epochs = 1;
        let out = run_training(&cfg, 2, |_| {}).unwrap();
        write_run_outputs(dir.path(), &cfg, &out).unwrap();
        for name in ["config.cfg", "metrics.csv", "timing.csv", "model.bin", "mixed_0000.ppm", "mixed_0001.ppm"] {
            assert!(dir.path().join(name).exists(), "{name} missing");
        }
        let loaded = crate::model_io::load_model(&dir.path().join("model.bin")).unwrap();
        assert_eq!(loaded.param_vec(), out.model.param_vec());
        let cfg_back = RunConfig::from_file(&dir.path().join("config.cfg")).unwrap();
        assert_eq!(cfg_back, cfg);
    }
}
