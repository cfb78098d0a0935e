//! Test-time robustness probes: patch occlusion sweeps and patch-shuffle
//! evaluation.
//!
//! **Occlusion** divides each image into a `grid x grid` cell lattice and
//! zeroes `round(fraction * cells)` cells. Cell choice comes in three modes:
//! `random` (uniform per image, consuming one cell permutation per image from
//! the evaluation stream, in dataset order), `salient_proxy` (the cells with
//! the largest input-gradient energy, a stand-in for an external saliency
//! oracle: saliency of a cell is the sum of |d loss / d pixel| over the cell
//! for the clean cross-entropy at the true label), and `nonsalient_proxy`
//! (the smallest). The proxy modes consume no randomness. A fraction of 0
//! evaluates the untouched images, so that point equals plain accuracy
//! exactly.
//!
//! **Shuffle** permutes each image's `grid x grid` patches with a fresh
//! per-image permutation from the evaluation stream; grid 1 is the identity
//! and equals plain accuracy exactly.

use crate::error::LabError;
use crate::train::{accuracy_on, EVAL_BATCH};
use lumix_core::data::Dataset;
use lumix_core::lumix::build_labels;
use lumix_core::mixing::shuffle_patches;
use lumix_core::nn::{soft_ce_loss, Model};
use lumix_core::sampling::RngState;
use lumix_core::Tensor;
use std::fmt::Write as _;

/// Cell-selection policy for the occlusion sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OcclusionMode {
    Random,
    SalientProxy,
    NonsalientProxy,
}

impl OcclusionMode {
    pub fn parse(s: &str) -> Result<OcclusionMode, LabError> {
        match s {
            "random" => Ok(OcclusionMode::Random),
            "salient_proxy" => Ok(OcclusionMode::SalientProxy),
            "nonsalient_proxy" => Ok(OcclusionMode::NonsalientProxy),
            _ => Err(LabError::Config(format!(
                "unknown occlusion mode `{s}` (expected random, salient_proxy, or nonsalient_proxy)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OcclusionMode::Random => "random",
            OcclusionMode::SalientProxy => "salient_proxy",
            OcclusionMode::NonsalientProxy => "nonsalient_proxy",
        }
    }
}

/// One point of an occlusion sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OcclusionPoint {
    pub fraction: f64,
    pub accuracy: f64,
}

/// One point of a shuffle sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShufflePoint {
    pub grid: usize,
    pub accuracy: f64,
}

fn check_grid(grid: usize, h: usize, w: usize) -> Result<(), LabError> {
    if grid == 0 || h % grid != 0 || w % grid != 0 {
        return Err(LabError::Config(format!("grid {grid} must divide the image size {h}x{w}")));
    }
    Ok(())
}

/// Zeroes the given cells (row-major cell indices) of image `img` in place.
fn occlude_cells(img: &mut [f64], cells: &[usize], grid: usize, c: usize, h: usize, w: usize) {
    let (ch, cw) = (h / grid, w / grid);
    for &cell in cells {
        let (cy, cx) = (cell / grid, cell % grid);
        for ch_i in 0..c {
            for y in cy * ch..(cy + 1) * ch {
                let row = ch_i * h * w + y * w + cx * cw;
                img[row..row + cw].fill(0.0);
            }
        }
    }
}

/// Per-image saliency order of cells, most salient first. Saliency of a cell
/// is the summed |input gradient| of the clean cross-entropy at the true
/// label; ties break toward the lower cell index.
fn saliency_orders(
    model: &Model,
    data: &Dataset,
    grid: usize,
) -> Result<Vec<Vec<usize>>, LabError> {
    let (c, h, w) = data.input_shape();
    let (ch, cw) = (h / grid, w / grid);
    let cells = grid * grid;
    let mut orders = Vec::with_capacity(data.len());
    let mut grads = model.zero_grads();
    let mut start = 0;
    while start < data.len() {
        let end = (start + EVAL_BATCH).min(data.len());
        let idx: Vec<usize> = (start..end).collect();
        let (images, classes) = data.gather(&idx)?;
        let (logits, cache) = model.forward(&images)?;
        let targets = build_labels(&classes, data.num_classes, 0.0)?;
        let loss = soft_ce_loss(&logits, &targets)?;
        grads.zero();
        let dx = model.backward(&cache, &loss.grad, &mut grads)?;
        let plane = c * h * w;
        for i in 0..end - start {
            let g = &dx.as_slice()[i * plane..(i + 1) * plane];
            let mut energy = vec![0.0f64; cells];
            for ch_i in 0..c {
                for y in 0..h {
                    let cy = y / ch;
                    for x in 0..w {
                        energy[cy * grid + x / cw] += g[ch_i * h * w + y * w + x].abs();
                    }
                }
            }
            let mut order: Vec<usize> = (0..cells).collect();
            order.sort_by(|&a, &b| {
                energy[b].partial_cmp(&energy[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            });
            orders.push(order);
        }
        start = end;
    }
    Ok(orders)
}

/// Runs an occlusion sweep over `fractions` (each in [0, 1]).
///
/// The evaluation stream is consumed only by `random` mode: one permutation
/// of the cell indices per image, in dataset order, fraction by fraction.
pub fn eval_occlusion(
    model: &Model,
    data: &Dataset,
    fractions: &[f64],
    mode: OcclusionMode,
    grid: usize,
    rng: &mut RngState,
) -> Result<Vec<OcclusionPoint>, LabError> {
    let (c, h, w) = data.input_shape();
    check_grid(grid, h, w)?;
    for &f in fractions {
        if !(0.0..=1.0).contains(&f) {
            return Err(LabError::Config(format!("occlusion fraction {f} must be in [0, 1]")));
        }
    }
    let cells = grid * grid;
    let plain = accuracy_on(model, &data.images, &data.labels)?;
    let orders = match mode {
        OcclusionMode::Random => None,
        OcclusionMode::SalientProxy | OcclusionMode::NonsalientProxy => {
            Some(saliency_orders(model, data, grid)?)
        }
    };

    let plane = c * h * w;
    let mut out = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let k = ((fraction * cells as f64).round() as usize).min(cells);
        if k == 0 {
            out.push(OcclusionPoint { fraction, accuracy: plain });
            continue;
        }
        let mut occluded = data.images.as_slice().to_vec();
        for (i, img) in occluded.chunks_exact_mut(plane).enumerate() {
            match (&orders, mode) {
                (None, _) => {
                    let perm = rng.permutation(cells);
                    occlude_cells(img, &perm[..k], grid, c, h, w);
                }
                (Some(ord), OcclusionMode::SalientProxy) => {
                    occlude_cells(img, &ord[i][..k], grid, c, h, w);
                }
                (Some(ord), _) => {
                    occlude_cells(img, &ord[i][cells - k..], grid, c, h, w);
                }
            }
        }
        let tensor = Tensor::from_vec(&[data.len(), c, h, w], occluded)?;
        let accuracy = accuracy_on(model, &tensor, &data.labels)?;
        out.push(OcclusionPoint { fraction, accuracy });
    }
    Ok(out)
}

/// Evaluates accuracy under per-image patch shuffling for each grid.
///
/// Grid 1 reuses the plain evaluation (identity permutation); other grids
/// consume one patch permutation per image from the evaluation stream, in
/// dataset order.
pub fn eval_shuffle(
    model: &Model,
    data: &Dataset,
    grids: &[usize],
    rng: &mut RngState,
) -> Result<Vec<ShufflePoint>, LabError> {
    let (_, h, w) = data.input_shape();
    for &g in grids {
        check_grid(g, h, w)?;
    }
    let plain = accuracy_on(model, &data.images, &data.labels)?;
    let mut out = Vec::with_capacity(grids.len());
    for &grid in grids {
        if grid == 1 {
            out.push(ShufflePoint { grid, accuracy: plain });
            continue;
        }
        let mut correct = 0usize;
        let mut start = 0;
        while start < data.len() {
            let end = (start + EVAL_BATCH).min(data.len());
            let idx: Vec<usize> = (start..end).collect();
            let (images, classes) = data.gather(&idx)?;
            let perms: Vec<Vec<usize>> = (start..end).map(|_| rng.permutation(grid * grid)).collect();
            let shuffled = shuffle_patches(&images, grid, &perms)?;
            let logits = model.predict(&shuffled)?;
            for (pred, truth) in lumix_core::nn::argmax_rows(&logits).into_iter().zip(&classes) {
                if pred == *truth {
                    correct += 1;
                }
            }
            start = end;
        }
        out.push(ShufflePoint { grid, accuracy: correct as f64 / data.len() as f64 });
    }
    Ok(out)
}

/// Renders `occlusion.csv`.
pub fn occlusion_csv(mode: OcclusionMode, grid: usize, points: &[OcclusionPoint]) -> String {
    let mut s = String::from("schema,lumix.occlusion.v1\nmode,grid,fraction,accuracy\n");
    for p in points {
        let _ = writeln!(s, "{},{},{},{}", mode.name(), grid, p.fraction, p.accuracy);
    }
    s
}

/// Renders `shuffle.csv`.
pub fn shuffle_csv(points: &[ShufflePoint]) -> String {
    let mut s = String::from("schema,lumix.shuffle.v1\ngrid,accuracy\n");
    for p in points {
        let _ = writeln!(s, "{},{}", p.grid, p.accuracy);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use lumix_core::data::{gen_blobs, BlobsSpec};
    use lumix_core::nn::{init_stream, ModelKind};
    use lumix_core::sampling::Stream;

    fn setup() -> (Model, Dataset) {
        let spec = BlobsSpec { n: 96, dim: 16, separation: 9.0, ..BlobsSpec::default() };
        let data = gen_blobs(&spec, &mut RngState::stream(11, Stream::DataTest)).unwrap();
        let model = Model::build(ModelKind::Mlp, (1, 4, 4), 4, &mut init_stream(11)).unwrap();
        (model, data)
    }

    #[test]
    fn zero_fraction_and_unit_grid_equal_plain_accuracy_exactly() {
        let (model, data) = setup();
        let plain = accuracy_on(&model, &data.images, &data.labels).unwrap();
        for mode in [OcclusionMode::Random, OcclusionMode::SalientProxy, OcclusionMode::NonsalientProxy] {
            let mut rng = RngState::stream(3, Stream::Eval);
            let pts = eval_occlusion(&model, &data, &[0.0], mode, 2, &mut rng).unwrap();
            assert_eq!(pts[0].accuracy, plain, "mode {mode:?}");
        }
        let mut rng = RngState::stream(3, Stream::Eval);
        let pts = eval_shuffle(&model, &data, &[1], &mut rng).unwrap();
        assert_eq!(pts[0].accuracy, plain);
    }

    #[test]
    fn full_occlusion_blanks_everything() {
        let (model, data) = setup();
        // fraction 1 zeroes every cell in every mode; all images become equal,
        // so accuracy collapses to the frequency of one predicted class.
        let mut rng = RngState::stream(4, Stream::Eval);
        let pts = eval_occlusion(&model, &data, &[1.0], OcclusionMode::Random, 2, &mut rng).unwrap();
        let mut rng = RngState::stream(99, Stream::Eval);
        let pts2 =
            eval_occlusion(&model, &data, &[1.0], OcclusionMode::SalientProxy, 2, &mut rng).unwrap();
        assert_eq!(pts[0].accuracy, pts2[0].accuracy);
    }

    #[test]
    fn occlusion_is_deterministic_given_the_stream() {
        let (model, data) = setup();
        let run = || {
            let mut rng = RngState::stream(5, Stream::Eval);
            eval_occlusion(&model, &data, &[0.25, 0.5], OcclusionMode::Random, 2, &mut rng).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn salient_occlusion_hurts_a_trained_model_more_than_nonsalient() {
        // Train a quick blobs model, then remove half the cells: dropping the
        // highest-gradient cells should not beat dropping the lowest-gradient
        // ones.
        let mut cfg = crate::config::RunConfig::default();
        cfg.data_kind = crate::config::DataKind::Blobs;
        cfg.train_n = 256;
        cfg.test_n = 96;
        cfg.blob_separation = 9.0;
        cfg.model = ModelKind::Mlp;
        cfg.epochs = 3;
        cfg.batch_size = 32;
        cfg.lr = 0.1;
        cfg.aug_mode = crate::config::AugMode::None;
        let out = crate::train::run_training(&cfg, 0, |_| {}).unwrap();
        assert!(out.final_test_acc > 0.8, "setup model too weak: {}", out.final_test_acc);
        let (_, test) = crate::train::load_data(&cfg).unwrap();

        let mut rng = RngState::stream(6, Stream::Eval);
        let sal =
            eval_occlusion(&out.model, &test, &[0.5], OcclusionMode::SalientProxy, 2, &mut rng).unwrap();
        let mut rng = RngState::stream(6, Stream::Eval);
        let non =
            eval_occlusion(&out.model, &test, &[0.5], OcclusionMode::NonsalientProxy, 2, &mut rng)
                .unwrap();
        assert!(
            sal[0].accuracy <= non[0].accuracy + 0.05,
            "salient {} vs nonsalient {}",
            sal[0].accuracy,
            non[0].accuracy
        );
    }

    #[test]
    fn occlude_cells_zeroes_exactly_the_requested_patch() {
        let mut img = vec![1.0; 2 * 4 * 4];
        occlude_cells(&mut img, &[3], 2, 2, 4, 4);
        // Cell 3 of a 2x2 grid on 4x4 = bottom-right 2x2 block, both channels.
        let mut expect = vec![1.0; 2 * 4 * 4];
        for ch in 0..2 {
            for y in 2..4 {
                for x in 2..4 {
                    expect[ch * 16 + y * 4 + x] = 0.0;
                }
            }
        }
        assert_eq!(img, expect);
    }

    #[test]
    fn invalid_grids_and_fractions_are_rejected() {
        let (model, data) = setup();
        let mut rng = RngState::stream(7, Stream::Eval);
        assert!(eval_occlusion(&model, &data, &[0.5], OcclusionMode::Random, 3, &mut rng).is_err());
        assert!(eval_occlusion(&model, &data, &[1.5], OcclusionMode::Random, 2, &mut rng).is_err());
        assert!(eval_shuffle(&model, &data, &[3], &mut rng).is_err());
    }

    #[test]
    fn csv_emitters_are_versioned() {
        let occ = occlusion_csv(OcclusionMode::Random, 4, &[OcclusionPoint { fraction: 0.5, accuracy: 0.75 }]);
        assert!(occ.starts_with("schema,lumix.occlusion.v1\n"));
        assert!(occ.contains("random,4,0.5,0.75\n"));
        let sh = shuffle_csv(&[ShufflePoint { grid: 2, accuracy: 0.5 }]);
        assert!(sh.starts_with("schema,lumix.shuffle.v1\n"));
        assert!(sh.contains("2,0.5\n"));
    }
}
