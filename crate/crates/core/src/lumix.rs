//! Label construction under mixing with label uncertainty: the three-term
//! lambda combination, the positive-class hinge regularizer, and the combined
//! loss.
//!
//! The per-sample label weight is
//!
//! ```text
//! lambda_i = clamp((1 - r1 - r2) * lambda0 + r1 * lambda_r_i + r2 * lambda_s_i, 0, 1)
//! ```
//!
//! where `lambda0` is the batch-shared geometric fraction from the mix plan,
//! `lambda_r_i` is a fresh per-sample draw (Beta(2,2) by default), and
//! `lambda_s_i = pA/(pA + pB)` is derived from the model's own (detached)
//! softmax prediction on the mixed input. Disabling a term removes its weight
//! from the combination (the weight returns to the `lambda0` coefficient).
//!
//! The regularizer pushes probability mass toward the classes actually present
//! in the mixed input: with `b` the 0/1 mask of positive classes,
//! `R_i = sum_k ymix_ik * max(0, b_ik - p_ik)`, batch-meaned and added as
//! `eta * R`. Positive classes are detected per source-label row as entries
//! strictly above the row minimum; the sets of the two sources are combined
//! with OR by default (AND is a config escape hatch).
//!
//! Detachment contract: the targets (`lambda_s`, the mixed labels, the mask)
//! are built from the current logits in a first pass and then frozen; the loss
//! and its gradient treat them as constants. Only the softmax inside the base
//! loss and inside the hinge is differentiated. [`build_lumix_targets`] and
//! [`lumix_loss_with_targets`] expose the two passes separately so gradient
//! checks can freeze targets exactly the way the training loop does.
//!
//! Prediction-derived quantities (`lambda_s`, the hinge probabilities) always
//! use softmax probabilities, also when the base loss is the BCE variant; the
//! loss choice only swaps the first loss term.

use alloc::format;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::nn::loss::{bce_loss, soft_ce_loss, softmax, LossOutput};
use crate::sampling::RngState;
use crate::tensor::Tensor;

/// Soft-target batches are plain `[B, C]` tensors; the alias marks intent.
pub type LabelBatch = Tensor;

/// Distribution of the per-sample random lambda term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaRDist {
    /// Beta(alpha, alpha); the default is alpha = 2.
    Beta(f64),
    /// Gaussian clamped into [0, 1].
    Gaussian { mu: f64, sigma: f64 },
    /// Term disabled: consumes no draws, and the r1 weight folds back into
    /// the lambda0 coefficient.
    None,
}

/// How the two sources' positive-class sets combine into the hinge mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskMode {
    Or,
    And,
}

/// Base loss applied to the mixed soft targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    SoftmaxCe,
    Bce,
}

/// Full configuration of the label-uncertainty loss.
#[derive(Debug, Clone, PartialEq)]
pub struct LumixConfig {
    /// Weight of the random term. Must satisfy r1 >= 0, r2 >= 0, r1 + r2 <= 1.
    pub r1: f64,
    /// Weight of the prediction-derived term.
    pub r2: f64,
    /// Regularizer strength.
    pub eta: f64,
    /// Label smoothing for the one-hot source labels.
    pub smoothing_eps: f64,
    pub lambda_r: LambdaRDist,
    /// When false, the prediction-derived term is skipped (r2 treated as 0).
    pub enable_lambda_s: bool,
    /// When false, the regularizer is skipped entirely.
    pub enable_reg: bool,
    pub mask_mode: MaskMode,
    pub loss: LossKind,
}

impl Default for LumixConfig {
    fn default() -> Self {
        LumixConfig {
            r1: 0.4,
            r2: 0.1,
            eta: 1.0,
            smoothing_eps: 0.1,
            lambda_r: LambdaRDist::Beta(2.0),
            enable_lambda_s: true,
            enable_reg: true,
            mask_mode: MaskMode::Or,
            loss: LossKind::SoftmaxCe,
        }
    }
}

impl LumixConfig {
    /// Checks the weight domain; callers validate once before training.
    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.r1 >= 0.0 && self.r2 >= 0.0 && self.r1 + self.r2 <= 1.0) {
            return Err(CoreError::param(
                "LumixConfig",
                format!("need r1, r2 >= 0 and r1 + r2 <= 1, got r1={} r2={}", self.r1, self.r2),
            ));
        }
        if !(0.0..1.0).contains(&self.smoothing_eps) {
            return Err(CoreError::param(
                "LumixConfig",
                format!("smoothing_eps must be in [0, 1), got {}", self.smoothing_eps),
            ));
        }
        if self.eta < 0.0 || !self.eta.is_finite() {
            return Err(CoreError::param("LumixConfig", format!("eta must be finite and >= 0, got {}", self.eta)));
        }
        match self.lambda_r {
            LambdaRDist::Beta(a) if !(a > 0.0 && a.is_finite()) => {
                Err(CoreError::param("LumixConfig", format!("lambda_r beta alpha must be > 0, got {a}")))
            }
            LambdaRDist::Gaussian { sigma, .. } if sigma < 0.0 => {
                Err(CoreError::param("LumixConfig", format!("lambda_r gaussian sigma must be >= 0, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    /// Effective (r1, r2) after accounting for disabled terms.
    pub fn effective_weights(&self) -> (f64, f64) {
        let r1 = if matches!(self.lambda_r, LambdaRDist::None) { 0.0 } else { self.r1 };
        let r2 = if self.enable_lambda_s { self.r2 } else { 0.0 };
        (r1, r2)
    }
}

/// Per-sample lambda diagnostics as logged to the metrics CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaBreakdown {
    pub lambda0: f64,
    /// 0 when the random term is disabled.
    pub lambda_r: f64,
    /// The neutral 0.5 when the prediction term is disabled.
    pub lambda_s: f64,
    pub lambda_final: f64,
}

/// Smoothed one-hot label rows: the true class gets 1 - eps + eps/C, every
/// class gets the eps/C floor.
pub fn build_labels(classes: &[usize], num_classes: usize, smoothing_eps: f64) -> Result<LabelBatch, CoreError> {
    if num_classes < 2 {
        return Err(CoreError::param("build_labels", format!("need at least 2 classes, got {num_classes}")));
    }
    if !(0.0..1.0).contains(&smoothing_eps) {
        return Err(CoreError::param("build_labels", format!("smoothing_eps {smoothing_eps} outside [0, 1)")));
    }
    let floor = smoothing_eps / num_classes as f64;
    let mut data = Vec::with_capacity(classes.len() * num_classes);
    for &c in classes {
        if c >= num_classes {
            return Err(CoreError::param("build_labels", format!("class {c} >= num_classes {num_classes}")));
        }
        for k in 0..num_classes {
            data.push(if k == c { 1.0 - smoothing_eps + floor } else { floor });
        }
    }
    Tensor::from_vec(&[classes.len(), num_classes], data)
}

/// Prediction-derived lambda for one sample: pA / (pA + pB) on the softmax
/// row. Guards: a self-pair (idx_a == idx_b) and the double-underflow corner
/// (both probabilities below 1e-300) return the neutral 0.5.
pub fn compute_lambda_s(probs_row: &[f64], idx_a: usize, idx_b: usize) -> f64 {
    if idx_a == idx_b {
        return 0.5;
    }
    let pa = probs_row[idx_a];
    let pb = probs_row[idx_b];
    if pa < 1e-300 && pb < 1e-300 {
        return 0.5;
    }
    pa / (pa + pb)
}

/// The three-term combination, clamped to [0, 1].
pub fn combine_lambda(lambda0: f64, lambda_r: f64, lambda_s: f64, r1: f64, r2: f64) -> f64 {
    debug_assert!(r1 >= 0.0 && r2 >= 0.0 && r1 + r2 <= 1.0 + 1e-12);
    let v = (1.0 - r1 - r2) * lambda0 + r1 * lambda_r + r2 * lambda_s;
    v.clamp(0.0, 1.0)
}

/// Convex label mixing with per-sample weights: row i of the result is
/// `lambdas[i] * labels_a[i] + (1 - lambdas[i]) * labels_b[i]`.
pub fn mix_labels(labels_a: &LabelBatch, labels_b: &LabelBatch, lambdas: &[f64]) -> Result<LabelBatch, CoreError> {
    if labels_a.shape() != labels_b.shape() || labels_a.shape().len() != 2 {
        return Err(CoreError::shape(
            "mix_labels",
            format!("label batches must share a [B, C] shape: {:?} vs {:?}", labels_a.shape(), labels_b.shape()),
        ));
    }
    let b = labels_a.shape()[0];
    let c = labels_a.shape()[1];
    if lambdas.len() != b {
        return Err(CoreError::param("mix_labels", format!("need {b} lambdas, got {}", lambdas.len())));
    }
    let mut out = labels_b.clone();
    let a = labels_a.as_slice();
    for (i, &lam) in lambdas.iter().enumerate() {
        let row = &mut out.as_mut_slice()[i * c..(i + 1) * c];
        let arow = &a[i * c..(i + 1) * c];
        for (o, &av) in row.iter_mut().zip(arow) {
            *o = lam * av + (1.0 - lam) * *o;
        }
    }
    Ok(out)
}

/// 0/1 mask of positive classes per sample. A class is positive in a source
/// row when its entry is strictly above that row's minimum; the two sources'
/// sets combine per `mode`.
pub fn positive_mask(labels_a: &LabelBatch, labels_b: &LabelBatch, mode: MaskMode) -> Result<Tensor, CoreError> {
    if labels_a.shape() != labels_b.shape() || labels_a.shape().len() != 2 {
        return Err(CoreError::shape(
            "positive_mask",
            format!("label batches must share a [B, C] shape: {:?} vs {:?}", labels_a.shape(), labels_b.shape()),
        ));
    }
    let c = labels_a.shape()[1];
    let mut out = Tensor::zeros(labels_a.shape());
    for ((row_a, row_b), row_m) in labels_a
        .as_slice()
        .chunks_exact(c)
        .zip(labels_b.as_slice().chunks_exact(c))
        .zip(out.as_mut_slice().chunks_exact_mut(c))
    {
        let min_a = row_a.iter().cloned().fold(f64::INFINITY, f64::min);
        let min_b = row_b.iter().cloned().fold(f64::INFINITY, f64::min);
        for k in 0..c {
            let pos_a = row_a[k] > min_a;
            let pos_b = row_b[k] > min_b;
            let pos = match mode {
                MaskMode::Or => pos_a || pos_b,
                MaskMode::And => pos_a && pos_b,
            };
            if pos {
                row_m[k] = 1.0;
            }
        }
    }
    Ok(out)
}

/// Per-sample hinge values R_i = sum_k ymix_ik * max(0, b_ik - p_ik).
pub fn regularizer(probs: &Tensor, mixed_labels: &LabelBatch, mask: &Tensor) -> Result<Vec<f64>, CoreError> {
    if probs.shape() != mixed_labels.shape() || probs.shape() != mask.shape() {
        return Err(CoreError::shape(
            "regularizer",
            format!(
                "probs {:?}, labels {:?}, mask {:?} must agree",
                probs.shape(),
                mixed_labels.shape(),
                mask.shape()
            ),
        ));
    }
    let c = probs.shape()[1];
    Ok(probs
        .as_slice()
        .chunks_exact(c)
        .zip(mixed_labels.as_slice().chunks_exact(c))
        .zip(mask.as_slice().chunks_exact(c))
        .map(|((p, y), b)| {
            let mut r = 0.0;
            for k in 0..c {
                let h = b[k] - p[k];
                if h > 0.0 {
                    r += y[k] * h;
                }
            }
            r
        })
        .collect())
}

/// The frozen targets of one batch: everything pass 2 treats as constant.
#[derive(Debug, Clone)]
pub struct LumixTargets {
    pub mixed: LabelBatch,
    /// Present only when the regularizer is enabled.
    pub mask: Option<Tensor>,
    pub lambdas: Vec<LambdaBreakdown>,
}

/// Everything the training loop wants back from one loss evaluation.
#[derive(Debug, Clone)]
pub struct LumixResult {
    /// Total loss (L0 + eta * R) and its gradient w.r.t. the logits.
    pub loss: LossOutput,
    /// Base loss value alone.
    pub l0: f64,
    /// Batch-mean regularizer value (unweighted by eta); 0 when disabled.
    pub reg: f64,
    pub lambdas: Vec<LambdaBreakdown>,
}

/// Pass 1: build the frozen targets from detached logits.
///
/// Draw order: one lambda_r draw per sample, in batch order, from the
/// dedicated stream (none at all when the term is `None`). The source class
/// indices used by lambda_s and the mask are the argmaxes of the label rows,
/// which for (smoothed) one-hot rows are the true classes.
pub fn build_lumix_targets(
    logits: &Tensor,
    labels_a: &LabelBatch,
    labels_b: &LabelBatch,
    lambda0: f64,
    cfg: &LumixConfig,
    rng_lambda_r: &mut RngState,
) -> Result<LumixTargets, CoreError> {
    if logits.shape() != labels_a.shape() || logits.shape() != labels_b.shape() {
        return Err(CoreError::shape(
            "build_lumix_targets",
            format!(
                "logits {:?}, labels_a {:?}, labels_b {:?} must agree",
                logits.shape(),
                labels_a.shape(),
                labels_b.shape()
            ),
        ));
    }
    if !logits.all_finite() {
        return Err(CoreError::NonFinite { context: "build_lumix_targets logits" });
    }
    cfg.validate()?;
    let b = logits.shape()[0];
    let c = logits.shape()[1];
    let (r1, r2) = cfg.effective_weights();

    // Detached probabilities: used only to build targets.
    let probs = softmax(logits)?;
    let idx_a = crate::nn::loss::argmax_rows(labels_a);
    let idx_b = crate::nn::loss::argmax_rows(labels_b);

    let mut lambdas = Vec::with_capacity(b);
    let mut finals = Vec::with_capacity(b);
    for i in 0..b {
        let lambda_r = match cfg.lambda_r {
            LambdaRDist::None => 0.0,
            LambdaRDist::Beta(a) => rng_lambda_r.sample_beta(a, a),
            LambdaRDist::Gaussian { mu, sigma } => rng_lambda_r.sample_gaussian(mu, sigma).clamp(0.0, 1.0),
        };
        let lambda_s = if cfg.enable_lambda_s {
            compute_lambda_s(&probs.as_slice()[i * c..(i + 1) * c], idx_a[i], idx_b[i])
        } else {
            0.5
        };
        let lambda_final = combine_lambda(lambda0, lambda_r, lambda_s, r1, r2);
        lambdas.push(LambdaBreakdown { lambda0, lambda_r, lambda_s, lambda_final });
        finals.push(lambda_final);
    }

    let mixed = mix_labels(labels_a, labels_b, &finals)?;
    let mask = if cfg.enable_reg && cfg.eta != 0.0 {
        Some(positive_mask(labels_a, labels_b, cfg.mask_mode)?)
    } else {
        None
    };
    Ok(LumixTargets { mixed, mask, lambdas })
}

/// Pass 2: loss and gradient with the targets held constant.
///
/// Returns (total loss output, base value, mean regularizer value). The hinge
/// gradient flows through the softmax: with g_k = -y_k for active hinge terms
/// (b_k = 1 and p_k < 1) and 0 otherwise, dR/dz_j = p_j (g_j - sum_k g_k p_k).
pub fn lumix_loss_with_targets(
    logits: &Tensor,
    targets: &LumixTargets,
    cfg: &LumixConfig,
) -> Result<(LossOutput, f64, f64), CoreError> {
    let base = match cfg.loss {
        LossKind::SoftmaxCe => soft_ce_loss(logits, &targets.mixed)?,
        LossKind::Bce => bce_loss(logits, &targets.mixed)?,
    };
    let l0 = base.value;
    let Some(mask) = targets.mask.as_ref() else {
        return Ok((base, l0, 0.0));
    };

    let b = logits.shape()[0];
    let c = logits.shape()[1];
    let bf = b as f64;
    let probs = softmax(logits)?;
    let reg_values = regularizer(&probs, &targets.mixed, mask)?;
    let reg = reg_values.iter().sum::<f64>() / bf;

    let mut total = base;
    total.value = l0 + cfg.eta * reg;
    let scale = cfg.eta / bf;
    let grad = total.grad.as_mut_slice();
    for i in 0..b {
        let p = &probs.as_slice()[i * c..(i + 1) * c];
        let y = &targets.mixed.as_slice()[i * c..(i + 1) * c];
        let m = &mask.as_slice()[i * c..(i + 1) * c];
        // g_k = -y_k on active hinge entries; dot = sum_k g_k p_k.
        let mut dot = 0.0;
        for k in 0..c {
            if m[k] == 1.0 && p[k] < 1.0 {
                dot -= y[k] * p[k];
            }
        }
        let grow = &mut grad[i * c..(i + 1) * c];
        for k in 0..c {
            let gk = if m[k] == 1.0 && p[k] < 1.0 { -y[k] } else { 0.0 };
            grow[k] += scale * p[k] * (gk - dot);
        }
    }
    Ok((total, l0, reg))
}

/// The combined label-uncertainty loss: builds targets from the detached
/// logits, then evaluates the loss with those targets frozen.
pub fn lumix_loss(
    logits: &Tensor,
    labels_a: &LabelBatch,
    labels_b: &LabelBatch,
    lambda0: f64,
    cfg: &LumixConfig,
    rng_lambda_r: &mut RngState,
) -> Result<LumixResult, CoreError> {
    let targets = build_lumix_targets(logits, labels_a, labels_b, lambda0, cfg, rng_lambda_r)?;
    let (loss, l0, reg) = lumix_loss_with_targets(logits, &targets, cfg)?;
    Ok(LumixResult { loss, l0, reg, lambdas: targets.lambdas })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathf;
    use crate::nn::{fd_grad, grads_close};
    use crate::sampling::Stream;
    use alloc::vec;

    fn rand_logits(b: usize, c: usize, seed: u64, scale: f64) -> Tensor {
        let mut rng = RngState::stream(seed, Stream::Eval);
        let data = (0..b * c).map(|_| (rng.sample_uniform() - 0.5) * scale).collect();
        Tensor::from_vec(&[b, c], data).unwrap()
    }

    #[test]
    fn build_labels_rows_are_smoothed_one_hot() {
        let y = build_labels(&[2, 0], 4, 0.1).unwrap();
        let floor = 0.1 / 4.0;
        let peak = 0.9 + floor;
        assert_eq!(y.as_slice(), &[floor, floor, peak, floor, peak, floor, floor, floor]);
        for row in y.as_slice().chunks_exact(4) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        // eps = 0 is exactly one-hot.
        let hard = build_labels(&[1], 3, 0.0).unwrap();
        assert_eq!(hard.as_slice(), &[0.0, 1.0, 0.0]);
        assert!(build_labels(&[3], 3, 0.1).is_err());
        assert!(build_labels(&[0], 1, 0.1).is_err());
    }

    #[test]
    fn lambda_s_matches_frozen_reference_and_guards() {
        // softmax([1,2,3]) with A=0, B=2: pA/(pA+pB) = 1/(1+e^2)
        // = 0.11920292202211756 (40-digit reference, rounded to f64).
        let probs = softmax(&Tensor::from_vec(&[1, 3], vec![1.0, 2.0, 3.0]).unwrap()).unwrap();
        let ls = compute_lambda_s(probs.as_slice(), 0, 2);
        assert!((ls - 0.11920292202211756).abs() < 1e-15);
        // Self-pair guard.
        assert_eq!(compute_lambda_s(probs.as_slice(), 1, 1), 0.5);
        // Double-underflow guard.
        assert_eq!(compute_lambda_s(&[0.0, 0.0, 1.0], 0, 1), 0.5);
        // One-sided underflow is fine: pA = 0 gives 0.
        assert_eq!(compute_lambda_s(&[0.0, 0.5, 0.5], 0, 1), 0.0);
    }

    #[test]
    fn combine_lambda_matches_formula_and_always_lands_in_unit_interval() {
        let (l0, lr, ls, r1, r2) = (0.6, 0.3, 0.9, 0.4, 0.1);
        let expect = (1.0 - r1 - r2) * l0 + r1 * lr + r2 * ls;
        assert_eq!(combine_lambda(l0, lr, ls, r1, r2), expect);
        // Weight zero on both extra terms reduces to lambda0, bitwise.
        assert_eq!(combine_lambda(0.3723, 0.9, 0.1, 0.0, 0.0), 0.3723);
        // Fuzz: any valid inputs stay in [0, 1].
        let mut rng = RngState::stream(70, Stream::Eval);
        for _ in 0..100_000 {
            let l0 = rng.sample_uniform();
            let lr = rng.sample_uniform();
            let ls = rng.sample_uniform();
            let r1 = rng.sample_uniform();
            let r2 = (1.0 - r1) * rng.sample_uniform();
            let v = combine_lambda(l0, lr, ls, r1, r2);
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn mix_labels_preserves_the_simplex_and_is_exact_at_extremes() {
        let a = build_labels(&[0, 1, 2], 3, 0.1).unwrap();
        let b = build_labels(&[2, 2, 0], 3, 0.1).unwrap();
        let mixed = mix_labels(&a, &b, &[0.3, 0.7, 0.5]).unwrap();
        for row in mixed.as_slice().chunks_exact(3) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(row.iter().all(|&v| v >= 0.0));
        }
        // lambda = 1 returns the A rows bitwise, lambda = 0 the B rows.
        let all_a = mix_labels(&a, &b, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(all_a.as_slice(), a.as_slice());
        let all_b = mix_labels(&a, &b, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(all_b.as_slice(), b.as_slice());
        assert!(mix_labels(&a, &b, &[0.5]).is_err());
    }

    #[test]
    fn positive_mask_or_and_semantics() {
        let a = build_labels(&[0, 1], 3, 0.1).unwrap();
        let b = build_labels(&[2, 1], 3, 0.1).unwrap();
        let or = positive_mask(&a, &b, MaskMode::Or).unwrap();
        assert_eq!(or.as_slice(), &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let and = positive_mask(&a, &b, MaskMode::And).unwrap();
        // Distinct classes intersect to nothing; identical classes keep one.
        assert_eq!(and.as_slice(), &[0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        // Unsmoothed labels work the same way (row min is 0).
        let ha = build_labels(&[2], 3, 0.0).unwrap();
        let hb = build_labels(&[0], 3, 0.0).unwrap();
        assert_eq!(positive_mask(&ha, &hb, MaskMode::Or).unwrap().as_slice(), &[1.0, 0.0, 1.0]);
    }

    #[test]
    fn regularizer_matches_scalar_loop_and_vanishes_at_confident_truth() {
        let mut rng = RngState::stream(71, Stream::Eval);
        let (b, c) = (5, 4);
        let logits = rand_logits(b, c, 72, 6.0);
        let probs = softmax(&logits).unwrap();
        let ya = build_labels(&[0, 1, 2, 3, 0], c, 0.1).unwrap();
        let yb = build_labels(&[1, 1, 3, 0, 2], c, 0.1).unwrap();
        let lams: Vec<f64> = (0..b).map(|_| rng.sample_uniform()).collect();
        let mixed = mix_labels(&ya, &yb, &lams).unwrap();
        let mask = positive_mask(&ya, &yb, MaskMode::Or).unwrap();
        let r = regularizer(&probs, &mixed, &mask).unwrap();
        for i in 0..b {
            let mut expect = 0.0;
            for k in 0..c {
                let h = mask.as_slice()[i * c + k] - probs.as_slice()[i * c + k];
                if h > 0.0 {
                    expect += mixed.as_slice()[i * c + k] * h;
                }
            }
            assert!((r[i] - expect).abs() < 1e-15);
        }
        // A fully confident correct prediction has zero hinge on its class.
        let conf = Tensor::from_vec(&[1, 2], vec![800.0, -800.0]).unwrap();
        let p = softmax(&conf).unwrap();
        let y = build_labels(&[0], 2, 0.0).unwrap();
        let m = positive_mask(&y, &y, MaskMode::Or).unwrap();
        let r = regularizer(&p, &y, &m).unwrap();
        assert_eq!(r[0], 0.0);
    }

    fn default_cfg() -> LumixConfig {
        LumixConfig::default()
    }

    #[test]
    fn loss_gradient_matches_fd_with_frozen_targets() {
        let (b, c) = (4, 5);
        let logits = rand_logits(b, c, 73, 5.0);
        let ya = build_labels(&[0, 1, 2, 3], c, 0.1).unwrap();
        let yb = build_labels(&[4, 1, 0, 2], c, 0.1).unwrap();
        let cfg = default_cfg();
        let mut rng = RngState::stream(74, Stream::LambdaR);
        let targets = build_lumix_targets(&logits, &ya, &yb, 0.62, &cfg, &mut rng).unwrap();
        let (total, _, _) = lumix_loss_with_targets(&logits, &targets, &cfg).unwrap();

        let numeric = fd_grad(
            |zv| {
                let zt = Tensor::from_vec(logits.shape(), zv.to_vec()).unwrap();
                lumix_loss_with_targets(&zt, &targets, &cfg).unwrap().0.value
            },
            logits.as_slice(),
            1e-5,
        );
        assert!(grads_close(total.grad.as_slice(), &numeric, 1e-6, 1e-9));
    }

    #[test]
    fn loss_gradient_matches_fd_under_bce_base() {
        let (b, c) = (3, 4);
        let logits = rand_logits(b, c, 75, 4.0);
        let ya = build_labels(&[0, 1, 2], c, 0.1).unwrap();
        let yb = build_labels(&[3, 2, 2], c, 0.1).unwrap();
        let cfg = LumixConfig { loss: LossKind::Bce, ..default_cfg() };
        let mut rng = RngState::stream(76, Stream::LambdaR);
        let targets = build_lumix_targets(&logits, &ya, &yb, 0.4, &cfg, &mut rng).unwrap();
        let (total, _, _) = lumix_loss_with_targets(&logits, &targets, &cfg).unwrap();
        let numeric = fd_grad(
            |zv| {
                let zt = Tensor::from_vec(logits.shape(), zv.to_vec()).unwrap();
                lumix_loss_with_targets(&zt, &targets, &cfg).unwrap().0.value
            },
            logits.as_slice(),
            1e-5,
        );
        assert!(grads_close(total.grad.as_slice(), &numeric, 1e-6, 1e-9));
    }

    #[test]
    fn end_to_end_value_matches_independent_scalar_oracle() {
        // Re-derive the whole loss with independently written scalar code:
        // own softmax, own lambda pipeline, own CE and hinge sums. lambda_r
        // draws are pre-drawn from a cloned stream so the oracle sees them as
        // plain inputs.
        let (b, c) = (3, 4);
        let logits = rand_logits(b, c, 77, 7.0);
        let classes_b = [1usize, 3, 2];
        let classes_a = [2usize, 3, 0];
        let eps = 0.1;
        let ya = build_labels(&classes_a, c, eps).unwrap();
        let yb = build_labels(&classes_b, c, eps).unwrap();
        let cfg = default_cfg();
        let lambda0 = 0.55;

        let mut pre = RngState::stream(78, Stream::LambdaR);
        let lam_r: Vec<f64> = (0..b).map(|_| pre.sample_beta(2.0, 2.0)).collect();

        let mut rng = RngState::stream(78, Stream::LambdaR);
        let res = lumix_loss(&logits, &ya, &yb, lambda0, &cfg, &mut rng).unwrap();

        // ---- independent oracle ----
        let mut expect_l0 = 0.0;
        let mut expect_reg = 0.0;
        for i in 0..b {
            let z = &logits.as_slice()[i * c..(i + 1) * c];
            // own softmax
            let zmax = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = z.iter().map(|&v| mathf::exp(v - zmax)).collect();
            let zsum: f64 = exps.iter().sum();
            let p: Vec<f64> = exps.iter().map(|&e| e / zsum).collect();
            // lambda pipeline
            let (ca, cb) = (classes_a[i], classes_b[i]);
            let ls = if ca == cb { 0.5 } else { p[ca] / (p[ca] + p[cb]) };
            let lam = ((1.0 - cfg.r1 - cfg.r2) * lambda0 + cfg.r1 * lam_r[i] + cfg.r2 * ls).clamp(0.0, 1.0);
            assert!((res.lambdas[i].lambda_final - lam).abs() < 1e-15);
            // mixed label row
            let floor = eps / c as f64;
            let mut y = vec![floor; c];
            y[ca] += lam * (1.0 - eps);
            y[cb] += (1.0 - lam) * (1.0 - eps);
            // CE against ln p
            for k in 0..c {
                expect_l0 -= y[k] * mathf::ln(p[k]);
            }
            // hinge over the OR mask
            for k in 0..c {
                if k == ca || k == cb {
                    let h = 1.0 - p[k];
                    if h > 0.0 {
                        expect_reg += y[k] * h;
                    }
                }
            }
        }
        expect_l0 /= b as f64;
        expect_reg /= b as f64;
        let expect_total = expect_l0 + cfg.eta * expect_reg;
        assert!((res.l0 - expect_l0).abs() < 1e-12, "{} vs {expect_l0}", res.l0);
        assert!((res.reg - expect_reg).abs() < 1e-12);
        assert!((res.loss.value - expect_total).abs() < 1e-12);
    }

    #[test]
    fn disabled_terms_reduce_to_plain_mixed_cross_entropy_bitwise() {
        // r1 = r2 = 0 (via None + disabled lambda_s) and no regularizer must
        // reproduce the plain soft-CE on labels mixed at exactly lambda0.
        let (b, c) = (4, 4);
        let logits = rand_logits(b, c, 79, 5.0);
        let ya = build_labels(&[0, 1, 2, 3], c, 0.1).unwrap();
        let yb = build_labels(&[1, 0, 3, 3], c, 0.1).unwrap();
        let cfg = LumixConfig {
            lambda_r: LambdaRDist::None,
            enable_lambda_s: false,
            enable_reg: false,
            ..default_cfg()
        };
        let lambda0 = 0.3721;
        let mut rng = RngState::stream(80, Stream::LambdaR);
        let before = rng.clone();
        let res = lumix_loss(&logits, &ya, &yb, lambda0, &cfg, &mut rng).unwrap();
        assert_eq!(rng, before, "disabled lambda_r must consume no draws");

        let plain_targets = mix_labels(&ya, &yb, &[lambda0; 4]).unwrap();
        let plain = soft_ce_loss(&logits, &plain_targets).unwrap();
        assert_eq!(res.loss.value, plain.value);
        assert_eq!(res.loss.grad.as_slice(), plain.grad.as_slice());
        assert_eq!(res.reg, 0.0);
        for lb in &res.lambdas {
            assert_eq!(lb.lambda_final, lambda0);
            assert_eq!(lb.lambda_r, 0.0);
            assert_eq!(lb.lambda_s, 0.5);
        }
    }

    #[test]
    fn eta_zero_skips_the_regularizer_bitwise() {
        let (_b, c) = (3, 4);
        let logits = rand_logits(3, c, 81, 5.0);
        let ya = build_labels(&[0, 1, 2], c, 0.1).unwrap();
        let yb = build_labels(&[2, 0, 1], c, 0.1).unwrap();
        let cfg0 = LumixConfig { eta: 0.0, ..default_cfg() };
        let mut r1 = RngState::stream(82, Stream::LambdaR);
        let res0 = lumix_loss(&logits, &ya, &yb, 0.5, &cfg0, &mut r1).unwrap();
        assert_eq!(res0.reg, 0.0);
        assert_eq!(res0.loss.value, res0.l0);

        // Same draws, reg disabled via the switch instead: identical loss.
        let cfg_off = LumixConfig { enable_reg: false, ..default_cfg() };
        let mut r2 = RngState::stream(82, Stream::LambdaR);
        let res_off = lumix_loss(&logits, &ya, &yb, 0.5, &cfg_off, &mut r2).unwrap();
        assert_eq!(res0.loss.value, res_off.loss.value);
        assert_eq!(res0.loss.grad.as_slice(), res_off.loss.grad.as_slice());
    }

    #[test]
    fn breakdowns_stay_in_unit_interval_under_fuzz() {
        let mut rng = RngState::stream(83, Stream::Eval);
        let c = 5;
        for round in 0..200 {
            let b = 1 + rng.uniform_int(6);
            let logits = rand_logits(b, c, 84 + round, 30.0);
            let ca: Vec<usize> = (0..b).map(|_| rng.uniform_int(c)).collect();
            let cb: Vec<usize> = (0..b).map(|_| rng.uniform_int(c)).collect();
            let ya = build_labels(&ca, c, 0.1).unwrap();
            let yb = build_labels(&cb, c, 0.1).unwrap();
            let r1 = rng.sample_uniform();
            let r2 = (1.0 - r1) * rng.sample_uniform();
            let cfg = LumixConfig { r1, r2, ..default_cfg() };
            let lambda0 = rng.sample_uniform();
            let mut lr = RngState::stream(900 + round, Stream::LambdaR);
            let res = lumix_loss(&logits, &ya, &yb, lambda0, &cfg, &mut lr).unwrap();
            for lb in &res.lambdas {
                assert!((0.0..=1.0).contains(&lb.lambda_final));
                assert!((0.0..=1.0).contains(&lb.lambda_r));
                assert!((0.0..=1.0).contains(&lb.lambda_s));
            }
            // Mixed rows stay on the simplex.
            let targets = {
                let mut lr = RngState::stream(900 + round, Stream::LambdaR);
                build_lumix_targets(&logits, &ya, &yb, lambda0, &cfg, &mut lr).unwrap()
            };
            for row in targets.mixed.as_slice().chunks_exact(c) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(row.iter().all(|&v| v >= 0.0));
            }
        }
    }

    #[test]
    fn gaussian_lambda_r_is_clamped() {
        let cfg = LumixConfig {
            lambda_r: LambdaRDist::Gaussian { mu: 0.5, sigma: 5.0 },
            ..default_cfg()
        };
        let logits = rand_logits(64, 3, 85, 3.0);
        let ya = build_labels(&vec![0; 64], 3, 0.1).unwrap();
        let yb = build_labels(&vec![1; 64], 3, 0.1).unwrap();
        let mut rng = RngState::stream(86, Stream::LambdaR);
        let res = lumix_loss(&logits, &ya, &yb, 0.5, &cfg, &mut rng).unwrap();
        // With sigma = 5 most raw draws fall outside [0,1]; the clamp must
        // land many on the exact endpoints and none outside.
        let mut at_edges = 0;
        for lb in &res.lambdas {
            assert!((0.0..=1.0).contains(&lb.lambda_r));
            if lb.lambda_r == 0.0 || lb.lambda_r == 1.0 {
                at_edges += 1;
            }
        }
        assert!(at_edges > 32, "expected most raw draws clamped, got {at_edges}/64");
    }

    #[test]
    fn self_pairs_are_neutral() {
        // Partner == self: lambda_s is 0.5 by the guard, the mixed row equals
        // the source row for any lambda, and the OR mask has one positive.
        let logits = rand_logits(2, 3, 87, 4.0);
        let y = build_labels(&[1, 2], 3, 0.1).unwrap();
        let cfg = default_cfg();
        let mut rng = RngState::stream(88, Stream::LambdaR);
        let targets = build_lumix_targets(&logits, &y, &y, 0.77, &cfg, &mut rng).unwrap();
        assert_eq!(targets.mixed.as_slice(), y.as_slice());
        for lb in &targets.lambdas {
            assert_eq!(lb.lambda_s, 0.5);
        }
        let mask = targets.mask.unwrap();
        assert_eq!(mask.as_slice(), &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn non_finite_logits_are_rejected() {
        let mut logits = rand_logits(2, 3, 89, 4.0);
        logits.as_mut_slice()[1] = f64::NAN;
        let y = build_labels(&[0, 1], 3, 0.1).unwrap();
        let mut rng = RngState::stream(90, Stream::LambdaR);
        let err = lumix_loss(&logits, &y, &y, 0.5, &LumixConfig::default(), &mut rng).unwrap_err();
        assert!(matches!(err, CoreError::NonFinite { .. }));
    }

    #[test]
    fn config_validation_rejects_bad_weights() {
        let bad = LumixConfig { r1: 0.7, r2: 0.5, ..default_cfg() };
        assert!(bad.validate().is_err());
        let bad_eps = LumixConfig { smoothing_eps: 1.0, ..default_cfg() };
        assert!(bad_eps.validate().is_err());
        let bad_eta = LumixConfig { eta: -1.0, ..default_cfg() };
        assert!(bad_eta.validate().is_err());
        let bad_alpha = LumixConfig { lambda_r: LambdaRDist::Beta(0.0), ..default_cfg() };
        assert!(bad_alpha.validate().is_err());
        assert!(default_cfg().validate().is_ok());
    }
}
