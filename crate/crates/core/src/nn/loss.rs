//! Losses over logits: soft-target cross-entropy and multi-label BCE.
//!
//! Both losses return the scalar batch-mean value together with the exact
//! gradient with respect to the logits, fused so the softmax/sigmoid never has
//! to be differentiated separately: for cross-entropy the gradient is
//! (softmax(z) - y) / B, for BCE it is (sigmoid(z) - t) / (B*C).

use alloc::format;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::mathf;
use crate::tensor::Tensor;

/// Scalar loss value plus its gradient with respect to the logits.
#[derive(Debug, Clone)]
pub struct LossOutput {
    pub value: f64,
    pub grad: Tensor,
}

/// Row-wise softmax with max-subtraction, stable for |logits| up to ~1e3 and
/// beyond. Requires a 2-D `[B, C]` tensor with C >= 2.
pub fn softmax(logits: &Tensor) -> Result<Tensor, CoreError> {
    if logits.shape().len() != 2 || logits.shape()[1] < 2 {
        return Err(CoreError::shape(
            "softmax",
            format!("expected [B, C>=2] logits, got {:?}", logits.shape()),
        ));
    }
    let c = logits.shape()[1];
    let mut out = logits.clone();
    for row in out.as_mut_slice().chunks_exact_mut(c) {
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = mathf::exp(*v - m);
            sum += *v;
        }
        // sum >= 1 because the max element maps to exp(0) = 1.
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    Ok(out)
}

/// Index of the largest entry per row (first wins on ties).
pub fn argmax_rows(logits: &Tensor) -> Vec<usize> {
    let c = logits.shape()[logits.shape().len() - 1];
    logits
        .as_slice()
        .chunks_exact(c)
        .map(|row| {
            let mut best = 0;
            for (i, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// Fraction of rows whose argmax equals the label.
pub fn accuracy(logits: &Tensor, labels: &[usize]) -> f64 {
    let pred = argmax_rows(logits);
    debug_assert_eq!(pred.len(), labels.len());
    let hits = pred.iter().zip(labels).filter(|(p, l)| p == l).count();
    hits as f64 / labels.len().max(1) as f64
}

/// Soft-target cross-entropy, batch-meaned: L = -(1/B) sum_i sum_k y_ik ln p_ik
/// where p = softmax(z). Targets must be `[B, C]` rows on the simplex (this is
/// assumed, not checked, beyond shape). Gradient: (p - y) / B.
pub fn soft_ce_loss(logits: &Tensor, targets: &Tensor) -> Result<LossOutput, CoreError> {
    if logits.shape() != targets.shape() {
        return Err(CoreError::shape(
            "soft_ce_loss",
            format!("logits {:?} vs targets {:?}", logits.shape(), targets.shape()),
        ));
    }
    let b = logits.shape()[0];
    let c = logits.shape()[1];
    let bf = b as f64;
    // ln p computed as (z - m) - ln sum exp(z - m), never ln of a tiny prob.
    let mut value = 0.0;
    let mut grad = softmax(logits)?;
    for (row_l, row_t) in logits
        .as_slice()
        .chunks_exact(c)
        .zip(targets.as_slice().chunks_exact(c))
    {
        let m = row_l.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = mathf::ln(row_l.iter().map(|&z| mathf::exp(z - m)).sum::<f64>());
        for (&z, &t) in row_l.iter().zip(row_t) {
            if t != 0.0 {
                value -= t * ((z - m) - lse);
            }
        }
    }
    value /= bf;
    for (g, &t) in grad.as_mut_slice().iter_mut().zip(targets.as_slice()) {
        *g = (*g - t) / bf;
    }
    Ok(LossOutput { value, grad })
}

/// Multi-label binary cross-entropy over logits, meaned over all B*C entries,
/// in the overflow-free form max(z,0) - z*t + ln(1 + e^-|z|).
/// Gradient: (sigmoid(z) - t) / (B*C).
pub fn bce_loss(logits: &Tensor, targets: &Tensor) -> Result<LossOutput, CoreError> {
    if logits.shape() != targets.shape() {
        return Err(CoreError::shape(
            "bce_loss",
            format!("logits {:?} vs targets {:?}", logits.shape(), targets.shape()),
        ));
    }
    let n = logits.numel() as f64;
    let mut value = 0.0;
    let mut grad = logits.clone();
    for (g, &t) in grad.as_mut_slice().iter_mut().zip(targets.as_slice()) {
        let z = *g;
        value += z.max(0.0) - z * t + mathf::ln_1p(mathf::exp(-mathf::abs(z)));
        *g = (mathf::sigmoid(z) - t) / n;
    }
    Ok(LossOutput { value: value / n, grad })
}
