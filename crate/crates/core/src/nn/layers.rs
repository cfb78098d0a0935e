//! Layer kinds and their forward/backward kernels.
//!
//! Conv layers are implemented as im2col + small matrix products, one image at
//! a time, so the inner loops are contiguous and the backward pass can reuse
//! the cached column buffers. All convs are 3x3, stride 1, zero-padded by 1
//! (shape-preserving); pooling is 2x2 stride 2 with first-wins tie-breaking.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::nn::{he_normal, GradPair};
use crate::sampling::RngState;
use crate::tensor::{mm_acc, mm_nt_acc, mm_tn_acc, Tensor};

/// One layer of a [`super::Model`].
#[derive(Debug, Clone)]
pub enum Layer {
    /// Fully connected: weights `[out, in]`, bias `[out]`.
    Dense { w: Tensor, b: Tensor },
    /// Elementwise max(0, x). The subgradient at exactly 0 is taken as 0.
    Relu,
    /// 3x3 conv, stride 1, zero pad 1: weights `[out_ch, in_ch*9]`, bias `[out_ch]`.
    Conv3x3 { w: Tensor, b: Tensor, in_ch: usize, out_ch: usize },
    /// 2x2 max pooling with stride 2; requires even spatial dims.
    MaxPool2,
    /// [B, C, H, W] -> [B, C*H*W].
    Flatten,
}

impl Layer {
    /// Dense layer with He-normal weights (fan_in = `in_dim`) and zero bias.
    /// Weight draws happen in row-major order; the bias consumes no draws.
    pub fn dense_init(in_dim: usize, out_dim: usize, rng: &mut RngState) -> Layer {
        let w = Tensor::from_vec(&[out_dim, in_dim], he_normal(in_dim, out_dim * in_dim, rng))
            .expect("dense init shape");
        let b = Tensor::zeros(&[out_dim]);
        Layer::Dense { w, b }
    }

    /// Conv layer with He-normal weights (fan_in = in_ch*9) and zero bias.
    pub fn conv3x3_init(in_ch: usize, out_ch: usize, rng: &mut RngState) -> Layer {
        let k = in_ch * 9;
        let w = Tensor::from_vec(&[out_ch, k], he_normal(k, out_ch * k, rng)).expect("conv init shape");
        let b = Tensor::zeros(&[out_ch]);
        Layer::Conv3x3 { w, b, in_ch, out_ch }
    }

    pub fn params(&self) -> Option<(&Tensor, &Tensor)> {
        match self {
            Layer::Dense { w, b } | Layer::Conv3x3 { w, b, .. } => Some((w, b)),
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Tensor, &mut Tensor)> {
        match self {
            Layer::Dense { w, b } | Layer::Conv3x3 { w, b, .. } => Some((w, b)),
            _ => None,
        }
    }

    /// Forward pass. When `cache` is provided, pool layers record argmax
    /// indices and conv layers record their im2col buffers for backward.
    pub(super) fn forward(
        &self,
        x: &Tensor,
        cache: Option<(&mut Option<Vec<u32>>, &mut Option<Vec<f64>>)>,
    ) -> Result<Tensor, CoreError> {
        match self {
            Layer::Dense { w, b } => dense_forward(x, w, b),
            Layer::Relu => {
                let mut out = x.clone();
                for v in out.as_mut_slice() {
                    if *v < 0.0 {
                        *v = 0.0;
                    }
                }
                Ok(out)
            }
            Layer::Conv3x3 { w, b, in_ch, out_ch } => {
                let cols_slot = cache.map(|(_, cols)| cols);
                conv_forward(x, w, b, *in_ch, *out_ch, cols_slot)
            }
            Layer::MaxPool2 => {
                let idx_slot = cache.map(|(idx, _)| idx);
                pool_forward(x, idx_slot)
            }
            Layer::Flatten => {
                if x.shape().len() != 4 {
                    return Err(CoreError::shape("Flatten", format!("expected 4-D input, got {:?}", x.shape())));
                }
                let b = x.shape()[0];
                let d = x.numel() / b;
                x.reshaped(&[b, d])
            }
        }
    }

    /// Backward pass: returns the input gradient, accumulating parameter
    /// gradients into `grad` where the layer has parameters.
    pub(super) fn backward(
        &self,
        input: &Tensor,
        pool_idx: Option<&[u32]>,
        conv_cols: Option<&[f64]>,
        dout: &Tensor,
        grad: Option<&mut GradPair>,
    ) -> Result<Tensor, CoreError> {
        match self {
            Layer::Dense { w, .. } => {
                let g = grad.ok_or_else(|| CoreError::shape("Dense::backward", "missing gradient buffer".into()))?;
                Ok(dense_backward(input, w, dout, g))
            }
            Layer::Relu => {
                let mut dx = dout.clone();
                for (d, &v) in dx.as_mut_slice().iter_mut().zip(input.as_slice()) {
                    if v <= 0.0 {
                        *d = 0.0;
                    }
                }
                Ok(dx)
            }
            Layer::Conv3x3 { w, in_ch, out_ch, .. } => {
                let g = grad.ok_or_else(|| CoreError::shape("Conv3x3::backward", "missing gradient buffer".into()))?;
                let cols = conv_cols
                    .ok_or_else(|| CoreError::shape("Conv3x3::backward", "missing im2col cache".into()))?;
                Ok(conv_backward(input, w, *in_ch, *out_ch, cols, dout, g))
            }
            Layer::MaxPool2 => {
                let idx = pool_idx
                    .ok_or_else(|| CoreError::shape("MaxPool2::backward", "missing argmax cache".into()))?;
                let mut dx = Tensor::zeros(input.shape());
                let dxs = dx.as_mut_slice();
                for (&i, &d) in idx.iter().zip(dout.as_slice()) {
                    dxs[i as usize] += d;
                }
                Ok(dx)
            }
            Layer::Flatten => dout.reshaped(input.shape()),
        }
    }
}

fn dense_forward(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor, CoreError> {
    if x.shape().len() != 2 || x.shape()[1] != w.shape()[1] {
        return Err(CoreError::shape(
            "Dense::forward",
            format!("input {:?} incompatible with weights {:?}", x.shape(), w.shape()),
        ));
    }
    let (bsz, d) = (x.shape()[0], x.shape()[1]);
    let o = w.shape()[0];
    let mut out = Tensor::zeros(&[bsz, o]);
    mm_nt_acc(x.as_slice(), w.as_slice(), out.as_mut_slice(), bsz, d, o);
    let bias = b.as_slice();
    for row in out.as_mut_slice().chunks_exact_mut(o) {
        for (v, &bi) in row.iter_mut().zip(bias) {
            *v += bi;
        }
    }
    Ok(out)
}

fn dense_backward(x: &Tensor, w: &Tensor, dout: &Tensor, g: &mut GradPair) -> Tensor {
    let (bsz, d) = (x.shape()[0], x.shape()[1]);
    let o = w.shape()[0];
    // dW += dOut^T * x
    mm_tn_acc(dout.as_slice(), x.as_slice(), g.gw.as_mut_slice(), o, bsz, d);
    // db += column sums of dOut
    let gb = g.gb.as_mut_slice();
    for row in dout.as_slice().chunks_exact(o) {
        for (b, &v) in gb.iter_mut().zip(row) {
            *b += v;
        }
    }
    // dX = dOut * W
    let mut dx = Tensor::zeros(&[bsz, d]);
    mm_acc(dout.as_slice(), w.as_slice(), dx.as_mut_slice(), bsz, o, d);
    dx
}

/// im2col for a single image: `cols[slot * HW + y*W + x] = plane[ci][y+ky-1][x+kx-1]`
/// with zero padding, slot = (ci*3 + ky)*3 + kx.
fn im2col(input: &[f64], c_in: usize, h: usize, w: usize, cols: &mut [f64]) {
    let hw = h * w;
    for ci in 0..c_in {
        let plane = &input[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let slot = (ci * 3 + ky) * 3 + kx;
                let dst = &mut cols[slot * hw..(slot + 1) * hw];
                for y in 0..h {
                    let row = &mut dst[y * w..(y + 1) * w];
                    let iy = y as isize + ky as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        row.fill(0.0);
                        continue;
                    }
                    let src = &plane[(iy as usize) * w..(iy as usize + 1) * w];
                    match kx {
                        0 => {
                            row[0] = 0.0;
                            row[1..].copy_from_slice(&src[..w - 1]);
                        }
                        1 => row.copy_from_slice(src),
                        _ => {
                            row[..w - 1].copy_from_slice(&src[1..]);
                            row[w - 1] = 0.0;
                        }
                    }
                }
            }
        }
    }
}

/// Adjoint of [`im2col`]: scatter-adds column gradients back onto the image.
fn col2im_add(cols: &[f64], c_in: usize, h: usize, w: usize, dinput: &mut [f64]) {
    let hw = h * w;
    for ci in 0..c_in {
        let plane = &mut dinput[ci * hw..(ci + 1) * hw];
        for ky in 0..3 {
            for kx in 0..3 {
                let slot = (ci * 3 + ky) * 3 + kx;
                let src_all = &cols[slot * hw..(slot + 1) * hw];
                for y in 0..h {
                    let iy = y as isize + ky as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &src_all[y * w..(y + 1) * w];
                    let dst = &mut plane[(iy as usize) * w..(iy as usize + 1) * w];
                    match kx {
                        0 => {
                            for (d, &s) in dst[..w - 1].iter_mut().zip(&src[1..]) {
                                *d += s;
                            }
                        }
                        1 => {
                            for (d, &s) in dst.iter_mut().zip(src) {
                                *d += s;
                            }
                        }
                        _ => {
                            for (d, &s) in dst[1..].iter_mut().zip(&src[..w - 1]) {
                                *d += s;
                            }
                        }
                    }
                }
            }
        }
    }
}

fn conv_forward(
    x: &Tensor,
    w: &Tensor,
    b: &Tensor,
    in_ch: usize,
    out_ch: usize,
    cols_cache: Option<&mut Option<Vec<f64>>>,
) -> Result<Tensor, CoreError> {
    if x.shape().len() != 4 || x.shape()[1] != in_ch {
        return Err(CoreError::shape(
            "Conv3x3::forward",
            format!("expected [B, {in_ch}, H, W], got {:?}", x.shape()),
        ));
    }
    let (bsz, h, wd) = (x.shape()[0], x.shape()[2], x.shape()[3]);
    let hw = h * wd;
    let k = in_ch * 9;
    let mut out = Tensor::zeros(&[bsz, out_ch, h, wd]);
    let mut cols_all = vec![0.0; bsz * k * hw];
    let xin = x.as_slice();
    let wm = w.as_slice();
    let bias = b.as_slice();
    let os = out.as_mut_slice();
    for bi in 0..bsz {
        let cols = &mut cols_all[bi * k * hw..(bi + 1) * k * hw];
        im2col(&xin[bi * in_ch * hw..(bi + 1) * in_ch * hw], in_ch, h, wd, cols);
        let ob = &mut os[bi * out_ch * hw..(bi + 1) * out_ch * hw];
        mm_acc(wm, cols, ob, out_ch, k, hw);
        for oc in 0..out_ch {
            let bia = bias[oc];
            if bia != 0.0 {
                for v in &mut ob[oc * hw..(oc + 1) * hw] {
                    *v += bia;
                }
            }
        }
    }
    if let Some(slot) = cols_cache {
        *slot = Some(cols_all);
    }
    Ok(out)
}

fn conv_backward(
    x: &Tensor,
    w: &Tensor,
    in_ch: usize,
    out_ch: usize,
    cols_all: &[f64],
    dout: &Tensor,
    g: &mut GradPair,
) -> Tensor {
    let (bsz, h, wd) = (x.shape()[0], x.shape()[2], x.shape()[3]);
    let hw = h * wd;
    let k = in_ch * 9;
    let mut dx = Tensor::zeros(x.shape());
    let dxs = dx.as_mut_slice();
    let douts = dout.as_slice();
    let mut dcols = vec![0.0; k * hw];
    for bi in 0..bsz {
        let dob = &douts[bi * out_ch * hw..(bi + 1) * out_ch * hw];
        let cols = &cols_all[bi * k * hw..(bi + 1) * k * hw];
        // dW += dOut_b * cols_b^T
        mm_nt_acc(dob, cols, g.gw.as_mut_slice(), out_ch, hw, k);
        // db += spatial sums
        for (oc, gb) in g.gb.as_mut_slice().iter_mut().enumerate() {
            *gb += dob[oc * hw..(oc + 1) * hw].iter().sum::<f64>();
        }
        // dCols = W^T * dOut_b, then scatter back to the image
        dcols.fill(0.0);
        mm_tn_acc(w.as_slice(), dob, &mut dcols, k, out_ch, hw);
        col2im_add(&dcols, in_ch, h, wd, &mut dxs[bi * in_ch * hw..(bi + 1) * in_ch * hw]);
    }
    dx
}

fn pool_forward(x: &Tensor, idx_cache: Option<&mut Option<Vec<u32>>>) -> Result<Tensor, CoreError> {
    if x.shape().len() != 4 || x.shape()[2] % 2 != 0 || x.shape()[3] % 2 != 0 {
        return Err(CoreError::shape(
            "MaxPool2::forward",
            format!("expected 4-D input with even H, W, got {:?}", x.shape()),
        ));
    }
    debug_assert!(x.numel() < u32::MAX as usize, "pool argmax indices are u32");
    let (bsz, c, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[bsz, c, oh, ow]);
    let mut idx = vec![0u32; out.numel()];
    let xs = x.as_slice();
    let os = out.as_mut_slice();
    let mut opos = 0;
    for bc in 0..bsz * c {
        let plane_base = bc * h * w;
        for oy in 0..oh {
            let r0 = plane_base + (2 * oy) * w;
            let r1 = r0 + w;
            for ox in 0..ow {
                let c0 = 2 * ox;
                // First-wins tie-break: scan order (r0,c0), (r0,c0+1), (r1,c0), (r1,c0+1).
                let mut best = xs[r0 + c0];
                let mut bi = r0 + c0;
                if xs[r0 + c0 + 1] > best {
                    best = xs[r0 + c0 + 1];
                    bi = r0 + c0 + 1;
                }
                if xs[r1 + c0] > best {
                    best = xs[r1 + c0];
                    bi = r1 + c0;
                }
                if xs[r1 + c0 + 1] > best {
                    best = xs[r1 + c0 + 1];
                    bi = r1 + c0 + 1;
                }
                os[opos] = best;
                idx[opos] = bi as u32;
                opos += 1;
            }
        }
    }
    if let Some(slot) = idx_cache {
        *slot = Some(idx);
    }
    Ok(out)
}
