//! Minimal dense f64 tensor: a shape vector plus row-major storage.
//!
//! The layout contract is row-major throughout the crate: for shape
//! `[d0, d1, ..., dk]` the element at `(i0, i1, ..., ik)` lives at flat index
//! `((i0*d1 + i1)*d2 + ...)*dk + ik`. Image batches use `[B, C, H, W]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;

/// Dense f64 tensor with row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    /// All-zeros tensor of the given shape.
    pub fn zeros(shape: &[usize]) -> Tensor {
        let n: usize = shape.iter().product();
        Tensor { shape: shape.to_vec(), data: vec![0.0; n] }
    }

    /// Builds a tensor from existing data; the length must match the shape's
    /// element count exactly.
    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Tensor, CoreError> {
        let n: usize = shape.iter().product();
        if data.len() != n {
            return Err(CoreError::shape(
                "Tensor::from_vec",
                format!("shape {:?} wants {} elements, got {}", shape, n, data.len()),
            ));
        }
        Ok(Tensor { shape: shape.to_vec(), data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Consumes the tensor, returning its flat storage.
    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Flat index for a 2-D tensor.
    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.shape.len(), 2);
        self.data[i * self.shape[1] + j]
    }

    /// True if every element is finite.
    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Reinterprets the storage under a new shape with the same element count.
    pub fn reshaped(&self, shape: &[usize]) -> Result<Tensor, CoreError> {
        Tensor::from_vec(shape, self.data.clone())
    }
}

/// `out[m,n] = a[m,k] * b[k,n]`, accumulating into `out` (callers zero it first
/// when they want a plain product). Loop order i-k-j keeps the inner loop over
/// contiguous rows of `b` and `out` so it vectorizes.
pub fn mm_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (kk, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b[kk * n..(kk + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o += aik * bv;
            }
        }
    }
}

/// `out[m,n] += a[m,k] * b[n,k]^T` — `b` is stored transposed, so each output
/// element is a dot product of two contiguous rows.
pub fn mm_nt_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (j, o) in orow.iter_mut().enumerate() {
            let brow = &b[j * k..(j + 1) * k];
            let mut acc = 0.0;
            for (&av, &bv) in arow.iter().zip(brow.iter()) {
                acc += av * bv;
            }
            *o += acc;
        }
    }
}

/// `out[m,n] += a[k,m]^T * b[k,n]` — `a` is stored transposed. Loop order
/// k-i-j again keeps inner loops contiguous.
pub fn mm_tn_acc(a: &[f64], b: &[f64], out: &mut [f64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for kk in 0..k {
        let arow = &a[kk * m..(kk + 1) * m];
        let brow = &b[kk * n..(kk + 1) * n];
        for (i, &aki) in arow.iter().enumerate() {
            if aki == 0.0 {
                continue;
            }
            let orow = &mut out[i * n..(i + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow.iter()) {
                *o += aki * bv;
            }
        }
    }
}

/// 2-D matrix product as a tensor operation.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor, CoreError> {
    if a.shape().len() != 2 || b.shape().len() != 2 {
        return Err(CoreError::shape(
            "matmul",
            format!("expected 2-D operands, got {:?} x {:?}", a.shape(), b.shape()),
        ));
    }
    let (m, k) = (a.shape()[0], a.shape()[1]);
    let (k2, n) = (b.shape()[0], b.shape()[1]);
    if k != k2 {
        return Err(CoreError::shape(
            "matmul",
            format!("inner dimensions disagree: {:?} x {:?}", a.shape(), b.shape()),
        ));
    }
    let mut out = Tensor::zeros(&[m, n]);
    mm_acc(a.as_slice(), b.as_slice(), out.as_mut_slice(), m, k, n);
    Ok(out)
}
