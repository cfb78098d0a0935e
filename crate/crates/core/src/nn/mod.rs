//! Small reference networks with exact analytic gradients.
//!
//! Three architectures cover the laboratory's needs: a linear probe, an MLP
//! with 256/128 hidden units, and a small two-stage conv net. All of them are
//! composed from the same five layer kinds, run in f64, and are initialized
//! deterministically from the [`Stream::Init`] sub-stream.
//!
//! The backward pass accumulates exact gradients of the loss with respect to
//! every parameter (and the input, which the saliency-based evaluations use).
//! Finite-difference checking is a first-class citizen: [`fd_grad`] lives here
//! so tests and the acceptance suite share one central-difference oracle.

pub mod layers;
pub mod loss;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::CoreError;
use crate::sampling::{RngState, Stream};
use crate::tensor::Tensor;

pub use layers::Layer;
pub use loss::{accuracy, argmax_rows, bce_loss, soft_ce_loss, softmax, LossOutput};

/// A feed-forward model: an ordered layer stack plus its expected input shape.
#[derive(Debug, Clone)]
pub struct Model {
    pub layers: Vec<Layer>,
    /// Expected per-sample input shape (channels, height, width).
    pub input_shape: (usize, usize, usize),
    pub num_classes: usize,
}

/// Per-layer gradient buffers, aligned index-for-index with `Model::layers`.
/// Layers without parameters hold `None`.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub per_layer: Vec<Option<GradPair>>,
}

#[derive(Debug, Clone)]
pub struct GradPair {
    pub gw: Tensor,
    pub gb: Tensor,
}

/// Everything the backward pass needs from a forward pass: each layer's input,
/// plus pool argmax indices and conv im2col buffers where applicable.
pub struct ForwardCache {
    layer_inputs: Vec<Tensor>,
    pool_idx: Vec<Option<Vec<u32>>>,
    conv_cols: Vec<Option<Vec<f64>>>,
}

impl Model {
    /// Linear probe: flatten -> dense(C). The weakest reference model; the
    /// collage dataset is designed so this one stays near chance.
    pub fn linear(input_shape: (usize, usize, usize), num_classes: usize, rng: &mut RngState) -> Model {
        let (c, h, w) = input_shape;
        let layers = vec![
            Layer::Flatten,
            Layer::dense_init(c * h * w, num_classes, rng),
        ];
        Model { layers, input_shape, num_classes }
    }

    /// MLP reference: flatten -> dense(256) -> relu -> dense(128) -> relu -> dense(C).
    pub fn mlp(input_shape: (usize, usize, usize), num_classes: usize, rng: &mut RngState) -> Model {
        let (c, h, w) = input_shape;
        let d = c * h * w;
        let layers = vec![
            Layer::Flatten,
            Layer::dense_init(d, 256, rng),
            Layer::Relu,
            Layer::dense_init(256, 128, rng),
            Layer::Relu,
            Layer::dense_init(128, num_classes, rng),
        ];
        Model { layers, input_shape, num_classes }
    }

    /// Small conv reference: two 3x3 conv + 2x2 maxpool stages (4 and 8
    /// channels), one hidden dense layer of 64, then the classifier head.
    /// Requires height and width divisible by 4.
    pub fn conv(input_shape: (usize, usize, usize), num_classes: usize, rng: &mut RngState) -> Result<Model, CoreError> {
        let (c, h, w) = input_shape;
        if h % 4 != 0 || w % 4 != 0 {
            return Err(CoreError::param(
                "Model::conv",
                format!("conv reference needs H, W divisible by 4, got {h}x{w}"),
            ));
        }
        let flat = 8 * (h / 4) * (w / 4);
        let layers = vec![
            Layer::conv3x3_init(c, 4, rng),
            Layer::Relu,
            Layer::MaxPool2,
            Layer::conv3x3_init(4, 8, rng),
            Layer::Relu,
            Layer::MaxPool2,
            Layer::Flatten,
            Layer::dense_init(flat, 64, rng),
            Layer::Relu,
            Layer::dense_init(64, num_classes, rng),
        ];
        Ok(Model { layers, input_shape, num_classes })
    }

    /// Builds a model by kind name; `rng` should be the Init stream.
    pub fn build(kind: ModelKind, input_shape: (usize, usize, usize), num_classes: usize, rng: &mut RngState) -> Result<Model, CoreError> {
        match kind {
            ModelKind::Linear => Ok(Model::linear(input_shape, num_classes, rng)),
            ModelKind::Mlp => Ok(Model::mlp(input_shape, num_classes, rng)),
            ModelKind::Conv => Model::conv(input_shape, num_classes, rng),
        }
    }

    /// Fresh zeroed gradient buffers matching this model's parameters.
    pub fn zero_grads(&self) -> Gradients {
        let per_layer = self
            .layers
            .iter()
            .map(|l| {
                l.params().map(|(w, b)| GradPair {
                    gw: Tensor::zeros(w.shape()),
                    gb: Tensor::zeros(b.shape()),
                })
            })
            .collect();
        Gradients { per_layer }
    }

    /// Forward pass returning logits and the cache backward needs.
    pub fn forward(&self, input: &Tensor) -> Result<(Tensor, ForwardCache), CoreError> {
        self.forward_impl(input, true).map(|(t, c)| (t, c.expect("cache requested")))
    }

    /// Forward pass without gradient bookkeeping, for evaluation.
    pub fn predict(&self, input: &Tensor) -> Result<Tensor, CoreError> {
        self.forward_impl(input, false).map(|(t, _)| t)
    }

    fn forward_impl(&self, input: &Tensor, want_cache: bool) -> Result<(Tensor, Option<ForwardCache>), CoreError> {
        let (c, h, w) = self.input_shape;
        if input.shape().len() != 4 || input.shape()[1..] != [c, h, w] {
            return Err(CoreError::shape(
                "Model::forward",
                format!("expected input [B, {c}, {h}, {w}], got {:?}", input.shape()),
            ));
        }
        let mut cache = want_cache.then(|| ForwardCache {
            layer_inputs: Vec::with_capacity(self.layers.len()),
            pool_idx: vec![None; self.layers.len()],
            conv_cols: vec![None; self.layers.len()],
        });
        let mut x = input.clone();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut pool_idx = None;
            let mut conv_cols = None;
            let y = layer.forward(&x, want_cache.then_some((&mut pool_idx, &mut conv_cols)))?;
            if let Some(cache) = cache.as_mut() {
                cache.pool_idx[li] = pool_idx;
                cache.conv_cols[li] = conv_cols;
                cache.layer_inputs.push(x);
            }
            x = y;
        }
        if !x.all_finite() {
            return Err(CoreError::NonFinite { context: "Model::forward logits" });
        }
        Ok((x, cache))
    }

    /// Backward pass: accumulates parameter gradients into `grads` and returns
    /// the gradient with respect to the input batch.
    pub fn backward(&self, cache: &ForwardCache, dlogits: &Tensor, grads: &mut Gradients) -> Result<Tensor, CoreError> {
        if grads.per_layer.len() != self.layers.len() {
            return Err(CoreError::shape(
                "Model::backward",
                format!("gradient buffers for {} layers, model has {}", grads.per_layer.len(), self.layers.len()),
            ));
        }
        let mut d = dlogits.clone();
        for (li, layer) in self.layers.iter().enumerate().rev() {
            d = layer.backward(
                &cache.layer_inputs[li],
                cache.pool_idx[li].as_deref(),
                cache.conv_cols[li].as_deref(),
                &d,
                grads.per_layer[li].as_mut(),
            )?;
        }
        Ok(d)
    }

    /// All parameters flattened into one vector (layer order, weights then
    /// bias within a layer). Used by finite-difference checks and model IO.
    pub fn param_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            if let Some((w, b)) = l.params() {
                out.extend_from_slice(w.as_slice());
                out.extend_from_slice(b.as_slice());
            }
        }
        out
    }

    /// Overwrites all parameters from a flat vector laid out as `param_vec`.
    pub fn set_param_vec(&mut self, flat: &[f64]) -> Result<(), CoreError> {
        let mut pos = 0;
        for l in &mut self.layers {
            if let Some((w, b)) = l.params_mut() {
                let nw = w.numel();
                let nb = b.numel();
                if pos + nw + nb > flat.len() {
                    return Err(CoreError::shape("Model::set_param_vec", format!("flat vector too short at offset {pos}")));
                }
                w.as_mut_slice().copy_from_slice(&flat[pos..pos + nw]);
                pos += nw;
                b.as_mut_slice().copy_from_slice(&flat[pos..pos + nb]);
                pos += nb;
            }
        }
        if pos != flat.len() {
            return Err(CoreError::shape(
                "Model::set_param_vec",
                format!("flat vector has {} values, model wants {pos}", flat.len()),
            ));
        }
        Ok(())
    }
}

/// Reference architecture selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Linear,
    Mlp,
    Conv,
}

impl Gradients {
    pub fn zero(&mut self) {
        for g in self.per_layer.iter_mut().flatten() {
            g.gw.as_mut_slice().fill(0.0);
            g.gb.as_mut_slice().fill(0.0);
        }
    }

    /// Gradients flattened in the same order as `Model::param_vec`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in self.per_layer.iter().flatten() {
            out.extend_from_slice(g.gw.as_slice());
            out.extend_from_slice(g.gb.as_slice());
        }
        out
    }
}

/// SGD with classical momentum and decoupled-from-nothing (standard L2)
/// weight decay: v = m*v + (g + wd*w); w -= lr*v.
#[derive(Debug, Clone)]
pub struct Sgd {
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Option<Gradients>,
}

impl Sgd {
    pub fn new(momentum: f64, weight_decay: f64) -> Sgd {
        Sgd { momentum, weight_decay, velocity: None }
    }

    /// One parameter update. `lr = 0` leaves the model bit-identical (the
    /// velocity still integrates the gradient).
    pub fn step(&mut self, model: &mut Model, grads: &Gradients, lr: f64) {
        let vel = self
            .velocity
            .get_or_insert_with(|| model.zero_grads());
        for (li, layer) in model.layers.iter_mut().enumerate() {
            let (Some(g), Some(v)) = (grads.per_layer[li].as_ref(), vel.per_layer[li].as_mut()) else {
                continue;
            };
            if let Some((w, b)) = layer.params_mut() {
                sgd_update(w.as_mut_slice(), g.gw.as_slice(), v.gw.as_mut_slice(), lr, self.momentum, self.weight_decay);
                sgd_update(b.as_mut_slice(), g.gb.as_slice(), v.gb.as_mut_slice(), lr, self.momentum, 0.0);
            }
        }
    }
}

#[inline]
fn sgd_update(w: &mut [f64], g: &[f64], v: &mut [f64], lr: f64, momentum: f64, wd: f64) {
    for ((wi, &gi), vi) in w.iter_mut().zip(g.iter()).zip(v.iter_mut()) {
        *vi = momentum * *vi + (gi + wd * *wi);
        *wi -= lr * *vi;
    }
}

/// Central-difference gradient of a scalar function at `x`, one coordinate at
/// a time: (f(x+h) - f(x-h)) / 2h. The shared numeric oracle for every
/// gradient check in the workspace.
pub fn fd_grad(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut xs = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..xs.len() {
        let orig = xs[i];
        xs[i] = orig + h;
        let fp = f(&xs);
        xs[i] = orig - h;
        let fm = f(&xs);
        xs[i] = orig;
        out.push((fp - fm) / (2.0 * h));
    }
    out
}

/// Relative-or-absolute gradient comparison: passes when
/// |a - b| <= rel * max(|a|, |b|) or |a - b| <= abs_floor.
pub fn grads_close(analytic: &[f64], numeric: &[f64], rel: f64, abs_floor: f64) -> bool {
    analytic.len() == numeric.len()
        && analytic.iter().zip(numeric.iter()).all(|(&a, &b)| {
            let diff = (a - b).abs();
            diff <= rel * a.abs().max(b.abs()) || diff <= abs_floor
        })
}

/// He-normal initialization draw helper shared by the layer constructors.
pub(crate) fn he_normal(fan_in: usize, n: usize, rng: &mut RngState) -> Vec<f64> {
    let sd = crate::mathf::sqrt(2.0 / fan_in as f64);
    (0..n).map(|_| rng.sample_gaussian(0.0, sd)).collect()
}

/// Convenience: the Init stream for a root seed.
pub fn init_stream(root_seed: u64) -> RngState {
    RngState::stream(root_seed, Stream::Init)
}
