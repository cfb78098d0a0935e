//! Core of the LUMix training laboratory.
//!
//! Everything in this crate is `no_std` + `alloc`: deterministic samplers, a
//! minimal f64 tensor, small reference networks with exact analytic gradients,
//! CutMix/Mixup input mixing, the label-uncertainty loss (three-term lambda
//! combination plus a positive-class hinge regularizer), and pure in-memory
//! dataset generators. File formats, configuration, and orchestration live in
//! the companion `lumix-lab` crate.
//!
//! All arithmetic is f64 and all randomness flows through [`sampling::RngState`]
//! sub-streams derived from a single root seed, so every run is reproducible
//! bit-for-bit from `(seed, config)`.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod data;
pub mod error;
pub mod mathf;
pub mod mixing;
pub mod lumix;
pub mod nn;
pub mod sampling;
pub mod tensor;

pub use error::CoreError;
pub use tensor::Tensor;
