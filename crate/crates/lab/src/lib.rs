//! The std companion of `lumix-core`: configuration, dataset files, the
//! training loop, robustness evaluations, sweeps, and the `lumix` CLI.
//!
//! The core crate owns all numerics (mixing, the label-uncertainty loss,
//! networks, samplers); this crate owns everything that touches the outside
//! world — file formats (idx datasets, model checkpoints, CSV tables, PPM
//! dumps), the `key = value` config grammar, orchestration of training and
//! evaluation, and multi-seed sweeps on a thread pool.

#![forbid(unsafe_code)]

pub mod cli;
pub mod config;
pub mod error;
pub mod idx;
pub mod model_io;
pub mod ppm;
pub mod robustness;
pub mod sweep;
pub mod train;

pub use error::LabError;
