//! Error type shared by the core modules.

use alloc::string::String;
use core::fmt;

/// Errors produced by core operations. Each variant carries enough context to
/// report the failure without re-deriving it at the call site.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// Tensor shapes are incompatible for the requested operation.
    ShapeMismatch { context: &'static str, detail: String },
    /// A parameter value is outside its documented domain.
    InvalidParam { context: &'static str, detail: String },
    /// A numeric invariant was violated (NaN/Inf where finite values are required).
    NonFinite { context: &'static str },
}

impl CoreError {
    pub fn shape(context: &'static str, detail: String) -> Self {
        CoreError::ShapeMismatch { context, detail }
    }

    pub fn param(context: &'static str, detail: String) -> Self {
        CoreError::InvalidParam { context, detail }
    }
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::ShapeMismatch { context, detail } => {
                write!(f, "shape mismatch in {context}: {detail}")
            }
            CoreError::InvalidParam { context, detail } => {
                write!(f, "invalid parameter in {context}: {detail}")
            }
            CoreError::NonFinite { context } => {
                write!(f, "non-finite value encountered in {context}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CoreError {}
