//! Error type for the laboratory, with stable CLI categories and exit codes.
//!
//! Every failure surfaces on stderr as `error[<category>]: <message>` and the
//! process exits with the category's code: config 2, io 3, data 4, numeric 5.

use lumix_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    /// Bad configuration: unknown keys, malformed values, invalid domains.
    #[error("{0}")]
    Config(String),
    /// Filesystem problems, annotated with what was being touched.
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    /// Malformed or inconsistent dataset files.
    #[error("{0}")]
    Data(String),
    /// Numeric failure at run time (NaN loss, non-finite logits).
    #[error("{0}")]
    Numeric(String),
}

impl LabError {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> LabError {
        LabError::Io { context: context.into(), source }
    }

    /// Stable machine-readable category used in the stderr line.
    pub fn category(&self) -> &'static str {
        match self {
            LabError::Config(_) => "config",
            LabError::Io { .. } => "io",
            LabError::Data(_) => "data",
            LabError::Numeric(_) => "numeric",
        }
    }

    /// Process exit code per category.
    pub fn exit_code(&self) -> u8 {
        match self {
            LabError::Config(_) => 2,
            LabError::Io { .. } => 3,
            LabError::Data(_) => 4,
            LabError::Numeric(_) => 5,
        }
    }
}

impl From<CoreError> for LabError {
    fn from(e: CoreError) -> LabError {
        match e {
            CoreError::NonFinite { .. } => LabError::Numeric(e.to_string()),
            _ => LabError::Config(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categories_and_exit_codes_are_stable() {
        let c = LabError::Config("x".into());
        assert_eq!(c.category(), "config");
        assert_eq!(c.exit_code(), 2);
        let i = LabError::io("reading foo", std::io::Error::new(std::io::ErrorKind::NotFound, "gone"));
        assert_eq!(i.category(), "io");
        assert_eq!(i.exit_code(), 3);
        assert!(i.to_string().contains("reading foo"));
        assert_eq!(LabError::Data("d".into()).exit_code(), 4);
        assert_eq!(LabError::Numeric("n".into()).exit_code(), 5);
    }

    #[test]
    fn core_errors_map_by_kind() {
        let nf: LabError = CoreError::NonFinite { context: "test" }.into();
        assert_eq!(nf.category(), "numeric");
        let bad: LabError = CoreError::param("x", "bad".into()).into();
        assert_eq!(bad.category(), "config");
    }
}
