use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the numeric kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("invalid shape {shape:?}: {reason}")]
    InvalidShape { shape: Vec<usize>, reason: &'static str },

    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("{op} produced a non-finite value")]
    NonFinite { op: &'static str },

    #[error("label {label} at position {index} is outside 0..{classes}")]
    LabelOutOfRange { index: usize, label: usize, classes: usize },

    #[error("idx parse error at byte offset {offset}: {kind}")]
    Parse { offset: usize, kind: ParseErrorKind },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("{0} is empty")]
    Empty(&'static str),
}

/// What went wrong while decoding an IDX container.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("unexpected magic 0x{found:08x} (expected 0x{expected:08x})")]
    UnexpectedMagic { expected: u32, found: u32 },
    #[error("truncated header")]
    TruncatedHeader,
    #[error("payload holds {found} bytes but the header declares {expected}")]
    PayloadLength { expected: usize, found: usize },
    #[error("zero-sized dimension")]
    ZeroDimension,
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name,
        reason: reason.into(),
    }
}
