use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("pole of the gamma function at z = {0}")]
    Pole(f64),

    #[error("argument outside the domain of {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },

    #[error("overflow in {0}; use the scaled evaluation in this regime")]
    Overflow(&'static str),

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("factor {index} is singular (R diagonal underflowed to zero)")]
    SingularFactor { index: usize },

    #[error("precision of {bits} bits is insufficient: the result is lost in rounding")]
    PrecisionInsufficient { bits: u32 },

    #[error("{what} did not converge: tail estimate {tail:e} exceeds tolerance {tol:e}")]
    NonConvergence {
        what: &'static str,
        tail: f64,
        tol: f64,
    },

    #[error("contour for the soft-edge kernel touches the branch cut (|w| = {modulus})")]
    BranchCrossing { modulus: f64 },

    #[error("soft-edge kernel depends on the contour shift: {a} vs {b}")]
    ContourSensitivity { a: f64, b: f64 },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("grids do not overlap or have mismatched lengths: {0}")]
    GridMismatch(String),

    #[error("rank-deficient least-squares fit")]
    RankDeficient,

    #[error("window out of range: {0}")]
    WindowOutOfRange(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        function,
        detail: detail.into(),
    }
}
