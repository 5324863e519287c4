use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("non-finite value at index {index}")]
    NonFinite { index: usize },

    #[error("degenerate bandwidth: all values are identical")]
    DegenerateBandwidth,

    #[error("series is constant")]
    ConstantSeries,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("negative HSIC {0:e} beyond round-off; centering is broken")]
    NegativeHsic(f64),

    #[error("cholesky factorization failed for every hyperparameter candidate")]
    Factorization,

    #[error("regression residuals are degenerate (perfect fit); direction is not identifiable")]
    DegenerateResiduals,

    #[error("curves need both classes: {positives} positive and {negatives} negative decisions")]
    SingleClass { positives: usize, negatives: usize },

    #[error("inference failed for every problem ({0} attempted)")]
    AllFailed(usize),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    /// Input and parse failures, as opposed to numerical ones.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. } | Error::Io { .. } | Error::InvalidParameter(_)
        )
    }
}
