use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("no dominant frequency: {0}")]
    NoDominantFrequency(String),

    #[error("harmonic {ell} search band reaches {upper_hz:.2} Hz, beyond Nyquist {nyquist_hz:.2} Hz")]
    HarmonicOutOfRange {
        ell: usize,
        upper_hz: f64,
        nyquist_hz: f64,
    },

    #[error("harmonic degree selection failed: {0}")]
    DegreeSelection(String),

    #[error("{method} infeasible on interval starting at sample {start}: {reason}")]
    ImputerInfeasible {
        method: &'static str,
        start: usize,
        reason: String,
    },

    #[error("seasonality estimate failed: {0}")]
    Seasonality(String),

    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by a
    /// numerical routine giving up.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::InvalidSpec(_)
                | Error::InvalidConfig(_)
                | Error::Parse { .. }
                | Error::Io(_)
        )
    }

    pub(crate) fn infeasible(method: &'static str, start: usize, reason: impl Into<String>) -> Self {
        Error::ImputerInfeasible {
            method,
            start,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
