use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("unstable cavity: geometric length {geometric_length:e} m must lie in (0, {radius:e}) m")]
    UnstableCavity { geometric_length: f64, radius: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("total loss is zero, finesse is undefined")]
    ZeroTotalLoss,

    #[error("no full steep/flat period of mode {mode} found around the query point")]
    PeriodNotFound { mode: u32 },

    #[error(
        "frequency slope of mode {mode} vanishes; use exact-frequency detuning at this stationary point"
    )]
    ZeroSlope { mode: u32 },

    #[error("peaks unresolved: {0}")]
    PeaksUnresolved(String),

    #[error("fit rejected: {0}")]
    FitRejected(String),

    #[error("fit did not converge: {0}")]
    NonConvergence(String),

    #[error("no transmission peak found in sweep {0}")]
    NoPeakFound(usize),

    #[error("every sweep was excluded ({0} sweeps without a usable peak)")]
    AllExcluded(usize),

    #[error("sweep {0} carries no sync offset")]
    MissingSyncOffset(usize),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the input data or configuration (as opposed to
    /// failures of a fit or an analysis on otherwise valid input).
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidGeometry(_)
                | Error::UnstableCavity { .. }
                | Error::InvalidParameter { .. }
                | Error::MissingSyncOffset(_)
                | Error::Format(_)
                | Error::Io(_)
        )
    }
}
