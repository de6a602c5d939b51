use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Every eigenvalue pair of the state fell below the spectral cutoff.
    #[error("degenerate state: no eigenvalue pair above cutoff {cutoff:e}")]
    DegenerateState { cutoff: f64 },

    /// `|∂⟨O⟩/∂φ|` vanished, so the error-propagation formula diverges.
    #[error("degenerate working point at phi = {phi}: |slope| = {slope:e}")]
    DegenerateWorkingPoint { phi: f64, slope: f64 },

    #[error("no working point: every phase in the search grid is degenerate")]
    NoWorkingPoint,
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by caller input rather than by the numerics.
    pub fn is_config_error(&self) -> bool {
        matches!(self, Error::InvalidArgument(_))
    }
}
