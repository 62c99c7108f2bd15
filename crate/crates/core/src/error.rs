use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// An entry of the covariance matrix left the representable range.
    #[error("covariance diverged at t = {t}")]
    Divergence { t: f64 },

    #[error("nonphysical covariance matrix: {0}")]
    Nonphysical(String),

    #[error("Fock cutoff {cutoff} too small for r = {squeeze_r}: tail bound {tail:e}")]
    CutoffTooSmall { cutoff: usize, squeeze_r: f64, tail: f64 },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
