use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// The log-density for this hop count is not concave in distance.
    #[error("degenerate fit for hop count {hop}: log-density is not concave")]
    DegenerateFit { hop: u32 },

    #[error("degenerate anchor geometry: trilateration system is rank deficient")]
    DegenerateGeometry,

    #[error("candidate lies within {eps:e} of anchor {anchor}")]
    Singularity { anchor: usize, eps: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
