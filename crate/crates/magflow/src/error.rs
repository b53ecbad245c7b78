use thiserror::Error;

use crate::sl2::ElementClass;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point must lie in the open upper half-plane (im = {im})")]
    NotInUpperHalfPlane { im: f64 },

    #[error("the zero algebra element has no normal form")]
    ZeroAlgebraElement,

    #[error("Dirichlet reduction did not terminate within {0} steps; group data is corrupt")]
    ReductionDiverged(usize),

    #[error("operation requires the elliptic regime (E < E_c), got {regime}")]
    RequiresElliptic { regime: ElementClass },

    #[error("invalid parameter: {0}")]
    InvalidArgument(String),

    #[error("magnetic field B must be a quantized rational here (2B(genus-1) in Z), got B = {b}")]
    NotQuantized { b: String },

    #[error("Landau index m = {m} out of range, need 0 <= m < {level_count}")]
    LevelOutOfRange { m: u64, level_count: u64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("decay table contains a zero error; the scan converged exactly and no power law can be fitted")]
    ExactConvergence,

    #[error("too few populated histogram bins in the fit window ({got}, need >= {need})")]
    EmptyBins { got: usize, need: usize },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
