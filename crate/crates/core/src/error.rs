use crate::model::ChainState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("covariate column {column} has zero sample variance")]
    DegenerateCovariate { column: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("matrix is not positive definite (failing block {block})")]
    NotPositiveDefinite { block: usize },

    /// Non-centering requires a non-zero scale; callers floor it first.
    #[error("sqrt_theta[{index}] is zero, cannot map the centered path back")]
    ZeroScale { index: usize },

    /// The double gamma marginal diverges at the origin when `a <= 1/2`.
    #[error("marginal density is infinite at zero for shape {shape}")]
    InfiniteDensity { shape: f64 },

    #[error("GIG sampling failed for p = {p}, a = {a}, b = {b}: {reason}")]
    Gig { p: f64, a: f64, b: f64, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("sweep {sweep}: {source}")]
    Sweep {
        sweep: usize,
        #[source]
        source: Box<Error>,
        snapshot: Box<ChainState>,
    },

    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("draw store is empty")]
    EmptyDraws,
}
