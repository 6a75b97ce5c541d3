use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge: error estimate {err_estimate:.3e} above tolerance {tol:.3e}")]
    NonConvergence { err_estimate: f64, tol: f64 },

    #[error("eigenvalue iteration did not converge at index {index}")]
    EigenNonConvergence { index: usize },

    #[error("eigenvalue {0} is outside the open interval (0, 1)")]
    InvalidLambda(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("eigenvalue {eigenvalue} lies within {margin} of window edge {edge}")]
    WindowTouchesSpectrum { eigenvalue: f64, edge: f64, margin: f64 },

    #[error("decay fit needs at least 4 distance bins, found {bins}")]
    DegenerateFit { bins: usize },

    #[error("gap statistics need at least 3 radii, found {0}")]
    TooFewRadii(usize),

    #[error("box half-width {l} exceeds grid half-width {half_width}")]
    BoxExceedsGrid { l: f64, half_width: f64 },

    #[error("grid has {points} points, above the cap of {cap}")]
    GridTooLarge { points: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("kernel file: {0}")]
    KernelFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
