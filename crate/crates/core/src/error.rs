use thiserror::Error;

#[derive(Error, Debug)]
pub enum SusyError {
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("eigenvalue iteration did not converge within {0} steps")]
    NoConvergence(usize),
    #[error(
        "spectral function singular: eigenvalue {eigenvalue:.6e} inside gap floor {floor:.1e}"
    )]
    SingularAtGapFloor { eigenvalue: f64, floor: f64 },
    #[error("matrix entries must be finite")]
    NonFiniteEntry,
    #[error("matrix is numerically singular")]
    SingularMatrix,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("momentum grid sizes must be positive even integers in 1 to 3 dimensions")]
    GridMismatch,
    #[error("band gap closed at grid point {k_index} (|eigenvalue| = {value:.3e})")]
    GapClosed { k_index: usize, value: f64 },
    #[error("gap closed along homotopy path at lambda = {lambda:.4} (grid point {k_index})")]
    GapClosedOnPath { lambda: f64, k_index: usize },
    #[error("homotopy transport stalled at error estimate {err:.3e} (tolerance {tol:.1e})")]
    OdeNotConverged { tol: f64, err: f64 },
    #[error("subsystem basis is ill-conditioned (Gram condition number {0:.3e})")]
    IllConditionedSubspace(f64),
    #[error("invalid subsystem specification: {0}")]
    InvalidSubsystem(String),
    #[error("boson cutoff too small: truncation-safe sector is empty")]
    TruncationTooSmall,
    #[error("unsupported symmetry class for this operation: {0}")]
    UnsupportedClass(String),
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SusyError>;
