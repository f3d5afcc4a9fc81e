use num_complex::Complex64;
use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid problem specification: {0}")]
    Spec(String),
    #[error("{0} is not an eigenvalue")]
    NotAnEigenvalue(Complex64),
    #[error("boundary conditions are rank deficient (rank {rank} < {dim})")]
    RankDeficient { rank: usize, dim: usize },
    #[error("the pencil (A, B) is irregular")]
    IrregularPencil,
    #[error("k = {0} is a pole of the Cayley transform")]
    PoleOfCayley(Complex64),
    #[error("k must be nonzero")]
    ZeroK,
    #[error("k = {0} lies on the spectrum")]
    OnSpectrum(Complex64),
    #[error("a zero of the secular function lies on the contour")]
    ContourThroughZero,
    #[error("the contour passes too close to the spectrum")]
    ContourTooClose,
    #[error("numerical procedure did not converge: {0}")]
    NoConvergence(String),
    #[error("operation requires class {expected}, got {actual}")]
    WrongClass { expected: String, actual: String },
    #[error("kappa = {0} is too small for the Neumann series bound")]
    KappaTooSmall(f64),
    #[error("graph has internal edges; a star graph is required")]
    NotAStarGraph,
    #[error("time step produced a singular system")]
    SingularStep,
}

pub type Result<T> = std::result::Result<T, Error>;
