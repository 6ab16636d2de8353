use thiserror::Error;

/// Errors produced by the library and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A†| element = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("state vector is not normalized: |norm - 1| = {deviation:.3e}")]
    NotNormalized { deviation: f64 },

    #[error("Hilbert-space dimension {dim} outside supported range 2..=8")]
    InvalidDimension { dim: usize },

    #[error("direction is not a unit vector: |norm - 1| = {deviation:.3e}")]
    InvalidDirection { deviation: f64 },

    #[error("invalid probe: {reason}")]
    InvalidProbe { reason: String },

    #[error("dimension mismatch between states and observable ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },

    #[error("postselection nearly orthogonal to preselection (overlap {overlap:.3e}); weak value undefined")]
    OrthogonalPostselection { overlap: f64 },

    #[error("postselection probability {probability:.3e} below floor; conditional statistics undefined")]
    VanishingPostselection { probability: f64 },

    #[error("degenerate geometry: theta in {{0, pi}} leaves the average independent of gamma")]
    DegenerateGeometry,

    #[error("closed-form extrema require p_phi >= 10 nu (got p_phi = {p_phi:.3e}, nu = {nu:.3e})")]
    RegimeNotApplicable { p_phi: f64, nu: f64 },

    #[error("invalid coupling: {reason}")]
    InvalidCoupling { reason: String },

    #[error("invalid pointer grid: {reason}")]
    InvalidGrid { reason: String },

    #[error("config error in [{section}] {key}: {reason}")]
    Config {
        section: String,
        key: String,
        reason: String,
    },

    #[error("internal numeric assertion failed: {reason}")]
    NumericAssertion { reason: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 config, 2 physics domain, 3 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config { .. } | Error::Io(_) => 1,
            Error::NumericAssertion { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
