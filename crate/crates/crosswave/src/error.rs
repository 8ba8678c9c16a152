use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum CwError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("singular potential evaluation: {0}")]
    SingularPotential(String),
    #[error("exponent outside admissible window: {0}")]
    ExponentWindow(String),
    #[error("spin class too large for exact permutation sum (|I| = {0})")]
    ClassTooLarge(usize),
    #[error("rank-deficient orbital set (norm of determinantal state = {0:.3e})")]
    RankDeficient(f64),
    #[error("state is not Pauli-admissible (residual = {0:.3e})")]
    NotAntisymmetric(f64),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("boundary contamination: mass fraction {0:.3e} in outer band exceeds {1:.1e}")]
    BoundaryContamination(f64, f64),
    #[error("trajectory error: {0}")]
    Trajectory(String),
    #[error("horizon T = {t} outside contraction window T_max = {t_max} (pass override to proceed)")]
    ContractionWindow { t: f64, t_max: f64 },
    #[error("Picard iteration did not contract after {0} iterations")]
    NoContraction(usize),
    #[error("Monte Carlo inconclusive: relative stderr {0:.3} above threshold {1:.3}")]
    Inconclusive(f64, f64),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("persistence format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CwError>;
