use thiserror::Error;

/// Crate-wide error type. Variants map onto the failure classes of the
/// individual subsystems; the CLI turns them into exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("admissibility error: {0}")]
    Admissibility(String),
    #[error("certification error: {0}")]
    Certification(String),
    #[error("convergence error: {0}")]
    Convergence(String),
    #[error("tolerance error: {0}")]
    Tolerance(String),
    #[error("resource cap exceeded: {0}")]
    Resource(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("bracket error: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
