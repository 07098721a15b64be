use thiserror::Error;

/// Errors raised by generators, analysis oracles, the round engine and the
/// graph file reader.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("infeasible degree sequence: n={n}, d={d}")]
    InfeasibleDegree { n: usize, d: usize },
    #[error("generation failed after {attempts} attempts: {reason}")]
    GenerationFailure { attempts: usize, reason: String },
    #[error("invalid lower-bound spec: {0}")]
    InvalidSpec(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("graph too large for exact enumeration (n={n} > {limit}); use spectral bounds")]
    SizeLimit { n: usize, limit: usize },
    #[error("did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("eigen-solver failed: residual {residual:e}")]
    Numeric { residual: f64 },
    #[error("graph has no clique labels")]
    MissingLabel,
    #[error("protocol violation at node {node}, round {round}: {reason}")]
    ProtocolViolation { node: usize, round: u64, reason: String },
    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
