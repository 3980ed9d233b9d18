use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dataset contains no instances")]
    EmptyDataset,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("infeasible modification: {0}")]
    InfeasibleModification(String),
    #[error("base set and addition pool overlap")]
    OverlappingPools,
    #[error("solver did not converge in {iters} iterations (grad norm {achieved:.3e})")]
    NonConvergence { iters: usize, achieved: f64 },
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("gradient vanishes at the cutting point; half space undefined")]
    HalfSpaceDegenerate,
    #[error("region inconsistent: psi = {psi} outside [-1, 1]")]
    RegionInconsistent { psi: f64 },
    #[error("zero-width sphere interval with nonzero segment interval")]
    IntervalInconsistent,
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
