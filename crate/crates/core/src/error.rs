use std::fmt;

use serde::Serialize;

/// One violated model invariant, as reported by validation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Short name of the invariant, e.g. `"row-stochastic"` or `"kraus-completeness"`.
    pub invariant: String,
    /// Where it failed, e.g. `"transition[s=0][a=1]"`.
    pub location: String,
    /// Largest absolute deviation observed.
    pub deviation: f64,
}

impl Violation {
    pub fn new(invariant: &str, location: impl Into<String>, deviation: f64) -> Self {
        Self {
            invariant: invariant.to_owned(),
            location: location.into(),
            deviation,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} violated at {} (deviation {:e})",
            self.invariant, self.location, self.deviation
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("matrix shape mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("cannot truncate a 1x1 matrix")]
    DimensionTooSmall,
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },
    #[error("reward operator is not Hermitian (max deviation {0:e})")]
    NonHermitianReward(f64),
    #[error("{what} index {index} out of range (valid: {valid})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        valid: String,
    },
    #[error("branch has zero probability (trace {0:e})")]
    ZeroProbabilityBranch(f64),
    #[error("observation has zero probability (norm {0:e})")]
    ZeroProbabilityObservation(f64),
    #[error("probability {0} outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange(f64),
    #[error("Kraus completeness fails (max deviation {0:e})")]
    InvalidKraus(f64),
    #[error("action sequence must be non-empty")]
    EmptySequence,
    #[error("policy path extinguished at step {0}")]
    PathExtinguished(usize),
    #[error("POMDP is not embeddable as a QOMDP (max completeness deviation {0:e})")]
    NotEmbeddable(f64),
    #[error("positive-probability branch (observation {observation}) has no subtree with {remaining} steps remaining")]
    MissingChild { observation: usize, remaining: usize },
    #[error("policy tree depth {depth} exceeds horizon {horizon}")]
    TreeTooDeep { depth: usize, horizon: usize },
    #[error("search budget exceeded after expanding {0} nodes")]
    BudgetExceeded(u64),
    #[error("reachable support states exceed cap {0}")]
    StateBudgetExceeded(usize),
    #[error("invalid tolerance configuration: {0}")]
    InvalidTolerance(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("model validation failed: {}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    pub(crate) fn out_of_range(what: &'static str, index: usize, valid: impl fmt::Display) -> Self {
        Error::IndexOutOfRange {
            what,
            index,
            valid: valid.to_string(),
        }
    }

    /// Turn a non-empty violation list into an error.
    pub(crate) fn check(violations: Vec<Violation>) -> Result<()> {
        if violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(violations))
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
