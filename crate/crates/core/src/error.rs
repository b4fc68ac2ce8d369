use alloc::string::String;

/// Failures raised while building or checking an embedding.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("matrix contains a non-finite entry")]
    NonFinite,
    #[error("expected a square matrix, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix is not Hermitian (deviation {deviation:e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not unitary (deviation {deviation:e})")]
    NotUnitary { deviation: f64 },
    #[error("vector {index} is not normalized (norm {norm})")]
    NotNormalized { index: usize, norm: f64 },
    #[error("states not discriminable: Gram matrix minimum eigenvalue {min_eigenvalue:e}")]
    NotDiscriminable { min_eigenvalue: f64 },
    #[error("infeasible conclusive probabilities: lossy operator norm {norm} exceeds 1")]
    InfeasibleProbabilities { norm: f64 },
    #[error("passivity violated: inconclusive element has eigenvalue {min_eigenvalue:e}")]
    PassivityViolation { min_eigenvalue: f64 },
    #[error("invalid density matrix: {0}")]
    InvalidDensityMatrix(&'static str),
    #[error("operator is zero")]
    ZeroOperator,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{what}: expected {expected}, found {found}")]
    RelationMismatch {
        what: &'static str,
        expected: f64,
        found: f64,
    },
    #[error("outputs {first} and {second} are not orthogonal (overlap {overlap:e})")]
    NotUnambiguous {
        first: usize,
        second: usize,
        overlap: f64,
    },
    #[error("schedule does not realize target (singular value deviation {deviation:e})")]
    ScheduleMismatch { deviation: f64 },
    #[error("unitary does not embed the lossy operator (deviation {deviation:e})")]
    EmbeddingMismatch { deviation: f64 },
    #[error("degenerate pulse design at overlap {overlap}")]
    DegenerateDesign { overlap: f64 },
    #[error("transition frequencies must be positive and distinct ({omega1}, {omega2})")]
    InvalidTransitions { omega1: f64, omega2: f64 },
    #[error("discretization did not converge; try n_steps >= {suggested_steps}")]
    NonConvergent { suggested_steps: usize },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
