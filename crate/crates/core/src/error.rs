use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Location of a product-grid node, reported by rejections that name a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct NodeIndex {
    pub i1: usize,
    pub i2: usize,
    pub k: usize,
}

impl std::fmt::Display for NodeIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(i1={}, i2={}, k={})", self.i1, self.i2, self.k)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("non-finite value at {node}: {what}")]
    NonFinite { node: NodeIndex, what: &'static str },

    #[error("missing Dirichlet closure: {0}")]
    MissingDirichlet(String),

    #[error("form is not semipositive: {0}")]
    NotSemipositive(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("key positivity violated at {node}: smallest eigenvalue {lambda_min:.3e} < bound {bound:.3e}")]
    KeyPositivity {
        node: NodeIndex,
        lambda_min: f64,
        bound: f64,
    },

    #[error("outside the admissible cone at {node}: determinant {det:.3e}")]
    Inadmissible { node: NodeIndex, det: f64 },

    #[error("Newton iteration failed: {reason} (residual history {history:?})")]
    NewtonFailure { reason: String, history: Vec<f64> },

    #[error("linear solve failed: {0}")]
    LinearSolve(String),

    #[error("lift is not convex at sample {index}: second difference {second_difference:.3e}")]
    NonConvexLift {
        index: usize,
        second_difference: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
