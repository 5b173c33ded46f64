use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid discretization: mesh must have at least 2 points, got {0}")]
    InvalidDiscretization(usize),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("matrix needs {required_cells} cells per matrix, budget allows {budget_cells}")]
    ResourceBudget { required_cells: u128, budget_cells: u128 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("matrix {rows}x{cols} exceeds exact-oracle scale (min dimension must be <= {limit})")]
    OracleScale { rows: usize, cols: usize, limit: usize },

    #[error("value iteration exceeded ceiling {ceiling} after {} iterations", trace.len())]
    Divergence { ceiling: f64, trace: Vec<f64> },

    #[error("rational fit failed: {reason} (residual sum of squares {rss})")]
    FitFailure { reason: String, rss: f64 },

    #[error("session not found: {0}")]
    SessionNotFound(String),

    #[error("session state: {0}")]
    SessionState(String),

    #[error("no coalition policy for {opponents} opponents, mesh {mesh}, rule {rule}; precompute it with `rgl solve`")]
    PolicyUnavailable { opponents: usize, mesh: usize, rule: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
