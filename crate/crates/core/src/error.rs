use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsiError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("rank-deficient pilot Gram matrix for {name}: rank {rank} < {expected}")]
    RankDeficient {
        name: String,
        rank: usize,
        expected: usize,
    },

    #[error("infeasible constraint: least-squares residual floor {floor:.3e} exceeds epsilon {epsilon:.3e}")]
    Infeasible { floor: f64, epsilon: f64 },

    #[error("ill-posed fit: {0}")]
    IllPosed(String),

    #[error("AMP diverged at iteration {iteration} (residual energy grew {growth:.1}x); try a smaller damping factor")]
    Divergence { iteration: usize, growth: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, CsiError>;

pub(crate) fn invalid(msg: impl Into<String>) -> CsiError {
    CsiError::InvalidArgument(msg.into())
}
