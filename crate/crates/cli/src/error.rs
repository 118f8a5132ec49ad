use polya::PolyaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] PolyaError),

    #[error("configuration: {0}")]
    Config(String),

    #[error("uniformity audits need n <= {limit}, got {n}")]
    AuditTooLarge { n: usize, limit: usize },

    #[error("sampled a tree outside the enumerated classes: {0}")]
    UnknownClass(String),

    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, HarnessError>;
