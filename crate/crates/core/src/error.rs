use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum GlcbError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("action {action} out of range for {num_actions} actions")]
    ActionOutOfRange { action: usize, num_actions: usize },

    #[error("reward {reward} outside [{min}, {max}]")]
    RewardOutOfRange { reward: f64, min: f64, max: f64 },

    #[error("malformed leaf path {0:?}")]
    MalformedPath(String),

    #[error("unknown task {0:?}")]
    UnknownTask(String),

    #[error("unknown policy {0:?}")]
    UnknownPolicy(String),

    #[error("policy {policy:?} does not support task {task:?}: {reason}")]
    PolicyMismatch {
        policy: String,
        task: String,
        reason: String,
    },

    #[error("malformed data in {path}: {reason}")]
    Data { path: String, reason: String },

    #[error("singular posterior for action {0}")]
    SingularPosterior(usize),

    #[error("duplicate entry for algorithm {algorithm:?} on task {task:?}")]
    DuplicateEntry { algorithm: String, task: String },

    #[error("missing input: {0}")]
    Missing(String),

    #[error("unsupported snapshot version {found} (expected {expected})")]
    SnapshotVersion { found: u32, expected: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
}

pub type Result<T, E = GlcbError> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(GlcbError::DimensionMismatch { expected, actual })
    }
}
