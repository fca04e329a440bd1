use thiserror::Error;

/// A configuration that violates one of the [`ChainConfig`](crate::ChainConfig)
/// invariants. `field` is the offending field name, with an index path when
/// the field is an array (e.g. `store_capacity[1][0]`).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid configuration field `{field}`: {reason}")]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("episode complete: clock is at horizon {horizon}, call reset first")]
    EpisodeComplete { horizon: usize },

    #[error("invalid action `{field}`: {reason}")]
    InvalidAction { field: String, reason: String },
}

impl EnvError {
    pub(crate) fn action(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Self::InvalidAction {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
