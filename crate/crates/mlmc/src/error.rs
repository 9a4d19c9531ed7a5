use crate::model::ModelError;
use crate::stats::LevelStats;

#[derive(Debug, thiserror::Error)]
pub enum MlmcError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate stack: every level pair has zero variance")]
    DegenerateStack,

    #[error("model '{model}' failed on level {level}: {source}")]
    Model {
        level: usize,
        model: String,
        #[source]
        source: ModelError,
        /// Statistics accumulated before the failure, one entry per level.
        partial: Vec<LevelStats>,
    },

    #[error("worker pool: {0}")]
    Pool(String),
}
