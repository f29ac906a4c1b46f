//! Staged orchestration: detection ingestion, action classification and
//! transcript ingestion run one at a time, each releasing its working set
//! before the next starts; their results are fused into a prompt for an
//! external recipe generator.

mod actions;
mod adapter;
mod config;
mod generate;
mod memory;
mod run;
mod stage;
mod summary;
mod transcript;

use thiserror::Error;

pub use actions::{classify_actions, merge_spans, ActionError, ActionSettings, ActionSpan};
pub use adapter::{run_command, AdapterError, AdapterOutput, InputSource};
pub use config::{ConfigError, PipelineConfig};
pub use generate::{generate_recipe, parse_recipe, GenerationError, GeneratorConfig, RecipeText};
pub use memory::{MemoryReport, MemoryTracker, Tracked};
pub use run::{run_pipeline, run_pipeline_with, PipelineOutcome};
pub use stage::{StageRecord, StageRunner, StageScope, StageSpec, StageStatus};
pub use summary::{
    assemble_prompt, count_objects, PipelineSummary, PromptError, DEFAULT_MAX_ITEMS,
};
pub use transcript::{ingest_transcript, TranscriptError, TranscriptSegment};

use crate::detection::DetectionError;
use crate::keypoints::KeypointError;
use crate::lstm::LstmError;

/// Failure inside a single stage.
#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Detection(#[from] DetectionError),
    #[error(transparent)]
    Keypoints(#[from] KeypointError),
    #[error(transparent)]
    Model(#[from] LstmError),
    #[error(transparent)]
    Actions(#[from] ActionError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Generation(#[from] GenerationError),
    #[error("{0}")]
    Message(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: StageError,
    },
    #[error("stage `{stage}` still holds {bytes} tracked bytes after release")]
    Unreleased { stage: String, bytes: u64 },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl PipelineError {
    pub fn stage(&self) -> Option<&str> {
        match self {
            PipelineError::Stage { stage, .. } | PipelineError::Unreleased { stage, .. } => {
                Some(stage)
            }
            PipelineError::Config(_) => None,
        }
    }

    /// The prompt of a failed generation, for an offline retry.
    pub fn pending_prompt(&self) -> Option<&str> {
        match self {
            PipelineError::Stage {
                source: StageError::Generation(g),
                ..
            } => Some(&g.prompt),
            _ => None,
        }
    }
}
