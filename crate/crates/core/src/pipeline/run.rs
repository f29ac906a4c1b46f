use std::collections::BTreeMap;
use std::time::Duration;

use serde::Serialize;

use super::actions::{classify_actions, ActionSpan};
use super::config::PipelineConfig;
use super::generate::{generate_recipe, RecipeText};
use super::memory::{MemoryReport, MemoryTracker};
use super::stage::{StageRecord, StageRunner};
use super::summary::{assemble_prompt, count_objects, PipelineSummary};
use super::transcript::{ingest_transcript, TranscriptSegment};
use super::{PipelineError, StageError};
use crate::detection::{load_class_map, read_detections, ClassMap};
use crate::keypoints::read_keypoints;
use crate::lstm::load_model;

/// Everything a run produced, up to the first failing stage.
#[derive(Debug, Serialize)]
pub struct PipelineOutcome {
    pub objects: Option<BTreeMap<String, usize>>,
    pub actions: Option<Vec<ActionSpan>>,
    pub transcript: Option<Vec<TranscriptSegment>>,
    pub summary: Option<PipelineSummary>,
    pub prompt: Option<String>,
    pub recipe: Option<RecipeText>,
    pub stages: Vec<StageRecord>,
    pub memory: MemoryReport,
    #[serde(skip)]
    pub error: Option<PipelineError>,
}

impl PipelineOutcome {
    pub fn is_success(&self) -> bool {
        self.error.is_none()
    }
}

pub fn run_pipeline(config: &PipelineConfig) -> PipelineOutcome {
    run_pipeline_with(config, StageRunner::new(MemoryTracker::new()))
}

/// Runs detection, actions, transcript, fuse and generate in that order on
/// `runner`, stopping at the first failure.
pub fn run_pipeline_with(config: &PipelineConfig, mut runner: StageRunner) -> PipelineOutcome {
    for spec in config.stage_specs() {
        log::debug!("planned stage {spec:?}");
    }
    let mut outcome = PipelineOutcome {
        objects: None,
        actions: None,
        transcript: None,
        summary: None,
        prompt: None,
        recipe: None,
        stages: Vec::new(),
        memory: runner.tracker().report(),
        error: None,
    };
    if let Err(e) = run_stages(config, &mut runner, &mut outcome) {
        log::error!("{e}");
        outcome.error = Some(e);
    }
    outcome.memory = runner.tracker().report();
    outcome.stages = runner.into_records();
    outcome
}

fn run_stages(
    config: &PipelineConfig,
    runner: &mut StageRunner,
    outcome: &mut PipelineOutcome,
) -> Result<(), PipelineError> {
    let cwd = config.working_dir();
    let source_timeout =
        Duration::try_from_secs_f64(config.source_timeout_s).unwrap_or(Duration::MAX);

    let objects = runner.run_stage("detection", |scope| {
        let classes = match &config.classes {
            Some(path) => load_class_map(path)?,
            None => ClassMap::kitchen(),
        };
        let reader = config.detections.open_required(cwd, source_timeout)?;
        let detections = scope.track_vec(read_detections(reader)?);
        log::info!("{} detections loaded", detections.len());
        Ok(count_objects(&detections, &classes, config.score_cutoff)?)
    })?;
    outcome.objects = Some(objects.clone());

    let actions = runner.run_stage("actions", |scope| {
        let model = load_model(&config.model)?;
        let bytes = (model.params().len() * std::mem::size_of::<f64>()) as u64;
        let model = scope.track(model, bytes);
        let reader = config.keypoints.open_required(cwd, source_timeout)?;
        let frames = scope.track_vec(read_keypoints(reader, config.actions.landmarks)?);
        log::info!("{} keypoint frames loaded", frames.len());
        Ok(classify_actions(&frames, &model, &config.actions)?)
    })?;
    outcome.actions = Some(actions.clone());

    let transcript = runner.run_stage("transcript", |scope| {
        let reader = match &config.transcript {
            Some(source) => source.open(cwd, source_timeout)?,
            None => None,
        };
        let segments = scope.track_vec(ingest_transcript(reader)?);
        Ok(segments.to_vec())
    })?;
    outcome.transcript = Some(transcript.clone());

    let (summary, prompt) = runner.run_stage("fuse", |_| {
        let summary = PipelineSummary {
            objects,
            actions,
            transcript,
        };
        let prompt = assemble_prompt(&summary, config.max_items)?;
        Ok((summary, prompt))
    })?;
    log::info!("prompt: {prompt}");
    outcome.summary = Some(summary);
    outcome.prompt = Some(prompt.clone());

    let recipe = runner.run_stage("generate", |_| {
        generate_recipe(&prompt, &config.generator, cwd).map_err(StageError::from)
    })?;
    outcome.recipe = Some(recipe);
    Ok(())
}
