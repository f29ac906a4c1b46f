//! Pipeline behavior on synthetic streams and shell adapters.

mod common;

use std::sync::{Arc, Mutex};

use kitchen_core::keypoints::ActionLabel;
use kitchen_core::pipeline::{
    classify_actions, run_pipeline, run_pipeline_with, ActionSettings, InputSource, MemoryTracker,
    PipelineConfig, PipelineError, StageError, StageRunner, StageStatus,
};

use common::{stirring_stream, stream, trained_model, two_phase_stream, write_pipeline_fixture};

#[test]
fn pure_stream_yields_one_span() {
    let frames = stirring_stream();
    let spans = classify_actions(&frames, trained_model(), &ActionSettings::default()).unwrap();
    assert_eq!(spans.len(), 1, "{spans:?}");
    assert_eq!(spans[0].label, ActionLabel::Stirring);
    assert_eq!(spans[0].start_s, 0.0);
    assert_eq!(
        spans[0].end_s,
        frames.last().unwrap().timestamp_ms as f64 / 1000.0
    );
}

#[test]
fn two_phases_in_order() {
    let frames = two_phase_stream();
    let spans = classify_actions(&frames, trained_model(), &ActionSettings::default()).unwrap();
    assert!(spans.len() >= 2, "{spans:?}");
    assert_eq!(spans.first().unwrap().label, ActionLabel::Kneading);
    assert_eq!(spans.last().unwrap().label, ActionLabel::Pouring);
    for pair in spans.windows(2) {
        assert!(pair[0].start_s < pair[1].start_s);
        assert!(pair[0].end_s <= pair[1].start_s);
        assert_ne!(pair[0].label, pair[1].label);
    }
}

#[test]
fn short_stream_uses_one_window() {
    let frames = stream(&[ActionLabel::Chopping], 1, 920)[..10].to_vec();
    let spans = classify_actions(&frames, trained_model(), &ActionSettings::default()).unwrap();
    assert!(spans.len() <= 1);
    if let Some(s) = spans.first() {
        assert_eq!((s.start_s, s.end_s), (0.0, 0.9));
    }
}

#[test]
fn floor_above_every_confidence_gives_no_spans() {
    let frames = stream(&[ActionLabel::Stirring], 2, 930);
    let settings = ActionSettings {
        confidence_floor: 1.0,
        ..ActionSettings::default()
    };
    let spans = classify_actions(&frames, trained_model(), &settings).unwrap();
    assert!(spans.is_empty(), "{spans:?}");
    assert!(classify_actions(&[], trained_model(), &settings).is_err());
}

#[test]
fn full_run_fires_release_hooks_in_order() {
    let dir = tempfile::tempdir().unwrap();
    let config = PipelineConfig::load(&write_pipeline_fixture(dir.path(), true)).unwrap();
    let seen = Arc::new(Mutex::new(Vec::new()));
    let sink = seen.clone();
    let runner = StageRunner::new(MemoryTracker::new())
        .on_release(move |r| sink.lock().unwrap().push(r.stage.clone()));
    let outcome = run_pipeline_with(&config, runner);
    assert!(outcome.is_success(), "{:?}", outcome.error);
    assert_eq!(
        *seen.lock().unwrap(),
        ["detection", "actions", "transcript", "fuse", "generate"]
    );
    assert_eq!(outcome.memory.live_bytes, 0);
    let summary = outcome.summary.unwrap();
    assert_eq!(
        summary.objects,
        [("knife".to_string(), 3), ("tomato".to_string(), 5)].into()
    );
    assert_eq!(summary.transcript.len(), 1);
    let recipe = outcome.recipe.unwrap();
    assert_eq!(recipe.name, "Tomato Salad");
    assert_eq!(recipe.steps.len(), 2);

    // The generator ran in the config directory and saw the prompt and parameters.
    let args = std::fs::read_to_string(dir.path().join("generator_args.txt")).unwrap();
    assert_eq!(args.trim(), "--max-tokens 100 --temperature 0.7");
    let stdin = std::fs::read_to_string(dir.path().join("generator_stdin.txt")).unwrap();
    assert_eq!(stdin, outcome.prompt.unwrap());
}

#[test]
fn failing_source_aborts_before_later_stages() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::load(&write_pipeline_fixture(dir.path(), true)).unwrap();
    config.keypoints = InputSource::Command {
        command: vec![
            "sh".into(),
            "-c".into(),
            "echo tracker crashed >&2; exit 1".into(),
        ],
    };
    let outcome = run_pipeline(&config);
    let err = outcome.error.as_ref().unwrap();
    assert_eq!(err.stage(), Some("actions"));
    assert!(err.to_string().contains("tracker crashed"), "{err}");
    let stages: Vec<_> = outcome
        .stages
        .iter()
        .map(|s| (s.stage.as_str(), s.status))
        .collect();
    assert_eq!(
        stages,
        [
            ("detection", StageStatus::Ok),
            ("actions", StageStatus::Failed)
        ]
    );
    assert!(outcome.objects.is_some());
    assert!(outcome.transcript.is_none());
    assert_eq!(outcome.memory.live_bytes, 0);
}

#[test]
fn generator_failure_keeps_summary_and_prompt() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::load(&write_pipeline_fixture(dir.path(), true)).unwrap();
    config.generator.command = vec!["sh".into(), "-c".into(), "exit 1".into()];
    let outcome = run_pipeline(&config);
    assert!(outcome.summary.is_some());
    assert!(outcome.recipe.is_none());
    let err = outcome.error.as_ref().unwrap();
    assert!(matches!(
        err,
        PipelineError::Stage { stage, source: StageError::Generation(_) } if stage == "generate"
    ));
    assert_eq!(err.pending_prompt(), outcome.prompt.as_deref());
    assert_eq!(outcome.stages.len(), 5);
}

#[test]
fn missing_transcript_file_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = PipelineConfig::load(&write_pipeline_fixture(dir.path(), true)).unwrap();
    config.transcript = Some(InputSource::File(dir.path().join("no_audio.jsonl")));
    let outcome = run_pipeline(&config);
    assert!(outcome.is_success(), "{:?}", outcome.error);
    assert!(outcome.summary.unwrap().transcript.is_empty());
    assert!(!outcome.prompt.unwrap().contains("audio:"));
}
