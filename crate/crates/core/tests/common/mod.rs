//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use kitchen_core::dataset::{concat_stream, synthesize_dataset, LabeledSequence};
use kitchen_core::features::{featurize, FeatureSequence};
use kitchen_core::keypoints::{
    write_keypoints, ActionLabel, KeypointFrame, KeypointSequence, DEFAULT_LANDMARKS,
};
use kitchen_core::lstm::{evaluate, save_model, train, Architecture, LstmModel, TrainConfig};

/// Pipeline fixtures; resolvable from either crate's test targets.
pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/pipeline")
}

pub fn features(data: &[LabeledSequence]) -> Vec<FeatureSequence> {
    data.iter()
        .map(|d| featurize(&d.sequence).unwrap())
        .collect()
}

const CLIP: usize = 30;

/// Back-to-back 30-frame clips, `count` per phase, as one stream.
pub fn stream(phases: &[ActionLabel], count: usize, seed: u64) -> Vec<KeypointFrame> {
    let mut clips = Vec::new();
    for (i, &label) in phases.iter().enumerate() {
        clips.extend(
            synthesize_dataset(&[label], count, seed + i as u64, CLIP, DEFAULT_LANDMARKS).unwrap(),
        );
    }
    concat_stream(&clips).unwrap().0
}

pub fn stirring_stream() -> Vec<KeypointFrame> {
    stream(&[ActionLabel::Stirring], 4, 900)
}

pub fn two_phase_stream() -> Vec<KeypointFrame> {
    stream(&[ActionLabel::Kneading, ActionLabel::Pouring], 3, 910)
}

pub fn chopping_stream() -> Vec<KeypointFrame> {
    stream(&[ActionLabel::Chopping], 3, 500)
}

/// Default-stride windows of a stream whose frames all belong to one phase.
pub fn phase_windows(
    frames: &[KeypointFrame],
    phases: &[ActionLabel],
    count: usize,
) -> Vec<FeatureSequence> {
    let phase_len = count * CLIP;
    let mut out = Vec::new();
    let mut start = 0;
    while start + CLIP <= frames.len() {
        let (first, last) = (start / phase_len, (start + CLIP - 1) / phase_len);
        if first == last {
            let seq = KeypointSequence {
                frames: frames[start..start + CLIP].to_vec(),
                label: Some(phases[first]),
            };
            out.push(featurize(&seq).unwrap());
        }
        start += 15;
    }
    out
}

/// Classifier overfit on 4 clips per class plus the windows of the fixture
/// streams, so its predictions on those streams are known.
pub fn trained_model() -> &'static LstmModel {
    static MODEL: OnceLock<LstmModel> = OnceLock::new();
    MODEL.get_or_init(|| {
        let mut data = features(
            &synthesize_dataset(&ActionLabel::ALL, 4, 7, CLIP, DEFAULT_LANDMARKS).unwrap(),
        );
        data.extend(phase_windows(
            &stirring_stream(),
            &[ActionLabel::Stirring],
            4,
        ));
        data.extend(phase_windows(
            &two_phase_stream(),
            &[ActionLabel::Kneading, ActionLabel::Pouring],
            3,
        ));
        data.extend(phase_windows(
            &chopping_stream(),
            &[ActionLabel::Chopping],
            3,
        ));
        // Early stopping is off: the selected model must fit every sample.
        let config = TrainConfig {
            seed: 3,
            batch_size: 8,
            learning_rate: 0.003,
            epochs: 70,
            early_stop_patience: 70,
            ..TrainConfig::default()
        };
        let model = train(&data, &data, &Architecture::default(), &config)
            .unwrap()
            .model;
        let report = evaluate(&model, &data).unwrap();
        assert_eq!(
            report.accuracy,
            1.0,
            "fixture model is not overfit:\n{}",
            report.render()
        );
        model
    })
}

/// Writes model, keypoints and a pipeline config into `dir`; the transcript
/// source is included when `with_transcript` is set. Returns the config path.
pub fn write_pipeline_fixture(dir: &Path, with_transcript: bool) -> PathBuf {
    save_model(trained_model(), &dir.join("model.json")).unwrap();
    let frames = chopping_stream();
    let file = std::fs::File::create(dir.join("keypoints.jsonl")).unwrap();
    write_keypoints(std::io::BufWriter::new(file), &frames).unwrap();

    let fixtures = fixture_dir();
    let mut config = serde_json::json!({
        "detections": fixtures.join("detections.jsonl"),
        "keypoints": "keypoints.jsonl",
        "model": "model.json",
        "generator": {
            "command": ["sh", fixtures.join("echo_generator.sh")],
            "timeout_s": 30.0
        }
    });
    if with_transcript {
        config["transcript"] = serde_json::json!(fixtures.join("transcript.jsonl"));
    }
    let path = dir.join("pipeline.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}
