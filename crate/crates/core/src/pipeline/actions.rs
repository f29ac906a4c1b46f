use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureError, Featurizer};
use crate::keypoints::{
    filter_static, resample_window, ActionLabel, KeypointError, KeypointFrame, KeypointSequence,
};
use crate::lstm::{LstmError, LstmModel};

#[derive(Debug, thiserror::Error)]
pub enum ActionError {
    #[error(transparent)]
    Keypoints(#[from] KeypointError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] LstmError),
    #[error("invalid action settings: {0}")]
    InvalidArgument(String),
}

/// A labeled stretch of the timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionSpan {
    pub start_s: f64,
    pub end_s: f64,
    pub label: ActionLabel,
    /// Mean top-class probability of the windows merged into the span.
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionSettings {
    pub window: usize,
    pub stride: usize,
    /// Windows whose top probability is below this are dropped.
    pub confidence_floor: f64,
    pub motion_threshold: f64,
    pub landmarks: usize,
}

impl Default for ActionSettings {
    fn default() -> Self {
        Self {
            window: crate::keypoints::DEFAULT_WINDOW,
            stride: 15,
            confidence_floor: 0.5,
            motion_threshold: 0.0,
            landmarks: crate::keypoints::DEFAULT_LANDMARKS,
        }
    }
}

/// Window start indices covering `len` frames; the last window ends on the
/// final frame.
fn window_starts(len: usize, window: usize, stride: usize) -> Vec<usize> {
    if len <= window {
        return vec![0];
    }
    let last = len - window;
    let mut starts: Vec<usize> = (0..=last).step_by(stride).collect();
    if starts.last() != Some(&last) {
        starts.push(last);
    }
    starts
}

fn seconds(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

/// Classifies sliding windows of a frame stream and merges them into a
/// timeline. Streams shorter than the window are resampled into one window.
pub fn classify_actions(
    frames: &[KeypointFrame],
    model: &LstmModel,
    settings: &ActionSettings,
) -> Result<Vec<ActionSpan>, ActionError> {
    if frames.is_empty() {
        return Err(KeypointError::EmptyInput("keypoint stream has no frames").into());
    }
    if settings.window == 0 || settings.stride == 0 {
        return Err(ActionError::InvalidArgument(
            "window and stride must be at least 1".into(),
        ));
    }
    let featurizer = Featurizer::new(settings.window, settings.landmarks);
    let starts = window_starts(frames.len(), settings.window, settings.stride);

    let windows: Vec<Option<ActionSpan>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + settings.window).min(frames.len());
            let slice = &frames[start..end];
            let seq = resample_window(slice, settings.window)?;
            let seq = filter_static(&seq, settings.motion_threshold);
            let x = featurizer.featurize(&KeypointSequence { label: None, ..seq })?;
            let (label, confidence) = model.predict(&x)?;
            if confidence < settings.confidence_floor {
                return Ok(None);
            }
            let start_s = seconds(slice[0].timestamp_ms);
            let mut end_s = seconds(slice[slice.len() - 1].timestamp_ms);
            if end_s <= start_s {
                end_s = start_s + 0.001;
            }
            Ok(Some(ActionSpan {
                start_s,
                end_s,
                label,
                confidence,
            }))
        })
        .collect::<Result<_, ActionError>>()?;
    Ok(merge_spans(windows.into_iter().flatten().collect()))
}

/// Merges runs of same-label spans (given in start order) and clips overlaps
/// between different labels so the result is ordered and non-overlapping.
pub fn merge_spans(spans: Vec<ActionSpan>) -> Vec<ActionSpan> {
    let mut out: Vec<ActionSpan> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for span in spans {
        match out.last_mut() {
            Some(prev) if prev.label == span.label => {
                let n = counts.last_mut().expect("one count per span");
                prev.end_s = prev.end_s.max(span.end_s);
                prev.confidence += span.confidence;
                *n += 1;
            }
            Some(prev) => {
                if span.start_s < prev.end_s {
                    prev.end_s = span.start_s;
                }
                out.push(span);
                counts.push(1);
            }
            None => {
                out.push(span);
                counts.push(1);
            }
        }
    }
    for (span, n) in out.iter_mut().zip(counts) {
        span.confidence /= n as f64;
    }
    out
}
