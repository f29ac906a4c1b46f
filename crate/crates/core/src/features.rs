//! Per-frame normalized positions plus frame-to-frame deltas.
//!
//! Row `t` of a feature matrix holds `3L` normalized coordinates followed by
//! `3L` deltas `normalized(t) - normalized(t - 1)`. Row 0's deltas are zero, as
//! are deltas for landmarks absent on either side of the step.

use std::io::Write;

use thiserror::Error;

use crate::keypoints::{
    ActionLabel, KeypointFrame, KeypointSequence, Landmark, DEFAULT_LANDMARKS, DEFAULT_WINDOW,
};

const EXTENT_GUARD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("expected {expected} frames, got {found}")]
    FrameCount { expected: usize, found: usize },
    #[error("frame {frame}: expected {expected} landmarks, got {found}")]
    LandmarkCount {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A `rows x cols` row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    pub label: Option<ActionLabel>,
}

impl FeatureSequence {
    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>, label: Option<ActionLabel>) -> Self {
        assert_eq!(data.len(), rows * cols, "feature data does not match shape");
        Self {
            rows,
            cols,
            data,
            label,
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_rows(rows, cols, vec![0.0; rows * cols], None)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.cols..(t + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn with_label(mut self, label: Option<ActionLabel>) -> Self {
        self.label = label;
        self
    }

    /// Column names `pos_<i>_{x,y,z}` then `del_<i>_{x,y,z}`.
    pub fn column_names(&self) -> Vec<String> {
        let landmarks = self.cols / 6;
        let mut names = Vec::with_capacity(self.cols);
        for prefix in ["pos", "del"] {
            for i in 0..landmarks {
                for axis in ["x", "y", "z"] {
                    names.push(format!("{prefix}_{i}_{axis}"));
                }
            }
        }
        names
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), FeatureError> {
        writeln!(out, "{}", self.column_names().join(","))?;
        for t in 0..self.rows {
            let line: Vec<String> = self.row(t).iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Centers present landmarks on their centroid and divides by the largest
/// absolute centered coordinate. Absent landmarks stay zero; a frame with no
/// present landmarks is returned unchanged.
pub fn normalize_frame(frame: &KeypointFrame) -> KeypointFrame {
    let present: Vec<&Landmark> = frame.landmarks.iter().filter(|l| l.present).collect();
    if present.is_empty() {
        return frame.clone();
    }
    let n = present.len() as f64;
    let mut centroid = [0.0; 3];
    for l in &present {
        for (c, v) in centroid.iter_mut().zip(l.coords()) {
            *c += v;
        }
    }
    for c in &mut centroid {
        *c /= n;
    }
    let extent = present
        .iter()
        .flat_map(|l| {
            l.coords()
                .into_iter()
                .zip(centroid)
                .map(|(v, c)| (v - c).abs())
        })
        .fold(0.0, f64::max);
    let scale = if extent < EXTENT_GUARD { 1.0 } else { extent };

    let landmarks = frame
        .landmarks
        .iter()
        .map(|l| {
            if l.present {
                Landmark::new(
                    (l.x - centroid[0]) / scale,
                    (l.y - centroid[1]) / scale,
                    (l.z - centroid[2]) / scale,
                )
            } else {
                Landmark::ABSENT
            }
        })
        .collect();
    KeypointFrame {
        timestamp_ms: frame.timestamp_ms,
        landmarks,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Featurizer {
    pub window: usize,
    pub landmarks: usize,
}

impl Default for Featurizer {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            landmarks: DEFAULT_LANDMARKS,
        }
    }
}

impl Featurizer {
    pub fn new(window: usize, landmarks: usize) -> Self {
        Self { window, landmarks }
    }

    pub fn feature_dim(&self) -> usize {
        6 * self.landmarks
    }

    pub fn featurize(&self, seq: &KeypointSequence) -> Result<FeatureSequence, FeatureError> {
        if seq.frames.len() != self.window {
            return Err(FeatureError::FrameCount {
                expected: self.window,
                found: seq.frames.len(),
            });
        }
        if let Some((frame, f)) = seq
            .frames
            .iter()
            .enumerate()
            .find(|(_, f)| f.landmarks.len() != self.landmarks)
        {
            return Err(FeatureError::LandmarkCount {
                frame,
                expected: self.landmarks,
                found: f.landmarks.len(),
            });
        }

        let half = 3 * self.landmarks;
        let cols = 2 * half;
        let mut data = vec![0.0; self.window * cols];
        let normalized: Vec<KeypointFrame> = seq.frames.iter().map(normalize_frame).collect();
        for (t, frame) in normalized.iter().enumerate() {
            let row = &mut data[t * cols..(t + 1) * cols];
            for (k, l) in frame.landmarks.iter().enumerate() {
                row[3 * k..3 * k + 3].copy_from_slice(&l.coords());
            }
            if t == 0 {
                continue;
            }
            let prev = &normalized[t - 1];
            for (k, (cur, before)) in frame.landmarks.iter().zip(&prev.landmarks).enumerate() {
                if cur.present && before.present {
                    let base = half + 3 * k;
                    row[base] = cur.x - before.x;
                    row[base + 1] = cur.y - before.y;
                    row[base + 2] = cur.z - before.z;
                }
            }
        }
        Ok(FeatureSequence::from_rows(
            self.window,
            cols,
            data,
            seq.label,
        ))
    }
}

/// Featurizes with the default 30-frame, 44-landmark layout.
pub fn featurize(seq: &KeypointSequence) -> Result<FeatureSequence, FeatureError> {
    Featurizer::default().featurize(seq)
}
