//! On-disk labeled keypoint datasets.
//!
//! A dataset directory holds `keypoints.jsonl`, every sequence's frames in order
//! as one stream, and `labels.csv` with one row per sequence:
//!
//! ```text
//! sequence_id,label,label_index,start_ms,frames
//! seq0000,Chopping,0,0,30
//! seq0001,Chopping,0,3000,30
//! ```
//!
//! Each sequence is shifted to start where the previous one ended so that the
//! combined stream keeps strictly increasing timestamps.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keypoints::{
    ingest_keypoints, synthesize_motion_with_landmarks, write_keypoints, ActionLabel,
    KeypointError, KeypointFrame, KeypointSequence, FRAME_INTERVAL_MS,
};

pub const KEYPOINTS_FILE: &str = "keypoints.jsonl";
pub const LABELS_FILE: &str = "labels.csv";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{file}: {source}")]
    Keypoints {
        file: String,
        #[source]
        source: KeypointError,
    },
    #[error("{file}: {source}")]
    Labels {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("dataset is inconsistent: {0}")]
    Inconsistent(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRow {
    pub sequence_id: String,
    pub label: ActionLabel,
    pub label_index: usize,
    pub start_ms: u64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub id: String,
    pub sequence: KeypointSequence,
}

/// `per_class` clips for each class, class by class, each `frames` long.
pub fn synthesize_dataset(
    classes: &[ActionLabel],
    per_class: usize,
    seed: u64,
    frames: usize,
    landmarks: usize,
) -> Result<Vec<LabeledSequence>, DatasetError> {
    if per_class == 0 {
        return Err(DatasetError::InvalidArgument(
            "per-class count must be at least 1".into(),
        ));
    }
    if classes.is_empty() {
        return Err(DatasetError::InvalidArgument("no classes selected".into()));
    }
    let mut out = Vec::with_capacity(classes.len() * per_class);
    for &label in classes {
        for k in 0..per_class {
            let clip_seed = seed.wrapping_mul(1 << 20).wrapping_add(k as u64);
            let sequence = synthesize_motion_with_landmarks(label, clip_seed, frames, landmarks)
                .map_err(|source| DatasetError::Keypoints {
                    file: "synthesis".into(),
                    source,
                })?;
            out.push(LabeledSequence {
                id: format!("seq{:04}", out.len()),
                sequence,
            });
        }
    }
    Ok(out)
}

/// Joins sequences into one stream, each shifted to start one frame interval
/// after the previous one ends. Also returns each sequence's start time.
pub fn concat_stream(
    data: &[LabeledSequence],
) -> Result<(Vec<KeypointFrame>, Vec<u64>), DatasetError> {
    let mut frames = Vec::with_capacity(data.iter().map(|d| d.sequence.len()).sum());
    let mut starts = Vec::with_capacity(data.len());
    let mut offset = 0u64;
    for item in data {
        let (Some(first), Some(last)) = (item.sequence.frames.first(), item.sequence.frames.last())
        else {
            return Err(DatasetError::InvalidArgument(format!(
                "sequence {} has no frames",
                item.id
            )));
        };
        starts.push(offset);
        frames.extend(item.sequence.frames.iter().map(|f| KeypointFrame {
            timestamp_ms: f.timestamp_ms - first.timestamp_ms + offset,
            landmarks: f.landmarks.clone(),
        }));
        offset += last.timestamp_ms - first.timestamp_ms + FRAME_INTERVAL_MS;
    }
    Ok((frames, starts))
}

pub fn write_dataset(dir: &Path, data: &[LabeledSequence]) -> Result<(), DatasetError> {
    let labels: Vec<ActionLabel> = data
        .iter()
        .map(|item| {
            item.sequence.label.ok_or_else(|| {
                DatasetError::InvalidArgument(format!("sequence {} has no label", item.id))
            })
        })
        .collect::<Result<_, _>>()?;
    let (frames, starts) = concat_stream(data)?;
    std::fs::create_dir_all(dir)?;
    let mut keypoints = BufWriter::new(File::create(dir.join(KEYPOINTS_FILE))?);
    write_keypoints(&mut keypoints, &frames)?;
    keypoints.flush()?;

    let labels_path = dir.join(LABELS_FILE);
    let csv_err = |source| DatasetError::Labels {
        file: labels_path.display().to_string(),
        source,
    };
    let mut writer = csv::Writer::from_path(&labels_path).map_err(csv_err)?;
    for ((item, start_ms), label) in data.iter().zip(starts).zip(labels) {
        writer
            .serialize(LabelRow {
                sequence_id: item.id.clone(),
                label,
                label_index: label.index(),
                start_ms,
                frames: item.sequence.len(),
            })
            .map_err(csv_err)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_labels(path: &Path) -> Result<Vec<LabelRow>, DatasetError> {
    let csv_err = |source| DatasetError::Labels {
        file: path.display().to_string(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let rows: Vec<LabelRow> = reader
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(csv_err)?;
    for row in &rows {
        if row.label.index() != row.label_index {
            return Err(DatasetError::Inconsistent(format!(
                "{}: label {} has index {}, file says {}",
                row.sequence_id,
                row.label,
                row.label.index(),
                row.label_index
            )));
        }
    }
    Ok(rows)
}

/// Reads a dataset directory back into labeled sequences.
pub fn read_dataset(dir: &Path, landmarks: usize) -> Result<Vec<LabeledSequence>, DatasetError> {
    let rows = read_labels(&dir.join(LABELS_FILE))?;
    let kp_path = dir.join(KEYPOINTS_FILE);
    let kp_err = |source| DatasetError::Keypoints {
        file: kp_path.display().to_string(),
        source,
    };
    let mut frames = ingest_keypoints(BufReader::new(File::open(&kp_path)?), landmarks);

    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let seq_frames = frames
            .by_ref()
            .take(row.frames)
            .collect::<Result<Vec<_>, _>>()
            .map_err(kp_err)?;
        if seq_frames.len() != row.frames {
            return Err(DatasetError::Inconsistent(format!(
                "{}: expected {} frames, keypoint file ended after {}",
                row.sequence_id,
                row.frames,
                seq_frames.len()
            )));
        }
        if seq_frames[0].timestamp_ms != row.start_ms {
            return Err(DatasetError::Inconsistent(format!(
                "{}: starts at {} ms, labels say {} ms",
                row.sequence_id, seq_frames[0].timestamp_ms, row.start_ms
            )));
        }
        out.push(LabeledSequence {
            id: row.sequence_id,
            sequence: KeypointSequence {
                frames: seq_frames,
                label: Some(row.label),
            },
        });
    }
    if let Some(extra) = frames.next() {
        extra.map_err(kp_err)?;
        return Err(DatasetError::Inconsistent(
            "keypoint file has frames beyond the labeled sequences".into(),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keypoints::DEFAULT_LANDMARKS;

    #[test]
    fn counts_per_class() {
        let data = synthesize_dataset(&ActionLabel::ALL, 20, 1, 30, DEFAULT_LANDMARKS).unwrap();
        assert_eq!(data.len(), 160);
        for label in ActionLabel::ALL {
            let n = data
                .iter()
                .filter(|d| d.sequence.label == Some(label))
                .count();
            assert_eq!(n, 20);
        }
        assert!(matches!(
            synthesize_dataset(&ActionLabel::ALL, 0, 1, 30, DEFAULT_LANDMARKS),
            Err(DatasetError::InvalidArgument(_))
        ));
    }

    #[test]
    fn round_trip_through_directory() {
        let dir = tempfile::tempdir().unwrap();
        let data = synthesize_dataset(
            &[ActionLabel::Pouring, ActionLabel::Whisking],
            3,
            9,
            12,
            DEFAULT_LANDMARKS,
        )
        .unwrap();
        write_dataset(dir.path(), &data).unwrap();
        let back = read_dataset(dir.path(), DEFAULT_LANDMARKS).unwrap();
        assert_eq!(back.len(), 6);
        for (i, (a, b)) in data.iter().zip(&back).enumerate() {
            assert_eq!(a.id, b.id);
            assert_eq!(b.sequence.frames[0].timestamp_ms, i as u64 * 1200);
            assert_eq!(a.sequence.label, b.sequence.label);
            for (fa, fb) in a.sequence.frames.iter().zip(&b.sequence.frames) {
                assert_eq!(fa.landmarks, fb.landmarks);
            }
        }
        let labels = std::fs::read_to_string(dir.path().join(LABELS_FILE)).unwrap();
        assert!(labels.starts_with(
            "sequence_id,label,label_index,start_ms,frames\nseq0000,Pouring,4,0,12\n"
        ));
    }

    #[test]
    fn truncated_keypoints_detected() {
        let dir = tempfile::tempdir().unwrap();
        let data = synthesize_dataset(&[ActionLabel::Cutting], 2, 0, 5, DEFAULT_LANDMARKS).unwrap();
        write_dataset(dir.path(), &data).unwrap();
        let path = dir.path().join(KEYPOINTS_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        let kept: Vec<&str> = text.lines().take(7).collect();
        std::fs::write(&path, kept.join("\n")).unwrap();
        assert!(matches!(
            read_dataset(dir.path(), DEFAULT_LANDMARKS),
            Err(DatasetError::Inconsistent(_))
        ));
    }
}
