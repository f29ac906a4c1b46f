//! Timestamped hand and arm landmark frames.
//!
//! A frame carries a fixed-length landmark set: 21 points per hand (left hand
//! first, then right) followed by two arm anchor points (left and right elbow).
//! Absent landmarks are stored zero-filled with `present = false`.

mod ingest;
mod synth;
mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest_keypoints, read_keypoints, write_keypoints, KeypointReader};
pub use synth::{synthesize_motion, synthesize_motion_with_landmarks, FRAME_INTERVAL_MS};
pub use window::{filter_static, resample_indices, resample_window};

/// Landmarks per hand.
pub const HAND_LANDMARKS: usize = 21;
/// Default landmark-set size: two hands plus two arm anchors.
pub const DEFAULT_LANDMARKS: usize = 2 * HAND_LANDMARKS + 2;
/// Default number of frames per classified sequence.
pub const DEFAULT_WINDOW: usize = 30;

#[derive(Debug, Error)]
pub enum KeypointError {
    #[error("line {line}: field `{field}`: {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: timestamp {found} ms does not increase past {previous} ms")]
    Ordering {
        line: usize,
        previous: u64,
        found: u64,
    },
    #[error("line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// One tracked point. Coordinates are normalized image coordinates for `x`
/// and `y` and relative depth for `z`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Landmark {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub present: bool,
}

impl Landmark {
    pub const ABSENT: Landmark = Landmark {
        x: 0.0,
        y: 0.0,
        z: 0.0,
        present: false,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            x,
            y,
            z,
            present: true,
        }
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    /// Checks the stored-landmark invariants: absent points are exactly zero,
    /// present points have `x` and `y` in `[0, 1]`.
    pub fn is_valid(&self) -> bool {
        if self.present {
            (0.0..=1.0).contains(&self.x) && (0.0..=1.0).contains(&self.y) && self.z.is_finite()
        } else {
            self.x == 0.0 && self.y == 0.0 && self.z == 0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointFrame {
    pub timestamp_ms: u64,
    pub landmarks: Vec<Landmark>,
}

impl KeypointFrame {
    pub fn present_count(&self) -> usize {
        self.landmarks.iter().filter(|l| l.present).count()
    }
}

/// A fixed-length window of frames, optionally labeled.
#[derive(Debug, Clone, PartialEq)]
pub struct KeypointSequence {
    pub frames: Vec<KeypointFrame>,
    pub label: Option<ActionLabel>,
}

impl KeypointSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn landmark_count(&self) -> usize {
        self.frames.first().map_or(0, |f| f.landmarks.len())
    }
}

/// The eight hand-action classes. Discriminants are the stable class indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionLabel {
    Chopping = 0,
    Cutting = 1,
    Grating = 2,
    Kneading = 3,
    Pouring = 4,
    Spreading = 5,
    Stirring = 6,
    Whisking = 7,
}

impl ActionLabel {
    pub const COUNT: usize = 8;

    pub const ALL: [ActionLabel; Self::COUNT] = [
        ActionLabel::Chopping,
        ActionLabel::Cutting,
        ActionLabel::Grating,
        ActionLabel::Kneading,
        ActionLabel::Pouring,
        ActionLabel::Spreading,
        ActionLabel::Stirring,
        ActionLabel::Whisking,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionLabel::Chopping => "Chopping",
            ActionLabel::Cutting => "Cutting",
            ActionLabel::Grating => "Grating",
            ActionLabel::Kneading => "Kneading",
            ActionLabel::Pouring => "Pouring",
            ActionLabel::Spreading => "Spreading",
            ActionLabel::Stirring => "Stirring",
            ActionLabel::Whisking => "Whisking",
        }
    }
}

impl fmt::Display for ActionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActionLabel {
    type Err = KeypointError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let trimmed = s.trim();
        if let Ok(index) = trimmed.parse::<usize>() {
            return Self::from_index(index)
                .ok_or_else(|| KeypointError::InvalidArgument(format!("no action class {index}")));
        }
        Self::ALL
            .iter()
            .copied()
            .find(|label| label.name().eq_ignore_ascii_case(trimmed))
            .ok_or_else(|| KeypointError::InvalidArgument(format!("unknown action `{trimmed}`")))
    }
}
