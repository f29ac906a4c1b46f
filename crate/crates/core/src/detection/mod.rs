//! Detection and segmentation evaluation: IoU matching, per-class average
//! precision and mAP at a single IoU threshold.

mod ap;
mod eval;
mod geometry;
mod io;
mod matching;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ap::{ap_from_ranked, Interpolation};
pub use eval::{average_precision, evaluate, map_at_50, ClassEval, EvalConfig, EvalResult};
pub use geometry::{iou, BBox, RleMask};
pub use io::{
    load_class_map, load_detections, load_ground_truth, read_detections, read_ground_truth,
    write_detections, write_ground_truth, ClassMap, KITCHEN_CLASSES,
};
pub use matching::{match_detections, MatchOutcome, DEFAULT_IOU_THRESHOLD};

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("invalid box {0:?}: need finite x_min < x_max and y_min < y_max")]
    InvalidBox([f64; 4]),
    #[error("invalid mask {0}")]
    InvalidMask(String),
    #[error("score {0} outside [0, 1]")]
    InvalidScore(f64),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("class id {0} is not in the class map")]
    UnknownClass(usize),
    #[error("class map: {0}")]
    ClassMap(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One scored detection produced by an external detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub image_id: String,
    pub class_id: usize,
    pub score: f64,
    #[serde(rename = "box")]
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<RleMask>,
}

/// One labeled object instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthItem {
    pub image_id: String,
    pub class_id: usize,
    #[serde(rename = "box")]
    pub bbox: BBox,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<RleMask>,
}
