use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    ap_from_ranked, match_detections, ClassMap, DetectionError, DetectionEvent, GroundTruthItem,
    Interpolation, DEFAULT_IOU_THRESHOLD,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub iou_threshold: f64,
    /// Detections scoring at least this count toward TP/FP/precision/recall.
    pub score_cutoff: f64,
    pub interpolation: Interpolation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            iou_threshold: DEFAULT_IOU_THRESHOLD,
            score_cutoff: 0.5,
            interpolation: Interpolation::AllPoint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEval {
    pub class_id: usize,
    pub name: String,
    pub ground_truths: usize,
    pub detections: usize,
    /// `None` when the class has no ground truth and is left out of the mean.
    pub ap: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub config: EvalConfig,
    pub classes: Vec<ClassEval>,
    /// Mean AP over classes with at least one ground truth.
    pub map: f64,
    pub evaluated_classes: usize,
    pub skipped_classes: Vec<usize>,
}

/// AP of single-class detections; `None` without ground truth.
pub fn average_precision(
    detections: &[DetectionEvent],
    ground_truth: &[GroundTruthItem],
    iou_threshold: f64,
) -> Option<f64> {
    let outcome = match_detections(detections, ground_truth, iou_threshold);
    ap_from_ranked(
        &outcome.ranked_tp(),
        ground_truth.len(),
        Interpolation::AllPoint,
    )
}

/// mAP at IoU 0.5 with all-point interpolation and a 0.5 score cutoff.
pub fn map_at_50(
    detections: &[DetectionEvent],
    ground_truth: &[GroundTruthItem],
    classes: &ClassMap,
) -> Result<EvalResult, DetectionError> {
    evaluate(detections, ground_truth, classes, &EvalConfig::default())
}

pub fn evaluate(
    detections: &[DetectionEvent],
    ground_truth: &[GroundTruthItem],
    classes: &ClassMap,
    config: &EvalConfig,
) -> Result<EvalResult, DetectionError> {
    if classes.is_empty() {
        return Err(DetectionError::InvalidArgument(
            "class list is empty".into(),
        ));
    }
    if !(0.0..=1.0).contains(&config.iou_threshold) {
        return Err(DetectionError::InvalidArgument(format!(
            "IoU threshold {} outside [0, 1]",
            config.iou_threshold
        )));
    }
    let mut dets_by_class = vec![Vec::new(); classes.len()];
    for d in detections {
        dets_by_class
            .get_mut(d.class_id)
            .ok_or(DetectionError::UnknownClass(d.class_id))?
            .push(d.clone());
    }
    let mut gts_by_class = vec![Vec::new(); classes.len()];
    for g in ground_truth {
        gts_by_class
            .get_mut(g.class_id)
            .ok_or(DetectionError::UnknownClass(g.class_id))?
            .push(g.clone());
    }

    let per_class: Vec<ClassEval> = (0..classes.len())
        .into_par_iter()
        .map(|c| {
            let (dets, gts) = (&dets_by_class[c], &gts_by_class[c]);
            let outcome = match_detections(dets, gts, config.iou_threshold);
            let ap = ap_from_ranked(&outcome.ranked_tp(), gts.len(), config.interpolation);
            let (mut tp, mut fp) = (0, 0);
            for (i, d) in dets.iter().enumerate() {
                if d.score >= config.score_cutoff {
                    if outcome.is_tp(i) {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            let ratio = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
            ClassEval {
                class_id: c,
                name: classes.name(c).to_string(),
                ground_truths: gts.len(),
                detections: dets.len(),
                ap,
                tp,
                fp,
                fn_: gts.len() - tp,
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, gts.len()),
            }
        })
        .collect();

    let aps: Vec<f64> = per_class.iter().filter_map(|c| c.ap).collect();
    if aps.is_empty() {
        return Err(DetectionError::InvalidArgument(
            "no class has ground truth".into(),
        ));
    }
    let skipped_classes = per_class
        .iter()
        .filter(|c| c.ap.is_none())
        .map(|c| c.class_id)
        .collect();
    Ok(EvalResult {
        config: *config,
        map: aps.iter().sum::<f64>() / aps.len() as f64,
        evaluated_classes: aps.len(),
        skipped_classes,
        classes: per_class,
    })
}

impl EvalResult {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let rule = "-".repeat(74);
        let _ = writeln!(
            out,
            "{:<16}{:>8}{:>11}{:>9}{:>7}{:>7}{:>7}{:>9}",
            "Class", "AP", "Precision", "Recall", "TP", "FP", "FN", "GT"
        );
        let _ = writeln!(out, "{rule}");
        for c in &self.classes {
            match c.ap {
                Some(ap) => {
                    let _ = writeln!(
                        out,
                        "{:<16}{:>8.3}{:>11.3}{:>9.3}{:>7}{:>7}{:>7}{:>9}",
                        c.name, ap, c.precision, c.recall, c.tp, c.fp, c.fn_, c.ground_truths
                    );
                }
                None => {
                    let _ = writeln!(
                        out,
                        "{:<16}{:>8}  skipped: no ground truth ({} detections)",
                        c.name, "-", c.detections
                    );
                }
            }
        }
        let _ = writeln!(out, "{rule}");
        let _ = writeln!(
            out,
            "mAP@{:.2}: {:.3} over {} of {} classes",
            self.config.iou_threshold,
            self.map,
            self.evaluated_classes,
            self.classes.len()
        );
        out
    }
}
