use super::{geometry, DetectionEvent, GroundTruthItem};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

/// Outcome of greedy matching for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    /// Detection indices by descending score; equal scores keep input order.
    pub ranking: Vec<usize>,
    /// Per detection (input order): matched ground-truth index, if any.
    pub matched_gt: Vec<Option<usize>>,
    /// Per ground truth (input order).
    pub gt_matched: Vec<bool>,
}

impl MatchOutcome {
    /// TP flags in ranking order.
    pub fn ranked_tp(&self) -> Vec<bool> {
        self.ranking
            .iter()
            .map(|&d| self.matched_gt[d].is_some())
            .collect()
    }

    pub fn is_tp(&self, detection: usize) -> bool {
        self.matched_gt[detection].is_some()
    }
}

/// Greedy matching of single-class detections to ground truth.
///
/// In ranking order each detection takes the unmatched same-image ground truth
/// with the highest IoU, provided that IoU is at least `iou_threshold`; equal
/// IoUs go to the earlier ground truth.
pub fn match_detections(
    detections: &[DetectionEvent],
    ground_truth: &[GroundTruthItem],
    iou_threshold: f64,
) -> MatchOutcome {
    let mut ranking: Vec<usize> = (0..detections.len()).collect();
    ranking.sort_by(|&a, &b| detections[b].score.total_cmp(&detections[a].score));

    let mut matched_gt = vec![None; detections.len()];
    let mut gt_matched = vec![false; ground_truth.len()];
    for &d in &ranking {
        let det = &detections[d];
        let mut best: Option<(usize, f64)> = None;
        for (g, gt) in ground_truth.iter().enumerate() {
            if gt_matched[g] || gt.image_id != det.image_id {
                continue;
            }
            let overlap = geometry::iou(&det.bbox, det.mask.as_ref(), &gt.bbox, gt.mask.as_ref());
            if overlap >= iou_threshold && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((g, overlap));
            }
        }
        if let Some((g, _)) = best {
            gt_matched[g] = true;
            matched_gt[d] = Some(g);
        }
    }
    MatchOutcome {
        ranking,
        matched_gt,
        gt_matched,
    }
}
