use serde::{Deserialize, Serialize};

/// How the precision/recall curve is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Exact area under the precision envelope at every recall step.
    #[default]
    AllPoint,
    /// Mean envelope precision sampled at recall 0.00, 0.01, ..., 1.00.
    Coco101,
}

/// Average precision of a ranked TP/FP list against `ground_truths` targets.
/// `None` when there is no ground truth.
///
/// The envelope at rank k is the maximum precision at rank k or later, so the
/// curve is non-increasing in recall.
pub fn ap_from_ranked(
    ranked_tp: &[bool],
    ground_truths: usize,
    mode: Interpolation,
) -> Option<f64> {
    if ground_truths == 0 {
        return None;
    }
    let n = ranked_tp.len();
    let mut precision = Vec::with_capacity(n);
    let mut recall = Vec::with_capacity(n);
    let mut tp = 0usize;
    for (k, &hit) in ranked_tp.iter().enumerate() {
        tp += hit as usize;
        precision.push(tp as f64 / (k + 1) as f64);
        recall.push(tp as f64 / ground_truths as f64);
    }
    for k in (0..n.saturating_sub(1)).rev() {
        precision[k] = precision[k].max(precision[k + 1]);
    }

    let ap = match mode {
        Interpolation::AllPoint => {
            let mut area = 0.0;
            let mut prev_recall = 0.0;
            for k in 0..n {
                if ranked_tp[k] {
                    area += (recall[k] - prev_recall) * precision[k];
                    prev_recall = recall[k];
                }
            }
            area
        }
        Interpolation::Coco101 => {
            let mut sum = 0.0;
            let mut k = 0;
            for step in 0..=100 {
                let r = step as f64 / 100.0;
                while k < n && recall[k] < r {
                    k += 1;
                }
                if k < n {
                    sum += precision[k];
                }
            }
            sum / 101.0
        }
    };
    Some(ap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ap(tp: &[bool], g: usize) -> f64 {
        ap_from_ranked(tp, g, Interpolation::AllPoint).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(ap(&[true, true, true], 3), 1.0);
        assert_eq!(ap(&[false], 1), 0.0);
        assert_eq!(ap(&[], 2), 0.0);
        assert!((ap(&[true, false, true], 2) - 5.0 / 6.0).abs() < 1e-15);
        // Envelope lifts rank 1: precisions 0, 1/2 -> envelope 1/2 at recall 1.
        assert!((ap(&[false, true], 1) - 0.5).abs() < 1e-15);
        // Missed ground truth caps recall at 1/2.
        assert!((ap(&[true], 2) - 0.5).abs() < 1e-15);
        assert_eq!(ap_from_ranked(&[true], 0, Interpolation::AllPoint), None);
    }

    #[test]
    fn coco_sampling() {
        let perfect = ap_from_ranked(&[true, true], 2, Interpolation::Coco101).unwrap();
        assert!((perfect - 1.0).abs() < 1e-15);
        // Recall 0.5 reached at precision 1; recall points 0.00..=0.50 are 51 of 101.
        let half = ap_from_ranked(&[true], 2, Interpolation::Coco101).unwrap();
        assert!((half - 51.0 / 101.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn bounded(tp in proptest::collection::vec(any::<bool>(), 0..20), extra in 0usize..5) {
            let g = tp.iter().filter(|&&t| t).count() + extra;
            prop_assume!(g > 0);
            for mode in [Interpolation::AllPoint, Interpolation::Coco101] {
                let v = ap_from_ranked(&tp, g, mode).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&v));
            }
        }

        #[test]
        fn trailing_fp_never_helps(tp in proptest::collection::vec(any::<bool>(), 0..15), extra in 0usize..4) {
            let g = tp.iter().filter(|&&t| t).count() + extra;
            prop_assume!(g > 0);
            let mut longer = tp.clone();
            longer.push(false);
            prop_assert!(ap(&longer, g) <= ap(&tp, g));
        }

        #[test]
        fn leading_tp_never_hurts(tp in proptest::collection::vec(any::<bool>(), 0..15), extra in 0usize..4) {
            let g = tp.iter().filter(|&&t| t).count() + extra;
            prop_assume!(g > 0);
            let mut longer = vec![true];
            longer.extend(&tp);
            prop_assert!(ap(&longer, g + 1) + 1e-12 >= ap(&tp, g));
            if extra > 0 {
                // The new hit recovers a previously missed target.
                prop_assert!(ap(&longer, g) + 1e-12 >= ap(&tp, g));
            }
        }
    }
}
