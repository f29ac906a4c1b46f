use super::{KeypointError, KeypointFrame, KeypointSequence, Landmark};

/// Source frame indices used to build a `target`-frame window from `len`
/// frames.
///
/// With `len >= target`, output slot `i` takes the frame nearest to
/// `i * len / target` (exact halves go to the earlier frame). Shorter inputs
/// are used as-is and padded with their last frame.
pub fn resample_indices(len: usize, target: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    if len < target {
        return (0..target).map(|i| i.min(len - 1)).collect();
    }
    (0..target)
        .map(|i| {
            let scaled = i * len;
            let (q, r) = (scaled / target, scaled % target);
            if 2 * r > target {
                q + 1
            } else {
                q
            }
        })
        .collect()
}

pub fn resample_window(
    frames: &[KeypointFrame],
    target: usize,
) -> Result<KeypointSequence, KeypointError> {
    if frames.is_empty() {
        return Err(KeypointError::EmptyInput(
            "cannot window an empty frame list",
        ));
    }
    if target == 0 {
        return Err(KeypointError::InvalidArgument(
            "window length must be at least 1".into(),
        ));
    }
    let frames = resample_indices(frames.len(), target)
        .into_iter()
        .map(|i| frames[i].clone())
        .collect();
    Ok(KeypointSequence {
        frames,
        label: None,
    })
}

/// Marks landmarks whose summed frame-to-frame displacement is strictly below
/// `motion_threshold` as absent in every frame.
///
/// Displacement is the Euclidean step length in raw coordinates; steps where
/// the landmark is absent on either side count as zero.
pub fn filter_static(seq: &KeypointSequence, motion_threshold: f64) -> KeypointSequence {
    let count = seq.landmark_count();
    let mut travel = vec![0.0; count];
    for pair in seq.frames.windows(2) {
        for (k, (a, b)) in pair[0].landmarks.iter().zip(&pair[1].landmarks).enumerate() {
            if a.present && b.present {
                let (dx, dy, dz) = (b.x - a.x, b.y - a.y, b.z - a.z);
                travel[k] += (dx * dx + dy * dy + dz * dz).sqrt();
            }
        }
    }
    let stationary: Vec<bool> = travel.iter().map(|&d| d < motion_threshold).collect();

    let frames = seq
        .frames
        .iter()
        .map(|frame| KeypointFrame {
            timestamp_ms: frame.timestamp_ms,
            landmarks: frame
                .landmarks
                .iter()
                .zip(&stationary)
                .map(|(l, &drop)| if drop { Landmark::ABSENT } else { *l })
                .collect(),
        })
        .collect();
    KeypointSequence {
        frames,
        label: seq.label,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn frames(n: usize, landmarks: usize) -> Vec<KeypointFrame> {
        (0..n)
            .map(|i| KeypointFrame {
                timestamp_ms: i as u64 * 10,
                landmarks: vec![Landmark::new(i as f64 / n as f64, 0.5, 0.0); landmarks],
            })
            .collect()
    }

    #[test]
    fn identity_when_lengths_match() {
        let input = frames(30, 3);
        let seq = resample_window(&input, 30).unwrap();
        assert_eq!(seq.frames, input);
    }

    #[test]
    fn downsample_ninety_to_thirty() {
        let expected: Vec<usize> = (0..30).map(|i| 3 * i).collect();
        assert_eq!(resample_indices(90, 30), expected);
        let input = frames(90, 1);
        let seq = resample_window(&input, 30).unwrap();
        let stamps: Vec<u64> = seq.frames.iter().map(|f| f.timestamp_ms).collect();
        assert_eq!(
            stamps,
            expected.iter().map(|&i| i as u64 * 10).collect::<Vec<_>>()
        );
    }

    #[test]
    fn short_input_padded_with_last_frame() {
        let idx = resample_indices(10, 30);
        let mut expected: Vec<usize> = (0..10).collect();
        expected.extend(std::iter::repeat_n(9, 20));
        assert_eq!(idx, expected);
    }

    #[test]
    fn nearest_index_ties_go_earlier() {
        // 3 frames into 2 slots: slot 1 sits at 1.5 exactly.
        assert_eq!(resample_indices(3, 2), vec![0, 1]);
        // 5 into 3: 0, 1.67 -> 2, 3.33 -> 3.
        assert_eq!(resample_indices(5, 3), vec![0, 2, 3]);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            resample_window(&[], 30),
            Err(KeypointError::EmptyInput(_))
        ));
    }

    fn stationary_sequence() -> KeypointSequence {
        KeypointSequence {
            frames: (0..30)
                .map(|i| KeypointFrame {
                    timestamp_ms: i,
                    landmarks: vec![Landmark::new(0.4, 0.6, 0.1); 4],
                })
                .collect(),
            label: None,
        }
    }

    #[test]
    fn zero_threshold_keeps_stationary_points() {
        let seq = stationary_sequence();
        assert_eq!(filter_static(&seq, 0.0), seq);
    }

    #[test]
    fn positive_threshold_drops_stationary_points() {
        let filtered = filter_static(&stationary_sequence(), 0.01);
        assert!(filtered
            .frames
            .iter()
            .all(|f| f.landmarks.iter().all(|l| *l == Landmark::ABSENT)));
    }

    #[test]
    fn only_oscillating_landmark_survives() {
        let mut seq = stationary_sequence();
        for (t, frame) in seq.frames.iter_mut().enumerate() {
            let offset = if t % 2 == 0 { 0.1 } else { 0.0 };
            frame.landmarks[2].x = 0.4 + offset;
        }
        // Brute-force travel: 29 steps of 0.1 for landmark 2, zero elsewhere.
        let travel: f64 = seq
            .frames
            .windows(2)
            .map(|w| (w[1].landmarks[2].x - w[0].landmarks[2].x).abs())
            .sum();
        assert!((travel - 2.9).abs() < 1e-9);

        let filtered = filter_static(&seq, 0.01);
        for (orig, frame) in seq.frames.iter().zip(&filtered.frames) {
            assert_eq!(frame.landmarks[2], orig.landmarks[2]);
            for k in [0, 1, 3] {
                assert!(!frame.landmarks[k].present);
            }
        }
    }

    proptest! {
        #[test]
        fn resample_length_is_exact(len in 1usize..200, target in 1usize..64) {
            let idx = resample_indices(len, target);
            prop_assert_eq!(idx.len(), target);
            prop_assert!(idx.iter().all(|&i| i < len));
            prop_assert!(idx.windows(2).all(|w| w[0] <= w[1]));
        }

        #[test]
        fn filter_is_idempotent(
            coords in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0, any::<bool>()), 5 * 6),
            threshold in 0.0f64..0.5,
        ) {
            let seq = KeypointSequence {
                frames: coords
                    .chunks(6)
                    .enumerate()
                    .map(|(t, chunk)| KeypointFrame {
                        timestamp_ms: t as u64,
                        landmarks: chunk
                            .iter()
                            .map(|&(x, y, p)| if p { Landmark::new(x, y, 0.0) } else { Landmark::ABSENT })
                            .collect(),
                    })
                    .collect(),
                label: None,
            };
            let once = filter_static(&seq, threshold);
            prop_assert_eq!(filter_static(&once, threshold), once);
        }
    }
}
