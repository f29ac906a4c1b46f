//! Deterministic parametric motion generator standing in for recorded clips.
//!
//! Every clip has a resting left hand, an active right hand and two elbow
//! anchors that partially follow their wrists. The class decides how the active
//! hand moves over the clip (`u` runs from 0 to 1):
//!
//! | class     | motion of the right wrist (grip differs per class)        |
//! |-----------|-----------------------------------------------------------|
//! | Chopping  | vertical oscillation, 3 cycles, amplitude ~0.06           |
//! | Cutting   | horizontal back-and-forth, 2 cycles, amplitude ~0.06      |
//! | Grating   | diagonal oscillation, 4 cycles, amplitude ~0.05           |
//! | Kneading  | both hands squeeze toward each other, 2 cycles, fingers curl |
//! | Pouring   | monotone wrist rotation of ~70 degrees with a slight lift |
//! | Spreading | single slow left-to-right sweep with a shallow wobble     |
//! | Stirring  | circular orbit, 2 cycles, radius ~0.05                    |
//! | Whisking  | small fast orbit, 5 cycles, radius ~0.025                 |
//!
//! The seed jitters rest positions, amplitude, frequency, phase, hand size and
//! adds small per-coordinate noise.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    ActionLabel, KeypointError, KeypointFrame, KeypointSequence, Landmark, DEFAULT_LANDMARKS,
    HAND_LANDMARKS,
};

/// Spacing between synthesized frames; 30 frames span a 3-second clip.
pub const FRAME_INTERVAL_MS: u64 = 100;

const NOISE: f64 = 0.002;

// Finger directions relative to the hand axis (thumb, index, middle, ring, pinky)
// and joint distances from the wrist as a fraction of hand size.
const FINGER_ANGLES: [f64; 5] = [-1.0, -0.4, 0.0, 0.3, 0.6];
const FINGER_JOINTS: [[f64; 4]; 5] = [
    [0.25, 0.45, 0.6, 0.72],
    [0.5, 0.7, 0.82, 0.92],
    [0.5, 0.74, 0.88, 1.0],
    [0.48, 0.7, 0.83, 0.93],
    [0.44, 0.6, 0.7, 0.78],
];

#[derive(Debug, Clone, Copy)]
struct HandPose {
    wrist: (f64, f64),
    /// Radians; 0 points the fingers up the image.
    angle: f64,
    /// 0 = open hand, 1 = fist.
    curl: f64,
    size: f64,
}

impl HandPose {
    fn landmarks(&self, mirror: bool, out: &mut Vec<Landmark>) {
        let (wx, wy) = self.wrist;
        out.push(Landmark::new(wx, wy, 0.0));
        for (finger, joints) in FINGER_JOINTS.iter().enumerate() {
            let spread = if mirror {
                -FINGER_ANGLES[finger]
            } else {
                FINGER_ANGLES[finger]
            };
            let theta = self.angle + spread * 0.5;
            let (dx, dy) = (theta.sin(), -theta.cos());
            for (j, &reach) in joints.iter().enumerate() {
                // Distal joints fold back toward the palm as the hand curls.
                let fold = 1.0 - self.curl * 0.15 * j as f64;
                let r = reach * fold * self.size;
                out.push(Landmark::new(
                    wx + dx * r,
                    wy + dy * r,
                    -0.01 * (j as f64 + 1.0) * (1.0 + self.curl),
                ));
            }
        }
    }
}

struct Jitter {
    amplitude: f64,
    cycles: f64,
    phase: f64,
    left_rest: (f64, f64),
    right_rest: (f64, f64),
    size: f64,
}

impl Jitter {
    fn draw(rng: &mut ChaCha8Rng) -> Self {
        Self {
            amplitude: rng.gen_range(0.85..1.15),
            cycles: rng.gen_range(0.9..1.1),
            phase: rng.gen_range(0.0..TAU),
            left_rest: (rng.gen_range(0.30..0.38), rng.gen_range(0.55..0.62)),
            right_rest: (rng.gen_range(0.60..0.66), rng.gen_range(0.52..0.58)),
            size: rng.gen_range(0.14..0.17),
        }
    }
}

/// Resting orientation and curl of the active hand; each tool has its own grip.
fn grip(label: ActionLabel) -> (f64, f64) {
    match label {
        ActionLabel::Chopping => (-1.4, 0.9),
        ActionLabel::Cutting => (-0.5, 0.1),
        ActionLabel::Grating => (0.4, 0.9),
        ActionLabel::Kneading => (1.3, 0.1),
        ActionLabel::Pouring => (-1.4, 0.1),
        ActionLabel::Spreading => (-0.5, 0.9),
        ActionLabel::Stirring => (1.3, 0.9),
        ActionLabel::Whisking => (0.4, 0.1),
    }
}

fn poses(label: ActionLabel, u: f64, j: &Jitter) -> (HandPose, HandPose) {
    let mut left = HandPose {
        wrist: j.left_rest,
        angle: 0.3,
        curl: 0.2,
        size: j.size,
    };
    let mut right = HandPose {
        wrist: j.right_rest,
        angle: -0.3,
        curl: 0.4,
        size: j.size,
    };
    let wave = |cycles: f64| (TAU * cycles * j.cycles * u + j.phase).sin();
    let wave_cos = |cycles: f64| (TAU * cycles * j.cycles * u + j.phase).cos();
    let a = j.amplitude;

    let (angle, curl) = grip(label);
    right.angle = angle;
    right.curl = curl;
    match label {
        ActionLabel::Chopping => {
            right.wrist.1 += 0.06 * a * wave(3.0);
        }
        ActionLabel::Cutting => {
            right.wrist.0 += 0.06 * a * wave(2.0);
        }
        ActionLabel::Grating => {
            let s = 0.05 * a * wave(4.0);
            right.wrist.0 += s * 0.7;
            right.wrist.1 += s * 0.7;
        }
        ActionLabel::Kneading => {
            let s = 0.04 * a * wave(2.0);
            left.wrist.0 += s;
            right.wrist.0 -= s;
            let squeeze = curl + 0.4 * wave(2.0);
            left.curl = squeeze;
            right.curl = squeeze;
        }
        ActionLabel::Pouring => {
            let ease = u * u * (3.0 - 2.0 * u);
            right.angle = angle + 1.2 * a * ease;
            right.wrist.1 -= 0.03 * ease;
        }
        ActionLabel::Spreading => {
            right.wrist.0 += 0.08 * a * (2.0 * u - 1.0);
            right.wrist.1 += 0.01 * wave(1.0);
        }
        ActionLabel::Stirring => {
            right.wrist.0 += 0.05 * a * wave_cos(2.0);
            right.wrist.1 += 0.05 * a * wave(2.0);
        }
        ActionLabel::Whisking => {
            right.wrist.0 += 0.025 * a * wave_cos(5.0);
            right.wrist.1 += 0.025 * a * wave(5.0);
        }
    }
    (left, right)
}

fn elbow(pose: &HandPose, rest: (f64, f64)) -> Landmark {
    let follow = 0.4;
    Landmark::new(
        rest.0 + follow * (pose.wrist.0 - rest.0),
        rest.1 + 0.25 + follow * (pose.wrist.1 - rest.1),
        0.05,
    )
}

fn seed_for(label: ActionLabel, seed: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (label.index() as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03)
}

/// Generates a clip with the default 44-landmark set.
pub fn synthesize_motion(
    label: ActionLabel,
    seed: u64,
    frames: usize,
) -> Result<KeypointSequence, KeypointError> {
    synthesize_motion_with_landmarks(label, seed, frames, DEFAULT_LANDMARKS)
}

/// Generates a clip with `landmarks` points per frame. Sets smaller than the
/// default keep the leading points; larger sets are padded with absent points.
pub fn synthesize_motion_with_landmarks(
    label: ActionLabel,
    seed: u64,
    frames: usize,
    landmarks: usize,
) -> Result<KeypointSequence, KeypointError> {
    if frames < 2 {
        return Err(KeypointError::InvalidArgument(format!(
            "a synthetic clip needs at least 2 frames, got {frames}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed_for(label, seed));
    let jitter = Jitter::draw(&mut rng);

    let mut out = Vec::with_capacity(frames);
    for t in 0..frames {
        let u = t as f64 / (frames - 1) as f64;
        let (left, right) = poses(label, u, &jitter);
        let mut points = Vec::with_capacity(DEFAULT_LANDMARKS.max(landmarks));
        left.landmarks(true, &mut points);
        right.landmarks(false, &mut points);
        debug_assert_eq!(points.len(), 2 * HAND_LANDMARKS);
        points.push(elbow(&left, jitter.left_rest));
        points.push(elbow(&right, jitter.right_rest));
        for p in &mut points {
            p.x = (p.x + rng.gen_range(-NOISE..NOISE)).clamp(0.0, 1.0);
            p.y = (p.y + rng.gen_range(-NOISE..NOISE)).clamp(0.0, 1.0);
            p.z += rng.gen_range(-NOISE..NOISE);
        }
        points.resize(landmarks, Landmark::ABSENT);
        out.push(KeypointFrame {
            timestamp_ms: t as u64 * FRAME_INTERVAL_MS,
            landmarks: points,
        });
    }
    Ok(KeypointSequence {
        frames: out,
        label: Some(label),
    })
}
