use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DetectionError;

/// Axis-aligned box `(x_min, y_min, x_max, y_max)` with `x_min < x_max` and
/// `y_min < y_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, DetectionError> {
        let finite = [x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || y_min >= y_max {
            return Err(DetectionError::InvalidBox([x_min, y_min, x_max, y_max]));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn coords(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min) * (self.y_max - self.y_min)
    }

    pub fn iou(&self, other: &BBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            return 0.0;
        }
        let inter = w * h;
        inter / (self.area() + other.area() - inter)
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = DetectionError;

    fn try_from(c: [f64; 4]) -> Result<Self, Self::Error> {
        BBox::new(c[0], c[1], c[2], c[3])
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        b.coords()
    }
}

/// Run-length encoded binary bitmap, text form `WxH:r0,r1,...`.
///
/// Pixels are taken in row-major order. Runs alternate background and
/// foreground starting with background (a leading 0 run is allowed) and sum to
/// `W * H`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleMask {
    width: u32,
    height: u32,
    runs: Vec<u64>,
}

impl RleMask {
    pub fn new(width: u32, height: u32, runs: Vec<u64>) -> Result<Self, DetectionError> {
        let total: u64 = runs.iter().sum();
        let expected = width as u64 * height as u64;
        if total != expected {
            return Err(DetectionError::InvalidMask(format!(
                "runs cover {total} pixels, bitmap has {expected}"
            )));
        }
        Ok(Self {
            width,
            height,
            runs,
        })
    }

    pub fn from_bitmap(width: u32, height: u32, pixels: &[bool]) -> Result<Self, DetectionError> {
        if pixels.len() as u64 != width as u64 * height as u64 {
            return Err(DetectionError::InvalidMask(format!(
                "{} pixels for a {width}x{height} bitmap",
                pixels.len()
            )));
        }
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0u64;
        for &p in pixels {
            if p == current {
                len += 1;
            } else {
                runs.push(len);
                current = p;
                len = 1;
            }
        }
        runs.push(len);
        Self::new(width, height, runs)
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Foreground pixel ranges `[start, end)` in row-major order.
    fn spans(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::with_capacity(self.runs.len() / 2 + 1);
        let mut pos = 0;
        for (i, &r) in self.runs.iter().enumerate() {
            if i % 2 == 1 && r > 0 {
                out.push((pos, pos + r));
            }
            pos += r;
        }
        out
    }

    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).sum()
    }

    /// `None` when the bitmaps have different dimensions. Two empty masks
    /// have IoU 0.
    pub fn iou(&self, other: &RleMask) -> Option<f64> {
        if self.dimensions() != other.dimensions() {
            return None;
        }
        let (a, b) = (self.spans(), other.spans());
        let (mut i, mut j, mut inter) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if hi > lo {
                inter += hi - lo;
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        let union = self.area() + other.area() - inter;
        Some(if union == 0 {
            0.0
        } else {
            inter as f64 / union as f64
        })
    }
}

impl fmt::Display for RleMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}:", self.width, self.height)?;
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl FromStr for RleMask {
    type Err = DetectionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| DetectionError::InvalidMask(format!("`{s}`: {why}"));
        let (dims, runs) = s.split_once(':').ok_or_else(|| bad("missing `:`"))?;
        let (w, h) = dims
            .split_once('x')
            .ok_or_else(|| bad("dimensions must be WxH"))?;
        let width: u32 = w.trim().parse().map_err(|_| bad("bad width"))?;
        let height: u32 = h.trim().parse().map_err(|_| bad("bad height"))?;
        let runs = if runs.trim().is_empty() {
            Vec::new()
        } else {
            runs.split(',')
                .map(|r| r.trim().parse::<u64>().map_err(|_| bad("bad run length")))
                .collect::<Result<Vec<_>, _>>()?
        };
        RleMask::new(width, height, runs)
    }
}

impl Serialize for RleMask {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for RleMask {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Overlap of two regions: mask IoU when both carry masks of equal size,
/// box IoU otherwise.
pub fn iou(a: &BBox, a_mask: Option<&RleMask>, b: &BBox, b_mask: Option<&RleMask>) -> f64 {
    match (a_mask, b_mask) {
        (Some(ma), Some(mb)) => ma.iou(mb).unwrap_or_else(|| a.iou(b)),
        _ => a.iou(b),
    }
}
