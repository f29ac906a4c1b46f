use std::io::{BufRead, Write};

use serde_json::{json, Map, Value};

use super::{KeypointError, KeypointFrame, Landmark};

/// Lazily parses keypoint JSONL, one frame per line.
///
/// Blank lines are skipped. Each record must carry `t_ms` (non-negative
/// integer) and exactly `landmarks` entries. Timestamps must strictly
/// increase; the reader stops yielding after the first error.
pub struct KeypointReader<R> {
    input: R,
    landmarks: usize,
    line: usize,
    last_timestamp: Option<u64>,
    buf: String,
    failed: bool,
}

impl<R: BufRead> KeypointReader<R> {
    pub fn new(input: R, landmarks: usize) -> Self {
        Self {
            input,
            landmarks,
            line: 0,
            last_timestamp: None,
            buf: String::new(),
            failed: false,
        }
    }

    fn next_frame(&mut self) -> Option<Result<KeypointFrame, KeypointError>> {
        loop {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(source) => {
                    return Some(Err(KeypointError::Io {
                        line: self.line + 1,
                        source,
                    }))
                }
            }
            self.line += 1;
            let trimmed = self.buf.trim();
            if trimmed.is_empty() {
                continue;
            }
            let frame = match parse_frame(trimmed, self.line, self.landmarks) {
                Ok(frame) => frame,
                Err(err) => return Some(Err(err)),
            };
            if let Some(previous) = self.last_timestamp {
                if frame.timestamp_ms <= previous {
                    return Some(Err(KeypointError::Ordering {
                        line: self.line,
                        previous,
                        found: frame.timestamp_ms,
                    }));
                }
            }
            self.last_timestamp = Some(frame.timestamp_ms);
            return Some(Ok(frame));
        }
    }
}

impl<R: BufRead> Iterator for KeypointReader<R> {
    type Item = Result<KeypointFrame, KeypointError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.next_frame();
        if matches!(item, Some(Err(_))) {
            self.failed = true;
        }
        item
    }
}

pub fn ingest_keypoints<R: BufRead>(input: R, landmarks: usize) -> KeypointReader<R> {
    KeypointReader::new(input, landmarks)
}

/// Reads a whole stream eagerly.
pub fn read_keypoints<R: BufRead>(
    input: R,
    landmarks: usize,
) -> Result<Vec<KeypointFrame>, KeypointError> {
    ingest_keypoints(input, landmarks).collect()
}

pub fn write_keypoints<W: Write>(mut out: W, frames: &[KeypointFrame]) -> std::io::Result<()> {
    for frame in frames {
        let landmarks: Vec<Value> = frame
            .landmarks
            .iter()
            .map(|l| json!({"x": l.x, "y": l.y, "z": l.z, "present": l.present}))
            .collect();
        let record = json!({"t_ms": frame.timestamp_ms, "landmarks": landmarks});
        serde_json::to_writer(&mut out, &record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

fn parse_error(line: usize, field: impl Into<String>, message: impl Into<String>) -> KeypointError {
    KeypointError::Parse {
        line,
        field: field.into(),
        message: message.into(),
    }
}

fn parse_frame(text: &str, line: usize, expected: usize) -> Result<KeypointFrame, KeypointError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| parse_error(line, "<record>", format!("invalid JSON: {e}")))?;
    let record = value
        .as_object()
        .ok_or_else(|| parse_error(line, "<record>", "record must be a JSON object"))?;

    let timestamp_ms = match record.get("t_ms") {
        None => return Err(parse_error(line, "t_ms", "missing")),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| parse_error(line, "t_ms", "must be a non-negative integer"))?,
    };

    let raw_landmarks = match record.get("landmarks") {
        None => return Err(parse_error(line, "landmarks", "missing")),
        Some(Value::Array(items)) => items,
        Some(_) => return Err(parse_error(line, "landmarks", "must be an array")),
    };
    if raw_landmarks.len() != expected {
        return Err(parse_error(
            line,
            "landmarks",
            format!("expected {expected} entries, found {}", raw_landmarks.len()),
        ));
    }

    let landmarks = raw_landmarks
        .iter()
        .enumerate()
        .map(|(i, raw)| parse_landmark(raw, line, i))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(KeypointFrame {
        timestamp_ms,
        landmarks,
    })
}

fn parse_landmark(raw: &Value, line: usize, index: usize) -> Result<Landmark, KeypointError> {
    let field = |name: &str| format!("landmarks[{index}].{name}");
    let obj: &Map<String, Value> = raw
        .as_object()
        .ok_or_else(|| parse_error(line, format!("landmarks[{index}]"), "must be an object"))?;

    let coord = |name: &str| -> Result<f64, KeypointError> {
        let v = obj
            .get(name)
            .ok_or_else(|| parse_error(line, field(name), "missing"))?;
        let x = v
            .as_f64()
            .ok_or_else(|| parse_error(line, field(name), "must be a number"))?;
        if !x.is_finite() {
            return Err(parse_error(line, field(name), "must be finite"));
        }
        Ok(x)
    };

    let present = obj
        .get("present")
        .ok_or_else(|| parse_error(line, field("present"), "missing"))?
        .as_bool()
        .ok_or_else(|| parse_error(line, field("present"), "must be a boolean"))?;

    let (x, y, z) = (coord("x")?, coord("y")?, coord("z")?);
    if !present {
        // Absent points are zero-filled whatever the tracker reported.
        return Ok(Landmark::ABSENT);
    }
    for (name, v) in [("x", x), ("y", y)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(parse_error(
                line,
                field(name),
                format!("{v} outside [0, 1]"),
            ));
        }
    }
    Ok(Landmark::new(x, y, z))
}
