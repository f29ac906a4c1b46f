use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TranscriptError {
    #[error("transcript line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("transcript line {line}: {source}")]
    Io {
        line: usize,
        #[source]
        source: std::io::Error,
    },
}

/// One timed utterance, `0 <= start_s < end_s`, non-empty text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptSegment {
    pub start_s: f64,
    pub end_s: f64,
    pub text: String,
}

impl TranscriptSegment {
    fn check(&self) -> Result<(), String> {
        if !(self.start_s.is_finite() && self.end_s.is_finite()) {
            return Err("times must be finite".into());
        }
        if self.start_s < 0.0 {
            return Err(format!("start_s {} is negative", self.start_s));
        }
        if self.end_s <= self.start_s {
            return Err(format!(
                "end_s {} is not after start_s {}",
                self.end_s, self.start_s
            ));
        }
        if self.text.trim().is_empty() {
            return Err("text is empty".into());
        }
        Ok(())
    }
}

/// Reads `{"start_s", "end_s", "text"}` lines, sorted by start time. An absent
/// source yields no segments.
pub fn ingest_transcript<R: BufRead>(
    source: Option<R>,
) -> Result<Vec<TranscriptSegment>, TranscriptError> {
    let Some(reader) = source else {
        log::info!("no transcript source; continuing without speech");
        return Ok(Vec::new());
    };
    let mut out: Vec<TranscriptSegment> = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|source| TranscriptError::Io {
            line: line_no,
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let parse = |message: String| TranscriptError::Parse {
            line: line_no,
            message,
        };
        let seg: TranscriptSegment =
            serde_json::from_str(&line).map_err(|e| parse(e.to_string()))?;
        seg.check().map_err(parse)?;
        out.push(seg);
    }
    if out.is_empty() {
        log::info!("transcript source is empty; continuing without speech");
    }
    out.sort_by(|a, b| a.start_s.total_cmp(&b.start_s));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absent_source_is_empty() {
        assert!(ingest_transcript(None::<&[u8]>).unwrap().is_empty());
        assert!(ingest_transcript(Some(&b"\n"[..])).unwrap().is_empty());
    }

    #[test]
    fn sorted_by_start() {
        let input = "{\"start_s\": 4.0, \"end_s\": 5.5, \"text\": \"now stir\"}\n{\"start_s\": 0.5, \"end_s\": 2.0, \"text\": \"cutting the tomato\"}\n";
        let segs = ingest_transcript(Some(input.as_bytes())).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].text, "cutting the tomato");
        assert_eq!(segs[1].start_s, 4.0);
    }

    #[test]
    fn invalid_segments_name_their_line() {
        let bad_time = "{\"start_s\": 0.0, \"end_s\": 1.0, \"text\": \"ok\"}\n{\"start_s\": 3.0, \"end_s\": 3.0, \"text\": \"x\"}\n";
        assert!(matches!(
            ingest_transcript(Some(bad_time.as_bytes())),
            Err(TranscriptError::Parse { line: 2, .. })
        ));
        let empty_text = "{\"start_s\": 0.0, \"end_s\": 1.0, \"text\": \"  \"}\n";
        assert!(matches!(
            ingest_transcript(Some(empty_text.as_bytes())),
            Err(TranscriptError::Parse { line: 1, .. })
        ));
        assert!(ingest_transcript(Some(&b"not json\n"[..])).is_err());
    }
}
