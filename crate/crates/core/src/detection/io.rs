//! JSONL detection/ground-truth files and the class-name map.
//!
//! ```text
//! {"image_id": "frame_0001", "class_id": 0, "score": 0.91, "box": [0.1, 0.2, 0.4, 0.6], "mask": "64x48:..."}
//! {"image_id": "frame_0001", "class_id": 0, "box": [0.1, 0.2, 0.4, 0.6]}
//! ```

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;

use super::{DetectionError, DetectionEvent, GroundTruthItem};

/// Default object vocabulary, indexed by class id.
pub const KITCHEN_CLASSES: [&str; 16] = [
    "knife",
    "bowl",
    "grater",
    "tomato",
    "spatula",
    "cutting_board",
    "spoon",
    "whisk",
    "pan",
    "pot",
    "plate",
    "cup",
    "onion",
    "potato",
    "carrot",
    "rolling_pin",
];

fn read_jsonl<T: DeserializeOwned, R: BufRead>(
    reader: R,
    check: impl Fn(&T) -> Result<(), DetectionError>,
) -> Result<Vec<T>, DetectionError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item: T = serde_json::from_str(&line).map_err(|e| DetectionError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        check(&item).map_err(|e| DetectionError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

fn check_score(d: &DetectionEvent) -> Result<(), DetectionError> {
    if (0.0..=1.0).contains(&d.score) {
        Ok(())
    } else {
        Err(DetectionError::InvalidScore(d.score))
    }
}

pub fn read_detections<R: BufRead>(reader: R) -> Result<Vec<DetectionEvent>, DetectionError> {
    read_jsonl(reader, check_score)
}

pub fn read_ground_truth<R: BufRead>(reader: R) -> Result<Vec<GroundTruthItem>, DetectionError> {
    read_jsonl(reader, |_: &GroundTruthItem| Ok(()))
}

pub fn load_detections(path: &Path) -> Result<Vec<DetectionEvent>, DetectionError> {
    read_detections(BufReader::new(File::open(path)?))
}

pub fn load_ground_truth(path: &Path) -> Result<Vec<GroundTruthItem>, DetectionError> {
    read_ground_truth(BufReader::new(File::open(path)?))
}

fn write_jsonl<T: serde::Serialize, W: Write>(
    items: &[T],
    mut out: W,
) -> Result<(), DetectionError> {
    for item in items {
        let line = serde_json::to_string(item).map_err(std::io::Error::from)?;
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_detections<W: Write>(items: &[DetectionEvent], out: W) -> Result<(), DetectionError> {
    write_jsonl(items, out)
}

pub fn write_ground_truth<W: Write>(
    items: &[GroundTruthItem],
    out: W,
) -> Result<(), DetectionError> {
    write_jsonl(items, out)
}

/// Names for class ids `0..len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassMap {
    names: Vec<String>,
}

impl ClassMap {
    pub fn kitchen() -> Self {
        Self {
            names: KITCHEN_CLASSES.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn from_names(names: Vec<String>) -> Result<Self, DetectionError> {
        if names.is_empty() {
            return Err(DetectionError::ClassMap("no classes".into()));
        }
        Ok(Self { names })
    }

    /// Parses `{"0": "knife", "1": "bowl", ...}`; keys must be exactly `0..n`.
    pub fn from_json(text: &str) -> Result<Self, DetectionError> {
        let raw: BTreeMap<String, String> =
            serde_json::from_str(text).map_err(|e| DetectionError::ClassMap(e.to_string()))?;
        let mut by_id = BTreeMap::new();
        for (key, name) in raw {
            let id: usize = key
                .trim()
                .parse()
                .map_err(|_| DetectionError::ClassMap(format!("key `{key}` is not a class id")))?;
            if by_id.insert(id, name).is_some() {
                return Err(DetectionError::ClassMap(format!("class id {id} repeated")));
            }
        }
        for (expected, &id) in by_id.keys().enumerate() {
            if id != expected {
                return Err(DetectionError::ClassMap(format!(
                    "class id {expected} missing"
                )));
            }
        }
        Self::from_names(by_id.into_values().collect())
    }

    pub fn to_json(&self) -> String {
        let map: BTreeMap<usize, &str> =
            self.names.iter().map(String::as_str).enumerate().collect();
        serde_json::to_string_pretty(&map).expect("string map serializes")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn get(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

pub fn load_class_map(path: &Path) -> Result<ClassMap, DetectionError> {
    ClassMap::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{BBox, RleMask};

    #[test]
    fn detections_round_trip() {
        let dets = vec![
            DetectionEvent {
                image_id: "f1".into(),
                class_id: 3,
                score: 0.75,
                bbox: BBox::new(0.1, 0.2, 0.4, 0.6).unwrap(),
                mask: Some("4x2:1,3,4".parse::<RleMask>().unwrap()),
            },
            DetectionEvent {
                image_id: "f2".into(),
                class_id: 0,
                score: 0.5,
                bbox: BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
                mask: None,
            },
        ];
        let mut buf = Vec::new();
        write_detections(&dets, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"box\":[0.1,0.2,0.4,0.6]"));
        assert!(text.contains("\"mask\":\"4x2:1,3,4\""));
        assert_eq!(read_detections(buf.as_slice()).unwrap(), dets);
    }

    #[test]
    fn bad_lines_report_line_numbers() {
        let input = "{\"image_id\":\"a\",\"class_id\":0,\"box\":[0,0,1,1]}\n\n{\"image_id\":\"b\",\"class_id\":0,\"box\":[1,0,0,1]}\n";
        match read_ground_truth(input.as_bytes()) {
            Err(DetectionError::Parse { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("invalid box"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
        let score = "{\"image_id\":\"a\",\"class_id\":0,\"score\":1.5,\"box\":[0,0,1,1]}\n";
        assert!(matches!(
            read_detections(score.as_bytes()),
            Err(DetectionError::Parse { line: 1, .. })
        ));
        let missing = "{\"image_id\":\"a\",\"class_id\":0,\"box\":[0,0,1,1]}\n";
        assert!(read_detections(missing.as_bytes()).is_err());
    }

    #[test]
    fn class_map_json() {
        let map = ClassMap::kitchen();
        assert_eq!(map.len(), 16);
        assert_eq!(ClassMap::from_json(&map.to_json()).unwrap(), map);
        let parsed = ClassMap::from_json(r#"{"1": "bowl", "0": "knife"}"#).unwrap();
        assert_eq!(parsed.names(), ["knife", "bowl"]);
        assert!(ClassMap::from_json(r#"{"0": "knife", "2": "bowl"}"#).is_err());
        assert!(ClassMap::from_json(r#"{"x": "knife"}"#).is_err());
        assert!(ClassMap::from_json("{}").is_err());
    }
}
