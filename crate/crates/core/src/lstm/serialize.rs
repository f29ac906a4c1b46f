//! JSON model container.
//!
//! ```json
//! {"format": "kitchen-lstm", "version": 1, "classes": 8,
//!  "gate_order": ["input", "forget", "cell", "output"],
//!  "dropout_rate": 0.5, "params": {"layer1": {...}, "layer2": {...}, "output": {...}}}
//! ```
//!
//! Every tensor is stored row-major next to its declared dimensions. Floats are
//! written with shortest round-trip formatting, so a save/load cycle is exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LstmError, LstmModel, LstmParams, CLASSES};

pub const MODEL_FORMAT: &str = "kitchen-lstm";
pub const MODEL_FORMAT_VERSION: u32 = 1;
const GATE_ORDER: [&str; 4] = ["input", "forget", "cell", "output"];

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    classes: usize,
    gate_order: Vec<String>,
    dropout_rate: f64,
    params: LstmParams,
}

pub fn write_model<W: Write>(model: &LstmModel, out: W) -> Result<(), LstmError> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_FORMAT_VERSION,
        classes: CLASSES,
        gate_order: GATE_ORDER.iter().map(|s| s.to_string()).collect(),
        dropout_rate: model.dropout_rate(),
        params: model.params().clone(),
    };
    serde_json::to_writer(out, &file)?;
    Ok(())
}

pub fn read_model<R: Read>(input: R) -> Result<LstmModel, LstmError> {
    let file: ModelFile = serde_json::from_reader(input)?;
    if file.format != MODEL_FORMAT {
        return Err(LstmError::Format(format!(
            "unknown format `{}`",
            file.format
        )));
    }
    if file.version != MODEL_FORMAT_VERSION {
        return Err(LstmError::Format(format!(
            "unsupported version {} (expected {MODEL_FORMAT_VERSION})",
            file.version
        )));
    }
    if file.classes != CLASSES {
        return Err(LstmError::Format(format!(
            "model has {} classes, expected {CLASSES}",
            file.classes
        )));
    }
    if file.gate_order != GATE_ORDER {
        return Err(LstmError::Format(format!(
            "unsupported gate order {:?}",
            file.gate_order
        )));
    }
    LstmModel::new(file.params, file.dropout_rate)
}

pub fn save_model(model: &LstmModel, path: &Path) -> Result<(), LstmError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_model(model, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<LstmModel, LstmError> {
    read_model(BufReader::new(File::open(path)?))
}
