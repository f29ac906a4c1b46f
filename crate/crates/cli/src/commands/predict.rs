use std::fs::File;
use std::io::BufReader;

use kitchen_core::keypoints::read_keypoints;
use kitchen_core::lstm::load_model;
use kitchen_core::pipeline::{classify_actions, ActionSettings};

use super::{log_resolved, write_json};
use crate::error::{CliError, DataContext};
use crate::PredictArgs;

pub fn run(args: &PredictArgs) -> Result<(), CliError> {
    let settings = ActionSettings {
        window: args.window,
        stride: args.stride,
        confidence_floor: args.confidence_floor,
        motion_threshold: args.motion_threshold,
        landmarks: args.landmarks,
    };
    if settings.window == 0 || settings.stride == 0 {
        return Err(CliError::usage("--window and --stride must be at least 1"));
    }
    log_resolved("predict", &settings);
    let model = load_model(&args.model).data_context(format!("model {}", args.model.display()))?;
    let file = File::open(&args.keypoints)
        .data_context(format!("opening {}", args.keypoints.display()))?;
    let frames = read_keypoints(BufReader::new(file), args.landmarks)
        .data_context(args.keypoints.display())?;
    let spans = classify_actions(&frames, &model, &settings).data_context("classifying")?;
    match &args.out {
        Some(path) => write_json(path, &spans)?,
        None => println!(
            "{}",
            serde_json::to_string_pretty(&spans).data_context("serializing spans")?
        ),
    }
    Ok(())
}
