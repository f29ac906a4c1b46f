use serde::Serialize;

use kitchen_core::detection::{
    evaluate, load_class_map, load_detections, load_ground_truth, ClassMap, EvalConfig,
    Interpolation,
};

use super::{create_dir, log_resolved, write_file, write_json};
use crate::error::{CliError, DataContext};
use crate::{EvalSegArgs, InterpolationArg};

#[derive(Serialize)]
struct Resolved<'a> {
    detections: &'a std::path::Path,
    ground_truth: &'a std::path::Path,
    classes: Option<&'a std::path::Path>,
    eval: EvalConfig,
}

pub fn run(args: &EvalSegArgs) -> Result<(), CliError> {
    let config = EvalConfig {
        iou_threshold: args.iou_threshold,
        score_cutoff: args.score_cutoff,
        interpolation: match args.interpolation {
            InterpolationArg::AllPoint => Interpolation::AllPoint,
            InterpolationArg::Coco101 => Interpolation::Coco101,
        },
    };
    if !(0.0..=1.0).contains(&config.iou_threshold) || !(0.0..=1.0).contains(&config.score_cutoff) {
        return Err(CliError::usage(
            "--iou-threshold and --score-cutoff must lie in [0, 1]",
        ));
    }
    log_resolved(
        "eval-seg",
        &Resolved {
            detections: &args.detections,
            ground_truth: &args.ground_truth,
            classes: args.classes.as_deref(),
            eval: config,
        },
    );
    let classes = match &args.classes {
        Some(path) => load_class_map(path).data_context(path.display())?,
        None => ClassMap::kitchen(),
    };
    let dets = load_detections(&args.detections).data_context(args.detections.display())?;
    let gts = load_ground_truth(&args.ground_truth).data_context(args.ground_truth.display())?;
    let result = evaluate(&dets, &gts, &classes, &config).data_context("evaluation")?;
    let table = result.render();
    print!("{table}");
    if let Some(dir) = &args.out {
        create_dir(dir)?;
        write_file(&dir.join("eval.txt"), &table)?;
        write_json(&dir.join("eval.json"), &result)?;
    }
    Ok(())
}
