use serde::Serialize;

use kitchen_core::dataset::{synthesize_dataset, write_dataset};
use kitchen_core::keypoints::ActionLabel;

use super::log_resolved;
use crate::error::{CliError, DataContext};
use crate::{Cli, SynthArgs};

#[derive(Serialize)]
struct Resolved<'a> {
    out: &'a std::path::Path,
    classes: Vec<&'static str>,
    per_class: usize,
    frames: usize,
    landmarks: usize,
    seed: u64,
}

pub fn run(cli: &Cli, args: &SynthArgs) -> Result<(), CliError> {
    if args.per_class == 0 {
        return Err(CliError::usage("--per-class must be at least 1"));
    }
    let classes: Vec<ActionLabel> = if args.classes.is_empty() {
        ActionLabel::ALL.to_vec()
    } else {
        args.classes
            .iter()
            .map(|c| {
                c.parse::<ActionLabel>()
                    .map_err(|e| CliError::usage(format!("--classes: {e}")))
            })
            .collect::<Result<_, _>>()?
    };
    let seed = cli.seed.unwrap_or(0);
    log_resolved(
        "synth",
        &Resolved {
            out: &args.out,
            classes: classes.iter().map(|c| c.name()).collect(),
            per_class: args.per_class,
            frames: args.frames,
            landmarks: args.landmarks,
            seed,
        },
    );
    let data = synthesize_dataset(&classes, args.per_class, seed, args.frames, args.landmarks)
        .map_err(CliError::usage)?;
    write_dataset(&args.out, &data).data_context(format!("writing {}", args.out.display()))?;
    log::info!("wrote {} sequences to {}", data.len(), args.out.display());
    Ok(())
}
