use serde::Serialize;

use kitchen_core::pipeline::{run_pipeline, MemoryReport, PipelineConfig, StageRecord};

use super::{create_dir, log_resolved, write_file, write_json};
use crate::error::{CliError, DataContext, ErrorKind};
use crate::{Cli, RunArgs};

#[derive(Serialize)]
struct Timings<'a> {
    stages: &'a [StageRecord],
    total_seconds: f64,
    memory: &'a MemoryReport,
}

pub fn run(cli: &Cli, args: &RunArgs) -> Result<(), CliError> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::usage("`run` needs --config <pipeline config>"))?;
    let config = PipelineConfig::load(path).data_context("pipeline config")?;
    log_resolved("run", &config);

    let outcome = run_pipeline(&config);
    create_dir(&args.out)?;
    match &outcome.summary {
        Some(summary) => write_json(&args.out.join("summary.json"), summary)?,
        None => {
            #[derive(Serialize)]
            struct Partial<'a> {
                objects: &'a Option<std::collections::BTreeMap<String, usize>>,
                actions: &'a Option<Vec<kitchen_core::pipeline::ActionSpan>>,
                transcript: &'a Option<Vec<kitchen_core::pipeline::TranscriptSegment>>,
            }
            write_json(
                &args.out.join("partial.json"),
                &Partial {
                    objects: &outcome.objects,
                    actions: &outcome.actions,
                    transcript: &outcome.transcript,
                },
            )?;
        }
    }
    if let Some(prompt) = &outcome.prompt {
        write_file(&args.out.join("prompt.txt"), format!("{prompt}\n"))?;
    }
    if let Some(recipe) = &outcome.recipe {
        write_file(&args.out.join("recipe.txt"), recipe.render())?;
    }
    write_json(
        &args.out.join("timings.json"),
        &Timings {
            stages: &outcome.stages,
            total_seconds: outcome.stages.iter().map(|s| s.seconds).sum(),
            memory: &outcome.memory,
        },
    )?;

    match &outcome.error {
        None => {
            log::info!("pipeline finished; outputs in {}", args.out.display());
            Ok(())
        }
        Some(e) => Err(CliError {
            kind: ErrorKind::Stage,
            message: e.to_string(),
            stage: e.stage().map(str::to_string),
            prompt: e.pending_prompt().map(str::to_string),
        }),
    }
}
