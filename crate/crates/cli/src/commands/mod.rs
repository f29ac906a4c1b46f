mod eval_seg;
mod predict;
mod report;
mod run;
mod synth;
mod train;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use kitchen_core::dataset::LabeledSequence;
use kitchen_core::features::{FeatureSequence, Featurizer};
use kitchen_core::keypoints::{filter_static, resample_window};

use crate::error::{CliError, DataContext};
use crate::{Cli, Command};

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    if cli.config.is_some() && !matches!(cli.command, Command::Train(_) | Command::Run(_)) {
        return Err(CliError::usage(
            "--config applies only to `train` and `run`",
        ));
    }
    match &cli.command {
        Command::Synth(args) => synth::run(cli, args),
        Command::Train(args) => train::run(cli, args),
        Command::Predict(args) => predict::run(args),
        Command::EvalSeg(args) => eval_seg::run(args),
        Command::Run(args) => run::run(cli, args),
        Command::Report(args) => report::run(args),
    }
}

/// Logs the settings a command actually runs with.
fn log_resolved(command: &str, settings: &impl Serialize) {
    match serde_json::to_string(settings) {
        Ok(json) => log::info!("{command}: resolved config {json}"),
        Err(e) => log::warn!("{command}: cannot serialize resolved config: {e}"),
    }
}

/// Parses TOML for `.toml` files and JSON otherwise.
fn load_settings<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).data_context(format!("reading {}", path.display()))?;
    let is_toml = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("toml"));
    if is_toml {
        toml::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    std::fs::write(path, contents).data_context(format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).data_context("serializing output")?;
    write_file(path, text + "\n")
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).data_context(format!("creating {}", dir.display()))
}

/// Windows, filters and featurizes labeled sequences.
fn featurize_all(
    data: &[LabeledSequence],
    window: usize,
    landmarks: usize,
    motion_threshold: f64,
) -> Result<Vec<FeatureSequence>, CliError> {
    let featurizer = Featurizer::new(window, landmarks);
    data.iter()
        .map(|item| {
            let mut seq = resample_window(&item.sequence.frames, window).data_context(&item.id)?;
            seq.label = item.sequence.label;
            let seq = filter_static(&seq, motion_threshold);
            featurizer.featurize(&seq).data_context(&item.id)
        })
        .collect()
}
