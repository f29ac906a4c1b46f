//! `kitchen`: synthesize keypoint data, train and apply the action classifier,
//! evaluate detection results and run the fusion pipeline.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use error::CliError;

pub const ERROR_FILE: &str = "error.json";

#[derive(Debug, Parser)]
#[command(
    name = "kitchen",
    version,
    about = "Kitchen activity recognition and recipe prompting"
)]
pub struct Cli {
    /// Seed for data synthesis, splitting and training [default: 0, or the config file's].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Raise log verbosity (-v debug, -vv trace).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Config file (JSON or TOML): training settings for `train`, the pipeline for `run`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic keypoint dataset.
    Synth(SynthArgs),
    /// Train the action classifier on a dataset directory.
    Train(TrainArgs),
    /// Classify a keypoint stream into an action timeline.
    Predict(PredictArgs),
    /// Evaluate detection/segmentation results against ground truth.
    EvalSeg(EvalSegArgs),
    /// Run the full pipeline described by --config.
    Run(RunArgs),
    /// Classification report of a trained model on a dataset directory.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output dataset directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Sequences per class.
    #[arg(long, default_value_t = 20)]
    pub per_class: usize,
    /// Comma-separated class names or indices; all classes by default.
    #[arg(long, value_delimiter = ',')]
    pub classes: Vec<String>,
    #[arg(long, default_value_t = 30)]
    pub frames: usize,
    #[arg(long, default_value_t = 44)]
    pub landmarks: usize,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory written by `synth` (keypoints.jsonl + labels.csv).
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for model.json, history.csv and report.txt.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long)]
    pub validation_fraction: Option<f64>,
    #[arg(long)]
    pub hidden: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub window: Option<usize>,
    #[arg(long)]
    pub landmarks: Option<usize>,
    #[arg(long)]
    pub motion_threshold: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Keypoint JSONL stream.
    #[arg(long)]
    pub keypoints: PathBuf,
    /// Write the spans here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub window: usize,
    #[arg(long, default_value_t = 15)]
    pub stride: usize,
    #[arg(long, default_value_t = 0.5)]
    pub confidence_floor: f64,
    #[arg(long, default_value_t = 0.0)]
    pub motion_threshold: f64,
    #[arg(long, default_value_t = 44)]
    pub landmarks: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InterpolationArg {
    AllPoint,
    Coco101,
}

#[derive(Debug, Args)]
pub struct EvalSegArgs {
    #[arg(long)]
    pub detections: PathBuf,
    #[arg(long)]
    pub ground_truth: PathBuf,
    /// Class-name map JSON; the built-in kitchen vocabulary by default.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    pub iou_threshold: f64,
    #[arg(long, default_value_t = 0.5)]
    pub score_cutoff: f64,
    #[arg(long, value_enum, default_value_t = InterpolationArg::AllPoint)]
    pub interpolation: InterpolationArg,
    /// Also write eval.txt and eval.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Output directory for summary.json, prompt.txt, recipe.txt and timings.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Also write report.txt and report.json here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 30)]
    pub window: usize,
    #[arg(long, default_value_t = 44)]
    pub landmarks: usize,
    #[arg(long, default_value_t = 0.0)]
    pub motion_threshold: f64,
}

impl Command {
    fn output_dir(&self) -> Option<&PathBuf> {
        match self {
            Command::Synth(a) => Some(&a.out),
            Command::Train(a) => Some(&a.out),
            Command::Run(a) => Some(&a.out),
            Command::EvalSeg(a) => a.out.as_ref(),
            Command::Report(a) => a.out.as_ref(),
            Command::Predict(_) => None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "info",
        1 => "debug",
        _ => "trace",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    if let Some(dir) = cli.command.output_dir() {
        let stale = dir.join(ERROR_FILE);
        if stale.exists() {
            if let Err(e) = std::fs::remove_file(&stale) {
                eprintln!("error: cannot remove stale {}: {e}", stale.display());
                return ExitCode::from(error::ErrorKind::Data.exit_code());
            }
        }
    }
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => report_failure(&cli, &err),
    }
}

fn report_failure(cli: &Cli, err: &CliError) -> ExitCode {
    eprintln!("error: {err}");
    if let Some(dir) = cli.command.output_dir() {
        if let Err(e) = err.write_artifact(dir) {
            eprintln!(
                "error: cannot write {}: {e}",
                dir.join(ERROR_FILE).display()
            );
        }
    }
    ExitCode::from(err.kind.exit_code())
}
