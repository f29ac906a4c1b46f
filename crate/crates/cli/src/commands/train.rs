use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use kitchen_core::dataset::read_dataset;
use kitchen_core::keypoints::{DEFAULT_LANDMARKS, DEFAULT_WINDOW};
use kitchen_core::lstm::{
    evaluate, save_model, split_train_validation, train, Architecture, EpochRecord, TrainConfig,
};

use super::{create_dir, featurize_all, load_settings, log_resolved, write_file, write_json};
use crate::error::{CliError, DataContext};
use crate::{Cli, TrainArgs};

/// Everything `train` can take from a config file; flags override it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub training: TrainConfig,
    pub hidden: usize,
    pub dropout_rate: f64,
    pub validation_fraction: f64,
    pub window: usize,
    pub landmarks: usize,
    pub motion_threshold: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let arch = Architecture::default();
        Self {
            training: TrainConfig::default(),
            hidden: arch.hidden,
            dropout_rate: arch.dropout_rate,
            validation_fraction: 0.2,
            window: DEFAULT_WINDOW,
            landmarks: DEFAULT_LANDMARKS,
            motion_threshold: 0.0,
        }
    }
}

fn resolve(cli: &Cli, args: &TrainArgs) -> Result<TrainSettings, CliError> {
    let mut s: TrainSettings = match &cli.config {
        Some(path) => load_settings(path)?,
        None => TrainSettings::default(),
    };
    let t = &mut s.training;
    if let Some(v) = cli.seed {
        t.seed = v;
    }
    if let Some(v) = args.epochs {
        t.epochs = v;
    }
    if let Some(v) = args.learning_rate {
        t.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = args.patience {
        t.early_stop_patience = v;
    }
    if let Some(v) = args.validation_fraction {
        s.validation_fraction = v;
    }
    if let Some(v) = args.hidden {
        s.hidden = v;
    }
    if let Some(v) = args.dropout {
        s.dropout_rate = v;
    }
    if let Some(v) = args.window {
        s.window = v;
    }
    if let Some(v) = args.landmarks {
        s.landmarks = v;
    }
    if let Some(v) = args.motion_threshold {
        s.motion_threshold = v;
    }
    s.training.validate().map_err(CliError::usage)?;
    if s.window == 0 || s.landmarks == 0 || s.hidden == 0 {
        return Err(CliError::usage(
            "window, landmarks and hidden must be at least 1",
        ));
    }
    if !(0.0..1.0).contains(&s.dropout_rate) {
        return Err(CliError::usage(format!(
            "dropout {} outside [0, 1)",
            s.dropout_rate
        )));
    }
    if !(s.validation_fraction > 0.0 && s.validation_fraction < 1.0) {
        return Err(CliError::usage(format!(
            "validation fraction {} outside (0, 1)",
            s.validation_fraction
        )));
    }
    if !(s.motion_threshold.is_finite() && s.motion_threshold >= 0.0) {
        return Err(CliError::usage("motion threshold must be non-negative"));
    }
    Ok(s)
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,train_accuracy,val_loss,val_accuracy\n");
    for r in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
        );
    }
    out
}

pub fn run(cli: &Cli, args: &TrainArgs) -> Result<(), CliError> {
    let settings = resolve(cli, args)?;
    log_resolved("train", &settings);

    let data = read_dataset(&args.data, settings.landmarks)
        .data_context(format!("dataset {}", args.data.display()))?;
    let features = featurize_all(
        &data,
        settings.window,
        settings.landmarks,
        settings.motion_threshold,
    )?;
    let (train_set, validation) = split_train_validation(
        &features,
        settings.validation_fraction,
        settings.training.seed,
    )
    .data_context("splitting dataset")?;
    log::info!(
        "{} training and {} validation sequences",
        train_set.len(),
        validation.len()
    );
    let arch = Architecture {
        input_dim: 6 * settings.landmarks,
        hidden: settings.hidden,
        dropout_rate: settings.dropout_rate,
    };
    let outcome =
        train(&train_set, &validation, &arch, &settings.training).data_context("training")?;
    for r in &outcome.history {
        log::info!(
            "epoch {:>3}: train loss {:.5} acc {:.3} | val loss {:.5} acc {:.3}",
            r.epoch,
            r.train_loss,
            r.train_accuracy,
            r.val_loss,
            r.val_accuracy
        );
    }
    log::info!(
        "best epoch {}{}",
        outcome.best_epoch,
        if outcome.stopped_early {
            " (stopped early)"
        } else {
            ""
        }
    );

    let report = evaluate(&outcome.model, &validation).data_context("evaluating")?;
    create_dir(&args.out)?;
    let model_path = args.out.join("model.json");
    save_model(&outcome.model, &model_path)
        .data_context(format!("writing {}", model_path.display()))?;
    write_file(&args.out.join("history.csv"), history_csv(&outcome.history))?;
    let text = format!("{}\n{}", report.render(), report.render_confusion());
    write_file(&args.out.join("report.txt"), &text)?;
    write_json(&args.out.join("report.json"), &report)?;
    write_json(&args.out.join("train_config.json"), &settings)?;
    print!("{text}");
    log::info!("model written to {}", model_path.display());
    Ok(())
}
