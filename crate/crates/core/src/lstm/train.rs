use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::network::{argmax, loss, Mode};
use super::params::{Architecture, LstmParams};
use super::{LstmError, LstmModel};
use crate::features::FeatureSequence;
use crate::keypoints::ActionLabel;

/// Samples per parallel work unit when summing batch gradients. Fixed so the
/// floating-point summation order never depends on the thread count.
const REDUCE_CHUNK: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop_patience: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            epochs: 50,
            batch_size: 32,
            early_stop_patience: 10,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LstmError> {
        let bad = |msg: String| Err(LstmError::InvalidArgument(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch size must be at least 1".into());
        }
        if self.early_stop_patience == 0 {
            return bad("early-stop patience must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return bad("Adam betas must lie in [0, 1)".into());
        }
        if !(self.adam_eps.is_finite() && self.adam_eps > 0.0) {
            return bad("Adam epsilon must be positive".into());
        }
        Ok(())
    }
}

/// Metrics after one epoch. Losses and accuracies are measured in inference
/// mode over the whole split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Snapshot with the lowest validation loss.
    pub model: LstmModel,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

fn labels_of(data: &[FeatureSequence], split: &str) -> Result<Vec<ActionLabel>, LstmError> {
    data.iter()
        .enumerate()
        .map(|(i, s)| {
            s.label.ok_or_else(|| {
                LstmError::InvalidArgument(format!("{split} sample {i} has no label"))
            })
        })
        .collect()
}

fn sample_seed(seed: u64, epoch: usize, position: usize) -> u64 {
    // splitmix64 finalizer over the combined coordinates
    let mut z = seed
        .wrapping_add((epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((position as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mean loss and accuracy in inference mode.
pub fn dataset_metrics(
    model: &LstmModel,
    data: &[FeatureSequence],
    labels: &[ActionLabel],
) -> Result<(f64, f64), LstmError> {
    let per_sample: Vec<(f64, bool)> = data
        .par_iter()
        .zip(labels.par_iter())
        .map(|(x, &label)| {
            let probs = model.infer(x)?;
            Ok((loss(&probs, label), argmax(&probs) == label.index()))
        })
        .collect::<Result<_, LstmError>>()?;
    let n = per_sample.len() as f64;
    let total_loss: f64 = per_sample.iter().map(|(l, _)| l).sum();
    let correct = per_sample.iter().filter(|(_, ok)| *ok).count();
    Ok((total_loss / n, correct as f64 / n))
}

fn batch_gradient(
    model: &LstmModel,
    data: &[FeatureSequence],
    labels: &[ActionLabel],
    batch: &[(usize, usize)],
    seed: u64,
    epoch: usize,
) -> Result<LstmParams, LstmError> {
    let partials: Vec<LstmParams> = batch
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut acc = model.params().zeros_like();
            for &(position, idx) in chunk {
                let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, epoch, position));
                let pass = model.forward(&data[idx], Mode::Train, &mut rng)?;
                acc.add_assign(&model.backward(&pass.cache, labels[idx])?);
            }
            Ok(acc)
        })
        .collect::<Result<_, LstmError>>()?;
    let mut iter = partials.into_iter();
    let mut total = iter.next().expect("batches are never empty");
    for part in iter {
        total.add_assign(&part);
    }
    total.scale(1.0 / batch.len() as f64);
    if !total.all_finite() {
        return Err(LstmError::Numeric(format!(
            "non-finite gradient in epoch {epoch}"
        )));
    }
    Ok(total)
}

/// Trains a freshly initialized model; initialization uses `config.seed`.
pub fn train(
    train_set: &[FeatureSequence],
    validation: &[FeatureSequence],
    arch: &Architecture,
    config: &TrainConfig,
) -> Result<TrainOutcome, LstmError> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let model = LstmModel::init(arch, &mut rng)?;
    fit(model, train_set, validation, config)
}

/// Mini-batch Adam with early stopping on validation loss.
///
/// Stops once validation loss has failed to improve for
/// `early_stop_patience` consecutive epochs, or after `epochs`. The result is
/// a pure function of the inputs and `config.seed`.
pub fn fit(
    mut model: LstmModel,
    train_set: &[FeatureSequence],
    validation: &[FeatureSequence],
    config: &TrainConfig,
) -> Result<TrainOutcome, LstmError> {
    config.validate()?;
    if train_set.is_empty() || validation.is_empty() {
        return Err(LstmError::InvalidArgument(
            "training and validation splits must be non-empty".into(),
        ));
    }
    let train_labels = labels_of(train_set, "training")?;
    let val_labels = labels_of(validation, "validation")?;
    if let Some(bad) = train_set
        .iter()
        .chain(validation)
        .find(|s| s.cols() != model.input_dim())
    {
        return Err(LstmError::Shape {
            expected: format!("T x {}", model.input_dim()),
            found: format!("{} x {}", bad.rows(), bad.cols()),
        });
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x5DEE_CE66_D1CE_4E5B);
    let mut adam = Adam::new(
        model.params(),
        config.learning_rate,
        config.adam_beta1,
        config.adam_beta2,
        config.adam_eps,
    );
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, LstmModel)> = None;
    let mut since_improvement = 0;
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let positioned: Vec<(usize, usize)> = order.iter().copied().enumerate().collect();
        for batch in positioned.chunks(config.batch_size) {
            let grads =
                batch_gradient(&model, train_set, &train_labels, batch, config.seed, epoch)?;
            adam.step(model.params_mut(), &grads);
        }

        let (train_loss, train_accuracy) = dataset_metrics(&model, train_set, &train_labels)?;
        let (val_loss, val_accuracy) = dataset_metrics(&model, validation, &val_labels)?;
        log::debug!(
            "epoch {epoch}: train loss {train_loss:.5} acc {train_accuracy:.3}, val loss {val_loss:.5} acc {val_accuracy:.3}"
        );
        history.push(EpochRecord {
            epoch,
            train_loss,
            train_accuracy,
            val_loss,
            val_accuracy,
        });

        match &best {
            Some((best_loss, _, _)) if val_loss >= *best_loss => {
                since_improvement += 1;
                if since_improvement >= config.early_stop_patience {
                    stopped_early = epoch < config.epochs;
                    break;
                }
            }
            _ => {
                best = Some((val_loss, epoch, model.clone()));
                since_improvement = 0;
            }
        }
    }

    let (_, best_epoch, model) = best.expect("at least one epoch runs");
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        stopped_early,
    })
}

/// Seeded shuffle followed by a split; `validation_fraction` of the samples
/// (rounded, at least one) go to validation.
pub fn split_train_validation<T: Clone>(
    items: &[T],
    validation_fraction: f64,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>), LstmError> {
    if items.len() < 2 {
        return Err(LstmError::InvalidArgument(
            "need at least two samples to split".into(),
        ));
    }
    if !(validation_fraction > 0.0 && validation_fraction < 1.0) {
        return Err(LstmError::InvalidArgument(format!(
            "validation fraction {validation_fraction} outside (0, 1)"
        )));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val =
        ((items.len() as f64 * validation_fraction).round() as usize).clamp(1, items.len() - 1);
    let validation = order[..n_val].iter().map(|&i| items[i].clone()).collect();
    let train = order[n_val..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, validation))
}
