use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Lstm;
use crate::datakit::{Partition, SlidingWindowSet, SplitAssignment};
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::rng::{label, rng_for};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeqConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Return the parameters of the epoch with the lowest validation loss
    /// instead of the last epoch.
    pub keep_best_validation: bool,
}

impl Default for SeqConfig {
    fn default() -> Self {
        SeqConfig { epochs: 30, batch_size: 32, adam: AdamConfig::default(), keep_best_validation: false }
    }
}

impl SeqConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Losses are MSE in scaled units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SeqHistory {
    /// Mean of the per-window losses seen during each epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss before training, absent without a validation partition.
    pub initial_validation_loss: Option<f64>,
    pub validation_loss: Vec<f64>,
}

fn partition_loss<T: Scalar>(model: &Lstm<T>, set: &SlidingWindowSet<T>, rows: &[usize]) -> f64 {
    let mut tape = model.tape();
    let sse: f64 =
        rows.iter().map(|&i| (model.run(set.window(i), &mut tape) - set.targets[i]).to_f64_lossy().powi(2)).sum();
    sse / rows.len() as f64
}

#[cfg(test)]
pub(crate) fn partition_loss_for_tests<T: Scalar>(model: &Lstm<T>, set: &SlidingWindowSet<T>, rows: &[usize]) -> f64 {
    partition_loss(model, set, rows)
}

/// Mini-batch Adam over the training windows, reshuffled each epoch from
/// `(seed, epoch)`; the last short batch is kept.
pub fn train_dynamic<T: Scalar>(
    set: &SlidingWindowSet<T>,
    split: &SplitAssignment,
    config: &SeqConfig,
    seed: u64,
) -> Result<(Lstm<T>, SeqHistory)> {
    config.validate()?;
    if split.labels.len() != set.len() {
        return Err(Error::LengthMismatch { left: split.labels.len(), right: set.len() });
    }
    let mut train = split.indices(Partition::Train);
    if train.is_empty() {
        return Err(Error::EmptyInput("training partition"));
    }
    let valid = split.indices(Partition::Validation);

    let mut model = Lstm::init(set.width, seed)?;
    let mut adam = Adam::new(model.n_params(), config.adam);
    let mut grad = vec![T::zero(); model.n_params()];
    let mut tape = model.tape();
    let mut history = SeqHistory {
        initial_validation_loss: (!valid.is_empty()).then(|| partition_loss(&model, set, &valid)),
        ..Default::default()
    };
    let mut best: Option<(f64, Vec<T>)> = None;

    for epoch in 0..config.epochs {
        train.shuffle(&mut rng_for(seed, &[label("epoch"), epoch as u64]));
        let mut sse = 0.0;
        for batch in train.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            let weight = T::one() / T::of_usize(batch.len());
            for &i in batch {
                sse += model.accumulate(set.window(i), set.targets[i], weight, &mut grad, &mut tape).to_f64_lossy();
            }
            adam.update(&mut model.params, &grad)?;
        }
        history.train_loss.push(sse / train.len() as f64);
        if !valid.is_empty() {
            let v = partition_loss(&model, set, &valid);
            history.validation_loss.push(v);
            if config.keep_best_validation && best.as_ref().is_none_or(|b| v < b.0) {
                best = Some((v, model.params.clone()));
            }
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, history))
}
