use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Mlp;
use crate::datakit::Dataset;
use crate::error::{Error, Result};
use crate::optim::{Adam, AdamConfig};
use crate::rng::{label, rng_for};
use crate::scalar::Scalar;

/// How targets are presented to the network during training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetScaling {
    /// Zero mean, unit population sd; predictions are mapped back to newtons.
    Standardize,
    /// Newtons as-is.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub target_scaling: TargetScaling,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 32,
            adam: AdamConfig::default(),
            target_scaling: TargetScaling::Standardize,
        }
    }
}

impl TrainConfig {
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

/// Training-set MSE in target units (N²) before training and after each epoch.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub initial_loss: f64,
    pub epoch_loss: Vec<f64>,
}

impl TrainHistory {
    pub fn final_loss(&self) -> f64 {
        self.epoch_loss.last().copied().unwrap_or(self.initial_loss)
    }
}

/// Network plus the affine map from its output to newtons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StaticNet<T: Scalar> {
    pub mlp: Mlp<T>,
    pub target_offset: T,
    pub target_scale: T,
}

impl<T: Scalar> StaticNet<T> {
    pub fn predict(&self, x: &[T]) -> Result<T> {
        Ok(self.target_offset + self.target_scale * self.mlp.forward(x)?)
    }

    pub fn predict_all(&self, data: &Dataset<T>) -> Result<Vec<T>> {
        if data.width != self.mlp.input_width() {
            return Err(Error::WidthMismatch { expected: self.mlp.input_width(), got: data.width });
        }
        data.rows().map(|r| self.predict(r)).collect()
    }

    fn mse(&self, data: &Dataset<T>) -> Result<f64> {
        crate::evalkit::mse(&data.targets, &self.predict_all(data)?)
    }
}

/// Mini-batch Adam on the mean squared error. The batch order is reshuffled
/// every epoch from `(seed, epoch)`; the last short batch is kept.
pub fn train_static<T: Scalar>(
    data: &Dataset<T>,
    config: &TrainConfig,
    seed: u64,
) -> Result<(StaticNet<T>, TrainHistory)> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("training set"));
    }
    let (offset, scale) = match config.target_scaling {
        TargetScaling::Raw => (0.0, 1.0),
        TargetScaling::Standardize => {
            let m = crate::evalkit::mean(&data.targets);
            let sd =
                (data.targets.iter().map(|y| (y.to_f64_lossy() - m).powi(2)).sum::<f64>() / data.len() as f64).sqrt();
            let scale = if sd > 0.0 {
                sd
            } else if m != 0.0 {
                m.abs()
            } else {
                1.0
            };
            (m, scale)
        }
    };
    let targets: Vec<T> = data.targets.iter().map(|&y| T::of((y.to_f64_lossy() - offset) / scale)).collect();

    let mut net =
        StaticNet { mlp: Mlp::init(data.width, seed)?, target_offset: T::of(offset), target_scale: T::of(scale) };
    let mut history = TrainHistory { initial_loss: net.mse(data)?, epoch_loss: Vec::with_capacity(config.epochs) };
    let mut adam = Adam::new(net.mlp.n_params(), config.adam);
    let mut ws = net.mlp.workspace();
    let mut grad = vec![T::zero(); net.mlp.n_params()];
    let mut order: Vec<usize> = (0..data.len()).collect();

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng_for(seed, &[label("epoch"), epoch as u64]));
        for batch in order.chunks(config.batch_size) {
            grad.iter_mut().for_each(|g| *g = T::zero());
            let weight = T::one() / T::of_usize(batch.len());
            for &i in batch {
                net.mlp.accumulate(data.row(i), targets[i], weight, &mut grad, &mut ws);
            }
            adam.update(&mut net.mlp.params, &grad)?;
        }
        history.epoch_loss.push(net.mse(data)?);
    }
    Ok((net, history))
}
