//! Fully connected ReLU network with a single linear output.

mod train;

pub use train::{train_static, StaticNet, TargetScaling, TrainConfig, TrainHistory};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{label, rng_for};
use crate::scalar::{axpy, dot, Scalar};

pub const HIDDEN_SIZES: [usize; 4] = [68, 50, 30, 10];

/// Layer `l` maps `sizes[l]` inputs to `sizes[l + 1]` outputs. Parameters are
/// one flat vector holding, per layer, the row-major `out × in` weights followed
/// by the `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Mlp<T: Scalar> {
    pub sizes: Vec<usize>,
    pub params: Vec<T>,
}

pub(crate) struct Workspace<T> {
    acts: Vec<Vec<T>>,
    deltas: Vec<Vec<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) || sizes[sizes.len() - 1] != 1 {
            return Err(Error::InvalidConfig(format!("layer sizes {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Mlp { sizes: sizes.to_vec(), params: vec![T::zero(); n] })
    }

    /// He initialization: weights ~ N(0, 2/fan_in), biases zero.
    pub fn with_sizes(sizes: &[usize], seed: u64) -> Result<Self> {
        let mut mlp = Self::zeros(sizes)?;
        let mut rng = rng_for(seed, &[label("mlp-init")]);
        for l in 0..mlp.n_layers() {
            let fan_in = mlp.sizes[l];
            let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive sd");
            let (w, _) = mlp.layer_range(l);
            for p in &mut mlp.params[w] {
                *p = T::of(normal.sample(&mut rng));
            }
        }
        Ok(mlp)
    }

    /// The 68/50/30/10 architecture.
    pub fn init(input_width: usize, seed: u64) -> Result<Self> {
        let mut sizes = vec![input_width];
        sizes.extend(HIDDEN_SIZES);
        sizes.push(1);
        Self::with_sizes(&sizes, seed)
    }

    pub fn input_width(&self) -> usize {
        self.sizes[0]
    }

    pub fn n_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Index ranges of the weights and biases of layer `l`.
    pub fn layer_range(&self, l: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        let start: usize = self.sizes.windows(2).take(l).map(|w| w[0] * w[1] + w[1]).sum();
        let (i, o) = (self.sizes[l], self.sizes[l + 1]);
        (start..start + i * o, start + i * o..start + i * o + o)
    }

    pub(crate) fn workspace(&self) -> Workspace<T> {
        Workspace {
            acts: self.sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
            deltas: self.sizes.iter().map(|&n| vec![T::zero(); n]).collect(),
        }
    }

    fn check_width(&self, x: &[T]) -> Result<()> {
        if x.len() != self.input_width() {
            return Err(Error::WidthMismatch { expected: self.input_width(), got: x.len() });
        }
        Ok(())
    }

    /// Fills `ws.acts` with post-activation values (the last entry holds the
    /// linear output) and returns the output.
    fn run(&self, x: &[T], ws: &mut Workspace<T>) -> T {
        ws.acts[0].copy_from_slice(x);
        let last = self.n_layers() - 1;
        for l in 0..=last {
            let (wr, br) = self.layer_range(l);
            let (w, b) = (&self.params[wr], &self.params[br]);
            let n_in = self.sizes[l];
            let (head, tail) = ws.acts.split_at_mut(l + 1);
            let (input, out) = (&head[l], &mut tail[0]);
            for (o, slot) in out.iter_mut().enumerate() {
                let z = dot(&w[o * n_in..(o + 1) * n_in], input) + b[o];
                *slot = if l < last && z < T::zero() { T::zero() } else { z };
            }
        }
        ws.acts[last + 1][0]
    }

    pub fn forward(&self, x: &[T]) -> Result<T> {
        self.check_width(x)?;
        Ok(self.run(x, &mut self.workspace()))
    }

    /// Pre-activation values of every layer, input layer excluded.
    pub fn preactivations(&self, x: &[T]) -> Result<Vec<Vec<T>>> {
        self.check_width(x)?;
        let mut a = x.to_vec();
        let mut out = Vec::with_capacity(self.n_layers());
        for l in 0..self.n_layers() {
            let (wr, br) = self.layer_range(l);
            let (w, b) = (&self.params[wr], &self.params[br]);
            let z: Vec<T> =
                (0..self.sizes[l + 1]).map(|o| dot(&w[o * a.len()..(o + 1) * a.len()], &a) + b[o]).collect();
            a = z.iter().map(|&v| v.max(T::zero())).collect();
            out.push(z);
        }
        Ok(out)
    }

    /// Adds `weight · ∂(ŷ − y)²/∂θ` to `grad` and returns (ŷ − y)².
    pub(crate) fn accumulate(&self, x: &[T], y: T, weight: T, grad: &mut [T], ws: &mut Workspace<T>) -> T {
        let err = self.run(x, ws) - y;
        let last = self.n_layers() - 1;
        ws.deltas[last + 1][0] = weight * (err + err);
        for l in (0..=last).rev() {
            let (wr, br) = self.layer_range(l);
            let n_in = self.sizes[l];
            let (dhead, dtail) = ws.deltas.split_at_mut(l + 1);
            let (d_in, d_out) = (&mut dhead[l], &dtail[0]);
            let a_in = &ws.acts[l];
            let gw_start = wr.start;
            for (o, &d) in d_out.iter().enumerate() {
                grad[br.start + o] += d;
                let row = gw_start + o * n_in;
                axpy(d, a_in, &mut grad[row..row + n_in]);
            }
            if l > 0 {
                d_in.iter_mut().for_each(|v| *v = T::zero());
                let w = &self.params[wr];
                for (o, &d) in d_out.iter().enumerate() {
                    axpy(d, &w[o * n_in..(o + 1) * n_in], d_in);
                }
                // ReLU derivative, taken as 0 at the kink
                for (di, &a) in d_in.iter_mut().zip(a_in) {
                    if a <= T::zero() {
                        *di = T::zero();
                    }
                }
            }
        }
        err * err
    }

    fn check_batch(&self, inputs: &[T], targets: &[T]) -> Result<()> {
        if targets.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        if inputs.len() != targets.len() * self.input_width() {
            return Err(Error::WidthMismatch { expected: targets.len() * self.input_width(), got: inputs.len() });
        }
        Ok(())
    }

    /// Mean squared error over a batch of row-major inputs.
    pub fn loss(&self, inputs: &[T], targets: &[T]) -> Result<T> {
        self.check_batch(inputs, targets)?;
        let mut ws = self.workspace();
        let w = self.input_width();
        let sse: T = targets
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let e = self.run(&inputs[i * w..(i + 1) * w], &mut ws) - y;
                e * e
            })
            .sum();
        Ok(sse / T::of_usize(targets.len()))
    }

    /// Batch MSE and its exact gradient with respect to `params`.
    pub fn gradient(&self, inputs: &[T], targets: &[T]) -> Result<(T, Vec<T>)> {
        self.check_batch(inputs, targets)?;
        let mut grad = vec![T::zero(); self.n_params()];
        let mut ws = self.workspace();
        let w = self.input_width();
        let weight = T::one() / T::of_usize(targets.len());
        let mut sse = T::zero();
        for (i, &y) in targets.iter().enumerate() {
            sse += self.accumulate(&inputs[i * w..(i + 1) * w], y, weight, &mut grad, &mut ws);
        }
        Ok((sse * weight, grad))
    }
}
