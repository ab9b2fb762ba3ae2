//! Single-layer LSTM with a ReLU dense head for one-step forecasting.

mod forecast;
mod train;

pub use forecast::{forecast, ForecastMode, ForecastResult, OneStepPredictor};
pub use train::{train_dynamic, SeqConfig, SeqHistory};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{label, rng_for};
use crate::scalar::{axpy, dot, sigmoid, Scalar};

pub const HIDDEN: usize = 64;
pub const DENSE: usize = 32;

/// Gate blocks are stacked in the order input, forget, candidate, output.
/// Flat parameter layout: `w_x` (4H × I), `w_h` (4H × H), `b` (4H),
/// `w_d` (D × H), `b_d` (D), `w_o` (D), `b_o` (1); matrices row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Lstm<T: Scalar> {
    pub input: usize,
    pub hidden: usize,
    pub dense: usize,
    /// Steps per window.
    pub window: usize,
    pub params: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellState<T> {
    pub h: Vec<T>,
    pub c: Vec<T>,
}

impl<T: Scalar> CellState<T> {
    pub fn zeros(hidden: usize) -> Self {
        CellState { h: vec![T::zero(); hidden], c: vec![T::zero(); hidden] }
    }
}

type R = std::ops::Range<usize>;

struct Layout {
    w_x: R,
    w_h: R,
    b: R,
    w_d: R,
    b_d: R,
    w_o: R,
    b_o: usize,
    total: usize,
}

/// Per-window activations kept for backpropagation.
pub(crate) struct Tape<T> {
    /// Gate activations per step, 4H each.
    gates: Vec<Vec<T>>,
    /// c_t for t = 0..=T, c_0 = 0.
    c: Vec<Vec<T>>,
    /// h_t for t = 0..=T, h_0 = 0.
    h: Vec<Vec<T>>,
    /// tanh(c_t) for t = 1..=T.
    tc: Vec<Vec<T>>,
    dense: Vec<T>,
    // scratch for the backward pass
    dz: Vec<T>,
    dh: Vec<T>,
    dh_prev: Vec<T>,
    dc: Vec<T>,
}

impl<T: Scalar> Lstm<T> {
    fn layout(input: usize, hidden: usize, dense: usize) -> Layout {
        let g = 4 * hidden;
        let w_x = 0..g * input;
        let w_h = w_x.end..w_x.end + g * hidden;
        let b = w_h.end..w_h.end + g;
        let w_d = b.end..b.end + dense * hidden;
        let b_d = w_d.end..w_d.end + dense;
        let w_o = b_d.end..b_d.end + dense;
        let b_o = w_o.end;
        Layout { w_x, w_h, b, w_d, b_d, w_o, b_o, total: b_o + 1 }
    }

    fn lay(&self) -> Layout {
        Self::layout(self.input, self.hidden, self.dense)
    }

    pub fn zeros(input: usize, hidden: usize, dense: usize, window: usize) -> Result<Self> {
        if input == 0 || hidden == 0 || dense == 0 || window == 0 {
            return Err(Error::InvalidConfig("LSTM sizes must be positive".into()));
        }
        let n = Self::layout(input, hidden, dense).total;
        Ok(Lstm { input, hidden, dense, window, params: vec![T::zero(); n] })
    }

    /// Gate weights uniform in ±1/√H, forget bias 1, other gate biases 0.
    /// The ReLU layer uses He-normal weights, the output layer uniform
    /// ±1/√D; head biases start at 0.
    pub fn with_sizes(input: usize, hidden: usize, dense: usize, window: usize, seed: u64) -> Result<Self> {
        let mut m = Self::zeros(input, hidden, dense, window)?;
        let l = m.lay();
        let mut rng = rng_for(seed, &[label("lstm-init")]);
        let k = 1.0 / (hidden as f64).sqrt();
        for p in &mut m.params[l.w_x.start..l.w_h.end] {
            *p = T::of(rng.random_range(-k..=k));
        }
        for p in &mut m.params[l.b.start + hidden..l.b.start + 2 * hidden] {
            *p = T::one();
        }
        let he = Normal::new(0.0, (2.0 / hidden as f64).sqrt()).expect("positive sd");
        for p in &mut m.params[l.w_d] {
            *p = T::of(he.sample(&mut rng));
        }
        let ko = 1.0 / (dense as f64).sqrt();
        for p in &mut m.params[l.w_o] {
            *p = T::of(rng.random_range(-ko..=ko));
        }
        Ok(m)
    }

    /// 64 hidden units, 32-unit dense layer, scalar input, windows of `window`.
    pub fn init(window: usize, seed: u64) -> Result<Self> {
        Self::with_sizes(1, HIDDEN, DENSE, window, seed)
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    /// Same network in another precision.
    pub fn cast<U: Scalar>(&self) -> Lstm<U> {
        Lstm {
            input: self.input,
            hidden: self.hidden,
            dense: self.dense,
            window: self.window,
            params: self.params.iter().map(|p| U::of(p.to_f64_lossy())).collect(),
        }
    }

    /// Gate activations into `gates` (4H), given input `x` and previous `h`.
    fn gates_into(&self, x: &[T], h: &[T], gates: &mut [T]) {
        let l = self.lay();
        let (w_x, w_h, b) = (&self.params[l.w_x], &self.params[l.w_h], &self.params[l.b]);
        let hd = self.hidden;
        for (r, g) in gates.iter_mut().enumerate() {
            let z = dot(&w_x[r * self.input..(r + 1) * self.input], x) + dot(&w_h[r * hd..(r + 1) * hd], h) + b[r];
            *g = if (2 * hd..3 * hd).contains(&r) { z.tanh() } else { sigmoid(z) };
        }
    }

    /// One gated update: c' = f⊙c + i⊙g, h' = o⊙tanh(c').
    pub fn cell_step(&self, x: &[T], state: &CellState<T>) -> Result<CellState<T>> {
        if x.len() != self.input {
            return Err(Error::WidthMismatch { expected: self.input, got: x.len() });
        }
        if state.h.len() != self.hidden || state.c.len() != self.hidden {
            return Err(Error::WidthMismatch { expected: self.hidden, got: state.h.len().min(state.c.len()) });
        }
        let mut gates = vec![T::zero(); 4 * self.hidden];
        self.gates_into(x, &state.h, &mut gates);
        let mut next = CellState::zeros(self.hidden);
        let mut tc = vec![T::zero(); self.hidden];
        self.combine(&gates, &state.c, &mut next.c, &mut tc, &mut next.h);
        Ok(next)
    }

    fn combine(&self, gates: &[T], c_prev: &[T], c: &mut [T], tc: &mut [T], h: &mut [T]) {
        let hd = self.hidden;
        for j in 0..hd {
            let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
            c[j] = f * c_prev[j] + i * g;
            tc[j] = c[j].tanh();
            h[j] = o * tc[j];
        }
    }

    /// Dense ReLU layer then the scalar output.
    fn head(&self, h: &[T], dense: &mut [T]) -> T {
        let l = self.lay();
        let (w_d, b_d) = (&self.params[l.w_d], &self.params[l.b_d]);
        for (k, a) in dense.iter_mut().enumerate() {
            let z = dot(&w_d[k * self.hidden..(k + 1) * self.hidden], h) + b_d[k];
            *a = z.max(T::zero());
        }
        dot(&self.params[l.w_o], dense) + self.params[l.b_o]
    }

    fn check_window(&self, window: &[T]) -> Result<()> {
        if window.len() != self.window * self.input {
            return Err(Error::WidthMismatch { expected: self.window * self.input, got: window.len() });
        }
        Ok(())
    }

    pub(crate) fn tape(&self) -> Tape<T> {
        let z = |n| vec![T::zero(); n];
        Tape {
            gates: (0..self.window).map(|_| z(4 * self.hidden)).collect(),
            c: (0..=self.window).map(|_| z(self.hidden)).collect(),
            h: (0..=self.window).map(|_| z(self.hidden)).collect(),
            tc: (0..self.window).map(|_| z(self.hidden)).collect(),
            dense: z(self.dense),
            dz: z(4 * self.hidden),
            dh: z(self.hidden),
            dh_prev: z(self.hidden),
            dc: z(self.hidden),
        }
    }

    fn run(&self, window: &[T], tape: &mut Tape<T>) -> T {
        for t in 0..self.window {
            let x = &window[t * self.input..(t + 1) * self.input];
            self.gates_into(x, &tape.h[t], &mut tape.gates[t]);
            let (c_prev, c_next) = tape.c.split_at_mut(t + 1);
            self.combine(&tape.gates[t], &c_prev[t], &mut c_next[0], &mut tape.tc[t], &mut tape.h[t + 1]);
        }
        self.head(&tape.h[self.window], &mut tape.dense)
    }

    /// Unroll the window from a zero state and map the last hidden state
    /// through the head.
    pub fn forward_window(&self, window: &[T]) -> Result<T> {
        self.check_window(window)?;
        Ok(self.run(window, &mut self.tape()))
    }

    /// Adds `weight · ∂(ŷ − y)²/∂θ` to `grad` by backpropagation through time
    /// and returns (ŷ − y)².
    pub(crate) fn accumulate(&self, window: &[T], y: T, weight: T, grad: &mut [T], tape: &mut Tape<T>) -> T {
        let err = self.run(window, tape) - y;
        let l = self.lay();
        let (hd, inp) = (self.hidden, self.input);
        let d_out = weight * (err + err);

        // head
        grad[l.b_o] += d_out;
        axpy(d_out, &tape.dense, &mut grad[l.w_o.clone()]);
        tape.dh.iter_mut().for_each(|v| *v = T::zero());
        let h_last = &tape.h[self.window];
        for k in 0..self.dense {
            if tape.dense[k] <= T::zero() {
                continue;
            }
            let dz = d_out * self.params[l.w_o.start + k];
            grad[l.b_d.start + k] += dz;
            let row = l.w_d.start + k * hd;
            axpy(dz, h_last, &mut grad[row..row + hd]);
            axpy(dz, &self.params[row..row + hd], &mut tape.dh);
        }

        // recurrence
        tape.dc.iter_mut().for_each(|v| *v = T::zero());
        let one = T::one();
        for t in (0..self.window).rev() {
            let gates = &tape.gates[t];
            let (c_prev, tanh_c) = (&tape.c[t], &tape.tc[t]);
            for j in 0..hd {
                let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
                let tc = tanh_c[j];
                let dh = tape.dh[j];
                let dc = tape.dc[j] + dh * o * (one - tc * tc);
                tape.dz[j] = dc * g * i * (one - i);
                tape.dz[hd + j] = dc * c_prev[j] * f * (one - f);
                tape.dz[2 * hd + j] = dc * i * (one - g * g);
                tape.dz[3 * hd + j] = dh * tc * o * (one - o);
                tape.dc[j] = dc * f;
            }
            let x = &window[t * inp..(t + 1) * inp];
            let h_prev = &tape.h[t];
            tape.dh_prev.iter_mut().for_each(|v| *v = T::zero());
            for r in 0..4 * hd {
                let dz = tape.dz[r];
                grad[l.b.start + r] += dz;
                let wx = l.w_x.start + r * inp;
                axpy(dz, x, &mut grad[wx..wx + inp]);
                let wh = l.w_h.start + r * hd;
                axpy(dz, h_prev, &mut grad[wh..wh + hd]);
                axpy(dz, &self.params[wh..wh + hd], &mut tape.dh_prev);
            }
            std::mem::swap(&mut tape.dh, &mut tape.dh_prev);
        }
        err * err
    }

    fn check_batch(&self, windows: &[T], targets: &[T]) -> Result<()> {
        if targets.is_empty() {
            return Err(Error::EmptyInput("batch"));
        }
        let w = self.window * self.input;
        if windows.len() != w * targets.len() {
            return Err(Error::WidthMismatch { expected: w * targets.len(), got: windows.len() });
        }
        Ok(())
    }

    /// Mean squared error over row-major windows.
    pub fn loss(&self, windows: &[T], targets: &[T]) -> Result<T> {
        self.check_batch(windows, targets)?;
        let mut tape = self.tape();
        let w = self.window * self.input;
        let sse: T = targets
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let e = self.run(&windows[i * w..(i + 1) * w], &mut tape) - y;
                e * e
            })
            .sum();
        Ok(sse / T::of_usize(targets.len()))
    }

    /// Batch MSE and its gradient.
    pub fn gradient(&self, windows: &[T], targets: &[T]) -> Result<(T, Vec<T>)> {
        self.check_batch(windows, targets)?;
        let mut grad = vec![T::zero(); self.n_params()];
        let mut tape = self.tape();
        let w = self.window * self.input;
        let weight = T::one() / T::of_usize(targets.len());
        let mut sse = T::zero();
        for (i, &y) in targets.iter().enumerate() {
            sse += self.accumulate(&windows[i * w..(i + 1) * w], y, weight, &mut grad, &mut tape);
        }
        Ok((sse * weight, grad))
    }

    /// Smallest |pre-activation| of the dense ReLU layer on a window; gradient
    /// checks skip windows that sit on the kink.
    pub fn min_dense_margin(&self, window: &[T]) -> Result<T> {
        self.check_window(window)?;
        let mut tape = self.tape();
        self.run(window, &mut tape);
        let l = self.lay();
        let h = &tape.h[self.window];
        Ok((0..self.dense)
            .map(|k| {
                (dot(&self.params[l.w_d.start + k * self.hidden..l.w_d.start + (k + 1) * self.hidden], h)
                    + self.params[l.b_d.start + k])
                    .abs()
            })
            .fold(T::infinity(), |a, b| a.min(b)))
    }

    /// Raw access for tests and tools: (w_x, w_h, b) of the gates.
    pub fn gate_params_mut(&mut self) -> (&mut [T], &mut [T], &mut [T]) {
        let l = self.lay();
        let (head, rest) = self.params.split_at_mut(l.w_h.start);
        let (w_h, rest) = rest.split_at_mut(l.w_h.len());
        (&mut head[l.w_x], w_h, &mut rest[..l.b.len()])
    }
}

#[cfg(test)]
mod tests;
