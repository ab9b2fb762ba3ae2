use serde::{Deserialize, Serialize};

use super::{Partition, SplitAssignment};
use crate::error::{Error, Result};
use crate::mtwin::ForceTrace;
use crate::scalar::Scalar;

/// Linear map of the observed range onto [0, 1]. Values outside the fitted
/// range are not clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler {
    pub observed_min: f64,
    pub observed_max: f64,
}

impl MinMaxScaler {
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) =
            values.into_iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return Err(Error::EmptyInput("scaler fit values"));
        }
        Ok(MinMaxScaler { observed_min: lo, observed_max: hi })
    }

    fn span(&self) -> f64 {
        self.observed_max - self.observed_min
    }

    pub fn apply(&self, x: f64) -> f64 {
        if self.span() > 0.0 {
            (x - self.observed_min) / self.span()
        } else {
            0.0
        }
    }

    pub fn invert(&self, y: f64) -> f64 {
        self.observed_min + y * self.span()
    }
}

/// Fixed-width windows of consecutive force samples, each paired with the
/// sample that follows it. Windows never straddle two experiments.
#[derive(Debug, Clone, PartialEq)]
pub struct SlidingWindowSet<T: Scalar> {
    pub width: usize,
    /// Row-major, `width` values per window.
    pub inputs: Vec<T>,
    pub targets: Vec<T>,
    /// (experiment, index of the first sample) per window.
    pub provenance: Vec<(usize, usize)>,
    /// Present once values have been scaled.
    pub scaler: Option<MinMaxScaler>,
}

impl<T: Scalar> SlidingWindowSet<T> {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn window(&self, i: usize) -> &[T] {
        &self.inputs[i * self.width..(i + 1) * self.width]
    }
}

impl SlidingWindowSet<f64> {
    /// Fit a scaler on every value touched by the windows of `partition`.
    pub fn fit_scaler(&self, split: &SplitAssignment, partition: Partition) -> Result<MinMaxScaler> {
        let idx = split.indices(partition);
        MinMaxScaler::fit(
            idx.iter().flat_map(|&i| self.window(i).iter().copied().chain(std::iter::once(self.targets[i]))),
        )
    }

    pub fn scaled<T: Scalar>(&self, scaler: MinMaxScaler) -> SlidingWindowSet<T> {
        SlidingWindowSet {
            width: self.width,
            inputs: self.inputs.iter().map(|&v| T::of(scaler.apply(v))).collect(),
            targets: self.targets.iter().map(|&v| T::of(scaler.apply(v))).collect(),
            provenance: self.provenance.clone(),
            scaler: Some(scaler),
        }
    }
}

/// Raw (unscaled) windows with stride 1: a trace of length L gives L − width pairs.
pub fn make_windows(traces: &[ForceTrace], width: usize) -> Result<SlidingWindowSet<f64>> {
    if width == 0 {
        return Err(Error::InvalidConfig("window width must be positive".into()));
    }
    let total: usize = traces.iter().map(|t| t.len().saturating_sub(width)).sum();
    let mut set = SlidingWindowSet {
        width,
        inputs: Vec::with_capacity(total * width),
        targets: Vec::with_capacity(total),
        provenance: Vec::with_capacity(total),
        scaler: None,
    };
    for t in traces {
        let f = &t.forces_n;
        if f.len() <= width {
            return Err(Error::TraceTooShort { len: f.len(), needed: width + 1 });
        }
        for start in 0..f.len() - width {
            set.inputs.extend_from_slice(&f[start..start + width]);
            set.targets.push(f[start + width]);
            set.provenance.push((t.meta.experiment, start));
        }
    }
    Ok(set)
}
