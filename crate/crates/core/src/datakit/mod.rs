//! Feature rows, encoders, scalers, sliding windows and seeded splits.

mod encoder;
mod split;
mod windows;

pub use encoder::{CategoricalFeature, Encoder, NumericFeature, Vocabulary};
pub use split::{split, split_by_group, split_dynamic, split_static, Partition, SplitAssignment};
pub use windows::{make_windows, MinMaxScaler, SlidingWindowSet};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mtwin::{ForceTrace, BASELINE_SAMPLES};
use crate::scalar::Scalar;
use crate::stimgen::WaveformKind;

/// Window width of the one-step forecaster.
pub const WINDOW_WIDTH: usize = 10;

/// Unencoded static features of one experiment and its peak force.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticRow {
    pub experiment: usize,
    pub sample_id: String,
    pub waveform: WaveformKind,
    pub frequency_hz: f64,
    pub pulse_width_ms: f64,
    pub baseline_n: Option<f64>,
    pub max_force_n: f64,
}

impl StaticRow {
    pub(crate) fn categorical(&self) -> [&str; 2] {
        [&self.sample_id, self.waveform.name()]
    }

    pub(crate) fn numeric(&self) -> Vec<f64> {
        let mut v = vec![self.frequency_hz, self.pulse_width_ms];
        v.extend(self.baseline_n);
        v
    }
}

pub fn extract_static_row(trace: &ForceTrace, include_baseline: bool) -> Result<StaticRow> {
    let f = &trace.forces_n;
    if f.len() <= BASELINE_SAMPLES {
        return Err(Error::TraceTooShort { len: f.len(), needed: BASELINE_SAMPLES + 1 });
    }
    let max_force_n = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let baseline_n = include_baseline.then(|| f[..BASELINE_SAMPLES].iter().sum::<f64>() / BASELINE_SAMPLES as f64);
    let p = &trace.meta.protocol;
    Ok(StaticRow {
        experiment: trace.meta.experiment,
        sample_id: trace.meta.sample_id.clone(),
        waveform: p.waveform,
        frequency_hz: p.frequency_hz,
        pulse_width_ms: p.pulse_width_ms,
        baseline_n,
        max_force_n,
    })
}

pub fn extract_static_rows(traces: &[ForceTrace], include_baseline: bool) -> Result<Vec<StaticRow>> {
    traces.iter().map(|t| extract_static_row(t, include_baseline)).collect()
}

/// Dense row-major feature matrix with one target per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Dataset<T: Scalar> {
    pub width: usize,
    pub features: Vec<T>,
    pub targets: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(width: usize, features: Vec<T>, targets: Vec<T>) -> Result<Self> {
        if features.len() != width * targets.len() {
            return Err(Error::WidthMismatch { expected: width * targets.len(), got: features.len() });
        }
        Ok(Dataset { width, features, targets })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.features[i * self.width..(i + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.features.chunks_exact(self.width.max(1)).take(self.len())
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.width);
        let mut targets = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            targets.push(self.targets[i]);
        }
        Dataset { width: self.width, features, targets }
    }
}

/// Encode rows with a fitted encoder; targets stay in newtons.
pub fn encode_rows<T: Scalar>(encoder: &Encoder, rows: &[StaticRow]) -> Result<Dataset<T>> {
    let mut features = Vec::with_capacity(rows.len() * encoder.width());
    for r in rows {
        features.extend(encoder.apply::<T>(r)?);
    }
    let targets = rows.iter().map(|r| T::of(r.max_force_n)).collect();
    Dataset::new(encoder.width(), features, targets)
}

/// Tab-separated table: one column per encoded feature, then the target.
pub fn write_static_table<T: Scalar>(path: &Path, encoder: &Encoder, data: &Dataset<T>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = encoder.feature_names();
    header.push("max_force_N".into());
    writeln!(out, "{}", header.join("\t"))?;
    for (row, y) in data.rows().zip(&data.targets) {
        for v in row {
            write!(out, "{}\t", v)?;
        }
        writeln!(out, "{}", y)?;
    }
    out.flush()?;
    Ok(())
}
