//! Synthetic muscle-ring force simulator.
//!
//! The rectified stimulus current is low-pass filtered into a recruitment
//! drive, a sigmoid maps the drive onto [0, 1], and first-order activation
//! dynamics with separate rise and fall time constants turn it into force.
//! That is enough to reproduce isolated twitches at 1 Hz, summation at 20 Hz
//! and fused tetanic plateaus at 50 Hz. Force is sampled every 40 ms.

mod corpus;
mod io;
mod simulate;

pub use corpus::{generate_corpus, CorpusEntry, CorpusSpec, Variability};
pub use io::{
    read_corpus, read_trace, write_corpus, write_trace, CorpusManifest, ExperimentRecord, CORPUS_FORMAT,
    CORPUS_MANIFEST,
};
pub use simulate::{simulate_force, simulate_recording};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stimgen::StimulationProtocol;

/// Force sampling period of every trace, seconds.
pub const SAMPLE_PERIOD_S: f64 = 0.04;
/// Unstimulated samples at the start of a trace used as the baseline window.
pub const BASELINE_SAMPLES: usize = 10;
/// Shortest quiet period that keeps the baseline window unstimulated.
pub const MIN_QUIET_PERIOD_S: f64 = BASELINE_SAMPLES as f64 * SAMPLE_PERIOD_S;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuscleParams {
    pub sample_id: String,
    /// Force at full activation above baseline, N.
    pub f_max_n: f64,
    pub baseline_n: f64,
    pub tau_rise_s: f64,
    pub tau_fall_s: f64,
    pub activation_exponent: f64,
    /// Drive (mA) at which recruitment reaches half its range.
    #[serde(rename = "excitability_mA")]
    pub excitability_ma: f64,
    /// Sigmoid width of the recruitment curve, mA.
    #[serde(rename = "recruitment_width_mA")]
    pub recruitment_width_ma: f64,
    /// Time constant of the low-pass filter on the rectified current, s.
    pub drive_tau_s: f64,
    pub noise_sd_n: f64,
}

impl MuscleParams {
    /// Nominal ring before inter-sample variability is applied.
    pub fn reference(sample_id: impl Into<String>) -> Self {
        MuscleParams {
            sample_id: sample_id.into(),
            f_max_n: 1.6e-4,
            baseline_n: 5.0e-5,
            tau_rise_s: 0.02,
            tau_fall_s: 0.3,
            activation_exponent: 1.0,
            excitability_ma: 3.0,
            recruitment_width_ma: 1.5,
            drive_tau_s: 0.002,
            noise_sd_n: 2.0e-6,
        }
    }

    pub fn noise_free(mut self) -> Self {
        self.noise_sd_n = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f_max_n", self.f_max_n),
            ("tau_rise_s", self.tau_rise_s),
            ("tau_fall_s", self.tau_fall_s),
            ("excitability_mA", self.excitability_ma),
            ("recruitment_width_mA", self.recruitment_width_ma),
            ("drive_tau_s", self.drive_tau_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParams(format!("{name} = {v} must be positive")));
            }
        }
        if !(self.baseline_n.is_finite() && self.baseline_n >= 0.0) {
            return Err(Error::InvalidParams(format!("baseline_n = {}", self.baseline_n)));
        }
        if !(self.noise_sd_n.is_finite() && self.noise_sd_n >= 0.0) {
            return Err(Error::InvalidParams(format!("noise_sd_n = {}", self.noise_sd_n)));
        }
        if !(self.activation_exponent.is_finite() && self.activation_exponent >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "activation_exponent = {} must be >= 1",
                self.activation_exponent
            )));
        }
        if self.tau_fall_s < self.tau_rise_s {
            return Err(Error::InvalidParams("tau_fall_s must be >= tau_rise_s".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub experiment: usize,
    pub sample_id: String,
    pub protocol: StimulationProtocol,
    pub quiet_period_s: f64,
    #[serde(default)]
    pub post_period_s: f64,
}

impl TraceMeta {
    /// Index of the first force sample taken after stimulation starts.
    pub fn onset_index(&self) -> usize {
        samples_in(self.quiet_period_s)
    }

    /// Index one past the last stimulated force sample.
    pub fn offset_index(&self) -> usize {
        self.onset_index() + samples_in(self.protocol.duration_s)
    }
}

/// Uniformly sampled force record of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForceTrace {
    pub sample_period_s: f64,
    pub forces_n: Vec<f64>,
    pub meta: TraceMeta,
}

impl ForceTrace {
    pub fn len(&self) -> usize {
        self.forces_n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forces_n.is_empty()
    }

    pub fn time_s(&self, index: usize) -> f64 {
        index as f64 * self.sample_period_s
    }
}

pub(crate) fn samples_in(seconds: f64) -> usize {
    (seconds / SAMPLE_PERIOD_S).round() as usize
}
