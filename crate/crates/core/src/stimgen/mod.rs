//! Stimulation protocols and their sampled current waveforms.
//!
//! Currents are signed milliamps with the leading (stimulating) phase positive.
//! Every waveform is described analytically as piecewise-linear segments, and
//! sampling stores the exact mean current over each sample cell, so integrating
//! a sampled train recovers the analog charge up to rounding.

mod schedule;
mod signal;

pub use schedule::{expand_modulation, pulse_schedule, Pulse};
pub use signal::{net_charge, sample_pulse_train, SampledSignal};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample rate used for synthesis unless the narrowest phase needs more.
pub const DEFAULT_SAMPLE_RATE_HZ: f64 = 10_000.0;
/// Sample rate used when a phase is narrower than 0.2 ms.
pub const FINE_SAMPLE_RATE_HZ: f64 = 20_000.0;
/// Nominal recovery/leading duration ratio of the asymmetric waveform.
pub const ASYMMETRIC_RATIO: f64 = 4.0;

const TIME_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveformKind {
    Monophasic,
    BiphasicSymmetric,
    BiphasicAsymmetricBalanced,
    TriangularBiphasic,
}

impl WaveformKind {
    pub const ALL: [WaveformKind; 4] = [
        WaveformKind::Monophasic,
        WaveformKind::BiphasicSymmetric,
        WaveformKind::BiphasicAsymmetricBalanced,
        WaveformKind::TriangularBiphasic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WaveformKind::Monophasic => "monophasic",
            WaveformKind::BiphasicSymmetric => "biphasic_symmetric",
            WaveformKind::BiphasicAsymmetricBalanced => "biphasic_asymmetric_balanced",
            WaveformKind::TriangularBiphasic => "triangular_biphasic",
        }
    }

    pub fn is_biphasic(self) -> bool {
        self != WaveformKind::Monophasic
    }

    /// Shortest time one pulse occupies, in ms.
    pub fn min_envelope_ms(self, pulse_width_ms: f64) -> f64 {
        if self.is_biphasic() {
            2.0 * pulse_width_ms
        } else {
            pulse_width_ms
        }
    }

    /// Largest pulse width that fits the period at `frequency_hz`, keeping a 1 ms
    /// idle gap before the next pulse.
    pub fn max_pulse_width_ms(self, frequency_hz: f64) -> f64 {
        let period_ms = 1000.0 / frequency_hz;
        if self.is_biphasic() {
            (period_ms - 1.0) / 2.0
        } else {
            period_ms - 1.0
        }
    }

    /// Piecewise-linear segments `(t0, t1, v0, v1)` of one pulse, times in
    /// seconds from the pulse start.
    pub(crate) fn segments(self, amplitude_ma: f64, pulse_width_ms: f64, period_s: f64) -> Vec<(f64, f64, f64, f64)> {
        let a = amplitude_ma;
        let pw = pulse_width_ms / 1000.0;
        match self {
            WaveformKind::Monophasic => vec![(0.0, pw, a, a)],
            WaveformKind::BiphasicSymmetric => vec![(0.0, pw, a, a), (pw, 2.0 * pw, -a, -a)],
            WaveformKind::BiphasicAsymmetricBalanced => {
                // 1:4 recovery, shortened when the period cannot hold it.
                let recovery = (ASYMMETRIC_RATIO * pw).min(period_s - pw).max(pw);
                let r = a * pw / recovery;
                vec![(0.0, pw, a, a), (pw, pw + recovery, -r, -r)]
            }
            WaveformKind::TriangularBiphasic => {
                let h = pw / 2.0;
                vec![(0.0, h, 0.0, a), (h, pw, a, 0.0), (pw, pw + h, 0.0, -a), (pw + h, 2.0 * pw, -a, 0.0)]
            }
        }
    }
}

impl fmt::Display for WaveformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for WaveformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "monophasic" | "mono" => Ok(WaveformKind::Monophasic),
            "biphasic_symmetric" | "sym" | "symmetric" => Ok(WaveformKind::BiphasicSymmetric),
            "biphasic_asymmetric_balanced" | "asym" | "asymmetric" => Ok(WaveformKind::BiphasicAsymmetricBalanced),
            "triangular_biphasic" | "tri" | "triangular" => Ok(WaveformKind::TriangularBiphasic),
            other => Err(Error::Parse(format!("unknown waveform {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulationKind {
    #[default]
    None,
    Staircase,
    LinearRamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulatedParameter {
    #[default]
    Amplitude,
    PulseWidth,
    Frequency,
}

/// How one stimulation parameter varies during a protocol. While a schedule is
/// active it overrides the protocol's value for that parameter; the protocol
/// field keeps the nominal value reported for the experiment.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModulationSchedule {
    pub kind: ModulationKind,
    pub parameter: ModulatedParameter,
    pub min: f64,
    pub max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_duration_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ramp_duration_s: Option<f64>,
}

impl ModulationSchedule {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn staircase(parameter: ModulatedParameter, min: f64, max: f64, n_steps: usize, step_duration_s: f64) -> Self {
        ModulationSchedule {
            kind: ModulationKind::Staircase,
            parameter,
            min,
            max,
            n_steps: Some(n_steps),
            step_duration_s: Some(step_duration_s),
            ramp_duration_s: None,
        }
    }

    pub fn ramp(parameter: ModulatedParameter, min: f64, max: f64, ramp_duration_s: f64) -> Self {
        ModulationSchedule {
            kind: ModulationKind::LinearRamp,
            parameter,
            min,
            max,
            n_steps: None,
            step_duration_s: None,
            ramp_duration_s: Some(ramp_duration_s),
        }
    }

    pub fn is_active(&self) -> bool {
        self.kind != ModulationKind::None
    }

    pub fn modulates(&self, parameter: ModulatedParameter) -> bool {
        self.is_active() && self.parameter == parameter
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSchedule(msg));
        match self.kind {
            ModulationKind::None => return Ok(()),
            ModulationKind::Staircase => {
                if self.parameter == ModulatedParameter::Frequency {
                    return bad("staircase modulation applies to amplitude or pulse width only".into());
                }
                match self.n_steps {
                    Some(n) if n >= 2 => {}
                    other => return bad(format!("staircase needs n_steps >= 2, got {other:?}")),
                }
                match self.step_duration_s {
                    Some(d) if d.is_finite() && d > 0.0 => {}
                    other => return bad(format!("staircase needs step_duration_s > 0, got {other:?}")),
                }
            }
            ModulationKind::LinearRamp => match self.ramp_duration_s {
                Some(d) if d.is_finite() && d > 0.0 => {}
                other => return bad(format!("ramp needs ramp_duration_s > 0, got {other:?}")),
            },
        }
        if !(self.min.is_finite() && self.max.is_finite()) || self.min > self.max {
            return bad(format!("need finite min <= max, got [{}, {}]", self.min, self.max));
        }
        let floor_ok = match self.parameter {
            ModulatedParameter::Amplitude => self.min >= 0.0,
            ModulatedParameter::PulseWidth | ModulatedParameter::Frequency => self.min > 0.0,
        };
        if !floor_ok {
            return bad(format!("minimum {} out of range for {:?}", self.min, self.parameter));
        }
        Ok(())
    }

    /// Schedule value `frac` of the way from min to max (clamped).
    pub(crate) fn lerp(&self, frac: f64) -> f64 {
        if frac >= 1.0 {
            self.max
        } else if frac <= 0.0 {
            self.min
        } else {
            self.min + (self.max - self.min) * frac
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StimulationProtocol {
    pub waveform: WaveformKind,
    #[serde(rename = "amplitude_mA")]
    pub amplitude_ma: f64,
    #[serde(rename = "frequency_Hz")]
    pub frequency_hz: f64,
    pub pulse_width_ms: f64,
    pub duration_s: f64,
    #[serde(default)]
    pub modulation: ModulationSchedule,
}

impl StimulationProtocol {
    pub fn new(
        waveform: WaveformKind,
        amplitude_ma: f64,
        frequency_hz: f64,
        pulse_width_ms: f64,
        duration_s: f64,
    ) -> Self {
        StimulationProtocol {
            waveform,
            amplitude_ma,
            frequency_hz,
            pulse_width_ms,
            duration_s,
            modulation: ModulationSchedule::none(),
        }
    }

    pub fn with_modulation(mut self, modulation: ModulationSchedule) -> Self {
        self.modulation = modulation;
        self
    }

    fn range_of(&self, parameter: ModulatedParameter, nominal: f64) -> (f64, f64) {
        if self.modulation.modulates(parameter) {
            (self.modulation.min, self.modulation.max)
        } else {
            (nominal, nominal)
        }
    }

    /// (min, max) pulse width the protocol ever uses.
    pub fn pulse_width_range_ms(&self) -> (f64, f64) {
        self.range_of(ModulatedParameter::PulseWidth, self.pulse_width_ms)
    }

    pub fn frequency_range_hz(&self) -> (f64, f64) {
        self.range_of(ModulatedParameter::Frequency, self.frequency_hz)
    }

    pub fn amplitude_range_ma(&self) -> (f64, f64) {
        self.range_of(ModulatedParameter::Amplitude, self.amplitude_ma)
    }

    /// Synthesis rate: 10 kHz, or 20 kHz when a phase is narrower than 0.2 ms.
    pub fn default_sample_rate_hz(&self) -> f64 {
        if self.pulse_width_range_ms().0 < 0.2 {
            FINE_SAMPLE_RATE_HZ
        } else {
            DEFAULT_SAMPLE_RATE_HZ
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(self.amplitude_ma.is_finite() && self.amplitude_ma >= 0.0) {
            return Err(Error::InvalidProtocol(format!("amplitude {} mA", self.amplitude_ma)));
        }
        if !positive(self.frequency_hz) {
            return Err(Error::InvalidProtocol(format!("frequency {} Hz", self.frequency_hz)));
        }
        if !positive(self.pulse_width_ms) {
            return Err(Error::InvalidProtocol(format!("pulse width {} ms", self.pulse_width_ms)));
        }
        if !positive(self.duration_s) {
            return Err(Error::InvalidProtocol(format!("duration {} s", self.duration_s)));
        }
        self.modulation.validate()?;
        let envelope_ms = self.waveform.min_envelope_ms(self.pulse_width_range_ms().1);
        let period_ms = 1000.0 / self.frequency_range_hz().1;
        if envelope_ms > period_ms * (1.0 + TIME_EPS) {
            return Err(Error::PeriodOverflow { envelope_ms, period_ms });
        }
        Ok(())
    }
}
