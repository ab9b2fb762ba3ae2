use serde::{Deserialize, Serialize};

use super::{pulse_schedule, StimulationProtocol};
use crate::error::{Error, Result};

/// Stimulus current sampled on a uniform grid. Sample `k` holds the mean
/// current (mA) over `[k, k + 1) / sample_rate_hz`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledSignal {
    pub sample_rate_hz: f64,
    pub values: Vec<f64>,
}

impl SampledSignal {
    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.values.len() as f64 * self.dt()
    }
}

pub fn sample_pulse_train(protocol: &StimulationProtocol, sample_rate_hz: f64) -> Result<SampledSignal> {
    protocol.validate()?;
    let narrowest_ms = protocol.pulse_width_range_ms().0;
    if !(sample_rate_hz.is_finite() && narrowest_ms * sample_rate_hz / 1000.0 >= 2.0 - 1e-9) {
        return Err(Error::SampleRateTooLow { rate_hz: sample_rate_hz, pulse_width_ms: narrowest_ms });
    }
    let dt = 1.0 / sample_rate_hz;
    let n = (protocol.duration_s * sample_rate_hz).round() as usize;
    let mut values = vec![0.0; n];
    for pulse in pulse_schedule(protocol)? {
        if pulse.amplitude_ma == 0.0 {
            continue;
        }
        let segments = protocol.waveform.segments(pulse.amplitude_ma, pulse.pulse_width_ms, pulse.period_s);
        for (t0, t1, v0, v1) in segments {
            let (a, b) = (pulse.start_s + t0, pulse.start_s + t1);
            let slope = (v1 - v0) / (b - a);
            let first = (a / dt).floor().max(0.0) as usize;
            let last = ((b / dt).ceil() as usize).min(n);
            for (k, v) in values.iter_mut().enumerate().take(last).skip(first) {
                let lo = a.max(k as f64 * dt);
                let hi = b.min((k + 1) as f64 * dt);
                if hi > lo {
                    let mid = 0.5 * (lo + hi);
                    *v += (hi - lo) * (v0 + slope * (mid - a)) / dt;
                }
            }
        }
    }
    Ok(SampledSignal { sample_rate_hz, values })
}

/// Net delivered charge in µC: trapezoidal integral of the current with the
/// stimulator idle (zero current) on both sides of the record.
pub fn net_charge(signal: &SampledSignal) -> f64 {
    let dt = signal.dt();
    let mut prev = 0.0;
    let mut total = 0.0;
    for &v in signal.values.iter().chain(std::iter::once(&0.0)) {
        total += 0.5 * (prev + v) * dt;
        prev = v;
    }
    // mA * s = mC
    total * 1000.0
}
