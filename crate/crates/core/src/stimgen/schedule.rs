use super::{ModulatedParameter, ModulationKind, StimulationProtocol, TIME_EPS};
use crate::error::{Error, Result};

/// One pulse of a train with its effective (possibly modulated) parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pulse {
    pub start_s: f64,
    pub amplitude_ma: f64,
    pub pulse_width_ms: f64,
    /// Local period, i.e. time until the next pulse would start.
    pub period_s: f64,
}

impl Pulse {
    fn value_of(&self, parameter: ModulatedParameter) -> f64 {
        match parameter {
            ModulatedParameter::Amplitude => self.amplitude_ma,
            ModulatedParameter::PulseWidth => self.pulse_width_ms,
            ModulatedParameter::Frequency => 1.0 / self.period_s,
        }
    }
}

/// Pulses of a protocol. A pulse is emitted only when its whole period fits
/// inside the protocol duration, so an unmodulated train holds
/// `floor(duration * frequency)` pulses.
pub fn pulse_schedule(protocol: &StimulationProtocol) -> Result<Vec<Pulse>> {
    protocol.validate()?;
    let m = &protocol.modulation;
    let end = protocol.duration_s * (1.0 + TIME_EPS) + TIME_EPS;

    let base = |start_s: f64, period_s: f64| Pulse {
        start_s,
        amplitude_ma: protocol.amplitude_ma,
        pulse_width_ms: protocol.pulse_width_ms,
        period_s,
    };
    let set = |p: &mut Pulse, value: f64| match m.parameter {
        ModulatedParameter::Amplitude => p.amplitude_ma = value,
        ModulatedParameter::PulseWidth => p.pulse_width_ms = value,
        ModulatedParameter::Frequency => p.period_s = 1.0 / value,
    };

    let mut pulses = Vec::new();
    if m.modulates(ModulatedParameter::Frequency) {
        // Rate ramps: each pulse uses the frequency reached at its start time.
        let ramp = m.ramp_duration_s.expect("validated ramp");
        let mut t = 0.0;
        loop {
            let period = 1.0 / m.lerp(t / ramp);
            if t + period > end {
                break;
            }
            pulses.push(base(t, period));
            t += period;
        }
        return Ok(pulses);
    }

    let period = 1.0 / protocol.frequency_hz;
    let n = ((protocol.duration_s * protocol.frequency_hz) * (1.0 + TIME_EPS)).floor() as usize;
    pulses.extend((0..n).map(|k| base(k as f64 * period, period)));
    match m.kind {
        ModulationKind::None => {}
        ModulationKind::Staircase => {
            let steps = m.n_steps.expect("validated staircase");
            let hold = m.step_duration_s.expect("validated staircase");
            for p in &mut pulses {
                let j = ((p.start_s / hold) * (1.0 + TIME_EPS)).floor() as usize;
                set(p, staircase_value(m.min, m.max, steps, j.min(steps - 1)));
            }
        }
        ModulationKind::LinearRamp => {
            // Linear in pulse index across the pulses that start within the
            // ramp, reaching max on the last of them and holding it afterwards.
            let ramp = m.ramp_duration_s.expect("validated ramp");
            let in_ramp = ((ramp * protocol.frequency_hz) * (1.0 + TIME_EPS)).floor() as usize;
            for (k, p) in pulses.iter_mut().enumerate() {
                let value = if in_ramp <= 1 { m.max } else { m.lerp(k as f64 / (in_ramp - 1) as f64) };
                set(p, value);
            }
        }
    }
    Ok(pulses)
}

fn staircase_value(min: f64, max: f64, steps: usize, j: usize) -> f64 {
    if j + 1 >= steps {
        max
    } else {
        min + (max - min) * j as f64 / (steps - 1) as f64
    }
}

/// Time course of the modulated parameter as `(time_offset_s, value)` pairs:
/// one entry per step for staircases, one per pulse for linear ramps.
pub fn expand_modulation(protocol: &StimulationProtocol) -> Result<Vec<(f64, f64)>> {
    let m = &protocol.modulation;
    m.validate()?;
    match m.kind {
        ModulationKind::None => Err(Error::InvalidSchedule("protocol has no modulation".into())),
        ModulationKind::Staircase => {
            protocol.validate()?;
            let steps = m.n_steps.expect("validated staircase");
            let hold = m.step_duration_s.expect("validated staircase");
            Ok((0..steps).map(|j| (j as f64 * hold, staircase_value(m.min, m.max, steps, j))).collect())
        }
        ModulationKind::LinearRamp => {
            Ok(pulse_schedule(protocol)?.iter().map(|p| (p.start_s, p.value_of(m.parameter))).collect())
        }
    }
}
