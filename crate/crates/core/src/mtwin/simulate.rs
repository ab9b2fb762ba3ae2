use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use super::{samples_in, ForceTrace, MuscleParams, TraceMeta, MIN_QUIET_PERIOD_S, SAMPLE_PERIOD_S};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::sigmoid;
use crate::stimgen::{sample_pulse_train, StimulationProtocol};

/// Force response to `protocol` after `quiet_period_s` of rest; the record
/// ends with the stimulation.
pub fn simulate_force(
    protocol: &StimulationProtocol,
    params: &MuscleParams,
    quiet_period_s: f64,
    seed: u64,
) -> Result<ForceTrace> {
    simulate_recording(protocol, params, quiet_period_s, 0.0, seed)
}

/// Like [`simulate_force`] but keeps recording for `post_period_s` after the
/// stimulation ends.
pub fn simulate_recording(
    protocol: &StimulationProtocol,
    params: &MuscleParams,
    quiet_period_s: f64,
    post_period_s: f64,
    seed: u64,
) -> Result<ForceTrace> {
    if !(quiet_period_s.is_finite() && quiet_period_s >= MIN_QUIET_PERIOD_S - 1e-12) {
        return Err(Error::InvalidQuietPeriod(quiet_period_s));
    }
    if !(post_period_s.is_finite() && post_period_s >= 0.0) {
        return Err(Error::InvalidConfig(format!("post period {post_period_s} s")));
    }
    params.validate()?;
    let rate = protocol.default_sample_rate_hz();
    let stimulus = sample_pulse_train(protocol, rate)?;

    let n_quiet = samples_in(quiet_period_s);
    let n_total = n_quiet + samples_in(protocol.duration_s) + samples_in(post_period_s);
    let steps_per_sample = (rate * SAMPLE_PERIOD_S).round() as usize;
    let dt = 1.0 / rate;

    let muscle = Dynamics::new(params);
    let quiet_decay = [(-SAMPLE_PERIOD_S / params.drive_tau_s).exp(), (-SAMPLE_PERIOD_S / params.tau_fall_s).exp()];
    let mut state = [0.0f64; 2];
    let mut activation = vec![0.0; n_total];
    for (block, a) in activation.iter_mut().skip(n_quiet).enumerate() {
        *a = state[1];
        let start = (block * steps_per_sample).min(stimulus.values.len());
        let end = ((block + 1) * steps_per_sample).min(stimulus.values.len());
        let input = &stimulus.values[start..end];
        if input.iter().all(|&c| c == 0.0) && muscle.recruitment(state[0]) < 1e-12 {
            // no input and no recruitment: both states decay exponentially
            state = [state[0] * quiet_decay[0], state[1] * quiet_decay[1]];
            continue;
        }
        for k in 0..steps_per_sample {
            let current = input.get(k).map_or(0.0, |c| c.abs());
            state = muscle.rk4(state, current, dt);
        }
    }

    let mut rng = Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, params.noise_sd_n).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let forces_n = activation
        .into_iter()
        .map(|a| {
            let clean = params.baseline_n + params.f_max_n * a.max(0.0).powf(params.activation_exponent);
            if params.noise_sd_n > 0.0 {
                clean + noise.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect();

    Ok(ForceTrace {
        sample_period_s: SAMPLE_PERIOD_S,
        forces_n,
        meta: TraceMeta {
            experiment: 0,
            sample_id: params.sample_id.clone(),
            protocol: protocol.clone(),
            quiet_period_s,
            post_period_s,
        },
    })
}

struct Dynamics {
    drive_tau: f64,
    tau_rise: f64,
    tau_fall: f64,
    threshold: f64,
    width: f64,
    rest: f64,
}

impl Dynamics {
    fn new(p: &MuscleParams) -> Self {
        let rest = sigmoid(-p.excitability_ma / p.recruitment_width_ma);
        Dynamics {
            drive_tau: p.drive_tau_s,
            tau_rise: p.tau_rise_s,
            tau_fall: p.tau_fall_s,
            threshold: p.excitability_ma,
            width: p.recruitment_width_ma,
            rest,
        }
    }

    /// Recruitment in [0, 1], zero at zero drive.
    fn recruitment(&self, drive: f64) -> f64 {
        let s = sigmoid((drive - self.threshold) / self.width);
        ((s - self.rest) / (1.0 - self.rest)).max(0.0)
    }

    fn derivative(&self, [drive, act]: [f64; 2], current: f64) -> [f64; 2] {
        let u = self.recruitment(drive);
        let tau = if u > act { self.tau_rise } else { self.tau_fall };
        [(current - drive) / self.drive_tau, (u - act) / tau]
    }

    fn rk4(&self, y: [f64; 2], current: f64, dt: f64) -> [f64; 2] {
        let add = |y: [f64; 2], k: [f64; 2], h: f64| [y[0] + h * k[0], y[1] + h * k[1]];
        let k1 = self.derivative(y, current);
        let k2 = self.derivative(add(y, k1, dt / 2.0), current);
        let k3 = self.derivative(add(y, k2, dt / 2.0), current);
        let k4 = self.derivative(add(y, k3, dt), current);
        [
            y[0] + dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }
}
