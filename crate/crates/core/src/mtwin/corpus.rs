use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{simulate_recording, ForceTrace, MuscleParams};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, label, rng_for};
use crate::stimgen::{ModulatedParameter as P, ModulationSchedule, StimulationProtocol, WaveformKind};

/// `count` repetitions of one protocol on one muscle ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub protocol: StimulationProtocol,
    pub sample_id: String,
    pub count: usize,
    /// Recording kept after the stimulation ends, seconds.
    #[serde(default)]
    pub post_period_s: f64,
}

/// Spread of the per-ring and per-experiment random factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Variability {
    /// Half-width of the uniform multiplicative factors applied per ring: one
    /// size factor shared by `f_max_n` and `baseline_n`, one for
    /// `excitability_ma`.
    pub ring_spread: f64,
    /// Half-width of the uniform multiplicative factor applied per experiment
    /// to the ring's baseline (pre-tension drift between sessions).
    pub baseline_drift: f64,
    /// Fraction of the baseline drift passed on to `f_max_n`; a ring mounted
    /// with more pre-stretch also develops more active force.
    pub drift_coupling: f64,
}

impl Default for Variability {
    fn default() -> Self {
        Variability { ring_spread: 0.3, baseline_drift: 0.15, drift_coupling: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub entries: Vec<CorpusEntry>,
    pub quiet_period_s: f64,
    pub seed: u64,
    #[serde(default)]
    pub noise_free: bool,
    #[serde(default)]
    pub variability: Variability,
    /// Ring before variability; `MuscleParams::reference` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<MuscleParams>,
}

impl CorpusSpec {
    pub fn experiment_count(&self) -> usize {
        self.entries.iter().map(|e| e.count).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(Error::EmptyInput("corpus spec has no entries"));
        }
        for e in &self.entries {
            if e.count == 0 {
                return Err(Error::InvalidConfig(format!("entry for {} has count 0", e.sample_id)));
            }
            e.protocol.validate()?;
        }
        Ok(())
    }

    /// Muscle parameters of one ring: the reference scaled by seeded factors
    /// that depend only on the corpus seed and the ring id.
    pub fn ring_params(&self, sample_id: &str) -> MuscleParams {
        let mut p = self.reference.clone().unwrap_or_else(|| MuscleParams::reference(sample_id));
        p.sample_id = sample_id.to_string();
        let spread = self.variability.ring_spread;
        let mut rng = rng_for(self.seed, &[label("ring"), label(sample_id)]);
        let mut factor = || 1.0 + spread * (2.0 * rng.random::<f64>() - 1.0);
        let size = factor();
        p.f_max_n *= size;
        p.baseline_n *= size;
        p.excitability_ma *= factor();
        if self.noise_free {
            p.noise_sd_n = 0.0;
        }
        p
    }

    /// The standard protocol mix: 161 experiments on rings S1 to S15 whose
    /// frequency and pulse-width marginals follow the laboratory dataset
    /// (50/30/20/35/70/25 Hz: 69/48/30/12/1/1 experiments; 15/5/20/10/8/40/30/28
    /// ms: 53/41/17/15/13/10/9/3) and whose recordings add up to 123786 samples.
    pub fn standard(seed: u64) -> Self {
        use WaveformKind::{
            BiphasicAsymmetricBalanced as Asym, BiphasicSymmetric as Sym, Monophasic as Mono, TriangularBiphasic as Tri,
        };
        const AMP: f64 = 18.0;
        type Row = (f64, f64, WaveformKind, usize);
        fn push_group(
            entries: &mut Vec<CorpusEntry>,
            rings: &[&str],
            rows: &[Row],
            duration_s: f64,
            post_s: f64,
            modulate: &dyn Fn(f64, f64) -> ModulationSchedule,
        ) {
            let mut next = 0usize;
            for &(freq, pw, waveform, count) in rows {
                for _ in 0..count {
                    let protocol = StimulationProtocol::new(waveform, AMP, freq, pw, duration_s)
                        .with_modulation(modulate(freq, pw));
                    entries.push(CorpusEntry {
                        protocol,
                        sample_id: rings[next % rings.len()].to_string(),
                        count: 1,
                        post_period_s: post_s,
                    });
                    next += 1;
                }
            }
        }
        let mut entries: Vec<CorpusEntry> = Vec::new();
        // tetanic contraction
        push_group(
            &mut entries,
            &["S4", "S5", "S6"],
            &[
                (70.0, 5.0, Sym, 1),
                (25.0, 20.0, Mono, 1),
                (20.0, 40.0, Mono, 3),
                (20.0, 20.0, Tri, 2),
                (20.0, 20.0, Asym, 2),
                (30.0, 30.0, Mono, 3),
                (30.0, 15.0, Tri, 3),
                (30.0, 15.0, Asym, 4),
                (50.0, 15.0, Mono, 4),
                (50.0, 8.0, Tri, 4),
                (50.0, 8.0, Asym, 4),
            ],
            10.0,
            11.0,
            &|_, _| ModulationSchedule::none(),
        );
        // linear amplitude ramp 0 -> 18 mA over 80 s
        push_group(
            &mut entries,
            &["S1", "S2", "S3"],
            &[(50.0, 5.0, Sym, 3), (50.0, 5.0, Asym, 2)],
            80.0,
            9.2,
            &|_, _| ModulationSchedule::ramp(P::Amplitude, 0.0, AMP, 80.0),
        );
        // amplitude staircase 3 -> 18 mA, 6 steps of 2 s
        push_group(
            &mut entries,
            &["S7", "S8", "S9"],
            &[
                (20.0, 40.0, Mono, 4),
                (20.0, 20.0, Sym, 2),
                (20.0, 20.0, Tri, 2),
                (30.0, 28.0, Mono, 2),
                (30.0, 15.0, Sym, 4),
                (30.0, 15.0, Tri, 4),
                (30.0, 15.0, Asym, 4),
                (50.0, 15.0, Mono, 7),
                (50.0, 10.0, Mono, 2),
                (50.0, 5.0, Sym, 3),
                (50.0, 5.0, Tri, 3),
                (50.0, 5.0, Asym, 2),
            ],
            12.0,
            11.0,
            &|_, _| ModulationSchedule::staircase(P::Amplitude, 3.0, AMP, 6, 2.0),
        );
        // pulse-width staircase 2 ms -> nominal width, 6 steps of 2 s
        push_group(
            &mut entries,
            &["S13", "S14", "S15"],
            &[
                (20.0, 40.0, Mono, 3),
                (20.0, 20.0, Sym, 2),
                (20.0, 20.0, Asym, 1),
                (20.0, 30.0, Mono, 2),
                (30.0, 30.0, Mono, 3),
                (30.0, 15.0, Sym, 4),
                (30.0, 15.0, Tri, 3),
                (30.0, 15.0, Asym, 3),
                (30.0, 20.0, Mono, 1),
                (50.0, 15.0, Mono, 6),
                (50.0, 10.0, Mono, 2),
                (50.0, 5.0, Sym, 3),
                (50.0, 5.0, Tri, 3),
                (50.0, 5.0, Asym, 3),
            ],
            12.0,
            11.0,
            &|_, pw| ModulationSchedule::staircase(P::PulseWidth, 2.0, pw, 6, 2.0),
        );
        // linear pulse-width ramps, symmetric biphasic only
        for (i, &(freq, pw, min_pw, duration)) in [
            (30.0, 10.0, 0.1, 10.0),
            (30.0, 10.0, 2.0, 20.0),
            (35.0, 10.0, 0.1, 10.0),
            (35.0, 10.0, 2.0, 20.0),
            (35.0, 8.0, 0.1, 10.0),
            (50.0, 8.0, 2.0, 20.0),
            (50.0, 5.0, 0.1, 10.0),
        ]
        .iter()
        .enumerate()
        {
            entries.push(CorpusEntry {
                protocol: StimulationProtocol::new(Sym, AMP, freq, pw, duration)
                    .with_modulation(ModulationSchedule::ramp(P::PulseWidth, min_pw, pw, duration)),
                sample_id: ["S13", "S14"][i % 2].to_string(),
                count: 1,
                post_period_s: 10.92,
            });
        }
        // linear frequency ramps over 20 s; the nominal frequency is the top of the ramp
        let freq_ramp = |from: f64| move |to: f64, _| ModulationSchedule::ramp(P::Frequency, from, to, 20.0);
        let rings = ["S10", "S11", "S12"];
        push_group(
            &mut entries,
            &rings,
            &[
                (20.0, 20.0, Sym, 2),
                (20.0, 20.0, Tri, 1),
                (20.0, 20.0, Asym, 1),
                (20.0, 30.0, Mono, 1),
                (20.0, 5.0, Tri, 1),
                (20.0, 5.0, Asym, 1),
            ],
            20.0,
            11.0,
            &freq_ramp(10.0),
        );
        push_group(
            &mut entries,
            &rings,
            &[
                (30.0, 15.0, Asym, 1),
                (30.0, 10.0, Sym, 1),
                (30.0, 10.0, Tri, 1),
                (30.0, 10.0, Asym, 1),
                (30.0, 5.0, Mono, 1),
                (30.0, 5.0, Sym, 1),
                (30.0, 5.0, Tri, 1),
                (30.0, 5.0, Asym, 1),
            ],
            20.0,
            11.0,
            &freq_ramp(10.0),
        );
        push_group(
            &mut entries,
            &rings,
            &[
                (35.0, 10.0, Sym, 1),
                (35.0, 10.0, Tri, 1),
                (35.0, 8.0, Sym, 1),
                (35.0, 8.0, Tri, 1),
                (35.0, 8.0, Asym, 1),
                (35.0, 15.0, Mono, 2),
                (35.0, 28.0, Mono, 1),
                (35.0, 5.0, Asym, 1),
            ],
            20.0,
            11.0,
            &freq_ramp(20.0),
        );
        push_group(
            &mut entries,
            &rings,
            &[
                (50.0, 15.0, Mono, 2),
                (50.0, 10.0, Mono, 1),
                (50.0, 5.0, Sym, 2),
                (50.0, 5.0, Tri, 2),
                (50.0, 5.0, Asym, 1),
            ],
            20.0,
            11.0,
            &freq_ramp(10.0),
        );
        push_group(
            &mut entries,
            &rings,
            &[
                (50.0, 15.0, Mono, 2),
                (50.0, 10.0, Mono, 1),
                (50.0, 5.0, Sym, 2),
                (50.0, 5.0, Tri, 1),
                (50.0, 5.0, Asym, 2),
            ],
            20.0,
            11.0,
            &freq_ramp(35.0),
        );

        CorpusSpec {
            entries,
            quiet_period_s: 4.0,
            seed,
            noise_free: false,
            variability: Variability::default(),
            reference: None,
        }
    }
}

/// Simulate every experiment of `spec`, in entry order. Ring parameters are
/// drawn once per ring id; each experiment gets its own noise seed and
/// baseline drift derived from `(spec.seed, experiment index)`.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<ForceTrace>> {
    spec.validate()?;
    let mut rings: BTreeMap<&str, MuscleParams> = BTreeMap::new();
    let mut traces = Vec::with_capacity(spec.experiment_count());
    let mut index = 0usize;
    for entry in &spec.entries {
        let ring = rings.entry(entry.sample_id.as_str()).or_insert_with(|| spec.ring_params(&entry.sample_id)).clone();
        for _ in 0..entry.count {
            let mut params = ring.clone();
            let mut rng = rng_for(spec.seed, &[label("drift"), index as u64]);
            let drift = spec.variability.baseline_drift;
            let stretch = drift * (2.0 * rng.random::<f64>() - 1.0);
            params.baseline_n *= 1.0 + stretch;
            params.f_max_n *= 1.0 + spec.variability.drift_coupling * stretch;
            let noise_seed = derive_seed(spec.seed, &[label("noise"), index as u64]);
            let mut trace =
                simulate_recording(&entry.protocol, &params, spec.quiet_period_s, entry.post_period_s, noise_seed)?;
            trace.meta.experiment = index;
            traces.push(trace);
            index += 1;
        }
    }
    Ok(traces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tally<K: Ord>(spec: &CorpusSpec, key: impl Fn(&CorpusEntry) -> K) -> BTreeMap<K, usize> {
        let mut m = BTreeMap::new();
        for e in &spec.entries {
            *m.entry(key(e)).or_insert(0) += e.count;
        }
        m
    }

    #[test]
    fn standard_mix_matches_dataset_marginals() {
        let spec = CorpusSpec::standard(0);
        spec.validate().unwrap();
        assert_eq!(spec.experiment_count(), 161);
        let freq = tally(&spec, |e| e.protocol.frequency_hz as u32);
        let expected: BTreeMap<u32, usize> =
            [(50, 69), (30, 48), (20, 30), (35, 12), (70, 1), (25, 1)].into_iter().collect();
        assert_eq!(freq, expected);
        let pw = tally(&spec, |e| e.protocol.pulse_width_ms as u32);
        let expected: BTreeMap<u32, usize> =
            [(15, 53), (5, 41), (20, 17), (10, 15), (8, 13), (40, 10), (30, 9), (28, 3)].into_iter().collect();
        assert_eq!(pw, expected);
        let rings = tally(&spec, |e| e.sample_id.clone());
        assert_eq!(rings.len(), 15);
    }

    #[test]
    fn standard_mix_has_dataset_length() {
        let spec = CorpusSpec::standard(0);
        let total: usize = spec
            .entries
            .iter()
            .map(|e| {
                e.count
                    * (super::super::samples_in(spec.quiet_period_s)
                        + super::super::samples_in(e.protocol.duration_s)
                        + super::super::samples_in(e.post_period_s))
            })
            .sum();
        assert_eq!(total, 123_786);
    }

    #[test]
    fn ring_params_depend_on_ring_only() {
        let spec = CorpusSpec::standard(9);
        assert_eq!(spec.ring_params("S3"), spec.ring_params("S3"));
        assert_ne!(spec.ring_params("S3").f_max_n, spec.ring_params("S4").f_max_n);
        let r = spec.ring_params("S3");
        let nominal = MuscleParams::reference("S3");
        assert!((r.f_max_n / nominal.f_max_n - 1.0).abs() <= 0.3);
    }

    #[test]
    fn single_entry_gives_single_trace() {
        let spec = CorpusSpec {
            entries: vec![CorpusEntry {
                protocol: StimulationProtocol::new(WaveformKind::Monophasic, 18.0, 20.0, 5.0, 1.0),
                sample_id: "S1".into(),
                count: 1,
                post_period_s: 0.0,
            }],
            quiet_period_s: 0.4,
            seed: 1,
            noise_free: false,
            variability: Variability::default(),
            reference: None,
        };
        let corpus = generate_corpus(&spec).unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus[0].len(), 35);
    }

    #[test]
    fn empty_spec_is_rejected() {
        let mut spec = CorpusSpec::standard(1);
        spec.entries.clear();
        assert!(matches!(generate_corpus(&spec), Err(Error::EmptyInput(_))));
    }
}
