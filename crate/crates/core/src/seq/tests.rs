use super::*;
use crate::datakit::{make_windows, split_dynamic, MinMaxScaler};
use proptest::prelude::*;
use std::cell::Cell;

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn random_window(rng: &mut crate::rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

#[test]
fn zero_parameters() {
    let m = Lstm::<f64>::zeros(1, 64, 32, 10).unwrap();
    let s = m.cell_step(&[3.7], &CellState::zeros(64)).unwrap();
    assert!(s.h.iter().chain(&s.c).all(|&v| v == 0.0));
    assert_eq!(m.forward_window(&[0.4; 10]).unwrap(), 0.0);
}

#[test]
fn scalar_cell_matches_hand_evaluation() {
    let mut m = Lstm::<f64>::zeros(1, 1, 1, 1).unwrap();
    let (wx, wh, b) = m.gate_params_mut();
    wx.copy_from_slice(&[0.5, -0.3, 0.8, 0.2]);
    wh.copy_from_slice(&[0.1, 0.4, -0.6, 0.7]);
    b.copy_from_slice(&[0.05, 1.0, -0.1, 0.2]);
    let (x, h, c) = (0.9, -0.2, 0.6);
    let i = sig(0.5 * x + 0.1 * h + 0.05);
    let f = sig(-0.3 * x + 0.4 * h + 1.0);
    let g = (0.8 * x - 0.6 * h - 0.1).tanh();
    let o = sig(0.2 * x + 0.7 * h + 0.2);
    let c2 = f * c + i * g;
    let h2 = o * c2.tanh();
    let s = m.cell_step(&[x], &CellState { h: vec![h], c: vec![c] }).unwrap();
    assert!((s.c[0] - c2).abs() < 1e-15);
    assert!((s.h[0] - h2).abs() < 1e-15);
}

#[test]
fn saturated_forget_gate_keeps_cell() {
    let mut m = Lstm::<f64>::zeros(1, 3, 2, 1).unwrap();
    m.gate_params_mut().2[3..6].fill(100.0);
    let state = CellState { h: vec![0.1, -0.4, 0.3], c: vec![1.5, -2.0, 0.25] };
    let s = m.cell_step(&[0.7], &state).unwrap();
    for (a, b) in s.c.iter().zip(&state.c) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn width_errors() {
    let m = Lstm::<f64>::init(10, 1).unwrap();
    assert_eq!(m.forward_window(&[0.0; 9]).unwrap_err().category(), "width-mismatch");
    assert!(m.cell_step(&[0.0, 1.0], &CellState::zeros(64)).is_err());
    assert!(m.cell_step(&[0.0], &CellState::zeros(8)).is_err());
}

#[test]
fn unrolled_forward_equals_chained_cells() {
    let mut rng = rng_for(2, &[]);
    for seed in 0..10 {
        let m = Lstm::<f64>::init(10, seed).unwrap();
        let series = random_window(&mut rng, 25);
        let window = &series[7..17];
        let mut s = CellState::zeros(64);
        for &x in window {
            s = m.cell_step(&[x], &s).unwrap();
        }
        // head, evaluated independently
        let l = m.lay();
        let mut out = m.params[l.b_o];
        for k in 0..32 {
            let mut z = m.params[l.b_d.start + k];
            for j in 0..64 {
                z += m.params[l.w_d.start + k * 64 + j] * s.h[j];
            }
            out += m.params[l.w_o.start + k] * z.max(0.0);
        }
        let got = m.forward_window(window).unwrap();
        assert!((got - out).abs() < 1e-12, "{got} {out}");
        // values outside the window do not matter
        let mut other = series.clone();
        other[..7].iter_mut().for_each(|v| *v = 9.0);
        other[17..].iter_mut().for_each(|v| *v = -9.0);
        assert_eq!(m.forward_window(&other[7..17]).unwrap(), got);
    }
}

#[test]
fn zero_error_and_batch_linearity() {
    let m = Lstm::<f64>::with_sizes(1, 4, 3, 10, 7).unwrap();
    let mut rng = rng_for(8, &[]);
    let w = random_window(&mut rng, 20);
    let ys = [m.forward_window(&w[..10]).unwrap(), m.forward_window(&w[10..]).unwrap()];
    let (loss, g) = m.gradient(&w, &ys).unwrap();
    assert_eq!(loss, 0.0);
    assert!(g.iter().all(|&v| v == 0.0));

    let ys = [0.3, -0.1];
    let (_, g) = m.gradient(&w, &ys).unwrap();
    let (_, g0) = m.gradient(&w[..10], &ys[..1]).unwrap();
    let (_, g1) = m.gradient(&w[10..], &ys[1..]).unwrap();
    for i in 0..g.len() {
        assert!((g[i] - 0.5 * (g0[i] + g1[i])).abs() < 1e-14);
    }
}

#[test]
fn bptt_matches_finite_differences() {
    let mut rng = rng_for(9, &[]);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut seed = 0;
    while checked < 100 {
        seed += 1;
        let m = Lstm::<f64>::with_sizes(1, 4, 3, 10, seed).unwrap();
        let w = random_window(&mut rng, 20);
        let ys = random_window(&mut rng, 2);
        if w.chunks(10).any(|x| m.min_dense_margin(x).unwrap() < 1e-3) {
            continue;
        }
        let (_, g) = m.gradient(&w, &ys).unwrap();
        let h = 1e-5;
        let mut p = m.clone();
        for (i, &gi) in g.iter().enumerate() {
            p.params[i] = m.params[i] + h;
            let up = p.loss(&w, &ys).unwrap();
            p.params[i] = m.params[i] - h;
            let down = p.loss(&w, &ys).unwrap();
            p.params[i] = m.params[i];
            let numeric = (up - down) / (2.0 * h);
            let scale = gi.abs().max(numeric.abs());
            if scale > 1e-7 {
                worst = worst.max((gi - numeric).abs() / scale);
            }
        }
        checked += 1;
    }
    assert!(worst < 1e-4, "worst relative error {worst}");
}

fn synthetic_set(n_traces: usize) -> SlidingWindowSet<f64> {
    let traces: Vec<_> = (0..n_traces)
        .map(|e| {
            let mut t = crate::datakit::tests::trace(
                (0..80).map(|k| 1e-4 * (1.0 + 0.5 * (0.3 * k as f64 + e as f64).sin())).collect(),
            );
            t.meta.experiment = e;
            t
        })
        .collect();
    let raw = make_windows(&traces, 10).unwrap();
    raw.scaled(MinMaxScaler::fit(raw.targets.iter().copied()).unwrap())
}

use crate::datakit::SlidingWindowSet;

#[test]
fn training_reduces_validation_loss_and_is_deterministic() {
    let set = synthetic_set(6);
    let split = split_dynamic(set.len(), (0.7, 0.15, 0.15), 1).unwrap();
    let cfg = SeqConfig { epochs: 8, ..Default::default() };
    let (m, h) = train_dynamic(&set, &split, &cfg, 3).unwrap();
    assert_eq!(h.validation_loss.len(), 8);
    assert!(h.validation_loss[7] < h.initial_validation_loss.unwrap(), "{h:?}");
    let (m2, h2) = train_dynamic(&set, &split, &cfg, 3).unwrap();
    assert_eq!(m, m2);
    assert_eq!(h, h2);
}

#[test]
fn memorizes_a_repeated_window() {
    let mut set = synthetic_set(1);
    set.inputs.truncate(10);
    set.targets.truncate(1);
    set.provenance.truncate(1);
    let one = set.clone();
    for _ in 0..31 {
        set.inputs.extend_from_slice(&one.inputs);
        set.targets.push(one.targets[0]);
        set.provenance.push(one.provenance[0]);
    }
    let split = crate::datakit::SplitAssignment { labels: vec![crate::datakit::Partition::Train; 32], seed: 0 };
    let cfg = SeqConfig { epochs: 1500, ..Default::default() };
    let (m, _) = train_dynamic(&set, &split, &cfg, 4).unwrap();
    let loss = m.loss(&set.inputs[..10], &set.targets[..1]).unwrap();
    assert!(loss < 1e-8, "{loss}");
}

#[test]
fn checkpoint_flag_returns_best_epoch() {
    let set = synthetic_set(4);
    let split = split_dynamic(set.len(), (0.6, 0.2, 0.2), 2).unwrap();
    let cfg = SeqConfig { epochs: 4, keep_best_validation: true, ..Default::default() };
    let (m, h) = train_dynamic(&set, &split, &cfg, 1).unwrap();
    let valid = split.indices(crate::datakit::Partition::Validation);
    let best = h.validation_loss.iter().copied().fold(f64::INFINITY, f64::min);
    assert!((train::partition_loss_for_tests(&m, &set, &valid) - best).abs() < 1e-15);
}

#[test]
fn training_errors() {
    let set = synthetic_set(1);
    let split = crate::datakit::SplitAssignment { labels: vec![crate::datakit::Partition::Test; set.len()], seed: 0 };
    assert_eq!(train_dynamic(&set, &split, &SeqConfig::default(), 0).unwrap_err().category(), "empty-input");
    let cfg = SeqConfig { epochs: 0, ..Default::default() };
    assert_eq!(train_dynamic(&set, &split, &cfg, 0).unwrap_err().category(), "invalid-config");
}

struct Oracle<'a> {
    series: &'a [f64],
    calls: Cell<usize>,
}

impl OneStepPredictor for Oracle<'_> {
    fn window(&self) -> usize {
        10
    }
    fn predict_next(&self, _: &[f64]) -> f64 {
        let k = self.calls.get();
        self.calls.set(k + 1);
        self.series[k + 10]
    }
}

struct LastValue;

impl OneStepPredictor for LastValue {
    fn window(&self) -> usize {
        10
    }
    fn predict_next(&self, w: &[f64]) -> f64 {
        w[9]
    }
}

#[test]
fn forecast_stub_contracts() {
    let forces: Vec<f64> = (0..40).map(|k| 1e-4 + 1e-6 * k as f64).collect();
    let scaler = MinMaxScaler::fit(forces.iter().copied()).unwrap();
    let scaled: Vec<f64> = forces.iter().map(|&f| scaler.apply(f)).collect();
    let oracle = Oracle { series: &scaled, calls: Cell::new(0) };
    let r = forecast(&oracle, &forces, &scaler, ForecastMode::TeacherForced).unwrap();
    assert_eq!(r.scaled, scaled[10..].to_vec());
    assert_eq!(r.offset, 10);
    for (a, b) in r.forces_n.iter().zip(&forces[10..]) {
        assert!((a - b).abs() < 1e-18);
    }
    let r = forecast(&LastValue, &forces, &scaler, ForecastMode::Autoregressive).unwrap();
    assert_eq!(r.scaled.len(), 30);
    assert!(r.scaled.iter().all(|&v| v == scaled[9]));
    assert_eq!(
        forecast(&LastValue, &forces[..10], &scaler, ForecastMode::TeacherForced).unwrap_err().category(),
        "trace-too-short"
    );
}

proptest! {
    #[test]
    fn hidden_state_is_bounded(seed in 0u64..500, xs in proptest::collection::vec(-1e3f64..1e3, 1..20)) {
        let m = Lstm::<f64>::with_sizes(1, 8, 4, 1, seed).unwrap();
        let mut s = CellState::zeros(8);
        for x in xs {
            s = m.cell_step(&[x], &s).unwrap();
            prop_assert!(s.h.iter().all(|h| h.abs() <= 1.0 && h.is_finite()));
        }
    }

    #[test]
    fn teacher_forced_length(len in 11usize..80) {
        let forces = vec![1e-4; len];
        let scaler = MinMaxScaler::fit([0.0, 2e-4]).unwrap();
        let m = Lstm::<f32>::init(10, 0).unwrap();
        let r = forecast(&m, &forces, &scaler, ForecastMode::TeacherForced).unwrap();
        prop_assert_eq!(r.scaled.len(), len - 10);
    }
}
