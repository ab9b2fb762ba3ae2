use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use biotwin::artifact::{load_artifact, save_artifact, ModelArtifact, Precision};
use biotwin::evalkit::{
    residual_report, summarize, write_histogram, write_residuals, write_scatter, write_summary, DEFAULT_BINS,
    DEFAULT_OUTLIER_K,
};
use biotwin::mtwin::{generate_corpus, read_corpus, read_trace, write_corpus, ForceTrace, SAMPLE_PERIOD_S};
use biotwin::pipeline::{evaluate_dynamic, evaluate_static, run_dynamic, run_static};
use biotwin::seq::{forecast, ForecastMode};

use crate::manifest::{Invocation, RunManifest};
use crate::Failure;

/// Rows of the forecast table also written to the zoom file.
pub const ZOOM_STEPS: usize = 100;

/// Execute `inv`, then write its manifest next to the outputs.
pub fn execute(inv: Invocation) -> Result<RunManifest, Failure> {
    let start = Instant::now();
    let out = inv.out().to_path_buf();
    fs::create_dir_all(&out).map_err(|e| Failure::new("io", format!("cannot create {}: {e}", out.display())))?;
    let outputs = match &inv {
        Invocation::Generate { spec, out } => {
            let traces = generate_corpus(spec)?;
            let manifest = write_corpus(out, spec, &traces)?;
            let mut files = vec![biotwin::mtwin::CORPUS_MANIFEST.to_string()];
            files.extend(manifest.experiments.into_iter().map(|e| e.file));
            files
        }
        Invocation::TrainStatic { corpus, model, config, seed, out } => {
            let traces = load_corpus(corpus)?;
            let o = run_static(&traces, *model, config, *seed)?;
            save_artifact(&out.join("model.json"), &o.artifact)?;
            let mut metrics = vec![("mse", o.metrics.mse), ("r2", o.metrics.r2), ("n", o.metrics.n as f64)];
            metrics.extend([("residual_mean", o.residuals.mean), ("residual_sd", o.residuals.sd)]);
            write_summary(&out.join("metrics.tsv"), &metrics)?;
            write_scatter(&out.join("scatter.tsv"), &o.test_true, &o.test_pred)?;
            write_residuals(&out.join("residuals.tsv"), &o.residuals)?;
            write_histogram(&out.join("histogram.tsv"), &o.residuals.histogram)?;
            write_lines(&out.join("test_experiments.txt"), "experiment", o.test_experiments.iter())?;
            let mut files: Vec<String> =
                ["model.json", "metrics.tsv", "scatter.tsv", "residuals.tsv", "histogram.tsv", "test_experiments.txt"]
                    .map(String::from)
                    .to_vec();
            if let Some(search) = &o.search {
                let text = serde_json::to_string_pretty(search).map_err(biotwin::Error::from)?;
                fs::write(out.join("search.json"), text + "\n").map_err(biotwin::Error::from)?;
                files.push("search.json".into());
            }
            if let Some(h) = &o.history {
                let rows = std::iter::once(h.initial_loss).chain(h.epoch_loss.iter().copied());
                write_lines(
                    &out.join("history.tsv"),
                    "epoch\ttrain_loss",
                    rows.enumerate().map(|(e, l)| format!("{e}\t{l:e}")),
                )?;
                files.push("history.tsv".into());
            }
            files
        }
        Invocation::TrainDynamic { corpus, config, seed, out } => {
            let traces = load_corpus(corpus)?;
            let o = run_dynamic(&traces, config, *seed)?;
            save_artifact(&out.join("model.json"), &o.artifact)?;
            write_summary(
                &out.join("metrics.tsv"),
                &[
                    ("mse_scaled", o.metrics_scaled.mse),
                    ("r2_scaled", o.metrics_scaled.r2),
                    ("mse_N2", o.metrics_newtons.mse),
                    ("r2_N", o.metrics_newtons.r2),
                    ("n", o.metrics_scaled.n as f64),
                    ("windows", o.window_count as f64),
                ],
            )?;
            write_scatter(&out.join("scatter.tsv"), &o.test_true, &o.test_pred)?;
            let h = &o.history;
            // epoch 0 is the untrained model; it has no training loss
            let mut rows: Vec<String> =
                h.initial_validation_loss.map(|v| format!("0\tNaN\t{v:e}")).into_iter().collect();
            let epochs = h.train_loss.iter().zip(&h.validation_loss).enumerate();
            rows.extend(epochs.map(|(e, (t, v))| format!("{}\t{t:e}\t{v:e}", e + 1)));
            write_lines(&out.join("history.tsv"), "epoch\ttrain_loss\tvalidation_loss", rows.iter())?;
            ["model.json", "metrics.tsv", "scatter.tsv", "history.tsv"].map(String::from).to_vec()
        }
        Invocation::Evaluate { model, corpus, out } => {
            let artifact = load_artifact(model).map_err(at(model))?;
            let traces = load_corpus(corpus)?;
            if let ModelArtifact::Lstm { scaler, .. } = &artifact {
                let (truth, pred) = evaluate_dynamic(&artifact, &traces)?;
                let scaled = summarize(&truth, &pred)?;
                let n: Vec<f64> = truth.iter().map(|&s| scaler.invert(s)).collect();
                let p: Vec<f64> = pred.iter().map(|&s| scaler.invert(s)).collect();
                let newtons = summarize(&n, &p)?;
                write_summary(
                    &out.join("metrics.tsv"),
                    &[
                        ("mse_scaled", scaled.mse),
                        ("r2_scaled", scaled.r2),
                        ("mse_N2", newtons.mse),
                        ("r2_N", newtons.r2),
                        ("n", scaled.n as f64),
                    ],
                )?;
                write_scatter(&out.join("scatter.tsv"), &truth, &pred)?;
                ["metrics.tsv", "scatter.tsv"].map(String::from).to_vec()
            } else {
                let (truth, pred) = evaluate_static(&artifact, &traces)?;
                let m = summarize(&truth, &pred)?;
                let r = residual_report(&truth, &pred, DEFAULT_BINS, DEFAULT_OUTLIER_K)?;
                write_summary(
                    &out.join("metrics.tsv"),
                    &[
                        ("mse", m.mse),
                        ("r2", m.r2),
                        ("n", m.n as f64),
                        ("residual_mean", r.mean),
                        ("residual_sd", r.sd),
                    ],
                )?;
                write_scatter(&out.join("scatter.tsv"), &truth, &pred)?;
                write_residuals(&out.join("residuals.tsv"), &r)?;
                write_histogram(&out.join("histogram.tsv"), &r.histogram)?;
                ["metrics.tsv", "scatter.tsv", "residuals.tsv", "histogram.tsv"].map(String::from).to_vec()
            }
        }
        Invocation::Forecast { model, trace, mode, out } => {
            let artifact = load_artifact(model).map_err(at(model))?;
            let ModelArtifact::Lstm { scaler, precision, model } = artifact else {
                return Err(Failure::new(
                    "incompatible-artifact",
                    format!("{} is not a dynamic model", model.display()),
                ));
            };
            let forces = read_trace(trace).map_err(at(trace))?;
            let result = match precision {
                Precision::F32 => forecast(&model.cast::<f32>(), &forces, &scaler, *mode)?,
                Precision::F64 => forecast(&model, &forces, &scaler, *mode)?,
            };
            let rows: Vec<String> = result
                .forces_n
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    let i = result.offset + k;
                    format!("{:.6}\t{:e}\t{p:e}\t{}", i as f64 * SAMPLE_PERIOD_S, forces[i], mode.name())
                })
                .collect();
            let header = "time_s\ttrue_force_N\tpredicted_force_N\tmode";
            write_lines(&out.join("forecast.tsv"), header, rows.iter())?;
            write_lines(&out.join("forecast_zoom.tsv"), header, rows.iter().take(ZOOM_STEPS))?;
            let m = summarize(&forces[result.offset..], &result.forces_n)?;
            write_summary(&out.join("metrics.tsv"), &[("mse_N2", m.mse), ("r2_N", m.r2), ("n", m.n as f64)])?;
            ["forecast.tsv", "forecast_zoom.tsv", "metrics.tsv"].map(String::from).to_vec()
        }
    };
    let manifest = RunManifest::new(inv, outputs, start.elapsed().as_secs_f64());
    manifest.write(&out)?;
    Ok(manifest)
}

fn load_corpus(dir: &Path) -> Result<Vec<ForceTrace>, Failure> {
    let (_, traces) = read_corpus(dir).map_err(at(dir))?;
    if traces.len() < 2 {
        return Err(Failure::new(
            "corpus-too-small",
            format!("{} holds {} experiment(s), at least 2 needed", dir.display(), traces.len()),
        ));
    }
    Ok(traces)
}

/// Attach `path` to an error's message, keeping its category.
fn at(path: &Path) -> impl Fn(biotwin::Error) -> Failure + '_ {
    move |e| {
        let f = Failure::from(e);
        Failure::new(f.category, format!("{}: {}", path.display(), f.message))
    }
}

fn write_lines<I: std::fmt::Display>(path: &Path, header: &str, rows: impl Iterator<Item = I>) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure::new("io", format!("{}: {e}", path.display()));
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    writeln!(w, "{header}").map_err(io)?;
    for r in rows {
        writeln!(w, "{r}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Parse a forecast mode name.
pub fn parse_mode(s: &str) -> Result<ForecastMode, Failure> {
    Ok(s.parse::<ForecastMode>()?)
}
