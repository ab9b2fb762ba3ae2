#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn biotwin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_biotwin")).args(args).output().expect("biotwin runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = biotwin(args);
    assert!(out.status.success(), "biotwin {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Twelve short experiments on three rings.
pub const SMALL_SPEC: &str = r#"
quiet_period_s = 1.0
seed = 3

[[entries]]
sample_id = "S1"
count = 4
post_period_s = 1.0
protocol = { waveform = "monophasic", amplitude_mA = 18.0, frequency_Hz = 50.0, pulse_width_ms = 5.0, duration_s = 3.0 }

[[entries]]
sample_id = "S2"
count = 4
post_period_s = 1.0
protocol = { waveform = "biphasic_symmetric", amplitude_mA = 18.0, frequency_Hz = 20.0, pulse_width_ms = 10.0, duration_s = 3.0 }

[[entries]]
sample_id = "S3"
count = 4
post_period_s = 1.0
protocol = { waveform = "triangular_biphasic", amplitude_mA = 18.0, frequency_Hz = 30.0, pulse_width_ms = 8.0, duration_s = 3.0 }
"#;

/// Write `SMALL_SPEC` under `dir` and generate a corpus from it.
pub fn small_corpus(dir: &Path) -> PathBuf {
    std::fs::create_dir_all(dir).unwrap();
    let spec = dir.join("spec.toml");
    std::fs::write(&spec, SMALL_SPEC).unwrap();
    let corpus = dir.join("corpus");
    ok(&["generate", "--spec", p(&spec), "-o", p(&corpus)]);
    corpus
}
