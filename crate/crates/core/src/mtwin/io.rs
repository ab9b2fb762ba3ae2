//! On-disk corpus layout: `corpus.json` plus one two-column table per
//! experiment under `traces/`.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CorpusSpec, ForceTrace, TraceMeta, SAMPLE_PERIOD_S};
use crate::error::{Error, Result};
use crate::stimgen::StimulationProtocol;

pub const CORPUS_MANIFEST: &str = "corpus.json";
pub const CORPUS_FORMAT: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub experiment: usize,
    pub sample_id: String,
    pub protocol: StimulationProtocol,
    pub quiet_period_s: f64,
    pub post_period_s: f64,
    pub samples: usize,
    /// Relative to the corpus directory.
    pub file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub format_version: u32,
    pub sample_period_s: f64,
    pub seed: u64,
    pub noise_free: bool,
    pub total_samples: usize,
    pub experiments: Vec<ExperimentRecord>,
}

/// Two tab-separated columns `time_s`, `force_N`, 17 significant digits.
pub fn write_trace(path: &Path, trace: &ForceTrace) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "time_s\tforce_N")?;
    for (i, f) in trace.forces_n.iter().enumerate() {
        writeln!(w, "{:.16e}\t{:.16e}", trace.time_s(i), f)?;
    }
    w.flush()?;
    Ok(())
}

/// Forces of a trace file written by [`write_trace`].
pub fn read_trace(path: &Path) -> Result<Vec<f64>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut forces = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("time")) {
            continue;
        }
        let mut cols = line.split(['\t', ',', ' ']).filter(|c| !c.is_empty());
        let parsed = cols.nth(1).map(str::parse::<f64>);
        match parsed {
            Some(Ok(f)) if f.is_finite() => forces.push(f),
            _ => return Err(Error::Parse(format!("{}:{}: bad force row {line:?}", path.display(), lineno + 1))),
        }
    }
    Ok(forces)
}

pub fn write_corpus(dir: &Path, spec: &CorpusSpec, traces: &[ForceTrace]) -> Result<CorpusManifest> {
    let trace_dir = dir.join("traces");
    fs::create_dir_all(&trace_dir)?;
    let mut experiments = Vec::with_capacity(traces.len());
    for t in traces {
        let file = format!("traces/exp_{:04}_{}.tsv", t.meta.experiment, t.meta.sample_id);
        write_trace(&dir.join(&file), t)?;
        experiments.push(ExperimentRecord {
            experiment: t.meta.experiment,
            sample_id: t.meta.sample_id.clone(),
            protocol: t.meta.protocol.clone(),
            quiet_period_s: t.meta.quiet_period_s,
            post_period_s: t.meta.post_period_s,
            samples: t.len(),
            file,
        });
    }
    let manifest = CorpusManifest {
        format_version: CORPUS_FORMAT,
        sample_period_s: SAMPLE_PERIOD_S,
        seed: spec.seed,
        noise_free: spec.noise_free,
        total_samples: traces.iter().map(ForceTrace::len).sum(),
        experiments,
    };
    fs::write(dir.join(CORPUS_MANIFEST), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(manifest)
}

pub fn read_corpus(dir: &Path) -> Result<(CorpusManifest, Vec<ForceTrace>)> {
    let path: PathBuf = dir.join(CORPUS_MANIFEST);
    let manifest: CorpusManifest = serde_json::from_str(&fs::read_to_string(&path)?)?;
    if manifest.format_version != CORPUS_FORMAT {
        return Err(Error::Parse(format!("{}: unsupported corpus format {}", path.display(), manifest.format_version)));
    }
    let traces = manifest
        .experiments
        .iter()
        .map(|rec| {
            let forces_n = read_trace(&dir.join(&rec.file))?;
            if forces_n.len() != rec.samples {
                return Err(Error::Parse(format!(
                    "{}: {} samples, manifest says {}",
                    rec.file,
                    forces_n.len(),
                    rec.samples
                )));
            }
            Ok(ForceTrace {
                sample_period_s: manifest.sample_period_s,
                forces_n,
                meta: TraceMeta {
                    experiment: rec.experiment,
                    sample_id: rec.sample_id.clone(),
                    protocol: rec.protocol.clone(),
                    quiet_period_s: rec.quiet_period_s,
                    post_period_s: rec.post_period_s,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, traces))
}
