//! Run manifests: everything needed to re-execute a command.

use std::fs;
use std::path::{Path, PathBuf};

use biotwin::mtwin::CorpusSpec;
use biotwin::pipeline::{DynamicConfig, StaticConfig, StaticModelKind};
use biotwin::seq::ForecastMode;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const MANIFEST_FILE: &str = "run_manifest.json";
pub const MANIFEST_FORMAT: u32 = 1;

/// A fully resolved command: config files and flags already merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    Generate { spec: CorpusSpec, out: PathBuf },
    TrainStatic { corpus: PathBuf, model: StaticModelKind, config: StaticConfig, seed: u64, out: PathBuf },
    TrainDynamic { corpus: PathBuf, config: DynamicConfig, seed: u64, out: PathBuf },
    Evaluate { model: PathBuf, corpus: PathBuf, out: PathBuf },
    Forecast { model: PathBuf, trace: PathBuf, mode: ForecastMode, out: PathBuf },
}

impl Invocation {
    pub fn name(&self) -> &'static str {
        match self {
            Invocation::Generate { .. } => "generate",
            Invocation::TrainStatic { .. } => "train-static",
            Invocation::TrainDynamic { .. } => "train-dynamic",
            Invocation::Evaluate { .. } => "evaluate",
            Invocation::Forecast { .. } => "forecast",
        }
    }

    pub fn out(&self) -> &Path {
        match self {
            Invocation::Generate { out, .. }
            | Invocation::TrainStatic { out, .. }
            | Invocation::TrainDynamic { out, .. }
            | Invocation::Evaluate { out, .. }
            | Invocation::Forecast { out, .. } => out,
        }
    }

    pub fn set_out(&mut self, dir: PathBuf) {
        match self {
            Invocation::Generate { out, .. }
            | Invocation::TrainStatic { out, .. }
            | Invocation::TrainDynamic { out, .. }
            | Invocation::Evaluate { out, .. }
            | Invocation::Forecast { out, .. } => *out = dir,
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Invocation::Generate { spec, .. } => Some(spec.seed),
            Invocation::TrainStatic { seed, .. } | Invocation::TrainDynamic { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    pub fn inputs(&self) -> Vec<PathBuf> {
        match self {
            Invocation::Generate { .. } => vec![],
            Invocation::TrainStatic { corpus, .. } | Invocation::TrainDynamic { corpus, .. } => vec![corpus.clone()],
            Invocation::Evaluate { model, corpus, .. } => vec![model.clone(), corpus.clone()],
            Invocation::Forecast { model, trace, .. } => vec![model.clone(), trace.clone()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_version: u32,
    pub toolkit_version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub inputs: Vec<PathBuf>,
    /// Files written by the run, relative to the output directory.
    pub outputs: Vec<String>,
    pub duration_s: f64,
    pub invocation: Invocation,
}

impl RunManifest {
    pub fn new(invocation: Invocation, outputs: Vec<String>, duration_s: f64) -> Self {
        RunManifest {
            format_version: MANIFEST_FORMAT,
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
            command: invocation.name().to_string(),
            seed: invocation.seed(),
            inputs: invocation.inputs(),
            outputs,
            duration_s,
            invocation,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(self).map_err(biotwin::Error::from)?;
        fs::write(dir.join(MANIFEST_FILE), text + "\n").map_err(biotwin::Error::from)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(biotwin::Error::from)?;
        let m: RunManifest =
            serde_json::from_str(&text).map_err(|e| Failure::new("manifest", format!("{}: {e}", path.display())))?;
        if m.format_version != MANIFEST_FORMAT {
            return Err(Failure::new("manifest", format!("unsupported manifest format {}", m.format_version)));
        }
        Ok(m)
    }
}
