//! Config files (TOML, or JSON by extension) merged with command-line flags.
//! Flags win.

use std::fs;
use std::path::{Path, PathBuf};

use biotwin::artifact::Precision;
use biotwin::mtwin::CorpusSpec;
use biotwin::pipeline::{DynamicConfig, SplitMode, StaticConfig};
use clap::Args;
use serde::de::DeserializeOwned;

use crate::Failure;

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else { return Ok(T::default()) };
    let text =
        fs::read_to_string(path).map_err(|e| Failure::new("config", format!("cannot read {}: {e}", path.display())))?;
    let parsed = if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Default, Args)]
pub struct CorpusFlags {
    /// Corpus spec file; the standard 161-experiment mix when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub noise_free: bool,
}

pub fn corpus_spec(flags: &CorpusFlags) -> Result<CorpusSpec, Failure> {
    let mut spec = match &flags.spec {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::new("config", format!("cannot read {}: {e}", path.display())))?;
            let parsed = if path.extension().is_some_and(|e| e == "toml") {
                toml::from_str(&text).map_err(|e| e.to_string())
            } else {
                serde_json::from_str(&text).map_err(|e| e.to_string())
            };
            parsed.map_err(|e| Failure::new("config", format!("{}: {e}", path.display())))?
        }
        None => CorpusSpec::standard(flags.seed.unwrap_or(0)),
    };
    if let Some(seed) = flags.seed {
        spec.seed = seed;
    }
    if flags.noise_free {
        spec.noise_free = true;
    }
    Ok(spec)
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainFlags {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct StaticFlags {
    #[command(flatten)]
    pub train: TrainFlags,
    /// Randomized-search iterations for the forest.
    #[arg(long)]
    pub n_iter: Option<usize>,
    #[arg(long)]
    pub k_folds: Option<usize>,
    /// Fit the forest with `[forest]` params instead of searching.
    #[arg(long)]
    pub no_search: bool,
}

pub fn static_config(path: Option<&Path>, flags: &StaticFlags) -> Result<StaticConfig, Failure> {
    let mut c: StaticConfig = load(path)?;
    let t = &flags.train;
    if let Some(v) = t.epochs {
        c.nn.epochs = v;
    }
    if let Some(v) = t.batch_size {
        c.nn.batch_size = v;
    }
    if let Some(v) = t.learning_rate {
        c.nn.adam.learning_rate = v;
    }
    if let Some(v) = flags.n_iter {
        c.search.n_iter = v;
    }
    if let Some(v) = flags.k_folds {
        c.search.k_folds = v;
    }
    if flags.no_search {
        c.search.enabled = false;
    }
    c.nn.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, Default, Args)]
pub struct DynamicFlags {
    #[command(flatten)]
    pub train: TrainFlags,
    #[arg(long)]
    pub window: Option<usize>,
    /// f32 or f64.
    #[arg(long)]
    pub precision: Option<String>,
    /// window or experiment.
    #[arg(long)]
    pub split_mode: Option<String>,
}

pub fn dynamic_config(path: Option<&Path>, flags: &DynamicFlags) -> Result<DynamicConfig, Failure> {
    let mut c: DynamicConfig = load(path)?;
    let t = &flags.train;
    if let Some(v) = t.epochs {
        c.seq.epochs = v;
    }
    if let Some(v) = t.batch_size {
        c.seq.batch_size = v;
    }
    if let Some(v) = t.learning_rate {
        c.seq.adam.learning_rate = v;
    }
    if let Some(v) = flags.window {
        c.window = v;
    }
    if let Some(v) = &flags.precision {
        c.precision = v.parse::<Precision>()?;
    }
    if let Some(v) = &flags.split_mode {
        c.split_mode = match v.as_str() {
            "window" => SplitMode::Window,
            "experiment" => SplitMode::Experiment,
            _ => return Err(Failure::new("config", format!("unknown split mode {v:?}"))),
        };
    }
    c.seq.validate()?;
    if c.window == 0 {
        return Err(Failure::new("config", "window must be at least 1"));
    }
    Ok(c)
}
