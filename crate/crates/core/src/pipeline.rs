//! End-to-end static and dynamic workflows on a generated corpus.

use serde::{Deserialize, Serialize};

use crate::artifact::{ModelArtifact, Precision};
use crate::datakit::{
    encode_rows, extract_static_rows, make_windows, split_by_group, split_dynamic, split_static, Dataset, Encoder,
    Partition, SlidingWindowSet, SplitAssignment, StaticRow, Vocabulary, WINDOW_WIDTH,
};
use crate::error::{Error, Result};
use crate::evalkit::{residual_report, summarize, MetricSummary, ResidualReport, DEFAULT_BINS, DEFAULT_OUTLIER_K};
use crate::forest::{fit_forest, randomized_search_cv, ForestParams, ParamGrid, SearchResult};
use crate::mtwin::ForceTrace;
use crate::neural::{train_static, TrainConfig, TrainHistory};
use crate::scalar::Scalar;
use crate::seq::{train_dynamic, Lstm, SeqConfig, SeqHistory};
use crate::stimgen::WaveformKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StaticModelKind {
    #[serde(rename = "rf")]
    Forest,
    #[serde(rename = "nn")]
    Net,
    #[serde(rename = "nn-baseline")]
    NetBaseline,
}

impl StaticModelKind {
    pub fn name(self) -> &'static str {
        match self {
            StaticModelKind::Forest => "rf",
            StaticModelKind::Net => "nn",
            StaticModelKind::NetBaseline => "nn-baseline",
        }
    }

    pub fn uses_baseline(self) -> bool {
        self == StaticModelKind::NetBaseline
    }
}

impl std::str::FromStr for StaticModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rf" => Ok(StaticModelKind::Forest),
            "nn" => Ok(StaticModelKind::Net),
            "nn-baseline" => Ok(StaticModelKind::NetBaseline),
            _ => Err(Error::InvalidConfig(format!("unknown model {s:?}; expected rf, nn or nn-baseline"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub enabled: bool,
    pub n_iter: usize,
    pub k_folds: usize,
    pub grid: ParamGrid,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig { enabled: true, n_iter: 20, k_folds: 5, grid: ParamGrid::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StaticConfig {
    /// (train, test)
    pub fractions: (f64, f64),
    /// Forest used when the search is disabled; its seed is replaced by the run seed.
    pub forest: ForestParams,
    pub search: SearchConfig,
    pub nn: TrainConfig,
    pub bins: usize,
    pub outlier_k: f64,
}

impl Default for StaticConfig {
    fn default() -> Self {
        StaticConfig {
            fractions: (0.8, 0.2),
            forest: ForestParams::default(),
            search: SearchConfig::default(),
            nn: TrainConfig::default(),
            bins: DEFAULT_BINS,
            outlier_k: DEFAULT_OUTLIER_K,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaticOutcome {
    pub artifact: ModelArtifact,
    pub split: SplitAssignment,
    pub test_experiments: Vec<usize>,
    pub test_true: Vec<f64>,
    pub test_pred: Vec<f64>,
    pub metrics: MetricSummary,
    pub residuals: ResidualReport,
    pub search: Option<SearchResult>,
    pub history: Option<TrainHistory>,
}

/// Every ring in the corpus and every waveform kind. Taken from metadata so a
/// ring that only appears in the test partition still encodes.
pub fn corpus_vocabulary(traces: &[ForceTrace]) -> Vocabulary {
    let mut sample_ids: Vec<String> = traces.iter().map(|t| t.meta.sample_id.clone()).collect();
    sample_ids.sort();
    sample_ids.dedup();
    Vocabulary { sample_ids, waveforms: WaveformKind::ALL.to_vec() }
}

fn pick(rows: &[StaticRow], idx: &[usize]) -> Vec<StaticRow> {
    idx.iter().map(|&i| rows[i].clone()).collect()
}

/// Split, fit the encoder on the training rows, train the chosen model and
/// score it on the test rows.
pub fn run_static(
    traces: &[ForceTrace],
    kind: StaticModelKind,
    config: &StaticConfig,
    seed: u64,
) -> Result<StaticOutcome> {
    if traces.len() < 2 {
        return Err(Error::EmptyInput("corpus needs at least 2 experiments"));
    }
    let rows = extract_static_rows(traces, kind.uses_baseline())?;
    let split = split_static(rows.len(), config.fractions, seed)?;
    let (train_idx, test_idx) = (split.indices(Partition::Train), split.indices(Partition::Test));
    if train_idx.is_empty() || test_idx.len() < 2 {
        return Err(Error::EmptyInput("static split leaves too few rows"));
    }
    let (train_rows, test_rows) = (pick(&rows, &train_idx), pick(&rows, &test_idx));
    let encoder = Encoder::fit_with_vocabulary(&train_rows, &corpus_vocabulary(traces))?;
    let train: Dataset<f64> = encode_rows(&encoder, &train_rows)?;
    let test: Dataset<f64> = encode_rows(&encoder, &test_rows)?;

    let (artifact, test_pred, search, history) = match kind {
        StaticModelKind::Forest => {
            let (params, search) = if config.search.enabled {
                let s = &config.search;
                let result = randomized_search_cv(&s.grid, s.n_iter, s.k_folds, &train, seed)?;
                (result.best, Some(result))
            } else {
                (ForestParams { seed, ..config.forest }, None)
            };
            let model = fit_forest(&train, &params)?;
            let pred = model.predict(&test)?;
            (ModelArtifact::Forest { encoder, model }, pred, search, None)
        }
        StaticModelKind::Net | StaticModelKind::NetBaseline => {
            let (model, history) = train_static(&train, &config.nn, seed)?;
            let pred = model.predict_all(&test)?;
            (ModelArtifact::Mlp { encoder, model }, pred, None, Some(history))
        }
    };
    let metrics = summarize(&test.targets, &test_pred)?;
    let residuals = residual_report(&test.targets, &test_pred, config.bins, config.outlier_k)?;
    Ok(StaticOutcome {
        artifact,
        test_experiments: test_rows.iter().map(|r| r.experiment).collect(),
        split,
        test_true: test.targets,
        test_pred,
        metrics,
        residuals,
        search,
        history,
    })
}

/// Score a static artifact on every experiment of a corpus.
pub fn evaluate_static(artifact: &ModelArtifact, traces: &[ForceTrace]) -> Result<(Vec<f64>, Vec<f64>)> {
    let encoder = artifact.encoder().ok_or_else(|| Error::IncompatibleArtifact("not a static model".into()))?;
    let rows = extract_static_rows(traces, encoder.includes_baseline())?;
    let data: Dataset<f64> = encode_rows(encoder, &rows)?;
    let pred = match artifact {
        ModelArtifact::Forest { model, .. } => model.predict(&data)?,
        ModelArtifact::Mlp { model, .. } => model.predict_all(&data)?,
        ModelArtifact::Lstm { .. } => unreachable!("rejected above"),
    };
    Ok((data.targets, pred))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Windows are shuffled individually; overlapping windows of one
    /// experiment can land in different partitions.
    #[default]
    Window,
    /// Whole experiments are assigned to partitions.
    Experiment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DynamicConfig {
    pub window: usize,
    /// (train, validation, test)
    pub fractions: (f64, f64, f64),
    pub split_mode: SplitMode,
    pub precision: Precision,
    pub seq: SeqConfig,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        DynamicConfig {
            window: WINDOW_WIDTH,
            fractions: (0.7, 0.15, 0.15),
            split_mode: SplitMode::Window,
            precision: Precision::F32,
            seq: SeqConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicOutcome {
    pub artifact: ModelArtifact,
    pub split: SplitAssignment,
    pub history: SeqHistory,
    /// Test windows in scaled units.
    pub test_true: Vec<f64>,
    pub test_pred: Vec<f64>,
    pub metrics_scaled: MetricSummary,
    pub metrics_newtons: MetricSummary,
    pub window_count: usize,
}

pub fn dynamic_split(set: &SlidingWindowSet<f64>, config: &DynamicConfig, seed: u64) -> Result<SplitAssignment> {
    match config.split_mode {
        SplitMode::Window => split_dynamic(set.len(), config.fractions, seed),
        SplitMode::Experiment => {
            let (a, b, c) = config.fractions;
            let groups: Vec<usize> = set.provenance.iter().map(|p| p.0).collect();
            split_by_group(&groups, &[(Partition::Train, a), (Partition::Validation, b), (Partition::Test, c)], seed)
        }
    }
}

/// Trained model, history and test-window truth and prediction, scaled.
type Scored = (Lstm<f64>, SeqHistory, Vec<f64>, Vec<f64>);

fn train_and_score<T: Scalar>(
    raw: &SlidingWindowSet<f64>,
    split: &SplitAssignment,
    config: &DynamicConfig,
    seed: u64,
) -> Result<Scored> {
    let scaler = raw.fit_scaler(split, Partition::Train)?;
    let set = raw.scaled::<T>(scaler);
    let (model, history) = train_dynamic(&set, split, &config.seq, seed)?;
    let test = split.indices(Partition::Test);
    let mut truth = Vec::with_capacity(test.len());
    let mut pred = Vec::with_capacity(test.len());
    for &i in &test {
        truth.push(set.targets[i].to_f64_lossy());
        pred.push(model.forward_window(set.window(i))?.to_f64_lossy());
    }
    Ok((model.cast(), history, truth, pred))
}

pub fn run_dynamic(traces: &[ForceTrace], config: &DynamicConfig, seed: u64) -> Result<DynamicOutcome> {
    if traces.len() < 2 {
        return Err(Error::EmptyInput("corpus needs at least 2 experiments"));
    }
    config.seq.validate()?;
    let raw = make_windows(traces, config.window)?;
    let split = dynamic_split(&raw, config, seed)?;
    if split.count(Partition::Test) < 2 {
        return Err(Error::EmptyInput("test partition"));
    }
    let (model, history, test_true, test_pred) = match config.precision {
        Precision::F32 => train_and_score::<f32>(&raw, &split, config, seed)?,
        Precision::F64 => train_and_score::<f64>(&raw, &split, config, seed)?,
    };
    let scaler = raw.fit_scaler(&split, Partition::Train)?;
    let newtons = |v: &[f64]| v.iter().map(|&s| scaler.invert(s)).collect::<Vec<_>>();
    let metrics_newtons = summarize(&newtons(&test_true), &newtons(&test_pred))?;
    Ok(DynamicOutcome {
        artifact: ModelArtifact::Lstm { scaler, precision: config.precision, model },
        metrics_scaled: summarize(&test_true, &test_pred)?,
        metrics_newtons,
        window_count: raw.len(),
        split,
        history,
        test_true,
        test_pred,
    })
}

/// One-step teacher-forced scores of an LSTM artifact on every window of a
/// corpus, scaled units.
pub fn evaluate_dynamic(artifact: &ModelArtifact, traces: &[ForceTrace]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ModelArtifact::Lstm { scaler, precision, model } = artifact else {
        return Err(Error::IncompatibleArtifact("not a dynamic model".into()));
    };
    let raw = make_windows(traces, model.window)?;
    let set = raw.scaled::<f64>(*scaler);
    let pred = match precision {
        Precision::F32 => {
            let m = model.cast::<f32>();
            let s = raw.scaled::<f32>(*scaler);
            (0..s.len()).map(|i| m.forward_window(s.window(i)).map(|v| v as f64)).collect::<Result<Vec<_>>>()?
        }
        Precision::F64 => (0..set.len()).map(|i| model.forward_window(set.window(i))).collect::<Result<Vec<_>>>()?,
    };
    Ok((set.targets, pred))
}
