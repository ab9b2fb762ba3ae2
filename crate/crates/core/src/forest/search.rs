use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{fit_forest, ForestParams};
use crate::datakit::Dataset;
use crate::error::{Error, Result};
use crate::evalkit::mse;
use crate::rng::{label, rng_for};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub n_estimators: Vec<usize>,
    pub max_depth: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
}

impl Default for ParamGrid {
    fn default() -> Self {
        ParamGrid {
            n_estimators: vec![100, 200, 300],
            max_depth: vec![4, 6, 8, 10],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 2, 4],
        }
    }
}

impl ParamGrid {
    pub fn len(&self) -> usize {
        self.n_estimators.len() * self.max_depth.len() * self.min_samples_split.len() * self.min_samples_leaf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Combination `index` in lexicographic order (last axis fastest).
    pub fn get(&self, index: usize, seed: u64) -> ForestParams {
        let mut i = index;
        let mut pick = |axis: &[usize]| {
            let v = axis[i % axis.len()];
            i /= axis.len();
            v
        };
        let min_samples_leaf = pick(&self.min_samples_leaf);
        let min_samples_split = pick(&self.min_samples_split);
        let max_depth = pick(&self.max_depth);
        let n_estimators = pick(&self.n_estimators);
        ForestParams { n_estimators, max_depth, min_samples_split, min_samples_leaf, seed }
    }

    pub fn contains(&self, p: &ForestParams) -> bool {
        self.n_estimators.contains(&p.n_estimators)
            && self.max_depth.contains(&p.max_depth)
            && self.min_samples_split.contains(&p.min_samples_split)
            && self.min_samples_leaf.contains(&p.min_samples_leaf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub params: ForestParams,
    pub fold_mse: Vec<f64>,
    pub mean_mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: ForestParams,
    /// In sampling order.
    pub scores: Vec<CvScore>,
}

/// Row indices of each fold after a seeded shuffle; the first `n % k` folds
/// hold one extra row.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k < 2 || k > n {
        return Err(Error::InvalidFolds { folds: k, rows: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &[label("folds")]));
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        folds.push(order[start..start + size].to_vec());
        start += size;
    }
    Ok(folds)
}

/// Evaluate `n_iter` distinct grid points, drawn without replacement, by mean
/// k-fold validation MSE. Ties go to the point drawn first.
pub fn randomized_search_cv<T: Scalar>(
    grid: &ParamGrid,
    n_iter: usize,
    k_folds: usize,
    data: &Dataset<T>,
    seed: u64,
) -> Result<SearchResult> {
    if n_iter == 0 || grid.is_empty() {
        return Err(Error::InvalidConfig("randomized search needs n_iter >= 1 and a nonempty grid".into()));
    }
    if n_iter > grid.len() {
        return Err(Error::NIterExceedsGrid { n_iter, grid: grid.len() });
    }
    let folds = kfold(data.len(), k_folds, seed)?;
    let mut combos: Vec<usize> = (0..grid.len()).collect();
    let (picked, _) = combos.partial_shuffle(&mut rng_for(seed, &[label("grid")]), n_iter);

    let mut scores = Vec::with_capacity(n_iter);
    for &c in picked.iter() {
        let params = grid.get(c, seed);
        let mut fold_mse = Vec::with_capacity(k_folds);
        for (f, held_out) in folds.iter().enumerate() {
            let train: Vec<usize> =
                folds.iter().enumerate().filter(|&(g, _)| g != f).flat_map(|(_, rows)| rows.iter().copied()).collect();
            let model = fit_forest(&data.subset(&train), &params)?;
            let valid = data.subset(held_out);
            fold_mse.push(mse(&valid.targets, &model.predict(&valid)?)?);
        }
        let mean_mse = fold_mse.iter().sum::<f64>() / k_folds as f64;
        scores.push(CvScore { params, fold_mse, mean_mse });
    }
    let best = scores
        .iter()
        .fold(None::<&CvScore>, |b, s| match b {
            Some(b) if b.mean_mse <= s.mean_mse => Some(b),
            _ => Some(s),
        })
        .map(|s| s.params)
        .expect("n_iter >= 1");
    Ok(SearchResult { best, scores })
}
