//! Bagged regression trees with exhaustive variance-reduction splits.

mod search;

pub use search::{randomized_search_cv, CvScore, ParamGrid, SearchResult};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::datakit::Dataset;
use crate::error::{Error, Result};
use crate::rng::{label, rng_for};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    /// 0 makes every tree a single leaf.
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 || self.min_samples_split < 2 || self.min_samples_leaf == 0 {
            return Err(Error::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams { n_estimators: 300, max_depth: 10, min_samples_split: 2, min_samples_leaf: 1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "", rename_all = "snake_case")]
pub enum Node<T: Scalar> {
    /// Rows with `x[feature] <= threshold` go to the left child, stored at the
    /// next index; the right child is at `right`.
    Split {
        feature: usize,
        threshold: T,
        right: usize,
    },
    Leaf {
        value: T,
    },
}

/// Nodes in preorder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Tree<T: Scalar> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict(&self, x: &[T]) -> T {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, right } => {
                    i = if x[feature] <= threshold { i + 1 } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T: Scalar>(nodes: &[Node<T>], i: usize) -> (usize, usize) {
            // (depth below i, index one past the subtree)
            match nodes[i] {
                Node::Leaf { .. } => (0, i + 1),
                Node::Split { right, .. } => {
                    let (l, _) = walk(nodes, i + 1);
                    let (r, end) = walk(nodes, right);
                    (1 + l.max(r), end)
                }
            }
        }
        walk(&self.nodes, 0).0
    }
}

/// Best split of a node: feature, threshold and the summed squared deviation
/// of the two children.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub score: f64,
}

fn sse(data: &Dataset<impl Scalar>, rows: &[usize]) -> (f64, f64) {
    let n = rows.len() as f64;
    let mean = rows.iter().map(|&r| data.targets[r].to_f64_lossy()).sum::<f64>() / n;
    let s = rows.iter().map(|&r| (data.targets[r].to_f64_lossy() - mean).powi(2)).sum();
    (mean, s)
}

/// Scan every feature and every midpoint between consecutive distinct values.
/// A candidate must beat the incumbent by a relative 1e-12 to replace it, so
/// rounding-level ties resolve to the lower feature, then the lower threshold.
pub fn best_split<T: Scalar>(data: &Dataset<T>, rows: &[usize], min_samples_leaf: usize) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 * min_samples_leaf.max(1) {
        return None;
    }
    let (mean, parent) = sse(data, rows);
    let tol = 1e-12 * parent.max(f64::MIN_POSITIVE);
    let mut best: Option<SplitChoice> = None;
    let mut sorted: Vec<(f64, f64)> = Vec::with_capacity(n);
    for feature in 0..data.width {
        sorted.clear();
        sorted
            .extend(rows.iter().map(|&r| (data.row(r)[feature].to_f64_lossy(), data.targets[r].to_f64_lossy() - mean)));
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (total, total_sq) = sorted.iter().fold((0.0, 0.0), |(s, q), &(_, y)| (s + y, q + y * y));
        let (mut s, mut q) = (0.0, 0.0);
        for k in 0..n - 1 {
            s += sorted[k].1;
            q += sorted[k].1 * sorted[k].1;
            let n_left = k + 1;
            if sorted[k].0 == sorted[k + 1].0 || n_left < min_samples_leaf || n - n_left < min_samples_leaf {
                continue;
            }
            let (nl, nr) = (n_left as f64, (n - n_left) as f64);
            let score = (q - s * s / nl) + ((total_sq - q) - (total - s) * (total - s) / nr);
            if best.is_none_or(|b| score < b.score - tol) {
                let threshold = 0.5 * (sorted[k].0 + sorted[k + 1].0);
                best = Some(SplitChoice { feature, threshold, score: score.max(0.0) });
            }
        }
    }
    best
}

/// Grow one tree on `rows` (a multiset of row indices, e.g. a bootstrap draw).
pub fn fit_tree<T: Scalar>(data: &Dataset<T>, rows: &[usize], params: &ForestParams) -> Result<Tree<T>> {
    if rows.is_empty() || data.is_empty() {
        return Err(Error::EmptyInput("tree rows"));
    }
    if data.width == 0 {
        return Err(Error::EmptyInput("tree features"));
    }
    let mut nodes = Vec::new();
    grow(data, &mut rows.to_vec(), 0, params, &mut nodes);
    Ok(Tree { nodes })
}

fn grow<T: Scalar>(data: &Dataset<T>, rows: &mut [usize], depth: usize, p: &ForestParams, nodes: &mut Vec<Node<T>>) {
    let (mean, spread) = sse(data, rows);
    let leaf = |nodes: &mut Vec<Node<T>>| nodes.push(Node::Leaf { value: T::of(mean) });
    if depth >= p.max_depth || rows.len() < p.min_samples_split || spread == 0.0 {
        return leaf(nodes);
    }
    let Some(choice) = best_split(data, rows, p.min_samples_leaf) else {
        return leaf(nodes);
    };
    let threshold = T::of(choice.threshold);
    // stable partition: left rows first, keeping their relative order
    let mut left: Vec<usize> = rows.iter().copied().filter(|&r| data.row(r)[choice.feature] <= threshold).collect();
    let n_left = left.len();
    left.extend(rows.iter().copied().filter(|&r| data.row(r)[choice.feature] > threshold));
    rows.copy_from_slice(&left);
    if n_left == 0 || n_left == rows.len() {
        // threshold collapsed after rounding to T
        return leaf(nodes);
    }
    let at = nodes.len();
    nodes.push(Node::Split { feature: choice.feature, threshold, right: 0 });
    let (l, r) = rows.split_at_mut(n_left);
    grow(data, l, depth + 1, p, nodes);
    let right = nodes.len();
    if let Node::Split { right: slot, .. } = &mut nodes[at] {
        *slot = right;
    }
    grow(data, r, depth + 1, p, nodes);
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ForestModel<T: Scalar> {
    pub params: ForestParams,
    pub width: usize,
    pub trees: Vec<Tree<T>>,
}

/// Each tree sees `n` rows drawn with replacement from a generator seeded by
/// `(params.seed, tree index)`.
pub fn fit_forest<T: Scalar>(data: &Dataset<T>, params: &ForestParams) -> Result<ForestModel<T>> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyInput("forest training set"));
    }
    let n = data.len();
    let trees = (0..params.n_estimators)
        .map(|t| {
            let mut rng = rng_for(params.seed, &[label("tree"), t as u64]);
            let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            fit_tree(data, &rows, params)
        })
        .collect::<Result<_>>()?;
    Ok(ForestModel { params: *params, width: data.width, trees })
}

impl<T: Scalar> ForestModel<T> {
    pub fn predict_row(&self, x: &[T]) -> Result<T> {
        if x.len() != self.width {
            return Err(Error::WidthMismatch { expected: self.width, got: x.len() });
        }
        let sum: T = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(sum / T::of_usize(self.trees.len()))
    }

    pub fn predict(&self, data: &Dataset<T>) -> Result<Vec<T>> {
        if data.width != self.width {
            return Err(Error::WidthMismatch { expected: self.width, got: data.width });
        }
        data.rows().map(|r| self.predict_row(r)).collect()
    }
}
