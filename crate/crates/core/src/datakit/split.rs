use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{label, rng_for};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Partition {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub labels: Vec<Partition>,
    pub seed: u64,
}

impl SplitAssignment {
    pub fn indices(&self, partition: Partition) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == partition).collect()
    }

    pub fn count(&self, partition: Partition) -> usize {
        self.labels.iter().filter(|&&p| p == partition).count()
    }
}

/// Shuffle `0..n` with the seed, then cut it into contiguous runs. Boundaries
/// sit at floor(n · cumulative fraction), taken in the order of `parts`.
pub fn split(n: usize, parts: &[(Partition, f64)], seed: u64) -> Result<SplitAssignment> {
    if n == 0 {
        return Err(Error::EmptyInput("split input"));
    }
    let fractions: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let sum: f64 = fractions.iter().sum();
    if parts.is_empty() || fractions.iter().any(|f| !(f.is_finite() && *f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidFractions(fractions));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_for(seed, &[label("split")]));

    let mut labels = vec![parts[0].0; n];
    let mut start = 0;
    let mut cumulative = 0.0;
    for (k, &(partition, fraction)) in parts.iter().enumerate() {
        cumulative += fraction;
        let end =
            if k + 1 == parts.len() { n } else { ((n as f64 * cumulative + 1e-7).floor() as usize).clamp(start, n) };
        for &i in &order[start..end] {
            labels[i] = partition;
        }
        start = end;
    }
    Ok(SplitAssignment { labels, seed })
}

pub fn split_static(n: usize, (train, test): (f64, f64), seed: u64) -> Result<SplitAssignment> {
    split(n, &[(Partition::Train, train), (Partition::Test, test)], seed)
}

pub fn split_dynamic(n: usize, (train, validation, test): (f64, f64, f64), seed: u64) -> Result<SplitAssignment> {
    split(n, &[(Partition::Train, train), (Partition::Validation, validation), (Partition::Test, test)], seed)
}

/// Split whole groups (e.g. experiments) and let every member inherit its
/// group's partition, so no group contributes to two partitions.
pub fn split_by_group(groups: &[usize], parts: &[(Partition, f64)], seed: u64) -> Result<SplitAssignment> {
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    for &g in groups {
        let next = ids.len();
        ids.entry(g).or_insert(next);
    }
    // rank groups by id so the result does not depend on first-seen order
    for (rank, v) in ids.values_mut().enumerate() {
        *v = rank;
    }
    let by_group = split(ids.len(), parts, seed)?;
    Ok(SplitAssignment { labels: groups.iter().map(|g| by_group.labels[ids[g]]).collect(), seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn static_split_sizes() {
        let s = split_static(161, (0.8, 0.2), 42).unwrap();
        assert_eq!((s.count(Partition::Train), s.count(Partition::Test)), (128, 33));
    }

    #[test]
    fn dynamic_split_sizes() {
        let s = split_dynamic(122_176, (0.7, 0.15, 0.15), 42).unwrap();
        let counts = [Partition::Train, Partition::Validation, Partition::Test].map(|p| s.count(p));
        assert_eq!(counts, [85_523, 18_326, 18_327]);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(split_static(0, (0.8, 0.2), 1).unwrap_err().category(), "empty-input");
        assert_eq!(split_static(10, (0.8, 0.3), 1).unwrap_err().category(), "invalid-fractions");
        assert!(split_static(10, (1.2, -0.2), 1).is_err());
    }

    #[test]
    fn groups_do_not_straddle_partitions() {
        let groups: Vec<usize> = (0..200).map(|i| i / 7).collect();
        let s = split_by_group(&groups, &[(Partition::Train, 0.7), (Partition::Test, 0.3)], 5).unwrap();
        for w in groups.windows(2).zip(s.labels.windows(2)) {
            if w.0[0] == w.0[1] {
                assert_eq!(w.1[0], w.1[1]);
            }
        }
        assert!(s.count(Partition::Test) > 0 && s.count(Partition::Train) > 0);
    }

    proptest! {
        #[test]
        fn split_is_exhaustive_and_deterministic(n in 1usize..500, a in 0.0f64..1.0, b in 0.0f64..1.0, seed: u64) {
            let (a, b) = (a.min(b), a.max(b));
            let fr = (a, b - a, 1.0 - b);
            let s = split_dynamic(n, fr, seed).unwrap();
            prop_assert_eq!(s.labels.len(), n);
            let total: usize = [Partition::Train, Partition::Validation, Partition::Test].iter().map(|&p| s.count(p)).sum();
            prop_assert_eq!(total, n);
            prop_assert_eq!(s.count(Partition::Train), (n as f64 * fr.0 + 1e-7).floor() as usize);
            prop_assert_eq!(&s, &split_dynamic(n, fr, seed).unwrap());
        }
    }
}
