//! Regression metrics, residual analysis and plot-ready report tables.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BINS: usize = 30;
pub const DEFAULT_OUTLIER_K: f64 = 3.0;

fn check<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<()> {
    if y.len() != y_hat.len() {
        return Err(Error::LengthMismatch { left: y.len(), right: y_hat.len() });
    }
    if y.is_empty() {
        return Err(Error::EmptyInput("metric values"));
    }
    Ok(())
}

pub fn mean<T: Scalar>(v: &[T]) -> f64 {
    v.iter().map(|x| x.to_f64_lossy()).sum::<f64>() / v.len() as f64
}

pub fn mse<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<f64> {
    check(y, y_hat)?;
    let sse: f64 = y.iter().zip(y_hat).map(|(a, b)| (a.to_f64_lossy() - b.to_f64_lossy()).powi(2)).sum();
    Ok(sse / y.len() as f64)
}

/// 1 − SS_res / SS_tot, with SS_tot taken about the mean of `y`.
pub fn r_squared<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<f64> {
    check(y, y_hat)?;
    if y.len() < 2 {
        return Err(Error::EmptyInput("r_squared needs at least two values"));
    }
    let m = mean(y);
    let ss_tot: f64 = y.iter().map(|a| (a.to_f64_lossy() - m).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::ConstantTruth);
    }
    let ss_res: f64 = y.iter().zip(y_hat).map(|(a, b)| (a.to_f64_lossy() - b.to_f64_lossy()).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mse: f64,
    pub r2: f64,
    pub n: usize,
}

pub fn summarize<T: Scalar>(y: &[T], y_hat: &[T]) -> Result<MetricSummary> {
    Ok(MetricSummary { mse: mse(y, y_hat)?, r2: r_squared(y, y_hat)?, n: y.len() })
}

/// Single-pass MSE / R² (Welford update for the spread of the truth).
#[derive(Debug, Clone, Default)]
pub struct MetricAccumulator {
    n: usize,
    mean: f64,
    m2: f64,
    sse: f64,
}

impl MetricAccumulator {
    pub fn push(&mut self, y: f64, y_hat: f64) {
        self.n += 1;
        let d = y - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (y - self.mean);
        self.sse += (y - y_hat) * (y - y_hat);
    }

    pub fn finish(&self) -> Result<MetricSummary> {
        if self.n < 2 {
            return Err(Error::EmptyInput("r_squared needs at least two values"));
        }
        if self.m2 == 0.0 {
            return Err(Error::ConstantTruth);
        }
        Ok(MetricSummary { mse: self.sse / self.n as f64, r2: 1.0 - self.sse / self.m2, n: self.n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `counts.len() + 1` ascending edges.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    /// Equal-width bins over the observed range. A degenerate range is
    /// widened symmetrically so every value lands in the middle bin.
    pub fn of(values: &[f64], bins: usize) -> Self {
        let bins = bins.max(1);
        let (mut lo, mut hi) =
            values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if values.is_empty() {
            (lo, hi) = (0.0, 0.0);
        }
        if lo == hi {
            let half = if lo == 0.0 { 0.5 } else { lo.abs() * 0.5 };
            (lo, hi) = (lo - half, hi + half);
        }
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| if i == bins { hi } else { lo + width * i as f64 }).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let k = (((v - lo) / width).floor() as usize).min(bins - 1);
            counts[k] += 1;
        }
        Histogram { edges, counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// true − predicted
    pub residuals: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub sd: f64,
    pub histogram: Histogram,
    pub outlier_k: f64,
    /// (index, residual) with |residual| > k · sd.
    pub outliers: Vec<(usize, f64)>,
}

pub fn residual_report<T: Scalar>(y: &[T], y_hat: &[T], bins: usize, outlier_k: f64) -> Result<ResidualReport> {
    check(y, y_hat)?;
    let residuals: Vec<f64> = y.iter().zip(y_hat).map(|(a, b)| a.to_f64_lossy() - b.to_f64_lossy()).collect();
    let mean = mean(&residuals);
    let sd = (residuals.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / residuals.len() as f64).sqrt();
    let outliers =
        residuals.iter().enumerate().filter(|(_, r)| r.abs() > outlier_k * sd).map(|(i, &r)| (i, r)).collect();
    Ok(ResidualReport { histogram: Histogram::of(&residuals, bins), residuals, mean, sd, outlier_k, outliers })
}

fn table(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_scatter<T: Scalar>(path: &Path, y: &[T], y_hat: &[T]) -> Result<()> {
    check(y, y_hat)?;
    table(
        path,
        "true\tpredicted",
        y.iter().zip(y_hat).map(|(a, b)| format!("{:e}\t{:e}", a.to_f64_lossy(), b.to_f64_lossy())),
    )
}

pub fn write_residuals(path: &Path, report: &ResidualReport) -> Result<()> {
    table(path, "residual", report.residuals.iter().map(|r| format!("{r:e}")))
}

pub fn write_histogram(path: &Path, histogram: &Histogram) -> Result<()> {
    table(
        path,
        "bin_left\tbin_right\tcount",
        histogram
            .counts
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:e}\t{:e}\t{c}", histogram.edges[i], histogram.edges[i + 1])),
    )
}

pub fn write_summary(path: &Path, metrics: &[(&str, f64)]) -> Result<()> {
    table(path, "metric\tvalue", metrics.iter().map(|(k, v)| format!("{k}\t{v:e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn mse_examples() {
        assert_eq!(mse(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert_eq!(mse(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert!((mse(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(mse::<f64>(&[], &[]).unwrap_err().category(), "empty-input");
        assert_eq!(mse(&[1.0], &[1.0, 2.0]).unwrap_err().category(), "length-mismatch");
    }

    #[test]
    fn r2_examples() {
        let y = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
        assert_eq!(r_squared(&y, &[2.0; 3]).unwrap(), 0.0);
        assert_eq!(r_squared(&y, &[1.0, 2.0, 2.0]).unwrap(), 0.5);
        assert_eq!(r_squared(&[4.0, 4.0], &[4.0, 3.0]).unwrap_err().category(), "constant-truth");
    }

    #[test]
    fn residual_examples() {
        let r = residual_report(&[1.0, 2.0], &[1.0, 2.0], DEFAULT_BINS, 3.0).unwrap();
        assert_eq!(r.mean, 0.0);
        assert_eq!(r.histogram.counts.iter().filter(|&&c| c > 0).count(), 1);
        let r = residual_report(&[0.0, 0.0], &[1.0, -1.0], DEFAULT_BINS, 3.0).unwrap();
        assert_eq!((r.mean, r.sd), (0.0, 1.0));
        assert_eq!(r.residuals, vec![-1.0, 1.0]);
        assert_eq!(r.histogram.counts[0], 1);
        assert_eq!(r.histogram.counts[29], 1);
    }

    #[test]
    fn histogram_counts_sum() {
        use rand::Rng as _;
        let mut rng = crate::rng::rng_for(3, &[]);
        let y: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let p: Vec<f64> = (0..1000).map(|_| rng.random::<f64>()).collect();
        let r = residual_report(&y, &p, DEFAULT_BINS, DEFAULT_OUTLIER_K).unwrap();
        assert_eq!(r.histogram.counts.iter().sum::<usize>(), 1000);
        assert_eq!(r.histogram.edges.len(), 31);
    }

    #[test]
    fn outliers_beyond_k_sd() {
        let mut y = vec![0.0; 100];
        y[7] = 50.0;
        let r = residual_report(&y, &vec![0.0; 100], 10, 3.0).unwrap();
        assert_eq!(r.outliers, vec![(7, 50.0)]);
    }

    #[test]
    fn report_tables() {
        let dir = tempfile::tempdir().unwrap();
        let y = [1.0, 2.0, 4.0];
        let p = [1.5, 2.0, 3.0];
        let rep = residual_report(&y, &p, 4, 3.0).unwrap();
        write_scatter(&dir.path().join("s.tsv"), &y, &p).unwrap();
        write_residuals(&dir.path().join("r.tsv"), &rep).unwrap();
        write_histogram(&dir.path().join("h.tsv"), &rep.histogram).unwrap();
        write_summary(&dir.path().join("m.tsv"), &[("mse", 0.25)]).unwrap();
        let read = |n: &str| std::fs::read_to_string(dir.path().join(n)).unwrap();
        assert_eq!(read("s.tsv").lines().nth(1), Some("1e0\t1.5e0"));
        assert_eq!(read("r.tsv").lines().count(), 4);
        assert_eq!(read("h.tsv").lines().count(), 5);
        assert_eq!(read("m.tsv"), "metric\tvalue\nmse\t2.5e-1\n");
    }

    proptest! {
        #[test]
        fn identities(y in proptest::collection::vec(-1e3f64..1e3, 2..200)) {
            prop_assume!(y.iter().any(|&v| v != y[0]));
            prop_assert_eq!(r_squared(&y, &y).unwrap(), 1.0);
            let m = vec![mean(&y); y.len()];
            prop_assert_eq!(r_squared(&y, &m).unwrap(), 0.0);
            prop_assert_eq!(mse(&y, &y).unwrap(), 0.0);
        }

        #[test]
        fn streaming_matches_two_pass(
            pairs in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 2..300)
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let mut acc = MetricAccumulator::default();
            for (a, b) in y.iter().zip(&p) {
                acc.push(*a, *b);
            }
            let s = acc.finish().unwrap();
            let two = summarize(&y, &p).unwrap();
            prop_assert!((s.mse - two.mse).abs() <= 1e-12 * two.mse.abs());
            prop_assert!((s.r2 - two.r2).abs() <= 1e-12 * two.r2.abs().max(1.0));
        }

        #[test]
        fn residual_mean_is_difference_of_means(
            pairs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..100)
        ) {
            let y: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let p: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let r = residual_report(&y, &p, DEFAULT_BINS, DEFAULT_OUTLIER_K).unwrap();
            prop_assert!((r.mean - (mean(&y) - mean(&p))).abs() < 1e-12);
            prop_assert_eq!(r.histogram.counts.iter().sum::<usize>(), y.len());
        }
    }
}
