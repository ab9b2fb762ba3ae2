use serde::{Deserialize, Serialize};

use super::StaticRow;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stimgen::WaveformKind;

const CATEGORICAL_NAMES: [&str; 2] = ["sample_id", "waveform"];
const NUMERIC_NAMES: [&str; 3] = ["frequency_Hz", "pulse_width_ms", "baseline_N"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalFeature {
    pub name: String,
    /// Sorted, unique.
    pub categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericFeature {
    pub name: String,
    pub mean: f64,
    /// Population standard deviation; zero maps every value to 0.
    pub sd: f64,
}

/// Categories known ahead of fitting, e.g. every ring in a corpus. Lets a
/// category that only occurs in the test partition still encode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub sample_ids: Vec<String>,
    pub waveforms: Vec<WaveformKind>,
}

/// One-hot encoder for the categorical columns followed by standardization of
/// the numeric ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub categorical: Vec<CategoricalFeature>,
    pub numeric: Vec<NumericFeature>,
}

impl Encoder {
    pub fn fit(rows: &[StaticRow]) -> Result<Self> {
        Self::fit_with_vocabulary(rows, &Vocabulary::default())
    }

    pub fn fit_with_vocabulary(rows: &[StaticRow], vocabulary: &Vocabulary) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyInput("encoder fit rows"))?;
        let n_numeric = first.numeric().len();

        let mut cats: [Vec<String>; 2] =
            [vocabulary.sample_ids.clone(), vocabulary.waveforms.iter().map(|w| w.name().to_string()).collect()];
        let mut sums = vec![0.0; n_numeric];
        for r in rows {
            let num = r.numeric();
            if num.len() != n_numeric {
                return Err(Error::WidthMismatch { expected: n_numeric, got: num.len() });
            }
            for (s, v) in sums.iter_mut().zip(&num) {
                *s += v;
            }
            for (list, v) in cats.iter_mut().zip(r.categorical()) {
                list.push(v.to_string());
            }
        }
        let n = rows.len() as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / n).collect();
        let mut sq = vec![0.0; n_numeric];
        for r in rows {
            for ((s, v), m) in sq.iter_mut().zip(r.numeric()).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }

        let categorical = CATEGORICAL_NAMES
            .iter()
            .zip(cats)
            .map(|(name, mut categories)| {
                categories.sort();
                categories.dedup();
                CategoricalFeature { name: name.to_string(), categories }
            })
            .collect();
        let numeric = NUMERIC_NAMES
            .iter()
            .zip(means.iter().zip(&sq))
            .map(|(name, (&mean, &s))| NumericFeature { name: name.to_string(), mean, sd: (s / n).sqrt() })
            .collect();
        Ok(Encoder { categorical, numeric })
    }

    pub fn includes_baseline(&self) -> bool {
        self.numeric.len() == NUMERIC_NAMES.len()
    }

    pub fn width(&self) -> usize {
        self.categorical.iter().map(|c| c.categories.len()).sum::<usize>() + self.numeric.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .categorical
            .iter()
            .flat_map(|c| c.categories.iter().map(move |v| format!("{}={}", c.name, v)))
            .collect();
        names.extend(self.numeric.iter().map(|f| f.name.clone()));
        names
    }

    pub fn apply<T: Scalar>(&self, row: &StaticRow) -> Result<Vec<T>> {
        let num = row.numeric();
        if num.len() != self.numeric.len() {
            return Err(Error::WidthMismatch { expected: self.numeric.len(), got: num.len() });
        }
        let mut out = Vec::with_capacity(self.width());
        for (feature, value) in self.categorical.iter().zip(row.categorical()) {
            let hot = feature
                .categories
                .binary_search_by(|c| c.as_str().cmp(value))
                .map_err(|_| Error::UnknownCategory { feature: feature.name.clone(), value: value.to_string() })?;
            out.extend((0..feature.categories.len()).map(|i| if i == hot { T::one() } else { T::zero() }));
        }
        for (f, v) in self.numeric.iter().zip(num) {
            let z = if f.sd > 0.0 { (v - f.mean) / f.sd } else { 0.0 };
            out.push(T::of(z));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(sample: &str, waveform: WaveformKind, freq: f64, baseline: Option<f64>) -> StaticRow {
        StaticRow {
            experiment: 0,
            sample_id: sample.into(),
            waveform,
            frequency_hz: freq,
            pulse_width_ms: 1.0,
            baseline_n: baseline,
            max_force_n: 1e-4,
        }
    }

    #[test]
    fn waveforms_encode_in_sorted_order() {
        let rows: Vec<StaticRow> = WaveformKind::ALL.iter().map(|&w| row("S1", w, 10.0, None)).collect();
        let enc = Encoder::fit(&rows).unwrap();
        let asym = row("S1", WaveformKind::BiphasicAsymmetricBalanced, 10.0, None);
        let v: Vec<f64> = enc.apply(&asym).unwrap();
        // one sample column, then the waveform block
        assert_eq!(&v[1..5], &[1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn numeric_standardization() {
        let rows: Vec<StaticRow> =
            [1.0, 2.0, 3.0].iter().map(|&f| row("S1", WaveformKind::Monophasic, f, None)).collect();
        let enc = Encoder::fit(&rows).unwrap();
        let at = |f: f64| enc.apply::<f64>(&row("S1", WaveformKind::Monophasic, f, None)).unwrap()[2];
        assert_eq!(at(2.0), 0.0);
        let oracle = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((at(3.0) - oracle).abs() < 1e-12);
        assert!((at(3.0) - 1.224_744_871_391_589).abs() < 1e-12);
        // constant pulse width
        assert_eq!(enc.apply::<f64>(&rows[0]).unwrap()[3], 0.0);
    }

    #[test]
    fn unknown_category_is_reported() {
        let enc = Encoder::fit(&[row("S1", WaveformKind::Monophasic, 1.0, None)]).unwrap();
        let err = enc.apply::<f64>(&row("S9", WaveformKind::Monophasic, 1.0, None)).unwrap_err();
        assert_eq!(err.category(), "unknown-category");
    }

    #[test]
    fn vocabulary_covers_unseen_categories() {
        let vocab = Vocabulary { sample_ids: vec!["S2".into(), "S1".into()], waveforms: WaveformKind::ALL.to_vec() };
        let enc = Encoder::fit_with_vocabulary(&[row("S1", WaveformKind::Monophasic, 1.0, None)], &vocab).unwrap();
        assert_eq!(enc.width(), 2 + 4 + 2);
        let v: Vec<f64> = enc.apply(&row("S2", WaveformKind::TriangularBiphasic, 1.0, None)).unwrap();
        assert_eq!(&v[..6], &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn baseline_width_must_match() {
        let enc = Encoder::fit(&[row("S1", WaveformKind::Monophasic, 1.0, Some(1e-5))]).unwrap();
        assert!(enc.includes_baseline());
        let err = enc.apply::<f64>(&row("S1", WaveformKind::Monophasic, 1.0, None)).unwrap_err();
        assert_eq!(err.category(), "width-mismatch");
        let mixed =
            [row("S1", WaveformKind::Monophasic, 1.0, Some(1e-5)), row("S1", WaveformKind::Monophasic, 1.0, None)];
        assert!(Encoder::fit(&mixed).is_err());
    }

    proptest::proptest! {
        #[test]
        fn fit_data_is_standardized(
            data in proptest::collection::vec((0usize..5, 0usize..4, 1.0f64..60.0, 0.1f64..20.0, 1e-5f64..1e-4), 2..40)
        ) {
            let rows: Vec<StaticRow> = data
                .iter()
                .map(|&(s, w, f, pw, b)| StaticRow {
                    experiment: 0,
                    sample_id: format!("S{s}"),
                    waveform: WaveformKind::ALL[w],
                    frequency_hz: f,
                    pulse_width_ms: pw,
                    baseline_n: Some(b),
                    max_force_n: 1e-4,
                })
                .collect();
            let enc = Encoder::fit(&rows).unwrap();
            let encoded: Vec<Vec<f64>> = rows.iter().map(|r| enc.apply(r).unwrap()).collect();
            let n_s = enc.categorical[0].categories.len();
            let n_w = enc.categorical[1].categories.len();
            for v in &encoded {
                proptest::prop_assert_eq!(v[..n_s].iter().sum::<f64>(), 1.0);
                proptest::prop_assert_eq!(v[n_s..n_s + n_w].iter().sum::<f64>(), 1.0);
            }
            for (j, f) in enc.numeric.iter().enumerate() {
                let col: Vec<f64> = encoded.iter().map(|v| v[n_s + n_w + j]).collect();
                let n = col.len() as f64;
                let mean = col.iter().sum::<f64>() / n;
                proptest::prop_assert!(mean.abs() < 1e-12);
                if f.sd > 1e-9 * f.mean.abs() {
                    let sd = (col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
                    proptest::prop_assert!((sd - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}
