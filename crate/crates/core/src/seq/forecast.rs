use serde::{Deserialize, Serialize};

use super::Lstm;
use crate::datakit::MinMaxScaler;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anything that maps a window of scaled values to the next scaled value.
pub trait OneStepPredictor {
    fn window(&self) -> usize;
    fn predict_next(&self, window: &[f64]) -> f64;
}

impl<T: Scalar> OneStepPredictor for Lstm<T> {
    fn window(&self) -> usize {
        self.window
    }

    fn predict_next(&self, window: &[f64]) -> f64 {
        let w: Vec<T> = window.iter().map(|&v| T::of(v)).collect();
        self.run(&w, &mut self.tape()).to_f64_lossy()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForecastMode {
    /// Every prediction reads true past values.
    TeacherForced,
    /// After the first true window, predictions are fed back as inputs.
    Autoregressive,
}

impl ForecastMode {
    pub fn name(self) -> &'static str {
        match self {
            ForecastMode::TeacherForced => "teacher_forced",
            ForecastMode::Autoregressive => "autoregressive",
        }
    }
}

impl std::str::FromStr for ForecastMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "teacher_forced" | "teacher-forced" | "tf" => Ok(ForecastMode::TeacherForced),
            "autoregressive" | "ar" => Ok(ForecastMode::Autoregressive),
            _ => Err(Error::InvalidConfig(format!("unknown forecast mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub mode: ForecastMode,
    /// Trace index of the first prediction; prediction `k` estimates sample `offset + k`.
    pub offset: usize,
    pub scaled: Vec<f64>,
    pub forces_n: Vec<f64>,
}

pub fn forecast<P: OneStepPredictor>(
    model: &P,
    forces_n: &[f64],
    scaler: &MinMaxScaler,
    mode: ForecastMode,
) -> Result<ForecastResult> {
    let w = model.window();
    if forces_n.len() <= w {
        return Err(Error::TraceTooShort { len: forces_n.len(), needed: w + 1 });
    }
    let truth: Vec<f64> = forces_n.iter().map(|&f| scaler.apply(f)).collect();
    let steps = forces_n.len() - w;
    let mut scaled = Vec::with_capacity(steps);
    match mode {
        ForecastMode::TeacherForced => {
            for k in 0..steps {
                scaled.push(model.predict_next(&truth[k..k + w]));
            }
        }
        ForecastMode::Autoregressive => {
            let mut buf = truth[..w].to_vec();
            for k in 0..steps {
                let next = model.predict_next(&buf[k..k + w]);
                buf.push(next);
                scaled.push(next);
            }
        }
    }
    let forces_n = scaled.iter().map(|&s| scaler.invert(s)).collect();
    Ok(ForecastResult { mode, offset: w, scaled, forces_n })
}
