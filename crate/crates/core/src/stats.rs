//! Small numeric helpers shared by the scoring branches and reports.

use serde::{Deserialize, Serialize};

/// Standard-deviation convention used for every score normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdMode {
    /// Divide by the count.
    #[default]
    Population,
    /// Divide by count - 1.
    Sample,
}

impl StdMode {
    pub fn std<'a>(self, values: impl IntoIterator<Item = &'a f64>) -> f64 {
        let mut n = 0usize;
        let mut sum = 0.0;
        let vals: Vec<f64> = values
            .into_iter()
            .map(|&v| {
                n += 1;
                sum += v;
                v
            })
            .collect();
        let denom = match self {
            StdMode::Population => n as f64,
            StdMode::Sample => n.saturating_sub(1) as f64,
        };
        if denom <= 0.0 {
            return 0.0;
        }
        let mean = sum / n as f64;
        let ss: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / denom).sqrt()
    }
}

/// Numeric conventions recorded alongside every fitted object and report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub std_mode: StdMode,
    pub epsilon: f64,
}

impl Default for Conventions {
    fn default() -> Self {
        Self {
            std_mode: StdMode::Population,
            epsilon: crate::fisher::EPSILON,
        }
    }
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Sample standard deviation; `None` below two values.
pub fn sample_std(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        None
    } else {
        Some(StdMode::Sample.std(values))
    }
}

/// Index of the smallest value; ties go to the lowest index.
pub fn argmin(values: impl IntoIterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.into_iter().enumerate() {
        match best {
            Some((_, b)) if v >= b => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}
