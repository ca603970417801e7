use crate::error::{Error, Result};

fn check_lengths(a: usize, b: usize, min: usize) -> Result<()> {
    if a != b {
        return Err(Error::Dimension {
            expected: a,
            got: b,
        });
    }
    if a < min {
        return Err(Error::Metric(format!(
            "need at least {min} values, got {a}"
        )));
    }
    Ok(())
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r_squared(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(truth.len(), pred.len(), 2)?;
    let mean = truth.iter().sum::<f64>() / truth.len() as f64;
    let ss_tot: f64 = truth.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Metric("R² is undefined for constant truth".into()));
    }
    let ss_res: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).powi(2)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn rmse(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_lengths(truth.len(), pred.len(), 1)?;
    let ss: f64 = truth.iter().zip(pred).map(|(t, p)| (t - p).powi(2)).sum();
    Ok((ss / truth.len() as f64).sqrt())
}

/// Fraction of values inside their closed interval `[lo, hi]`.
pub fn coverage(truth: &[f64], intervals: &[(f64, f64)]) -> Result<f64> {
    check_lengths(truth.len(), intervals.len(), 1)?;
    if let Some((lo, hi)) = intervals.iter().find(|(lo, hi)| !(lo <= hi)) {
        return Err(Error::Metric(format!("interval [{lo}, {hi}] is inverted")));
    }
    let hits = truth
        .iter()
        .zip(intervals)
        .filter(|(t, (lo, hi))| lo <= *t && *t <= hi)
        .count();
    Ok(hits as f64 / truth.len() as f64)
}

/// Sample mean and sample standard deviation (`n − 1` denominator; 0 for a
/// single value). Empty input gives NaN for both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Self { mean, std }
    }
}
