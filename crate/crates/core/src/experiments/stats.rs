use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Sample mean, standard deviation (n - 1 denominator) and the half-width
/// of the two-sided 95% Student-t interval of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub ci95: f64,
}

fn t_quantile(p: f64, dof: usize) -> f64 {
    StudentsT::new(0.0, 1.0, dof as f64).expect("positive degrees of freedom").inverse_cdf(p)
}

pub fn summarize(values: &[f64]) -> Summary {
    let n = values.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, std: f64::NAN, ci95: f64::NAN };
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Summary { n, mean, std: 0.0, ci95: f64::NAN };
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let std = var.sqrt();
    Summary { n, mean, std, ci95: t_quantile(0.975, n - 1) * std / (n as f64).sqrt() }
}

/// One-sided Student-t confidence bounds on the mean of paired differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSidedBounds {
    pub n: usize,
    pub mean: f64,
    /// The mean exceeds this with the stated confidence.
    pub lower: f64,
    /// The mean is below this with the stated confidence.
    pub upper: f64,
}

pub fn one_sided_bounds(diffs: &[f64], confidence: f64) -> Result<OneSidedBounds> {
    if diffs.len() < 2 {
        return Err(Error::Precondition("at least two paired samples are needed".into()));
    }
    if !(0.5..1.0).contains(&confidence) {
        return Err(Error::Config(format!("confidence must be in [0.5, 1), got {confidence}")));
    }
    let s = summarize(diffs);
    let margin = t_quantile(confidence, s.n - 1) * s.std / (s.n as f64).sqrt();
    Ok(OneSidedBounds { n: s.n, mean: s.mean, lower: s.mean - margin, upper: s.mean + margin })
}
