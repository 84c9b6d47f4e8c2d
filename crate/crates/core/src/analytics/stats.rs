use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::AnalyticsError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    /// Half-width of the 95% t interval; none for a single value.
    pub ci95_half_width: Option<f64>,
}

pub fn descriptive_stats(values: &[f64]) -> Result<DescriptiveStats, AnalyticsError> {
    if values.is_empty() {
        return Err(AnalyticsError::Empty);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(AnalyticsError::NonFinite);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return Ok(DescriptiveStats { n, mean, ci95_half_width: None });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df is positive").inverse_cdf(0.975);
    Ok(DescriptiveStats { n, mean, ci95_half_width: Some(t * var.sqrt() / (n as f64).sqrt()) })
}
