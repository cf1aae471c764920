use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNormalFit {
    pub mu: f64,
    pub sigma: f64,
}

/// Maximum-likelihood log-normal fit: mean and population standard deviation
/// of the log values.
pub fn fit_log_normal(values: &[f64]) -> Result<LogNormalFit> {
    if values.len() < 2 {
        return Err(Error::arg(format!(
            "log-normal fit needs at least 2 values, got {}",
            values.len()
        )));
    }
    if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::arg(format!(
            "log-normal fit needs positive values, got {bad}"
        )));
    }
    let n = values.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let mu = logs.iter().sum::<f64>() / n;
    let sigma = (logs.iter().map(|l| (l - mu).powi(2)).sum::<f64>() / n).sqrt();
    if !(sigma > 0.0) {
        return Err(Error::arg(
            "log-normal fit is degenerate: all values are equal",
        ));
    }
    Ok(LogNormalFit { mu, sigma })
}
