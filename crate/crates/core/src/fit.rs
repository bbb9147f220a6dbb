//! Ordinary least squares on log-log data.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("power-law fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("non-positive value {value} at abscissa {x} cannot be log-transformed")]
    NonPositive { x: f64, value: f64 },
    #[error("abscissae are all equal; slope undefined")]
    Degenerate,
}

/// Result of fitting `log y = intercept + slope * log x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Ordinary least squares line through `(x, y)` pairs.
pub fn least_squares(points: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    if points.len() < 2 {
        return Err(FitError::TooFewPoints { needed: 2, got: points.len() });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = points
        .iter()
        .map(|p| {
            let r = p.1 - intercept - slope * p.0;
            r * r
        })
        .sum();
    Ok(PowerLawFit { slope, intercept, residual: (ss / n).sqrt() })
}

/// Fit `y ≈ e^intercept * x^slope` by least squares on the logarithms.
pub fn power_law(points: &[(f64, f64)], min_points: usize) -> Result<PowerLawFit, FitError> {
    if points.len() < min_points {
        return Err(FitError::TooFewPoints { needed: min_points, got: points.len() });
    }
    let logs = points
        .iter()
        .map(|&(x, y)| {
            if x > 0.0 && y > 0.0 {
                Ok((x.ln(), y.ln()))
            } else {
                Err(FitError::NonPositive { x, value: if x > 0.0 { y } else { x } })
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    least_squares(&logs)
}
