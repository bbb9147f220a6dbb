//! Measurements of space-time estimates for the free flow: `L⁴` Strichartz
//! ratios, bilinear ratios, the discrete exponential-sum inequality and
//! the vanishing of quadrilinear integrals under frequency separation.

mod expsum;
mod flow;
mod sweep;
mod vanish;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::FitError;
use crate::spectral::{SpectralError, TorusGeometry};

pub use expsum::{exp_sum_check, exp_sum_lhs, exp_sum_rhs, random_exp_sum_instance, ExpSumReport};
pub use flow::{bilinear_ratio, lp_spacetime_norm, strichartz_ratio, unimodular_ball_field, LpNorm, RatioEstimate};
pub use sweep::{bilinear_sweep, fit_ratio_exponent, strichartz_sweep, strichartz_sweep_with, write_records_csv, SweepReport};
pub use vanish::{
    quadrilinear_collocation, quadrilinear_integral, quadrilinear_vanish_check, random_vanishing_configuration,
    random_zero_sum_configuration, VanishReport,
};

/// `s₀/2`, the exponent of the `L⁴` Strichartz bound.
pub const STRICHARTZ_EXPONENT: f64 = 131.0 / 832.0;
/// Relative change under one doubling of the time samples above which a
/// record is flagged.
pub const REFINEMENT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("input field is zero")]
    ZeroField,
    #[error("empty input")]
    Empty,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("support exceeds the ball of radius {radius}")]
    Support { radius: u64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Dyadic frequency scales, strictly increasing.
    pub n_list: Vec<u64>,
    pub ensemble_size: usize,
    pub seed: u64,
    /// Uniform samples on `[0, 1)`; the check run doubles this.
    pub n_time_samples: usize,
    pub geometry: TorusGeometry<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_list: vec![8, 16, 32, 64],
            ensemble_size: 200,
            seed: 0,
            n_time_samples: 64,
            geometry: TorusGeometry::standard(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), EstimateError> {
        if self.n_list.is_empty() {
            return Err(EstimateError::InvalidConfig("N list is empty".into()));
        }
        if self.n_list.iter().any(|n| !n.is_power_of_two()) {
            return Err(EstimateError::InvalidConfig(format!("N values must be dyadic, got {:?}", self.n_list)));
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EstimateError::InvalidConfig(format!("N list must be increasing, got {:?}", self.n_list)));
        }
        if self.ensemble_size == 0 {
            return Err(EstimateError::InvalidConfig("ensemble size must be >= 1".into()));
        }
        if self.n_time_samples < 16 {
            return Err(EstimateError::InvalidConfig(format!(
                "need at least 16 time samples, got {}",
                self.n_time_samples
            )));
        }
        Ok(())
    }
}

/// Ensemble maximum at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    /// `N`, or `N₁` for bilinear sweeps.
    pub n: u64,
    /// `N₂` for bilinear sweeps.
    pub n2: Option<u64>,
    pub max_ratio: f64,
    /// Ensemble index of the maximizer; regenerates it with the sweep seed.
    pub argmax_seed: u64,
    /// Relative change of the maximizer's ratio under doubled time samples.
    pub refinement_delta: f64,
    pub flagged: bool,
    /// Maximum of `‖e^{itΔ}f‖_{L⁴} / ‖f‖_{H^{s₀/2}}`, Strichartz sweeps only.
    pub sobolev_ratio: Option<f64>,
}
