//! Cubic Schrödinger flow `iu_t + Δu = α|u|²u` by Strang splitting.
//!
//! The linear sub-flow is exact in Fourier space. The nonlinear sub-flow
//! `u ↦ u·e^{−iα|u|²h}` is exact pointwise and is applied on an oversampled
//! collocation grid before projecting back onto the field's modes.

mod picard;
mod trajectory;

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{Collocation, Field, FourierGrid, SpectralError};
use crate::Real;

pub use picard::{picard_iterate, picard_with_refinement, PicardConfig, PicardReport};
pub use trajectory::{evolve, write_checkpoint, ObservableRow, ObservableSpec, Trajectory, MAX_STEPS};

#[derive(Debug, Error)]
pub enum NlsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("step budget exceeded: {steps} steps requested, limit {limit}")]
    StepBudget { steps: u64, limit: u64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Sign of the nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alpha {
    /// `α = +1`.
    Defocusing,
    /// `α = −1`.
    Focusing,
}

impl Alpha {
    pub fn from_sign(sign: i32) -> Option<Self> {
        match sign {
            1 => Some(Self::Defocusing),
            -1 => Some(Self::Focusing),
            _ => None,
        }
    }

    pub fn sign(self) -> i32 {
        match self {
            Self::Defocusing => 1,
            Self::Focusing => -1,
        }
    }

    pub fn value<T: Real>(self) -> T {
        T::lit(self.sign() as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NlsParams<T> {
    pub alpha: Alpha,
    pub dt: T,
    pub dealias_oversample: usize,
}

impl<T: Real> NlsParams<T> {
    pub fn new(alpha: Alpha, dt: T, dealias_oversample: usize) -> Result<Self, NlsError> {
        let p = Self { alpha, dt, dealias_oversample };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NlsError> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(NlsError::InvalidParams(format!("dt must be positive and finite, got {}", self.dt)));
        }
        check_oversample(self.dealias_oversample)
    }
}

fn check_oversample(oversample: usize) -> Result<(), NlsError> {
    if oversample < 2 {
        return Err(SpectralError::Aliasing(format!("dealias oversample must be >= 2, got {oversample}")).into());
    }
    Ok(())
}

/// Reusable split-step integrator for one grid.
pub struct SplitStep<T: Real> {
    alpha: T,
    col: Collocation<T>,
    /// `Q(m)` per grid index.
    symbols: Vec<T>,
}

impl<T: Real> SplitStep<T> {
    pub fn new(grid: FourierGrid<T>, alpha: Alpha, oversample: usize) -> Result<Self, NlsError> {
        check_oversample(oversample)?;
        Ok(Self { alpha: alpha.value(), col: Collocation::new(grid, oversample)?, symbols: grid.symbols() })
    }

    pub fn grid(&self) -> FourierGrid<T> {
        self.col.grid()
    }

    fn check_grid(&self, u: &Field<T>) -> Result<(), NlsError> {
        if u.grid() != self.col.grid() {
            return Err(SpectralError::GridMismatch.into());
        }
        Ok(())
    }

    /// `u ↦ u·e^{−iα|u|²h}` on the collocation grid.
    pub fn nonlinear_phase(&mut self, u: &Field<T>, h: T) -> Result<Field<T>, NlsError> {
        self.check_grid(u)?;
        if h == T::zero() {
            return Ok(u.clone());
        }
        let mut values = self.col.to_values(u);
        let k = -self.alpha * h;
        for v in values.iter_mut() {
            *v = *v * Complex::from_polar(T::one(), k * v.norm_sqr());
        }
        Ok(self.col.to_field(&values))
    }

    fn half_flow(&self, coeffs: &mut [Complex<T>], t: T) {
        for (c, &q) in coeffs.iter_mut().zip(&self.symbols) {
            *c = *c * Complex::from_polar(T::one(), -t * q);
        }
    }

    /// One Strang step of signed length `h`; `h < 0` runs the flow backwards.
    pub fn step_by(&mut self, u: &Field<T>, h: T) -> Result<Field<T>, NlsError> {
        self.check_grid(u)?;
        if h == T::zero() {
            return Ok(u.clone());
        }
        let half = h * T::lit(0.5);
        let mut w = u.clone();
        self.half_flow(w.coeffs_mut(), half);
        let mut w = self.nonlinear_phase(&w, h)?;
        self.half_flow(w.coeffs_mut(), half);
        Ok(w)
    }

    /// Cubic term `|u|²u`, exact for the grid's modes at oversample ≥ 2.
    pub fn cubic(&mut self, u: &Field<T>) -> Result<Field<T>, NlsError> {
        self.check_grid(u)?;
        let mut values = self.col.to_values(u);
        for v in values.iter_mut() {
            *v = *v * v.norm_sqr();
        }
        Ok(self.col.to_field(&values))
    }

    /// `∫|u|⁴` on the collocation grid.
    pub fn quartic(&mut self, u: &Field<T>) -> Result<T, NlsError> {
        self.check_grid(u)?;
        let values = self.col.to_values(u);
        let p = T::from_usize(self.col.side()).unwrap();
        let cell = T::two_pi() * T::two_pi() / (p * p);
        Ok(values.iter().map(|v| v.norm_sqr() * v.norm_sqr()).fold(T::zero(), |a, b| a + b) * cell)
    }

    pub fn energy(&mut self, u: &Field<T>) -> Result<T, NlsError> {
        Ok(kinetic(u) + self.alpha * T::lit(0.5) * self.quartic(u)?)
    }
}

/// `u ↦ u·e^{−iα|u|²dt}` pointwise on the `oversample·M` grid.
pub fn nonlinear_phase_step<T: Real>(u: &Field<T>, dt: T, alpha: Alpha, oversample: usize) -> Result<Field<T>, NlsError> {
    SplitStep::new(u.grid(), alpha, oversample)?.nonlinear_phase(u, dt)
}

/// `free_flow(dt/2) ∘ nonlinear_phase_step(dt) ∘ free_flow(dt/2)`.
pub fn strang_step<T: Real>(u: &Field<T>, params: &NlsParams<T>) -> Result<Field<T>, NlsError> {
    SplitStep::new(u.grid(), params.alpha, params.dealias_oversample)?.step_by(u, params.dt)
}

/// `M(u) = ∫|u|²`.
pub fn mass<T: Real>(u: &Field<T>) -> T {
    let n = u.l2_norm();
    n * n
}

/// `(2π)² Σ Q(m)|û(m)|² = ∫|∇u|²`.
pub fn kinetic<T: Real>(u: &Field<T>) -> T {
    let grid = u.grid();
    let s = u
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| grid.symbol_at(i) * c.norm_sqr())
        .fold(T::zero(), |a, b| a + b);
    s * T::two_pi() * T::two_pi()
}

/// `E(u) = ∫|∇u|² + (α/2)∫|u|⁴`, the quartic term on the doubled grid.
pub fn energy<T: Real>(u: &Field<T>, alpha: Alpha) -> Result<T, NlsError> {
    SplitStep::new(u.grid(), alpha, 2)?.energy(u)
}
