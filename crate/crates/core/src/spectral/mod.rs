//! Fourier fields on the rescaled torus `[0, 2π)²`.
//!
//! A field is `u(x) = Σ_m û(m) e^{i m·x}` over the truncated lattice
//! `{−M/2, …, M/2−1}²`, with no `1/(2π)²` factor, so that
//! `‖u‖²_{L²} = (2π)² Σ |û(m)|²`. The Laplacian acts as multiplication by
//! `−Q(m)`, `Q(m) = (θ₁m₁)² + (θ₂m₂)²`, which makes this equivalent to the
//! physical torus `ℝ²/(θ₁ℤ × θ₂ℤ)` up to scaling.

mod eigen;
mod field;
mod snapshot;
mod transform;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadform::QuadForm;
use crate::Real;

pub use eigen::{eigen_levels, EigenLevel};
pub use field::{Band, Field, SobolevWeight};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
pub use transform::{Collocation, CollocationGrid, Fft2};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("torus scales must be positive and finite, got ({0}, {1})")]
    InvalidGeometry(f64, f64),
    #[error("modes per axis must be even and positive, got {0}")]
    InvalidGrid(usize),
    #[error("expected {expected} coefficients, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("frequency ({0}, {1}) is outside the grid")]
    OutOfGrid(i64, i64),
    #[error("aliasing: {0}")]
    Aliasing(String),
    #[error("snapshot I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("snapshot format: {0}")]
    Format(String),
}

/// Scale pair `(θ₁, θ₂)` of the torus `ℝ²/(θ₁ℤ × θ₂ℤ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusGeometry<T> {
    pub theta1: T,
    pub theta2: T,
}

impl<T: Real> TorusGeometry<T> {
    pub fn new(theta1: T, theta2: T) -> Result<Self, SpectralError> {
        let ok = |t: T| t.is_finite() && t > T::zero();
        if !ok(theta1) || !ok(theta2) {
            return Err(SpectralError::InvalidGeometry(theta1.as_f64(), theta2.as_f64()));
        }
        Ok(Self { theta1, theta2 })
    }

    /// `θ = (1, 2^{1/4})`, so that `θ₂² = √2` and the symbol
    /// `m₁² + √2 m₂²` has no coincidences beyond sign changes.
    pub fn standard() -> Self {
        Self { theta1: T::one(), theta2: T::lit(2f64.powf(0.25)) }
    }

    /// The symbol as a diagonal binary quadratic form.
    pub fn form(&self) -> QuadForm<T> {
        QuadForm::diagonal(self.theta1 * self.theta1, self.theta2 * self.theta2)
            .expect("positive scales give a positive-definite form")
    }

    /// `Q(m) = (θ₁m₁)² + (θ₂m₂)²`.
    pub fn symbol(&self, m1: i64, m2: i64) -> T {
        self.form().eval(m1, m2)
    }
}

/// Truncated frequency lattice `{−M/2, …, M/2−1}²` over a torus geometry.
///
/// Coefficients are stored row-major in FFT order: index
/// `(m₁ mod M)·M + (m₂ mod M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierGrid<T> {
    geometry: TorusGeometry<T>,
    modes: usize,
}

impl<T: Real> FourierGrid<T> {
    pub fn new(geometry: TorusGeometry<T>, modes: usize) -> Result<Self, SpectralError> {
        if modes == 0 || modes % 2 != 0 {
            return Err(SpectralError::InvalidGrid(modes));
        }
        Ok(Self { geometry, modes })
    }

    /// Smallest FFT-friendly grid whose lattice contains the ball `|m| ≤ radius`.
    pub fn containing_ball(geometry: TorusGeometry<T>, radius: f64) -> Self {
        let need = 2 * (radius.floor() as usize + 1);
        Self { geometry, modes: smooth_even(need) }
    }

    pub fn geometry(&self) -> TorusGeometry<T> {
        self.geometry
    }

    /// `M`, modes per axis.
    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn len(&self) -> usize {
        self.modes * self.modes
    }

    pub fn is_empty(&self) -> bool {
        self.modes == 0
    }

    fn axis_frequency(&self, i: usize) -> i64 {
        if i < self.modes / 2 {
            i as i64
        } else {
            i as i64 - self.modes as i64
        }
    }

    pub fn frequency(&self, idx: usize) -> (i64, i64) {
        (self.axis_frequency(idx / self.modes), self.axis_frequency(idx % self.modes))
    }

    pub fn index(&self, m1: i64, m2: i64) -> Option<usize> {
        let half = (self.modes / 2) as i64;
        let inside = |m: i64| (-half..half).contains(&m);
        (inside(m1) && inside(m2))
            .then(|| m1.rem_euclid(self.modes as i64) as usize * self.modes + m2.rem_euclid(self.modes as i64) as usize)
    }

    pub fn symbol_at(&self, idx: usize) -> T {
        let (m1, m2) = self.frequency(idx);
        self.geometry.symbol(m1, m2)
    }

    /// `Q(m)` for every stored mode, in storage order.
    pub fn symbols(&self) -> Vec<T> {
        (0..self.len()).map(|i| self.symbol_at(i)).collect()
    }
}

/// Smallest even integer `>= n` whose only prime factors are 2, 3 and 5.
pub fn smooth_even(n: usize) -> usize {
    let mut k = n.max(2) + n % 2;
    loop {
        let mut r = k;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return k;
        }
        k += 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_examples() {
        let flat = TorusGeometry::new(1.0, 1.0).unwrap();
        assert_eq!(flat.symbol(3, 4), 25.0);
        let g = TorusGeometry::new(1.0, 2f64.sqrt()).unwrap();
        assert!((g.symbol(1, 1) - 3.0).abs() < 1e-15);
        assert_eq!(TorusGeometry::<f64>::standard().symbol(0, 0), 0.0);
    }

    #[test]
    fn geometry_rejects_nonpositive_scales() {
        assert!(TorusGeometry::new(0.0, 1.0).is_err());
        assert!(TorusGeometry::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn grid_indexing_is_a_bijection() {
        let grid = FourierGrid::new(TorusGeometry::<f64>::standard(), 6).unwrap();
        let mut seen = std::collections::HashSet::new();
        for idx in 0..grid.len() {
            let (m1, m2) = grid.frequency(idx);
            assert!((-3..3).contains(&m1) && (-3..3).contains(&m2));
            assert_eq!(grid.index(m1, m2), Some(idx));
            assert!(seen.insert((m1, m2)));
        }
        assert_eq!(grid.index(3, 0), None);
        assert!(FourierGrid::new(TorusGeometry::<f64>::standard(), 5).is_err());
    }

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_even(130), 144);
        assert_eq!(smooth_even(7), 8);
        assert_eq!(smooth_even(30), 30);
        let g = FourierGrid::containing_ball(TorusGeometry::<f64>::standard(), 64.0);
        assert!(g.index(64, 0).is_some() && g.index(-64, 64).is_some());
    }
}
