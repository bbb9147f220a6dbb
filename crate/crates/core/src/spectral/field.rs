use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Collocation, CollocationGrid, FourierGrid, SpectralError};
use crate::Real;

/// Spatial Sobolev weight convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolevWeight {
    /// `⟨|m₁| + |m₂|⟩^{s}` per mode.
    Bracket,
    /// `⟨μ_k⟩^{s/2}` per mode, i.e. `Σ_k ⟨μ_k⟩^s ‖𝒪_k u‖²` for the norm squared.
    Eigen,
}

/// Frequency localization used by [`Field::band_project`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    /// Euclidean lattice ball `|m| ≤ N`.
    Ball,
    /// Half-open shell `N ≤ √Q(m) < 2N`.
    Shell,
}

fn bracket<T: Real>(x: T) -> T {
    (T::one() + x * x).sqrt()
}

/// Complex Fourier coefficients over a [`FourierGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T: Real> {
    grid: FourierGrid<T>,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: FourierGrid<T>) -> Self {
        Self { grid, coeffs: vec![Complex::default(); grid.len()] }
    }

    pub fn from_coeffs(grid: FourierGrid<T>, coeffs: Vec<Complex<T>>) -> Result<Self, SpectralError> {
        if coeffs.len() != grid.len() {
            return Err(SpectralError::LengthMismatch { expected: grid.len(), got: coeffs.len() });
        }
        Ok(Self { grid, coeffs })
    }

    pub(crate) fn from_parts(grid: FourierGrid<T>, coeffs: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    pub fn from_fn<F: FnMut(i64, i64) -> Complex<T>>(grid: FourierGrid<T>, mut f: F) -> Self {
        let coeffs = (0..grid.len())
            .map(|i| {
                let (m1, m2) = grid.frequency(i);
                f(m1, m2)
            })
            .collect();
        Self { grid, coeffs }
    }

    /// `c · e^{i m·x}`.
    pub fn single_mode(grid: FourierGrid<T>, m: (i64, i64), c: Complex<T>) -> Result<Self, SpectralError> {
        let mut f = Self::zeros(grid);
        f.set(m, c)?;
        Ok(f)
    }

    pub fn grid(&self) -> FourierGrid<T> {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex<T>> {
        self.coeffs
    }

    pub fn coeff(&self, m: (i64, i64)) -> Option<Complex<T>> {
        self.grid.index(m.0, m.1).map(|i| self.coeffs[i])
    }

    pub fn set(&mut self, m: (i64, i64), c: Complex<T>) -> Result<(), SpectralError> {
        let i = self.grid.index(m.0, m.1).ok_or(SpectralError::OutOfGrid(m.0, m.1))?;
        self.coeffs[i] = c;
        Ok(())
    }

    /// Frequencies carrying a nonzero coefficient.
    pub fn support(&self) -> Vec<(i64, i64)> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != Complex::default())
            .map(|(i, _)| self.grid.frequency(i))
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == Complex::default())
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self { grid: self.grid, coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpectralError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with<F: Fn(Complex<T>, Complex<T>) -> Complex<T>>(&self, other: &Self, f: F) -> Result<Self, SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        Ok(Self { grid: self.grid, coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| f(a, b)).collect() })
    }

    /// `Σ_m |û(m)|²`.
    pub fn coeff_norm_sqr(&self) -> T {
        self.coeffs.iter().map(|c| c.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    /// `‖u‖_{L²} = 2π (Σ |û|²)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        T::two_pi() * self.coeff_norm_sqr().sqrt()
    }

    /// `⟨u, v⟩_{L²} = (2π)² Σ û(m) conj(v̂(m))`.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>, SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        let s = self.coeffs.iter().zip(&other.coeffs).fold(Complex::default(), |acc, (&a, &b)| acc + a * b.conj());
        Ok(s * (T::two_pi() * T::two_pi()))
    }

    /// Free Schrödinger flow `û(m) ↦ e^{−itQ(m)} û(m)`.
    pub fn free_flow(&self, t: T) -> Self {
        if t == T::zero() {
            return self.clone();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * Complex::from_polar(T::one(), -t * self.grid.symbol_at(i)))
            .collect();
        Self { grid: self.grid, coeffs }
    }

    /// Sobolev norm under the chosen weight convention, including the
    /// `2π` Plancherel factor so that `s = 0` gives `‖u‖_{L²}`.
    pub fn sobolev_norm(&self, s: T, weight: SobolevWeight) -> T {
        let two = T::one() + T::one();
        let sum = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != Complex::default())
            .map(|(i, c)| {
                let w = match weight {
                    SobolevWeight::Bracket => {
                        let (m1, m2) = self.grid.frequency(i);
                        bracket(T::from_i64(m1.abs() + m2.abs()).unwrap()).powf(two * s)
                    }
                    SobolevWeight::Eigen => bracket(self.grid.symbol_at(i)).powf(s),
                };
                w * c.norm_sqr()
            })
            .fold(T::zero(), |a, b| a + b);
        T::two_pi() * sum.sqrt()
    }

    /// Keep the modes with `|Q(m) − μ| ≤ tol`.
    pub fn eigenspace_project(&self, mu: T, tol: T) -> Self {
        self.filter(|i| (self.grid.symbol_at(i) - mu).abs() <= tol)
    }

    /// Ball: `|m| ≤ N`; shell: `N ≤ √Q(m) < 2N`.
    pub fn band_project(&self, n: T, band: Band) -> Self {
        let n2 = n * n;
        let four = T::lit(4.0);
        self.filter(|i| match band {
            Band::Ball => {
                let (m1, m2) = self.grid.frequency(i);
                T::from_i64(m1 * m1 + m2 * m2).unwrap() <= n2
            }
            Band::Shell => {
                let q = self.grid.symbol_at(i);
                q >= n2 && q < four * n2
            }
        })
    }

    fn filter<F: Fn(usize) -> bool>(&self, keep: F) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| if keep(i) { c } else { Complex::default() })
            .collect();
        Self { grid: self.grid, coeffs }
    }

    /// Values on the `(oversample·M)²` collocation grid.
    pub fn synthesize(&self, oversample: usize) -> Result<CollocationGrid<T>, SpectralError> {
        let mut col = Collocation::new(self.grid, oversample)?;
        Ok(CollocationGrid { size: col.side(), values: col.to_values(self) })
    }

    /// Fourier coefficients of collocation values, projected onto `grid`.
    pub fn analyze(values: &CollocationGrid<T>, grid: FourierGrid<T>) -> Result<Self, SpectralError> {
        if values.values.len() != values.size * values.size {
            return Err(SpectralError::LengthMismatch { expected: values.size * values.size, got: values.values.len() });
        }
        let mut col = Collocation::with_side(grid, values.size)?;
        Ok(col.to_field(&values.values))
    }
}
