use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Field, FourierGrid, SpectralError};
use crate::Real;

/// Square 2-D FFT of side `n` on row-major buffers (unnormalized both ways).
pub struct Fft2<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    scratch: Vec<Complex<T>>,
    transposed: Vec<Complex<T>>,
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex::default(); scratch_len],
            transposed: vec![Complex::default(); n * n],
        }
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// `X[k] = Σ_j x[j] e^{-2πi j·k/n}`
    pub fn forward(&mut self, data: &mut [Complex<T>]) {
        let plan = Arc::clone(&self.forward);
        self.apply(&*plan, data);
    }

    /// `x[j] = Σ_k X[k] e^{+2πi j·k/n}` (no 1/n² factor).
    pub fn inverse(&mut self, data: &mut [Complex<T>]) {
        let plan = Arc::clone(&self.inverse);
        self.apply(&*plan, data);
    }

    fn apply(&mut self, plan: &dyn Fft<T>, data: &mut [Complex<T>]) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "buffer is not {n}x{n}");
        plan.process_with_scratch(data, &mut self.scratch);
        transpose(data, &mut self.transposed, n);
        plan.process_with_scratch(&mut self.transposed, &mut self.scratch);
        transpose(&self.transposed, data, n);
    }
}

fn transpose<T: Copy>(src: &[T], dst: &mut [T], n: usize) {
    const TILE: usize = 16;
    for ib in (0..n).step_by(TILE) {
        for jb in (0..n).step_by(TILE) {
            for i in ib..(ib + TILE).min(n) {
                for j in jb..(jb + TILE).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

/// Values of a field on the uniform `P × P` collocation grid
/// `x_{j} = 2π j / P`, row index along `x₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollocationGrid<T> {
    pub size: usize,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> CollocationGrid<T> {
    /// `∫_{[0,2π)²} g(|u|²) dx` by the collocation rectangle rule.
    pub fn integrate<F: Fn(Complex<T>) -> T>(&self, f: F) -> T {
        let cell = T::two_pi() * T::two_pi() / T::from_usize(self.size * self.size).unwrap();
        self.values.iter().map(|&v| f(v)).fold(T::zero(), |a, b| a + b) * cell
    }
}

/// Reusable bridge between an `M`-mode [`FourierGrid`] and its
/// `oversample·M` collocation grid.
pub struct Collocation<T: Real> {
    grid: FourierGrid<T>,
    fft: Fft2<T>,
    /// Collocation-buffer position of every grid mode.
    slots: Vec<usize>,
}

impl<T: Real> Collocation<T> {
    pub fn new(grid: FourierGrid<T>, oversample: usize) -> Result<Self, SpectralError> {
        if oversample == 0 {
            return Err(SpectralError::Aliasing(format!("oversample must be >= 1, got {oversample}")));
        }
        Self::with_side(grid, oversample * grid.modes())
    }

    /// Collocation side `p`, which must hold every grid frequency.
    pub fn with_side(grid: FourierGrid<T>, p: usize) -> Result<Self, SpectralError> {
        if p < grid.modes() {
            return Err(SpectralError::Aliasing(format!(
                "collocation side {p} cannot hold {} modes per axis",
                grid.modes()
            )));
        }
        let slots = (0..grid.len())
            .map(|idx| {
                let (m1, m2) = grid.frequency(idx);
                m1.rem_euclid(p as i64) as usize * p + m2.rem_euclid(p as i64) as usize
            })
            .collect();
        Ok(Self { grid, fft: Fft2::new(p), slots })
    }

    pub fn grid(&self) -> FourierGrid<T> {
        self.grid
    }

    pub fn side(&self) -> usize {
        self.fft.side()
    }

    /// `u(x_j) = Σ_m û(m) e^{i m·x_j}`.
    pub fn to_values(&mut self, field: &Field<T>) -> Vec<Complex<T>> {
        debug_assert_eq!(field.grid().modes(), self.grid.modes());
        let p = self.side();
        let mut buf = vec![Complex::default(); p * p];
        for (&slot, &c) in self.slots.iter().zip(field.coeffs()) {
            buf[slot] = c;
        }
        self.fft.inverse(&mut buf);
        buf
    }

    /// Discrete Fourier coefficients of collocation values, truncated to
    /// the grid's modes (an L² projection when the values are band-limited
    /// beyond the grid).
    pub fn to_field(&mut self, values: &[Complex<T>]) -> Field<T> {
        let p = self.side();
        let mut buf = values.to_vec();
        self.fft.forward(&mut buf);
        let norm = T::one() / T::from_usize(p * p).unwrap();
        let coeffs = self.slots.iter().map(|&s| buf[s] * norm).collect();
        Field::from_parts(self.grid, coeffs)
    }

    /// Full discrete spectrum of collocation values on the `P × P` grid,
    /// normalized so that it holds the `û(m)` of a band-limited function.
    pub fn spectrum(&mut self, values: &[Complex<T>]) -> Vec<Complex<T>> {
        let p = self.side();
        let mut buf = values.to_vec();
        self.fft.forward(&mut buf);
        let norm = T::one() / T::from_usize(p * p).unwrap();
        buf.iter_mut().for_each(|v| *v = *v * norm);
        buf
    }
}
