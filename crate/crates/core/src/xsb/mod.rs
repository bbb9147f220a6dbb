//! Windowed X^{s,b} norms.
//!
//! A trajectory sampled on `[0, 1]` is extended to `[−1, 2]`, multiplied by
//! a raised-cosine window that is identically 1 on `[0, 1]`, and
//! transformed in time mode by mode. Each mode is stored in its own frame
//! `V_m(t) = e^{iω_m t} u_m(t)`; the default frame `ω_m = Q(m)` makes free
//! solutions slowly varying, so large symbols do not alias. The physical
//! time frequency is `τ = σ − ω_m` and the modulation is `τ + Q(m)`.

mod form;
mod product;

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

use crate::estimates::EstimateError;
use crate::fit::FitError;
use crate::spectral::{Field, FourierGrid, SpectralError};

pub use form::{quadrilinear_form, quadrilinear_form_windowed};
pub use product::{
    localized_product_check, localized_product_sweep, write_product_csv, ProductConfig, ProductRecord, ProductSweep,
    ProductSummary,
};

/// Smallest number of samples on `[0, 1]` accepted by [`lift`].
pub const MIN_TIME_SAMPLES: usize = 64;
/// Spectral energy fraction beyond half the Nyquist modulation above which
/// a lift is flagged as under-sampled.
pub const TAIL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum XsbError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("insufficient sampling: {0}")]
    Sampling(String),
    #[error("space-time fields are not compatible: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XsbParams {
    pub s: f64,
    pub b: f64,
    pub b_prime: f64,
}

impl Default for XsbParams {
    fn default() -> Self {
        Self { s: 0.0, b: 0.55, b_prime: 0.45 }
    }
}

impl XsbParams {
    /// Parameters for trilinear experiments: `1/4 < b′ < 1/2 < b`, `b + b′ < 1`.
    pub fn trilinear(s: f64, b: f64, b_prime: f64) -> Result<Self, XsbError> {
        if !(0.25 < b_prime && b_prime < 0.5 && 0.5 < b && b + b_prime < 1.0) {
            return Err(XsbError::InvalidParams(format!("need 1/4 < b' < 1/2 < b and b + b' < 1, got b = {b}, b' = {b_prime}")));
        }
        Ok(Self { s, b, b_prime })
    }
}

/// How the trajectory continues outside `[0, 1]` before windowing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Extension {
    /// Continue by the free flow from the endpoint.
    #[default]
    FreeFlow,
    /// Hold the endpoint value.
    Hold,
}

/// Per-mode frame frequency `ω_m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// `ω_m = Q(m)`.
    #[default]
    Modulation,
    /// `ω_m = 0`.
    Rest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LiftConfig {
    pub extension: Extension,
    pub frame: Frame,
}

/// `1` on `[0, 1]`, raised-cosine tapers on `[−1, 0]` and `[1, 2]`.
pub fn window(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        1.0
    } else if (-1.0..0.0).contains(&t) {
        0.5 * (1.0 + (PI * t).cos())
    } else if t > 1.0 && t <= 2.0 {
        0.5 * (1.0 + (PI * (t - 1.0)).cos())
    } else {
        0.0
    }
}

/// Discrete `‖window‖_{L²[−1,2]}` on the padded grid of an `n_t`-sample lift.
pub fn window_l2(n_t: usize) -> f64 {
    let h = 1.0 / (n_t - 1) as f64;
    let len = 3 * (n_t - 1) + 1;
    ((0..len).map(|i| window(-1.0 + i as f64 * h).powi(2)).sum::<f64>() * h).sqrt()
}

fn bracket(x: f64) -> f64 {
    (1.0 + x * x).sqrt()
}

/// Time transform of one spatial mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSeries {
    pub m: (i64, i64),
    /// Frame frequency `ω_m`.
    pub shift: f64,
    /// `Ṽ(σ_k)` in FFT order.
    pub coeffs: Vec<Complex64>,
}

/// Fixed time discretization shared by compatible fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    /// Samples on `[0, 1]`, endpoints included.
    pub n_t: usize,
    /// Transform length.
    pub n_tau: usize,
}

impl TimeGrid {
    pub fn new(n_t: usize) -> Result<Self, XsbError> {
        if n_t < MIN_TIME_SAMPLES {
            return Err(XsbError::Sampling(format!("need at least {MIN_TIME_SAMPLES} samples on [0, 1], got {n_t}")));
        }
        Ok(Self { n_t, n_tau: 4 * n_t })
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.n_t - 1) as f64
    }

    /// Padded nodes `t_i = −1 + i h` covering `[−1, 2]`.
    pub fn padded_len(&self) -> usize {
        3 * (self.n_t - 1) + 1
    }

    pub fn padded_time(&self, i: usize) -> f64 {
        -1.0 + i as f64 * self.step()
    }

    /// `σ_k` for FFT index `k`.
    pub fn sigma(&self, k: usize) -> f64 {
        let n = self.n_tau as i64;
        let ks = if (k as i64) < n / 2 { k as i64 } else { k as i64 - n };
        TAU * ks as f64 / (self.n_tau as f64 * self.step())
    }

    pub fn d_sigma(&self) -> f64 {
        TAU / (self.n_tau as f64 * self.step())
    }

    fn unit_offset(&self) -> usize {
        self.n_t - 1
    }
}

/// Planned transforms for one [`TimeGrid`].
pub(crate) struct TimeTransform {
    pub(crate) grid: TimeGrid,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    phase: Vec<Complex64>,
}

impl TimeTransform {
    pub(crate) fn new(grid: TimeGrid) -> Self {
        let mut p = FftPlanner::new();
        let window = (0..grid.padded_len()).map(|i| window(grid.padded_time(i))).collect();
        // e^{iσ_k}: the padded grid starts at t = −1.
        let phase = (0..grid.n_tau).map(|k| Complex64::from_polar(1.0, grid.sigma(k))).collect();
        Self { grid, fwd: p.plan_fft_forward(grid.n_tau), inv: p.plan_fft_inverse(grid.n_tau), window, phase }
    }

    /// Windowed transform of padded frame values `V(t_i)`.
    pub(crate) fn forward(&self, padded: &[Complex64]) -> Vec<Complex64> {
        let h = self.grid.step();
        let mut buf = vec![Complex64::default(); self.grid.n_tau];
        for (b, (&v, &w)) in buf.iter_mut().zip(padded.iter().zip(&self.window)) {
            *b = v * w;
        }
        self.fwd.process(&mut buf);
        buf.iter().zip(&self.phase).map(|(&x, &p)| x * p * h).collect()
    }

    /// Windowed frame values `w(t_i)V(t_i)` on the padded grid.
    pub(crate) fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let scale = 1.0 / (self.grid.n_tau as f64 * self.grid.step());
        let mut buf: Vec<Complex64> = coeffs.iter().zip(&self.phase).map(|(&c, &p)| c * p.conj()).collect();
        self.inv.process(&mut buf);
        buf.truncate(self.grid.padded_len());
        buf.iter_mut().for_each(|v| *v *= scale);
        buf
    }

    /// Extend samples on `[0, 1]` to frame values on the padded grid.
    pub(crate) fn extend(&self, samples: &[Complex64], q: f64, shift: f64, ext: Extension) -> Vec<Complex64> {
        let g = self.grid;
        let off = g.unit_offset();
        let (first, last) = (samples[0], samples[g.n_t - 1]);
        (0..g.padded_len())
            .map(|i| {
                let t = g.padded_time(i);
                let u = if i < off {
                    match ext {
                        Extension::FreeFlow => first * Complex64::from_polar(1.0, -q * t),
                        Extension::Hold => first,
                    }
                } else if i - off < g.n_t {
                    samples[i - off]
                } else {
                    match ext {
                        Extension::FreeFlow => last * Complex64::from_polar(1.0, -q * (t - 1.0)),
                        Extension::Hold => last,
                    }
                };
                u * Complex64::from_polar(1.0, shift * t)
            })
            .collect()
    }
}

/// Windowed space-time field over a [`FourierGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    grid: FourierGrid<f64>,
    time: TimeGrid,
    modes: Vec<ModeSeries>,
    /// Largest per-mode spectral energy fraction beyond half the Nyquist modulation.
    pub tail_fraction: f64,
}

impl SpaceTimeField {
    pub fn zeros(grid: FourierGrid<f64>, time: TimeGrid) -> Self {
        Self { grid, time, modes: Vec::new(), tail_fraction: 0.0 }
    }

    pub fn grid(&self) -> FourierGrid<f64> {
        self.grid
    }

    pub fn time(&self) -> TimeGrid {
        self.time
    }

    pub fn modes(&self) -> &[ModeSeries] {
        &self.modes
    }

    pub fn is_zero(&self) -> bool {
        self.modes.iter().all(|s| s.coeffs.iter().all(|c| *c == Complex64::default()))
    }

    /// Under-sampled in time.
    pub fn flagged(&self) -> bool {
        self.tail_fraction > TAIL_TOLERANCE
    }

    pub fn mode(&self, m: (i64, i64)) -> Option<&ModeSeries> {
        self.modes.iter().find(|s| s.m == m)
    }

    /// `(τ, Û(m, τ))` pairs of one mode, in FFT order.
    pub fn spectrum(&self, m: (i64, i64)) -> Option<Vec<(f64, Complex64)>> {
        let s = self.mode(m)?;
        Some(s.coeffs.iter().enumerate().map(|(k, &c)| (self.time.sigma(k) - s.shift, c)).collect())
    }

    /// Field values at the `n_t` samples on `[0, 1]`.
    pub fn samples_on_unit(&self) -> Vec<Field<f64>> {
        let tt = TimeTransform::new(self.time);
        let mut out = vec![Field::zeros(self.grid); self.time.n_t];
        let off = self.time.unit_offset();
        for s in &self.modes {
            let w = tt.inverse(&s.coeffs);
            for (j, f) in out.iter_mut().enumerate() {
                let t = j as f64 * self.time.step();
                let u = w[off + j] * Complex64::from_polar(1.0, -s.shift * t);
                f.set(s.m, u).expect("mode is on the grid");
            }
        }
        out
    }

    /// `w(t)u(t)` per mode on the padded grid, as `(m, values)`.
    pub(crate) fn windowed_values(&self, tt: &TimeTransform) -> Vec<((i64, i64), Vec<Complex64>)> {
        self.modes
            .iter()
            .map(|s| {
                let w = tt.inverse(&s.coeffs);
                let vals = w
                    .iter()
                    .enumerate()
                    .map(|(i, &v)| v * Complex64::from_polar(1.0, -s.shift * self.time.padded_time(i)))
                    .collect();
                (s.m, vals)
            })
            .collect()
    }

    /// `‖⟨τ + Q(m)⟩^b ⟨|m₁| + |m₂|⟩^s Û‖` with the `τ`-bin measure, so
    /// that `s = b = 0` gives the windowed space-time `L²` norm.
    pub fn xsb_norm(&self, s: f64, b: f64) -> f64 {
        let ds = self.time.d_sigma() / TAU;
        let sum: f64 = self
            .modes
            .iter()
            .map(|ms| {
                let q = self.grid.geometry().symbol(ms.m.0, ms.m.1);
                let spatial = bracket((ms.m.0.abs() + ms.m.1.abs()) as f64).powf(2.0 * s);
                let modulation: f64 = ms
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(k, c)| bracket(self.time.sigma(k) - ms.shift + q).powf(2.0 * b) * c.norm_sqr())
                    .sum();
                spatial * modulation
            })
            .sum();
        TAU * (sum * ds).sqrt()
    }

    /// Pointwise complex conjugate: mode `−m`, frame `−ω`.
    pub fn conj(&self) -> Result<Self, XsbError> {
        let n = self.time.n_tau;
        let mut modes = Vec::with_capacity(self.modes.len());
        for s in &self.modes {
            let m = (-s.m.0, -s.m.1);
            if self.grid.index(m.0, m.1).is_none() {
                return Err(SpectralError::OutOfGrid(m.0, m.1).into());
            }
            let coeffs = (0..n).map(|k| s.coeffs[(n - k) % n].conj()).collect();
            modes.push(ModeSeries { m, shift: -s.shift, coeffs });
        }
        Ok(Self { modes, ..self.clone() })
    }

    pub fn scale(&self, c: Complex64) -> Self {
        let mut out = self.clone();
        out.modes.iter_mut().for_each(|s| s.coeffs.iter_mut().for_each(|v| *v *= c));
        out
    }

    /// Coefficient-wise sum; modes must share frames.
    pub fn add(&self, other: &Self) -> Result<Self, XsbError> {
        if self.grid != other.grid || self.time != other.time {
            return Err(XsbError::Mismatch("different grids".into()));
        }
        let mut out = self.clone();
        for s in &other.modes {
            match out.modes.iter_mut().find(|o| o.m == s.m) {
                Some(o) => {
                    if o.shift != s.shift {
                        return Err(XsbError::Mismatch(format!("mode {:?} has different frames", s.m)));
                    }
                    o.coeffs.iter_mut().zip(&s.coeffs).for_each(|(a, b)| *a += b);
                }
                None => out.modes.push(s.clone()),
            }
        }
        out.tail_fraction = self.tail_fraction.max(other.tail_fraction);
        Ok(out)
    }

    /// Frequency shell `j` (`2^j ≤ ⟨Q⟩^{1/2} < 2^{j+1}`) by modulation shell
    /// `j′` (`2^{j′} ≤ ⟨τ + Q⟩ < 2^{j′+1}`). Every coefficient lands in
    /// exactly one piece.
    pub fn dyadic_decompose(&self) -> Vec<DyadicPiece> {
        let mut pieces: Vec<DyadicPiece> = Vec::new();
        for s in &self.modes {
            let q = self.grid.geometry().symbol(s.m.0, s.m.1);
            let j = dyadic_shell(bracket(q).sqrt());
            for (k, &c) in s.coeffs.iter().enumerate() {
                if c == Complex64::default() {
                    continue;
                }
                let jp = dyadic_shell(bracket(self.time.sigma(k) - s.shift + q));
                let idx = match pieces.iter().position(|p| p.freq_shell == j && p.mod_shell == jp) {
                    Some(i) => i,
                    None => {
                        pieces.push(DyadicPiece { freq_shell: j, mod_shell: jp, field: Self::zeros(self.grid, self.time) });
                        pieces.len() - 1
                    }
                };
                let field = &mut pieces[idx].field;
                let slot = match field.modes.iter().position(|o| o.m == s.m) {
                    Some(i) => i,
                    None => {
                        field.modes.push(ModeSeries {
                            m: s.m,
                            shift: s.shift,
                            coeffs: vec![Complex64::default(); self.time.n_tau],
                        });
                        field.modes.len() - 1
                    }
                };
                field.modes[slot].coeffs[k] = c;
            }
        }
        pieces.sort_by_key(|p| (p.freq_shell, p.mod_shell));
        pieces
    }
}

/// `j` with `2^j ≤ x < 2^{j+1}`, for `x ≥ 1`.
fn dyadic_shell(x: f64) -> u32 {
    let mut j = x.log2().floor().max(0.0) as u32;
    while j > 0 && 2f64.powi(j as i32) > x {
        j -= 1;
    }
    while 2f64.powi(j as i32 + 1) <= x {
        j += 1;
    }
    j
}

#[derive(Debug, Clone, PartialEq)]
pub struct DyadicPiece {
    pub freq_shell: u32,
    pub mod_shell: u32,
    pub field: SpaceTimeField,
}

/// Lift per-mode samples on `[0, 1]` (`n_t` each, uniform, endpoints
/// included).
pub fn lift_modes(
    grid: FourierGrid<f64>,
    series: Vec<((i64, i64), Vec<Complex64>)>,
    cfg: LiftConfig,
) -> Result<SpaceTimeField, XsbError> {
    let n_t = series.first().map(|s| s.1.len()).unwrap_or(MIN_TIME_SAMPLES);
    let time = TimeGrid::new(n_t)?;
    let tt = TimeTransform::new(time);
    let mut field = SpaceTimeField::zeros(grid, time);
    for (m, samples) in series {
        if samples.len() != n_t {
            return Err(XsbError::Mismatch(format!("mode {m:?} has {} samples, expected {n_t}", samples.len())));
        }
        if grid.index(m.0, m.1).is_none() {
            return Err(SpectralError::OutOfGrid(m.0, m.1).into());
        }
        if field.modes.iter().any(|s| s.m == m) {
            return Err(XsbError::Mismatch(format!("mode {m:?} given twice")));
        }
        let q = grid.geometry().symbol(m.0, m.1);
        let shift = match cfg.frame {
            Frame::Modulation => q,
            Frame::Rest => 0.0,
        };
        let coeffs = tt.forward(&tt.extend(&samples, q, shift, cfg.extension));
        field.tail_fraction = field.tail_fraction.max(tail_fraction(&time, &coeffs));
        field.modes.push(ModeSeries { m, shift, coeffs });
    }
    Ok(field)
}

fn tail_fraction(time: &TimeGrid, coeffs: &[Complex64]) -> f64 {
    let cut = 0.5 * PI / time.step();
    let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    let tail: f64 =
        coeffs.iter().enumerate().filter(|(k, _)| time.sigma(*k).abs() > cut).map(|(_, c)| c.norm_sqr()).sum();
    tail / total
}

/// Lift snapshots taken uniformly on `[0, 1]`; modes outside the union of
/// supports are dropped.
pub fn lift(samples: &[Field<f64>], cfg: LiftConfig) -> Result<SpaceTimeField, XsbError> {
    let Some(first) = samples.first() else {
        return Err(XsbError::Sampling("no samples".into()));
    };
    let grid = first.grid();
    if samples.iter().any(|f| f.grid() != grid) {
        return Err(SpectralError::GridMismatch.into());
    }
    TimeGrid::new(samples.len())?;
    let mut support: Vec<(i64, i64)> = samples.iter().flat_map(|f| f.support()).collect();
    support.sort_unstable();
    support.dedup();
    let series = support
        .into_iter()
        .map(|m| (m, samples.iter().map(|f| f.coeff(m).unwrap()).collect()))
        .collect::<Vec<_>>();
    if series.is_empty() {
        return Ok(SpaceTimeField::zeros(grid, TimeGrid::new(samples.len())?));
    }
    lift_modes(grid, series, cfg)
}

/// Free-flow samples of `u₀` at the `n_t` nodes of `[0, 1]`.
pub fn free_flow_samples(u0: &Field<f64>, n_t: usize) -> Vec<Field<f64>> {
    (0..n_t).map(|j| u0.free_flow(j as f64 / (n_t - 1) as f64)).collect()
}
