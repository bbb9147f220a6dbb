use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EstimateError, REFINEMENT_TOLERANCE, STRICHARTZ_EXPONENT};
use crate::spectral::{Collocation, Field, FourierGrid, SobolevWeight};

type Field64 = Field<f64>;

/// Samples `e^{itΔ}u` on the doubled collocation grid.
pub(crate) struct FlowSampler {
    col: Collocation<f64>,
    symbols: Vec<f64>,
    cell: f64,
}

impl FlowSampler {
    pub(crate) fn new(grid: FourierGrid<f64>) -> Result<Self, EstimateError> {
        let col = Collocation::new(grid, 2)?;
        let p = col.side() as f64;
        let cell = std::f64::consts::TAU * std::f64::consts::TAU / (p * p);
        Ok(Self { col, symbols: grid.symbols(), cell })
    }

    fn values(&mut self, u: &Field64, t: f64) -> Vec<Complex64> {
        let flowed: Vec<Complex64> =
            u.coeffs().iter().zip(&self.symbols).map(|(&c, &q)| c * Complex64::from_polar(1.0, -t * q)).collect();
        self.col.to_values(&Field::from_coeffs(u.grid(), flowed).expect("same grid"))
    }

    /// `∫|e^{itΔ}u|⁴ dx`.
    pub(crate) fn quartic(&mut self, u: &Field64, t: f64) -> f64 {
        self.values(u, t).iter().map(|v| v.norm_sqr() * v.norm_sqr()).sum::<f64>() * self.cell
    }

    /// `∫|e^{itΔ}u₁ · e^{itΔ}u₂|² dx`.
    pub(crate) fn product_sqr(&mut self, u1: &Field64, u2: &Field64, t: f64) -> f64 {
        let a = self.values(u1, t);
        let b = self.values(u2, t);
        a.iter().zip(&b).map(|(x, y)| x.norm_sqr() * y.norm_sqr()).sum::<f64>() * self.cell
    }
}

/// Sum of `g(j/n)` over even and odd nodes of the doubled grid `j/(2n)`.
fn riemann_pair<F: FnMut(f64) -> f64>(n: usize, mut g: F, refine: bool) -> (f64, Option<f64>) {
    let coarse: f64 = (0..n).map(|j| g(j as f64 / n as f64)).sum::<f64>() / n as f64;
    let fine = refine.then(|| {
        let odd: f64 = (0..n).map(|j| g((2 * j + 1) as f64 / (2 * n) as f64)).sum();
        (coarse * n as f64 + odd) / (2 * n) as f64
    });
    (coarse, fine)
}

/// Space-time norm with its refinement audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpNorm {
    /// Estimate with the requested samples.
    pub value: f64,
    /// Estimate with doubled samples.
    pub refined: f64,
    /// `|refined − value| / value`.
    pub delta: f64,
    /// `delta` above tolerance.
    pub flagged: bool,
}

impl LpNorm {
    fn new(value: f64, refined: f64) -> Self {
        let delta = if value > 0.0 { (refined - value).abs() / value } else { (refined - value).abs() };
        Self { value, refined, delta, flagged: delta > REFINEMENT_TOLERANCE }
    }
}

pub(crate) fn lp4_with(s: &mut FlowSampler, u0: &Field64, n_t: usize, refine: bool) -> (f64, Option<f64>) {
    let (c, f) = riemann_pair(n_t, |t| s.quartic(u0, t), refine);
    (c.powf(0.25), f.map(|f| f.powf(0.25)))
}

pub(crate) fn bilinear_with(
    s: &mut FlowSampler,
    u1: &Field64,
    u2: &Field64,
    n_t: usize,
    refine: bool,
) -> (f64, Option<f64>) {
    let (c, f) = riemann_pair(n_t, |t| s.product_sqr(u1, u2, t), refine);
    (c.sqrt(), f.map(f64::sqrt))
}

/// `‖e^{itΔ}u₀‖_{L⁴_{t∈[0,1]}L⁴_x}` by left Riemann sampling, with the
/// spatial integral exact on the doubled grid.
pub fn lp_spacetime_norm(u0: &Field64, n_time_samples: usize) -> Result<LpNorm, EstimateError> {
    if n_time_samples == 0 {
        return Err(EstimateError::InvalidConfig("need at least one time sample".into()));
    }
    let mut s = FlowSampler::new(u0.grid())?;
    let (c, f) = lp4_with(&mut s, u0, n_time_samples, true);
    Ok(LpNorm::new(c, f.unwrap()))
}

/// A ratio with its refinement audit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub ratio: f64,
    pub refined: f64,
    pub delta: f64,
    pub flagged: bool,
}

impl From<LpNorm> for RatioEstimate {
    fn from(n: LpNorm) -> Self {
        Self { ratio: n.value, refined: n.refined, delta: n.delta, flagged: n.flagged }
    }
}

pub(crate) fn max_ball_radius(u: &Field64) -> f64 {
    u.support().iter().map(|&(a, b)| ((a * a + b * b) as f64).sqrt()).fold(0.0, f64::max)
}

fn check_ball(u: &Field64, n: u64) -> Result<(), EstimateError> {
    let bad = u.support().iter().any(|&(a, b)| (a * a + b * b) as u64 > n * n);
    if bad {
        return Err(EstimateError::Support { radius: n });
    }
    Ok(())
}

/// `‖e^{itΔ}u₀‖_{L⁴} / ‖u₀‖_{L²}` for `supp û₀ ⊆ B(0, N)`.
pub fn strichartz_ratio(u0: &Field64, n: u64, n_time_samples: usize) -> Result<RatioEstimate, EstimateError> {
    if u0.is_zero() {
        return Err(EstimateError::ZeroField);
    }
    check_ball(u0, n)?;
    let l2 = u0.l2_norm();
    let norm = lp_spacetime_norm(u0, n_time_samples)?;
    Ok(LpNorm::new(norm.value / l2, norm.refined / l2).into())
}

/// `‖e^{itΔ}u₁ · e^{itΔ}u₂‖_{L²_{t∈[0,1]}L²_x} / (‖u₁‖_{L²}‖u₂‖_{L²})`.
pub fn bilinear_ratio(u1: &Field64, u2: &Field64, n_time_samples: usize) -> Result<RatioEstimate, EstimateError> {
    if u1.is_zero() || u2.is_zero() {
        return Err(EstimateError::ZeroField);
    }
    if u1.grid() != u2.grid() {
        return Err(crate::spectral::SpectralError::GridMismatch.into());
    }
    if n_time_samples == 0 {
        return Err(EstimateError::InvalidConfig("need at least one time sample".into()));
    }
    let mut s = FlowSampler::new(u1.grid())?;
    let (c, f) = bilinear_with(&mut s, u1, u2, n_time_samples, true);
    let d = u1.l2_norm() * u2.l2_norm();
    Ok(LpNorm::new(c / d, f.unwrap() / d).into())
}

/// Unit-modulus coefficients with uniform random phases on `|m| ≤ N`.
pub fn unimodular_ball_field<R: Rng>(grid: FourierGrid<f64>, n: u64, rng: &mut R) -> Field64 {
    let n2 = (n * n) as i64;
    Field::from_fn(grid, |m1, m2| {
        if m1 * m1 + m2 * m2 <= n2 {
            Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU))
        } else {
            Complex64::default()
        }
    })
}

/// `‖e^{itΔ}f‖_{L⁴} / ‖f‖_{H^{s₀/2}}` from an already computed `L⁴` norm.
pub(crate) fn sobolev_ratio(u0: &Field64, l4: f64) -> f64 {
    l4 / u0.sobolev_norm(STRICHARTZ_EXPONENT, SobolevWeight::Bracket)
}
