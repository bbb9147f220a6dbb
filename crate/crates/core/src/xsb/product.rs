use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Extension, TimeGrid, TimeTransform, XsbError, XsbParams};
use crate::estimates::REFINEMENT_TOLERANCE;
use crate::fit::{power_law, PowerLawFit};
use crate::quadform::REMAINDER_EXPONENT;
use crate::rng::{self, tag};
use crate::spectral::{smooth_even, Collocation, Field, FourierGrid, TorusGeometry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductConfig {
    /// Shells of `u₁`; `0` means the zero mode alone.
    pub n1_list: Vec<u64>,
    /// `N₂ = n2_factor · N₁` for the exponent fit.
    pub n2_factor: u64,
    /// `N₂ / N₁` values for the spread measurement at the smallest `N₁`.
    pub spread_factors: Vec<u64>,
    pub b_primes: Vec<f64>,
    pub ensemble_size: usize,
    pub seed: u64,
    /// Samples on `[0, 1]` for both the product norm and the lifts.
    pub n_time_samples: usize,
    /// Modulation dressing frequencies are uniform in `[−dressing, dressing]`.
    pub dressing: f64,
    pub geometry: TorusGeometry<f64>,
}

impl Default for ProductConfig {
    fn default() -> Self {
        Self {
            n1_list: vec![2, 4, 8, 16],
            n2_factor: 4,
            spread_factors: vec![4, 8, 16],
            b_primes: vec![0.30, 0.40, 0.45],
            ensemble_size: 8,
            seed: 0,
            n_time_samples: 64,
            dressing: 4.0,
            geometry: TorusGeometry::standard(),
        }
    }
}

impl ProductConfig {
    pub fn validate(&self) -> Result<(), XsbError> {
        let bad = |m: String| Err(XsbError::InvalidParams(m));
        if self.n1_list.is_empty() || self.n1_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("N1 list must be non-empty and increasing, got {:?}", self.n1_list));
        }
        if self.n2_factor == 0 || self.spread_factors.contains(&0) {
            return bad("N2/N1 factors must be >= 1".into());
        }
        if self.b_primes.iter().any(|b| !(0.0..0.5).contains(b)) || self.b_primes.is_empty() {
            return bad(format!("b' values must lie in [0, 1/2), got {:?}", self.b_primes));
        }
        if self.ensemble_size == 0 {
            return bad("ensemble size must be >= 1".into());
        }
        if !(self.dressing >= 0.0 && self.dressing.is_finite()) {
            return bad(format!("dressing must be finite and non-negative, got {}", self.dressing));
        }
        TimeGrid::new(self.n_time_samples)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub b_prime: f64,
    pub n1: u64,
    pub n2: u64,
    /// Max of `‖u₁u₂‖_{L²_{t∈[0,1]}L²_x} / (‖u₁‖_{X^{0,b′}}‖u₂‖_{X^{0,b′}})`.
    pub max_ratio: f64,
    pub argmax_seed: u64,
    /// Relative change of the maximizer's numerator with doubled time samples.
    pub refinement_delta: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSummary {
    pub b_prime: f64,
    /// Fit of max ratio against `N₁` at `N₂ = n2_factor·N₁`.
    pub n1_exponent: PowerLawFit,
    /// Largest over smallest max ratio across `N₂` at the smallest `N₁`.
    pub n2_spread: f64,
    pub reference_exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSweep {
    pub records: Vec<ProductRecord>,
    pub summaries: Vec<ProductSummary>,
}

impl ProductSweep {
    pub fn summary(&self, b_prime: f64) -> Option<&ProductSummary> {
        self.summaries.iter().find(|s| s.b_prime == b_prime)
    }
}

/// Dressed free flow `Σ c_m e^{−i(Q(m)+ω_m)t} e^{im·x}` on one shell.
struct Dressed {
    modes: Vec<(i64, i64)>,
    coeffs: Vec<Complex64>,
    /// `Q(m) + ω_m`.
    freqs: Vec<f64>,
    /// `ω_m`.
    dressing: Vec<f64>,
}

fn shell_modes(geometry: TorusGeometry<f64>, n: u64) -> Vec<(i64, i64)> {
    if n == 0 {
        return vec![(0, 0)];
    }
    let (lo, hi) = ((n * n) as f64, (4 * n * n) as f64);
    let r1 = (2.0 * n as f64 / geometry.theta1).ceil() as i64;
    let r2 = (2.0 * n as f64 / geometry.theta2).ceil() as i64;
    let mut out = Vec::new();
    for a in -r1..=r1 {
        for b in -r2..=r2 {
            let q = geometry.symbol(a, b);
            if q >= lo && q < hi {
                out.push((a, b));
            }
        }
    }
    out
}

impl Dressed {
    fn random<R: Rng>(geometry: TorusGeometry<f64>, modes: &[(i64, i64)], dressing: f64, rng: &mut R) -> Self {
        let mut coeffs = Vec::with_capacity(modes.len());
        let mut freqs = Vec::with_capacity(modes.len());
        let mut dress = Vec::with_capacity(modes.len());
        for &(a, b) in modes {
            coeffs.push(Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)));
            let w = if dressing > 0.0 { rng.gen_range(-dressing..=dressing) } else { 0.0 };
            freqs.push(geometry.symbol(a, b) + w);
            dress.push(w);
        }
        Self { modes: modes.to_vec(), coeffs, freqs, dressing: dress }
    }

    fn at(&self, grid: FourierGrid<f64>, t: f64) -> Field<f64> {
        let mut f = Field::zeros(grid);
        for ((&m, &c), &w) in self.modes.iter().zip(&self.coeffs).zip(&self.freqs) {
            f.set(m, c * Complex64::from_polar(1.0, -w * t)).expect("mode is on the grid");
        }
        f
    }

    /// `‖u‖_{X^{0,b}}` for each `b`, one lifted mode at a time.
    fn x_norms(&self, tt: &TimeTransform, bs: &[f64]) -> Vec<f64> {
        let time = tt.grid;
        let ds = time.d_sigma() / TAU;
        let mut sums = vec![0.0; bs.len()];
        let mut samples = vec![Complex64::default(); time.n_t];
        for (&c, &w) in self.coeffs.iter().zip(&self.dressing) {
            // Modulation frame: V(t) = c e^{−iωt} on [0, 1].
            for (j, s) in samples.iter_mut().enumerate() {
                *s = c * Complex64::from_polar(1.0, -w * j as f64 * time.step());
            }
            let spec = tt.forward(&tt.extend(&samples, 0.0, 0.0, Extension::FreeFlow));
            for (sum, &b) in sums.iter_mut().zip(bs) {
                *sum += spec
                    .iter()
                    .enumerate()
                    .map(|(k, v)| (1.0 + time.sigma(k).powi(2)).powf(b) * v.norm_sqr())
                    .sum::<f64>();
            }
        }
        sums.iter().map(|s| TAU * (s * ds).sqrt()).collect()
    }
}

struct Pair {
    grid: FourierGrid<f64>,
    side: usize,
}

impl Pair {
    fn new(geometry: TorusGeometry<f64>, m1: &[(i64, i64)], m2: &[(i64, i64)]) -> Self {
        let reach = |ms: &[(i64, i64)]| ms.iter().map(|m| m.0.abs().max(m.1.abs())).max().unwrap_or(0) as usize;
        let (r1, r2) = (reach(m1), reach(m2));
        let modes = smooth_even(2 * (r1.max(r2) + 1));
        let grid = FourierGrid::new(geometry, modes).expect("even grid");
        let side = smooth_even(2 * (r1 + r2) + 1).max(modes);
        Self { grid, side }
    }
}

/// `∫₀¹ ‖u₁u₂‖²_{L²_x} dt` by the trapezoid rule on `n` nodes, and on the
/// nested `2n − 1` nodes when `refine`.
fn product_l2_sqr(col: &mut Collocation<f64>, grid: FourierGrid<f64>, u1: &Dressed, u2: &Dressed, n: usize, refine: bool) -> (f64, Option<f64>) {
    let p = col.side();
    let cell = TAU * TAU / (p * p) as f64;
    let mut g = |t: f64| {
        let a = col.to_values(&u1.at(grid, t));
        let b = col.to_values(&u2.at(grid, t));
        a.iter().zip(&b).map(|(x, y)| x.norm_sqr() * y.norm_sqr()).sum::<f64>() * cell
    };
    let h = 1.0 / (n - 1) as f64;
    let vals: Vec<f64> = (0..n).map(|j| g(j as f64 * h)).collect();
    let trap = |v: &[f64], h: f64| (v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1])) * h;
    let coarse = trap(&vals, h);
    let fine = refine.then(|| {
        let mids: f64 = (0..n - 1).map(|j| g((j as f64 + 0.5) * h)).sum();
        0.5 * coarse + 0.5 * h * mids
    });
    (coarse, fine)
}

fn member_stream(seed: u64, n1: u64, n2: u64, i: usize) -> rand_chacha::ChaCha8Rng {
    rng::stream(seed, tag::PRODUCT + (n1 << 32) + (n2 << 16) + i as u64)
}

fn check_pair(cfg: &ProductConfig, n1: u64, n2: u64, b_primes: &[f64]) -> Result<Vec<ProductRecord>, XsbError> {
    if n1 > n2 {
        return Err(XsbError::InvalidParams(format!("need N1 <= N2, got {n1} > {n2}")));
    }
    let modes1 = shell_modes(cfg.geometry, n1);
    let modes2 = shell_modes(cfg.geometry, n2);
    if modes1.is_empty() || modes2.is_empty() {
        return Err(XsbError::InvalidParams(format!("empty shell for N1 = {n1} or N2 = {n2}")));
    }
    let pair = Pair::new(cfg.geometry, &modes1, &modes2);
    let time = TimeGrid::new(cfg.n_time_samples)?;
    let member = |i: usize| {
        let mut r = member_stream(cfg.seed, n1, n2, i);
        let u1 = Dressed::random(cfg.geometry, &modes1, cfg.dressing, &mut r);
        let u2 = Dressed::random(cfg.geometry, &modes2, cfg.dressing, &mut r);
        (u1, u2)
    };
    let members: Vec<usize> = (0..cfg.ensemble_size).collect();
    let evals: Vec<(usize, f64, Vec<f64>)> = members
        .par_iter()
        .map_init(
            || (Collocation::with_side(pair.grid, pair.side), TimeTransform::new(time)),
            |(col, tt), &i| {
                let col = col.as_mut().map_err(|e| XsbError::InvalidParams(e.to_string()))?;
                let (u1, u2) = member(i);
                let (num, _) = product_l2_sqr(col, pair.grid, &u1, &u2, cfg.n_time_samples, false);
                let x1 = u1.x_norms(tt, b_primes);
                let x2 = u2.x_norms(tt, b_primes);
                let ratios = x1.iter().zip(&x2).map(|(a, b)| num.sqrt() / (a * b)).collect();
                Ok((i, num, ratios))
            },
        )
        .collect::<Result<_, XsbError>>()?;
    let mut col = Collocation::with_side(pair.grid, pair.side)?;
    let mut out = Vec::with_capacity(b_primes.len());
    for (k, &b) in b_primes.iter().enumerate() {
        let (best, max_ratio) = evals.iter().fold((usize::MAX, f64::NEG_INFINITY), |acc, e| {
            if e.2[k] > acc.1 || (e.2[k] == acc.1 && e.0 < acc.0) {
                (e.0, e.2[k])
            } else {
                acc
            }
        });
        let (u1, u2) = member(best);
        let (c, f) = product_l2_sqr(&mut col, pair.grid, &u1, &u2, cfg.n_time_samples, true);
        let delta = (f.unwrap().sqrt() - c.sqrt()).abs() / c.sqrt();
        out.push(ProductRecord {
            b_prime: b,
            n1,
            n2,
            max_ratio,
            argmax_seed: best as u64,
            refinement_delta: delta,
            flagged: delta > REFINEMENT_TOLERANCE,
        });
    }
    Ok(out)
}

/// Ensemble maximum of `‖u₁u₂‖_{L²L²} / (‖u₁‖_{X^{0,b′}}‖u₂‖_{X^{0,b′}})`
/// over dressed free flows on the shells `N₁` and `N₂`.
pub fn localized_product_check(n1: u64, n2: u64, params: &XsbParams, cfg: &ProductConfig) -> Result<ProductRecord, XsbError> {
    let cfg = ProductConfig { b_primes: vec![params.b_prime], ..cfg.clone() };
    cfg.validate()?;
    Ok(check_pair(&cfg, n1, n2, &cfg.b_primes)?.remove(0))
}

/// Exponent sweep at `N₂ = n2_factor·N₁` plus the `N₂` spread at the
/// smallest `N₁`, for every `b′`.
pub fn localized_product_sweep(cfg: &ProductConfig) -> Result<ProductSweep, XsbError> {
    cfg.validate()?;
    let mut records = Vec::new();
    for &n1 in &cfg.n1_list {
        records.extend(check_pair(cfg, n1, cfg.n2_factor * n1, &cfg.b_primes)?);
    }
    let base = cfg.n1_list[0];
    for &f in &cfg.spread_factors {
        if f != cfg.n2_factor {
            records.extend(check_pair(cfg, base, f * base, &cfg.b_primes)?);
        }
    }
    let mut summaries = Vec::new();
    for &b in &cfg.b_primes {
        let pts: Vec<(f64, f64)> = records
            .iter()
            .filter(|r| r.b_prime == b && r.n2 == cfg.n2_factor * r.n1 && r.n1 > 0)
            .map(|r| (r.n1 as f64, r.max_ratio))
            .collect();
        let spread: Vec<f64> = records
            .iter()
            .filter(|r| r.b_prime == b && r.n1 == base && (cfg.spread_factors.contains(&(r.n2 / base.max(1)))))
            .map(|r| r.max_ratio)
            .collect();
        let hi = spread.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = spread.iter().copied().fold(f64::INFINITY, f64::min);
        summaries.push(ProductSummary {
            b_prime: b,
            n1_exponent: power_law(&pts, 2)?,
            n2_spread: hi / lo,
            reference_exponent: REMAINDER_EXPONENT,
        });
    }
    Ok(ProductSweep { records, summaries })
}

/// Columns `b_prime, N1, N2, max_ratio, argmax_seed, refinement_delta,
/// n1_exponent, n2_spread`.
pub fn write_product_csv<W: Write>(sweep: &ProductSweep, w: W) -> Result<(), XsbError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["b_prime", "N1", "N2", "max_ratio", "argmax_seed", "refinement_delta", "n1_exponent", "n2_spread"])?;
    for r in &sweep.records {
        let s = sweep.summary(r.b_prime);
        out.write_record([
            r.b_prime.to_string(),
            r.n1.to_string(),
            r.n2.to_string(),
            format!("{:e}", r.max_ratio),
            r.argmax_seed.to_string(),
            format!("{:e}", r.refinement_delta),
            s.map(|s| format!("{:e}", s.n1_exponent.slope)).unwrap_or_default(),
            s.map(|s| format!("{:e}", s.n2_spread)).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
