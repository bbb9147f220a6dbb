use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use rand::Rng;

use super::EstimateError;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpSumReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

/// `∫₀¹ e^{itd} dt`.
fn phi(d: f64) -> Complex64 {
    if d.abs() < 1e-4 {
        Complex64::new(1.0 - d * d / 6.0, d / 2.0 - d * d * d / 24.0)
    } else {
        (Complex64::from_polar(1.0, d) - 1.0) / Complex64::new(0.0, d)
    }
}

fn check(a: &[f64], b: &[Complex64]) -> Result<(), EstimateError> {
    if a.is_empty() {
        return Err(EstimateError::Empty);
    }
    if a.len() != b.len() {
        return Err(EstimateError::InvalidConfig(format!("{} frequencies but {} coefficients", a.len(), b.len())));
    }
    if a.iter().any(|x| !x.is_finite()) || b.iter().any(|c| !c.is_finite()) {
        return Err(EstimateError::InvalidConfig("non-finite input".into()));
    }
    Ok(())
}

/// `∫₀¹ |Σ bₙ e^{itaₙ}|² dt` in closed form.
pub fn exp_sum_lhs(a: &[f64], b: &[Complex64]) -> Result<f64, EstimateError> {
    check(a, b)?;
    let mut s = 0.0;
    for (i, (&ai, &bi)) in a.iter().zip(b).enumerate() {
        s += bi.norm_sqr();
        for (&aj, &bj) in a[..i].iter().zip(b) {
            s += 2.0 * (bi * bj.conj() * phi(ai - aj)).re;
        }
    }
    Ok(s)
}

/// `Σ_j (Σ_{|aₙ−j|≤1/2} |bₙ|)²`, each `aₙ` in exactly one bucket and
/// half-integers going to the lower one.
pub fn exp_sum_rhs(a: &[f64], b: &[Complex64]) -> Result<f64, EstimateError> {
    check(a, b)?;
    let mut buckets: BTreeMap<i64, f64> = BTreeMap::new();
    for (&x, c) in a.iter().zip(b) {
        *buckets.entry((x - 0.5).ceil() as i64).or_default() += c.norm();
    }
    Ok(buckets.values().map(|v| v * v).sum())
}

pub fn exp_sum_check(a: &[f64], b: &[Complex64]) -> Result<ExpSumReport, EstimateError> {
    let lhs = exp_sum_lhs(a, b)?;
    let rhs = exp_sum_rhs(a, b)?;
    if rhs == 0.0 {
        return Err(EstimateError::ZeroField);
    }
    Ok(ExpSumReport { lhs, rhs, ratio: lhs / rhs })
}

/// Instance `index` of a seeded ensemble: `terms` frequencies uniform in
/// `[-spread, spread]` with random-phase coefficients of modulus in `[0.1, 1]`.
pub fn random_exp_sum_instance(seed: u64, index: u64, terms: usize, spread: f64) -> (Vec<f64>, Vec<Complex64>) {
    let mut r = rng::stream(seed, tag::EXP_SUM + index);
    let a = (0..terms).map(|_| r.gen_range(-spread..=spread)).collect();
    let b = (0..terms)
        .map(|_| Complex64::from_polar(r.gen_range(0.1..=1.0), r.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    (a, b)
}
