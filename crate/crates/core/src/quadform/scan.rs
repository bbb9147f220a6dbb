use num_rational::Rational64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::count::{for_each_row, IntegerForm};
use super::{FormScalar, QuadForm, QuadFormError};
use crate::fit;
use crate::rng::{self, tag};

/// Sampling resolution for float thresholds: x is rounded to a multiple of 1/256.
const SAMPLE_DENOMINATOR: i64 = 256;
/// Dense scans stop being dense past this many jump points per block.
const DENSE_CAP: f64 = 400_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig {
    pub blocks_per_decade: usize,
    pub samples_per_block: usize,
    pub seed: u64,
    /// Exact forms are scanned at every jump point below this threshold.
    pub dense_below: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { blocks_per_decade: 8, samples_per_block: 200, seed: 0, dense_below: 1e5 }
    }
}

/// Maximum of a sampled quantity over one block `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockMax {
    pub lo: f64,
    pub hi: f64,
    /// Geometric centre `√(lo·hi)`.
    pub center: f64,
    pub max_abs: f64,
    pub argmax: f64,
    pub samples: usize,
    /// Samples whose float decision fell inside the guard band.
    pub ambiguous: usize,
}

/// Log-log fit of block maxima against block centres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    pub points: Vec<BlockMax>,
}

/// Geometric blocks covering `[x_min, x_max]`, `blocks_per_decade` per decade.
pub fn geometric_blocks(x_min: f64, x_max: f64, blocks_per_decade: usize) -> Result<Vec<(f64, f64)>, QuadFormError> {
    if !(x_min >= 1.0 && x_max > x_min && x_max.is_finite()) {
        return Err(QuadFormError::InvalidRange(format!("need 1 <= x_min < x_max, got [{x_min}, {x_max}]")));
    }
    if blocks_per_decade == 0 {
        return Err(QuadFormError::InvalidRange("blocks_per_decade must be >= 1".into()));
    }
    let decades = (x_max / x_min).log10();
    let n = ((decades * blocks_per_decade as f64) - 1e-9).ceil().max(1.0) as usize;
    let step = 10f64.powf(1.0 / blocks_per_decade as f64);
    let mut edges: Vec<f64> = (0..n).map(|i| x_min * step.powi(i as i32)).collect();
    edges.push(x_max);
    Ok(edges.windows(2).map(|w| (w[0], w[1].min(x_max))).collect())
}

/// Evaluate `f` at both block edges and `samples_per_block` seeded interior
/// points of each block and keep the per-block maximum. Blocks are processed
/// in parallel; the result does not depend on scheduling.
pub fn block_maxima<F>(
    blocks: &[(f64, f64)],
    samples_per_block: usize,
    seed: u64,
    f: F,
) -> Result<Vec<BlockMax>, QuadFormError>
where
    F: Fn(f64) -> Result<(f64, bool), QuadFormError> + Sync,
{
    blocks
        .par_iter()
        .enumerate()
        .map(|(i, &(lo, hi))| {
            let mut rng = rng::stream(seed, tag::REMAINDER_SCAN + i as u64);
            let xs = std::iter::once(lo)
                .chain(std::iter::once(hi))
                .chain((0..samples_per_block).map(|_| rng.gen_range(lo..hi)));
            block_from_samples(lo, hi, xs, &f)
        })
        .collect()
}

fn block_from_samples<F>(lo: f64, hi: f64, xs: impl Iterator<Item = f64>, f: &F) -> Result<BlockMax, QuadFormError>
where
    F: Fn(f64) -> Result<(f64, bool), QuadFormError>,
{
    let mut best = BlockMax { lo, hi, center: (lo * hi).sqrt(), max_abs: f64::NEG_INFINITY, argmax: lo, samples: 0, ambiguous: 0 };
    for x in xs {
        let (v, amb) = f(x)?;
        best.samples += 1;
        best.ambiguous += amb as usize;
        if v.abs() > best.max_abs {
            best.max_abs = v.abs();
            best.argmax = x;
        }
    }
    Ok(best)
}

/// Least-squares slope of `log max_abs` against `log center`.
pub fn fit_block_maxima(points: Vec<BlockMax>) -> Result<FitReport, QuadFormError> {
    if points.len() < 3 {
        return Err(QuadFormError::Fit(fit::FitError::TooFewPoints { needed: 3, got: points.len() }));
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.center, p.max_abs)).collect();
    let f = fit::power_law(&xy, 3)?;
    Ok(FitReport { slope: f.slope, intercept: f.intercept, residual: f.residual, points })
}

/// Sup-of-|R| exponent scan with the default dense threshold.
pub fn fit_remainder_exponent<T: FormScalar>(
    q: &QuadForm<T>,
    x_min: f64,
    x_max: f64,
    blocks_per_decade: usize,
    samples_per_block: usize,
    seed: u64,
) -> Result<FitReport, QuadFormError> {
    let cfg = ScanConfig { blocks_per_decade, samples_per_block, seed, ..ScanConfig::default() };
    fit_remainder_exponent_with(q, x_min, x_max, &cfg)
}

/// Scan `|R(x)|` over geometric blocks of `[x_min, x_max]` and fit the growth
/// exponent of the block maxima.
///
/// `R` is evaluated on both sides of each sample (`x` and `x⁻`), so the
/// jumps of the counting function are seen from above and below. Exact forms
/// are scanned at every value the form takes inside blocks below
/// `cfg.dense_below`.
pub fn fit_remainder_exponent_with<T: FormScalar>(
    q: &QuadForm<T>,
    x_min: f64,
    x_max: f64,
    cfg: &ScanConfig,
) -> Result<FitReport, QuadFormError> {
    let blocks = geometric_blocks(x_min, x_max, cfg.blocks_per_decade)?;
    let both_sides = |x: T| -> Result<(f64, bool), QuadFormError> {
        let main = q.main_term(x);
        let closed = q.count_leq(x)?;
        let open = q.count_lt(x)?;
        let r = (closed.count as f64 - main).abs().max((open.count as f64 - main).abs());
        Ok((r, closed.ambiguous || open.ambiguous))
    };
    let sampled = |x: f64| both_sides(T::from_ratio((x * SAMPLE_DENOMINATOR as f64).round() as i64, SAMPLE_DENOMINATOR));

    let denominator = T::value_denominator(q);
    let (dense, sparse): (Vec<_>, Vec<_>) = blocks.iter().enumerate().partition(|(_, &(lo, hi))| {
        denominator.is_some_and(|l| hi <= cfg.dense_below && (hi - lo) * l as f64 <= DENSE_CAP)
    });

    let mut points: Vec<(usize, BlockMax)> = dense
        .par_iter()
        .map(|&(i, &(lo, hi))| {
            let l = denominator.unwrap_or(1);
            let first = (lo * l as f64).ceil() as i64;
            let last = (hi * l as f64).floor() as i64;
            let xs = (first..=last).map(|k| k as f64 / l as f64);
            let f = |x: f64| both_sides(T::from_ratio((x * l as f64).round() as i64, l));
            block_from_samples(lo, hi, xs, &f).map(|b| (i, b))
        })
        .collect::<Result<_, _>>()?;
    let sparse_blocks: Vec<(f64, f64)> = sparse.iter().map(|(_, b)| **b).collect();
    let sparse_idx: Vec<usize> = sparse.iter().map(|(i, _)| *i).collect();
    // Stream indices follow block position in the full list.
    let maxima: Vec<BlockMax> = sparse_blocks
        .par_iter()
        .zip(sparse_idx.par_iter())
        .map(|(&(lo, hi), &i)| {
            let mut rng = rng::stream(cfg.seed, tag::REMAINDER_SCAN + i as u64);
            let xs = [lo, hi].into_iter().chain((0..cfg.samples_per_block).map(move |_| rng.gen_range(lo..hi)));
            block_from_samples(lo, hi, xs, &sampled)
        })
        .collect::<Result<_, _>>()?;
    points.extend(sparse_idx.into_iter().zip(maxima));
    points.sort_by_key(|(i, _)| *i);
    fit_block_maxima(points.into_iter().map(|(_, b)| b).collect())
}

/// `|G_l|` for every integer `l` in `0..=l_max`, from one histogram of the
/// values of `Q` (exact forms only).
pub fn annulus_profile(q: &QuadForm<Rational64>, l_max: i64) -> Result<Vec<u64>, QuadFormError> {
    if l_max < 0 {
        return Err(QuadFormError::InvalidRange(format!("l_max must be >= 0, got {l_max}")));
    }
    let form = IntegerForm::from_rational(q)?;
    let scale = form.scale;
    let top = scale.checked_mul(l_max as i128 + 1).ok_or(QuadFormError::Overflow)?;
    let len = usize::try_from(top + 1).map_err(|_| QuadFormError::Overflow)?;
    let mut hist = vec![0u64; len];
    for_each_row(&form, top, |m, lo, hi| {
        for n in lo..=hi {
            hist[form.eval(m, n) as usize] += 1;
        }
    })?;
    // prefix[v] = #{scale·Q < v}
    let mut prefix = vec![0u64; len + 1];
    for v in 0..len {
        prefix[v + 1] = prefix[v] + hist[v];
    }
    let at = |v: i128| prefix[v.clamp(0, len as i128) as usize];
    Ok((0..=l_max as i128)
        .map(|l| at(scale * (l + 1) + 1) - at(scale * (l - 1)))
        .collect())
}

/// Dyadic-block maxima of `|G_l|` over integer `l ∈ [l_min, l_max]` and their
/// fitted growth exponent.
pub fn fit_annulus_exponent(q: &QuadForm<Rational64>, l_min: i64, l_max: i64) -> Result<FitReport, QuadFormError> {
    if l_min < 1 || l_max <= l_min {
        return Err(QuadFormError::InvalidRange(format!("need 1 <= l_min < l_max, got [{l_min}, {l_max}]")));
    }
    let profile = annulus_profile(q, l_max)?;
    let mut points = Vec::new();
    let mut lo = l_min;
    while lo <= l_max {
        let hi = (lo.saturating_mul(2) - 1).min(l_max);
        let (argmax, max) = (lo..=hi).map(|l| (l, profile[l as usize])).max_by_key(|&(l, v)| (v, -l)).unwrap();
        points.push(BlockMax {
            lo: lo as f64,
            hi: hi as f64,
            center: (lo as f64 * (hi + 1) as f64).sqrt(),
            max_abs: max as f64,
            argmax: argmax as f64,
            samples: (hi - lo + 1) as usize,
            ambiguous: 0,
        });
        lo = hi + 1;
    }
    fit_block_maxima(points)
}
