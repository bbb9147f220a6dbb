//! Sobolev-norm growth tracking, increment checks and the polynomial-bound
//! recurrence.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::{power_law, FitError};
use crate::nls::{evolve, Alpha, NlsError, NlsParams, ObservableSpec};
use crate::quadform::REMAINDER_EXPONENT;
use crate::rng;
use crate::spectral::{Field, FourierGrid, SobolevWeight, TorusGeometry};
use num_complex::Complex64;
use rand::Rng;

/// Slack added to the growth bound before a fit counts as a violation.
pub const VIOLATION_MARGIN: f64 = 0.05;
/// Relative mass drift tolerated by a growth run.
pub const MASS_TOLERANCE: f64 = 1e-10;
/// Relative energy drift tolerated by a growth run.
pub const ENERGY_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum GrowthError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Nls(#[from] NlsError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("series CSV: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthSeries {
    pub times: Vec<f64>,
    /// `‖u(t)‖_{H^s}` in the eigen convention.
    pub hs_values: Vec<f64>,
    pub s: f64,
    pub geometry: Option<TorusGeometry<f64>>,
    pub params: Option<NlsParams<f64>>,
    pub mass_drift: f64,
    pub energy_drift: f64,
    /// Set when the solver stopped early.
    pub halted: Option<String>,
}

impl GrowthSeries {
    /// Series not produced by a solver run, e.g. synthetic or replayed data.
    pub fn from_values(times: Vec<f64>, hs_values: Vec<f64>, s: f64) -> Result<Self, GrowthError> {
        if times.len() != hs_values.len() {
            return Err(GrowthError::InvalidParams(format!("{} times but {} values", times.len(), hs_values.len())));
        }
        Ok(Self { times, hs_values, s, geometry: None, params: None, mass_drift: 0.0, energy_drift: 0.0, halted: None })
    }

    /// Conservation drifts within tolerance and the run completed.
    pub fn audit_passed(&self) -> bool {
        self.halted.is_none() && self.mass_drift <= MASS_TOLERANCE && self.energy_drift <= ENERGY_TOLERANCE
    }

    /// Columns `t, hs`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), GrowthError> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "hs"])?;
        for (t, v) in self.times.iter().zip(&self.hs_values) {
            out.write_record([format!("{t:e}"), format!("{v:e}")])?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Read back a `t, hs` CSV.
    pub fn read_csv<R: Read>(r: R, s: f64) -> Result<Self, GrowthError> {
        let mut rd = csv::Reader::from_reader(r);
        let (mut times, mut values) = (Vec::new(), Vec::new());
        for rec in rd.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64, GrowthError> {
                rec.get(i)
                    .ok_or_else(|| GrowthError::Format(format!("missing column {i}")))?
                    .parse()
                    .map_err(|e| GrowthError::Format(format!("{e}")))
            };
            times.push(parse(0)?);
            values.push(parse(1)?);
        }
        Self::from_values(times, values, s)
    }
}

/// Evolve `u₀` to `t_final`, recording `‖u‖_{H^s}` (eigen weight) every
/// `sample_every` steps.
pub fn track_growth(
    u0: &Field<f64>,
    s: f64,
    t_final: f64,
    params: &NlsParams<f64>,
    sample_every: usize,
) -> Result<GrowthSeries, GrowthError> {
    if s < 1.0 {
        return Err(GrowthError::InvalidParams(format!("need s >= 1, got {s}")));
    }
    if sample_every == 0 {
        return Err(GrowthError::InvalidParams("sample_every must be >= 1".into()));
    }
    let blocks = t_final / (params.dt * sample_every as f64);
    if (blocks - blocks.round()).abs() > 1e-9 * blocks.max(1.0) || blocks.round() < 1.0 {
        return Err(GrowthError::InvalidParams(format!(
            "T = {t_final} must be a whole number of sampling intervals dt * sample_every"
        )));
    }
    let spec = ObservableSpec { sample_every, sobolev: vec![(s, SobolevWeight::Eigen)], store_snapshots: false };
    let tr = evolve(u0, t_final, params, &spec)?;
    Ok(GrowthSeries {
        times: tr.times.clone(),
        hs_values: tr.observables.iter().map(|r| r.sobolev[0]).collect(),
        s,
        geometry: Some(u0.grid().geometry()),
        params: Some(*params),
        mass_drift: tr.mass_drift(),
        energy_drift: tr.energy_drift(),
        halted: tr.halted,
    })
}

/// `(s − 1)/(1 − s₀)`.
pub fn growth_bound(s: f64) -> f64 {
    (s - 1.0) / (1.0 - REMAINDER_EXPONENT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub exponent: f64,
    pub intercept: f64,
    pub bound: f64,
    pub violated: bool,
}

/// Slope of `log hs` against `log(1 + t)` over the second half of the series.
pub fn fit_growth_exponent(series: &GrowthSeries) -> Result<GrowthFit, GrowthError> {
    let n = series.hs_values.len();
    if n < 10 {
        return Err(FitError::TooFewPoints { needed: 10, got: n }.into());
    }
    let pts: Vec<(f64, f64)> = series.times[n / 2..].iter().map(|t| 1.0 + t).zip(series.hs_values[n / 2..].iter().copied()).collect();
    let fit = power_law(&pts, 2)?;
    let bound = growth_bound(series.s);
    Ok(GrowthFit { exponent: fit.slope, intercept: fit.intercept, bound, violated: fit.slope > bound + VIOLATION_MARGIN })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementReport {
    pub r: f64,
    pub window_steps: usize,
    /// Least `C` with `y(t₀+δ)² ≤ y(t₀)² + C y(t₀)^{2−r}` on every window.
    pub c_min: f64,
    /// Start index of the window attaining `c_min`.
    pub argmax: usize,
    /// Least `C` with `y(t₀+δ) ≤ y(t₀) + C y(t₀)^{1−r}`.
    pub c_min_unsquared: f64,
    pub argmax_unsquared: usize,
    /// Required `C` per window, squared form.
    pub per_window: Vec<f64>,
}

fn required(increment: f64, base: f64) -> f64 {
    if increment <= 0.0 {
        0.0
    } else if base > 0.0 {
        increment / base
    } else {
        f64::INFINITY
    }
}

/// Minimal constants in the squared and unsquared increment inequalities
/// over windows of `window_steps` samples.
pub fn increment_check(series: &GrowthSeries, window_steps: usize, r: f64) -> Result<IncrementReport, GrowthError> {
    if window_steps == 0 {
        return Err(GrowthError::InvalidParams("window must span at least one step".into()));
    }
    if !(r > 0.0 && r < 1.0) {
        return Err(GrowthError::InvalidParams(format!("need 0 < r < 1, got {r}")));
    }
    let y = &series.hs_values;
    let n = y.len().saturating_sub(window_steps);
    let per_window: Vec<f64> =
        (0..n).map(|k| required(y[k + window_steps].powi(2) - y[k].powi(2), y[k].powf(2.0 - r))).collect();
    let unsquared: Vec<f64> = (0..n).map(|k| required(y[k + window_steps] - y[k], y[k].powf(1.0 - r))).collect();
    let best = |v: &[f64]| v.iter().enumerate().fold((0, 0.0), |a, (i, &x)| if x > a.1 { (i, x) } else { a });
    let (argmax, c_min) = best(&per_window);
    let (argmax_unsquared, c_min_unsquared) = best(&unsquared);
    Ok(IncrementReport { r, window_steps, c_min, argmax, c_min_unsquared, argmax_unsquared, per_window })
}

/// `T₀ ≈ min(0.1, 1/‖u₀‖²_{H¹})`.
pub fn default_window(u0: &Field<f64>) -> f64 {
    let h1 = u0.sobolev_norm(1.0, SobolevWeight::Bracket);
    if h1 == 0.0 {
        0.1
    } else {
        0.1f64.min(1.0 / (h1 * h1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceParams {
    pub r: f64,
    pub c: f64,
    pub delta: f64,
    pub y0: f64,
}

impl RecurrenceParams {
    pub fn new(r: f64, c: f64, delta: f64, y0: f64) -> Result<Self, GrowthError> {
        if !(r > 0.0 && r <= 1.0) || !(c >= 0.0) || !(delta > 0.0) || !(y0 > 0.0) {
            return Err(GrowthError::InvalidParams(format!("need r in (0,1], C >= 0, delta > 0, y0 > 0; got r={r}, C={c}, delta={delta}, y0={y0}")));
        }
        Ok(Self { r, c, delta, y0 })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceReport {
    /// `max_{k ≤ K} x_k / (1 + kδ)^{1/r}`.
    pub c_prime: f64,
    pub max_ratio_index: u64,
    /// `x_K / (1 + Kδ)^{1/r}`.
    pub final_ratio: f64,
    /// Running max grew by less than 1% over the last decade `[K/10, K]`.
    pub holds: bool,
    /// Relative running-max increase over the last decade.
    pub last_decade_increase: f64,
    /// Step at which `y` stopped being finite.
    pub overflow_at: Option<u64>,
}

/// Iterate `y_{k+1} = y_k + C·y_k^{(2−r)/2}` and compare `x_k = √y_k` with
/// `(1 + kδ)^{1/r}`.
pub fn recurrence_bound_check(p: &RecurrenceParams, k_max: u64) -> Result<RecurrenceReport, GrowthError> {
    RecurrenceParams::new(p.r, p.c, p.delta, p.y0)?;
    if k_max < 10 {
        return Err(GrowthError::InvalidParams(format!("need K >= 10, got {k_max}")));
    }
    let e = (2.0 - p.r) / 2.0;
    let mut y = p.y0;
    let (mut best, mut arg) = (f64::NEG_INFINITY, 0u64);
    let decade = k_max / 10;
    let mut at_decade = f64::NAN;
    let mut overflow_at = None;
    let mut last = f64::NAN;
    for k in 0..=k_max {
        if !y.is_finite() {
            overflow_at = Some(k);
            break;
        }
        let ratio = y.sqrt() / (1.0 + k as f64 * p.delta).powf(1.0 / p.r);
        last = ratio;
        if ratio > best {
            best = ratio;
            arg = k;
        }
        if k == decade {
            at_decade = best;
        }
        y += p.c * y.powf(e);
    }
    let increase = (best - at_decade) / at_decade;
    Ok(RecurrenceReport {
        c_prime: best,
        max_ratio_index: arg,
        final_ratio: last,
        holds: overflow_at.is_none() && increase < 0.01,
        last_decade_increase: increase,
        overflow_at,
    })
}

/// Verdict JSON: exponent, bound, violated, C_min, r.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthVerdict {
    pub exponent: f64,
    pub bound: f64,
    pub violated: bool,
    #[serde(rename = "C_min")]
    pub c_min: f64,
    #[serde(rename = "C_min_unsquared")]
    pub c_min_unsquared: f64,
    pub r: f64,
    pub audit_passed: bool,
    pub mass_drift: f64,
    pub energy_drift: f64,
}

/// `r = (1 − s₀)/(s − 1)`, the increment exponent matching the growth bound.
pub fn increment_exponent(s: f64) -> f64 {
    (1.0 - REMAINDER_EXPONENT) / (s - 1.0)
}

pub fn verdict(series: &GrowthSeries, window_steps: usize) -> Result<GrowthVerdict, GrowthError> {
    let fit = fit_growth_exponent(series)?;
    let r = increment_exponent(series.s).min(1.0 - f64::EPSILON);
    let inc = increment_check(series, window_steps, r)?;
    Ok(GrowthVerdict {
        exponent: fit.exponent,
        bound: fit.bound,
        violated: fit.violated,
        c_min: inc.c_min,
        c_min_unsquared: inc.c_min_unsquared,
        r,
        audit_passed: series.audit_passed(),
        mass_drift: series.mass_drift,
        energy_drift: series.energy_drift,
    })
}

/// Random-phase data `e^{iθ_m}⟨m⟩^{-3}` on `|m_i| ≤ cutoff`, scaled to the
/// given `H¹` norm.
pub fn smooth_random_data(grid: FourierGrid<f64>, cutoff: i64, h1: f64, seed: u64) -> Field<f64> {
    let mut rng = rng::stream(seed, rng::tag::INITIAL_DATA);
    let q = grid.geometry();
    let u = Field::from_fn(grid, |a, b| {
        let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
        if a.abs() > cutoff || b.abs() > cutoff {
            return Complex64::new(0.0, 0.0);
        }
        let w = 1.0 + q.symbol(a, b);
        Complex64::from_polar(w.powf(-1.5), theta)
    });
    let n = u.sobolev_norm(1.0, SobolevWeight::Bracket);
    if n == 0.0 {
        u
    } else {
        u.scale(Complex64::new(h1 / n, 0.0))
    }
}

/// Defocusing parameters for growth runs.
pub fn defocusing(dt: f64) -> Result<NlsParams<f64>, GrowthError> {
    Ok(NlsParams::new(Alpha::Defocusing, dt, 2)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(f: impl Fn(f64) -> f64, s: f64) -> GrowthSeries {
        let times: Vec<f64> = (0..100).map(|k| k as f64).collect();
        let vals = times.iter().map(|&t| f(t)).collect();
        GrowthSeries::from_values(times, vals, s).unwrap()
    }

    #[test]
    fn bound_for_s2() {
        assert!((growth_bound(2.0) - 416.0 / 285.0).abs() < 1e-15);
        assert!((increment_exponent(2.0) - 285.0 / 416.0).abs() < 1e-15);
    }

    #[test]
    fn fits() {
        let c = fit_growth_exponent(&synthetic(|_| 3.0, 2.0)).unwrap();
        assert!(c.exponent.abs() < 1e-12 && !c.violated);
        let one = fit_growth_exponent(&synthetic(|t| 1.0 + t, 2.0)).unwrap();
        assert!((one.exponent - 1.0).abs() < 1e-6 && !one.violated);
        let two = fit_growth_exponent(&synthetic(|t| (1.0 + t).powi(2), 2.0)).unwrap();
        assert!(two.violated);
        let short = GrowthSeries::from_values(vec![0.0; 9], vec![1.0; 9], 2.0).unwrap();
        assert!(fit_growth_exponent(&short).is_err());
        assert!(fit_growth_exponent(&synthetic(|t| if t > 80.0 { 0.0 } else { 1.0 }, 2.0)).is_err());
    }

    #[test]
    fn increments() {
        let c = increment_check(&synthetic(|_| 2.0, 2.0), 3, 0.5).unwrap();
        assert_eq!(c.c_min, 0.0);
        let times: Vec<f64> = (1..200).map(|k| k as f64).collect();
        let vals: Vec<f64> = times.iter().map(|k| k.sqrt()).collect();
        let s = GrowthSeries::from_values(times, vals, 2.0).unwrap();
        for r in [0.25, 0.5, 0.9] {
            let rep = increment_check(&s, 1, r).unwrap();
            assert!((rep.c_min - 1.0).abs() < 1e-12);
            assert_eq!(rep.argmax, 0);
            assert_eq!(rep.per_window.len(), 198);
        }
        assert!(increment_check(&s, 0, 0.5).is_err());
        assert!(increment_check(&s, 1, 1.0).is_err());
        let z = increment_check(&synthetic(|_| 0.0, 2.0), 1, 0.5).unwrap();
        assert_eq!(z.c_min, 0.0);
    }

    #[test]
    fn recurrence_examples() {
        let r = recurrence_bound_check(&RecurrenceParams::new(0.5, 0.0, 1.0, 4.0).unwrap(), 100).unwrap();
        assert_eq!(r.c_prime, 2.0);
        assert!(r.holds);
        let r = recurrence_bound_check(&RecurrenceParams::new(1.0, 2.0, 1.0, 1.0).unwrap(), 100_000).unwrap();
        assert!(r.holds && (r.c_prime - 1.0).abs() < 0.05, "{r:?}");
        let r = recurrence_bound_check(&RecurrenceParams::new(0.5, 1.0, 1.0, 1.0).unwrap(), 100_000).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(RecurrenceParams::new(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(RecurrenceParams::new(1.5, 1.0, 1.0, 1.0).is_err());
        assert!(recurrence_bound_check(&RecurrenceParams::new(0.5, 1.0, 1.0, 1.0).unwrap(), 9).is_err());
    }

    #[test]
    fn recurrence_overflow_is_reported() {
        let r = recurrence_bound_check(&RecurrenceParams::new(0.01, 1e10, 1.0, 1e300).unwrap(), 100).unwrap();
        assert!(r.overflow_at.is_some() && !r.holds);
    }

    #[test]
    fn zero_and_plane_wave_data() {
        let g = FourierGrid::new(TorusGeometry::standard(), 16).unwrap();
        let p = defocusing(0.01).unwrap();
        let z = track_growth(&Field::zeros(g), 2.0, 1.0, &p, 10).unwrap();
        assert!(z.hs_values.iter().all(|&v| v == 0.0));
        assert_eq!(z.times.len(), 11);
        let u = Field::single_mode(g, (3, -2), Complex64::new(0.5, 0.5)).unwrap();
        let w = track_growth(&u, 2.0, 10.0, &p, 50).unwrap();
        assert!(w.hs_values.iter().all(|&v| (v - w.hs_values[0]).abs() < 1e-12 * v));
        assert!(fit_growth_exponent(&w).unwrap().exponent.abs() < 1e-3);
        assert!(w.audit_passed());
        assert!(track_growth(&u, 2.0, 1.005, &p, 10).is_err());
        assert!(track_growth(&u, 0.5, 1.0, &p, 10).is_err());
    }

    #[test]
    fn csv_replay() {
        let s = synthetic(|t| (1.0 + t).sqrt(), 2.0);
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"t,hs\n"));
        let back = GrowthSeries::read_csv(buf.as_slice(), 2.0).unwrap();
        assert_eq!(fit_growth_exponent(&back).unwrap(), fit_growth_exponent(&s).unwrap());
    }

    #[test]
    fn default_window_heuristic() {
        let g = FourierGrid::new(TorusGeometry::standard(), 16).unwrap();
        assert_eq!(default_window(&Field::zeros(g)), 0.1);
        let u = Field::single_mode(g, (3, 0), Complex64::new(1.0, 0.0)).unwrap();
        let h1 = u.sobolev_norm(1.0, SobolevWeight::Bracket);
        assert!((default_window(&u) - 1.0 / (h1 * h1)).abs() < 1e-15);
    }
}
