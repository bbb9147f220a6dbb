use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::{Alpha, NlsError, SplitStep};
use crate::spectral::{Field, SobolevWeight};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig<T> {
    pub t_final: T,
    pub alpha: Alpha,
    pub n_iter: usize,
    /// Uniform time nodes on `[0, T]`, endpoints included.
    pub n_quad: usize,
    /// Sobolev index of the monitored ball.
    pub s: T,
    pub dealias_oversample: usize,
}

#[derive(Debug, Clone)]
pub struct PicardReport<T: Real> {
    pub times: Vec<T>,
    /// `iterates[k][j]` is iterate `k` at `times[j]`; iterate 0 is the free flow.
    pub iterates: Vec<Vec<Field<T>>>,
    /// `sup_j ‖u_{k+1}(t_j) − u_k(t_j)‖_{L²}`.
    pub differences: Vec<T>,
    /// Differences grew three times in a row.
    pub diverged: bool,
    /// `2‖u₀‖_{H^s}` in the bracket weight.
    pub ball_radius: T,
    /// Per iterate, whether `sup_j ‖u_k(t_j)‖_{H^s} ≤ ball_radius`.
    pub within_ball: Vec<bool>,
    /// Sup distance of the last iterate from the node-doubled run, when requested.
    pub quadrature_delta: Option<T>,
}

impl<T: Real> PicardReport<T> {
    pub fn last(&self) -> &[Field<T>] {
        self.iterates.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// Discrete Duhamel residual of the last iterate.
    pub fn residual(&self) -> Option<T> {
        self.differences.last().copied()
    }

    /// Successive ratios `d_{k+1}/d_k`.
    pub fn ratios(&self) -> Vec<T> {
        self.differences.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

fn validate<T: Real>(cfg: &PicardConfig<T>) -> Result<(), NlsError> {
    if cfg.n_quad < 8 {
        return Err(NlsError::InvalidParams(format!("n_quad must be >= 8, got {}", cfg.n_quad)));
    }
    if !(cfg.t_final > T::zero() && cfg.t_final.is_finite()) {
        return Err(NlsError::InvalidParams(format!("final time must be positive, got {}", cfg.t_final)));
    }
    Ok(())
}

/// Duhamel map on the nodes:
/// `S(u)(t_j) = e^{it_jΔ}(u₀ − iα W_j)` with `W_j` the cumulative trapezoid
/// of `e^{−iτΔ}|u|²u(τ)`.
fn duhamel<T: Real>(
    stepper: &mut SplitStep<T>,
    u0: &Field<T>,
    u: &[Field<T>],
    times: &[T],
    alpha: T,
) -> Result<Vec<Field<T>>, NlsError> {
    let h = times[1] - times[0];
    let half = h * T::lit(0.5);
    let mut integrand = Vec::with_capacity(u.len());
    for (uj, &t) in u.iter().zip(times) {
        integrand.push(stepper.cubic(uj)?.free_flow(-t));
    }
    let mut acc = vec![Complex::<T>::default(); u0.coeffs().len()];
    let coef = Complex::new(T::zero(), -alpha);
    let mut out = Vec::with_capacity(u.len());
    for (j, &t) in times.iter().enumerate() {
        if j > 0 {
            for ((a, &p), &c) in acc.iter_mut().zip(integrand[j - 1].coeffs()).zip(integrand[j].coeffs()) {
                *a = *a + (p + c) * half;
            }
        }
        let coeffs = u0.coeffs().iter().zip(&acc).map(|(&c0, &w)| c0 + coef * w).collect();
        out.push(Field::from_coeffs(u0.grid(), coeffs)?.free_flow(t));
    }
    Ok(out)
}

fn sup_distance<T: Real>(a: &[Field<T>], b: &[Field<T>]) -> Result<T, NlsError> {
    let mut d = T::zero();
    for (x, y) in a.iter().zip(b) {
        d = d.max(x.sub(y)?.l2_norm());
    }
    Ok(d)
}

/// Picard iteration of the Duhamel map. Divergence is reported, not raised.
pub fn picard_iterate<T: Real>(u0: &Field<T>, cfg: &PicardConfig<T>) -> Result<PicardReport<T>, NlsError> {
    validate(cfg)?;
    let mut stepper = SplitStep::new(u0.grid(), cfg.alpha, cfg.dealias_oversample)?;
    let last = T::from_usize(cfg.n_quad - 1).unwrap();
    let times: Vec<T> = (0..cfg.n_quad).map(|j| cfg.t_final * T::from_usize(j).unwrap() / last).collect();
    let radius = T::lit(2.0) * u0.sobolev_norm(cfg.s, SobolevWeight::Bracket);
    let in_ball = |it: &[Field<T>]| {
        let slack = radius * T::lit(1e-12);
        it.iter().all(|f| f.sobolev_norm(cfg.s, SobolevWeight::Bracket) <= radius + slack)
    };
    let alpha = cfg.alpha.value();

    let first: Vec<Field<T>> = times.iter().map(|&t| u0.free_flow(t)).collect();
    let mut report = PicardReport {
        within_ball: vec![in_ball(&first)],
        iterates: vec![first],
        times,
        differences: Vec::new(),
        diverged: false,
        ball_radius: radius,
        quadrature_delta: None,
    };
    let mut growth = 0;
    for _ in 0..cfg.n_iter {
        let prev = report.iterates.last().unwrap();
        let next = duhamel(&mut stepper, u0, prev, &report.times, alpha)?;
        let d = sup_distance(prev, &next)?;
        if let Some(&p) = report.differences.last() {
            growth = if d > p { growth + 1 } else { 0 };
        }
        report.differences.push(d);
        report.within_ball.push(in_ball(&next));
        report.iterates.push(next);
        if growth >= 3 {
            report.diverged = true;
        }
        if !d.is_finite() {
            report.diverged = true;
            break;
        }
    }
    Ok(report)
}

/// [`picard_iterate`] at `n_quad` and at `2·n_quad − 1` nodes, recording
/// the sup distance between the two final iterates on the shared nodes.
pub fn picard_with_refinement<T: Real>(u0: &Field<T>, cfg: &PicardConfig<T>) -> Result<PicardReport<T>, NlsError> {
    let mut coarse = picard_iterate(u0, cfg)?;
    let fine_cfg = PicardConfig { n_quad: 2 * cfg.n_quad - 1, ..*cfg };
    let fine = picard_iterate(u0, &fine_cfg)?;
    let shared: Vec<Field<T>> = fine.last().iter().step_by(2).cloned().collect();
    coarse.quadrature_delta = Some(sup_distance(coarse.last(), &shared)?);
    Ok(coarse)
}
