use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use rand::Rng;

use super::EstimateError;
use crate::rng::{self, tag};
use crate::spectral::{Collocation, Field, FourierGrid, SpectralError};

type Field64 = Field<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VanishReport {
    /// `∫_{[0,2π)²} u₁u₂u₃u₄ dx`.
    pub integral: Complex64,
    /// No quadruple of support frequencies sums to zero.
    pub predicted_zero: bool,
    /// `Π ‖uᵢ‖_{L²}`.
    pub norm_product: f64,
    /// `|integral| ≤ 10⁻¹² · norm_product` whenever `predicted_zero`.
    pub consistent: bool,
}

fn pair_sums(a: &Field64, b: &Field64) -> HashMap<(i64, i64), Complex64> {
    let sa: Vec<_> = a.support().into_iter().map(|m| (m, a.coeff(m).unwrap())).collect();
    let sb: Vec<_> = b.support().into_iter().map(|m| (m, b.coeff(m).unwrap())).collect();
    let mut out = HashMap::new();
    for &(m, x) in &sa {
        for &(n, y) in &sb {
            *out.entry((m.0 + n.0, m.1 + n.1)).or_insert(Complex64::default()) += x * y;
        }
    }
    out
}

fn same_grid(fields: [&Field64; 4]) -> Result<(), EstimateError> {
    if fields.iter().any(|f| f.grid() != fields[0].grid()) {
        return Err(SpectralError::GridMismatch.into());
    }
    Ok(())
}

/// `∫ u₁u₂u₃u₄ dx = (2π)² Σ_{m+n+j+l=0} û₁(m)û₂(n)û₃(j)û₄(l)` by pairwise
/// convolution of the supports.
pub fn quadrilinear_integral(fields: [&Field64; 4]) -> Result<Complex64, EstimateError> {
    Ok(vanish_parts(fields)?.0)
}

fn vanish_parts(fields: [&Field64; 4]) -> Result<(Complex64, bool), EstimateError> {
    same_grid(fields)?;
    let s12 = pair_sums(fields[0], fields[1]);
    let s34 = pair_sums(fields[2], fields[3]);
    let mut total = Complex64::default();
    let mut hit = false;
    for (k, v) in &s12 {
        if let Some(w) = s34.get(&(-k.0, -k.1)) {
            hit = true;
            total += v * w;
        }
    }
    Ok((total * (TAU * TAU), !hit))
}

/// Exact integral plus the support-based vanishing prediction.
pub fn quadrilinear_vanish_check(fields: [&Field64; 4]) -> Result<VanishReport, EstimateError> {
    let (integral, predicted_zero) = vanish_parts(fields)?;
    let norm_product: f64 = fields.iter().map(|f| f.l2_norm()).product();
    let consistent = !predicted_zero || integral.norm() <= 1e-12 * norm_product;
    Ok(VanishReport { integral, predicted_zero, norm_product, consistent })
}

/// The same integral by the rectangle rule on the `oversample·M` grid.
pub fn quadrilinear_collocation(fields: [&Field64; 4], oversample: usize) -> Result<Complex64, EstimateError> {
    same_grid(fields)?;
    let grid = fields[0].grid();
    let p = oversample * grid.modes();
    let reach = |axis: usize| -> i64 {
        fields
            .iter()
            .map(|f| f.support().iter().map(|m| if axis == 0 { m.0.abs() } else { m.1.abs() }).max().unwrap_or(0))
            .sum()
    };
    let band = reach(0).max(reach(1));
    if band >= p as i64 {
        return Err(SpectralError::Aliasing(format!("product bandwidth {band} needs more than {p} points per axis")).into());
    }
    let mut col = Collocation::with_side(grid, p)?;
    let vals: Vec<Vec<Complex64>> = fields.iter().map(|f| col.to_values(f)).collect();
    let cell = TAU * TAU / (p * p) as f64;
    let sum: Complex64 = (0..p * p).map(|i| vals[0][i] * vals[1][i] * vals[2][i] * vals[3][i]).sum();
    Ok(sum * cell)
}


fn random_mode<R: Rng>(r: &mut R, lo: i64, hi: i64) -> (i64, i64) {
    loop {
        let m = (r.gen_range(-hi..=hi), r.gen_range(-hi..=hi));
        if m.0.abs().max(m.1.abs()) >= lo {
            return m;
        }
    }
}

fn random_coeff<R: Rng>(r: &mut R) -> Complex64 {
    Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
}

/// Four fields on `grid` whose supports admit no zero-sum quadruple: `u₁`
/// lives on `7 ≤ |m|_∞ ≤ 10`, the others on `|m|_∞ ≤ 2`, three modes each.
/// Needs `M ≥ 22`.
pub fn random_vanishing_configuration(grid: FourierGrid<f64>, seed: u64, index: u64) -> Result<[Field64; 4], EstimateError> {
    let mut r = rng::stream(seed, tag::VANISH + 2 * index);
    let mut out = Vec::with_capacity(4);
    for k in 0..4 {
        let mut f = Field::zeros(grid);
        for _ in 0..3 {
            let m = if k == 0 { random_mode(&mut r, 7, 10) } else { random_mode(&mut r, 0, 2) };
            let c = random_coeff(&mut r);
            f.set(m, c)?;
        }
        out.push(f);
    }
    Ok(out.try_into().unwrap())
}

/// Four single-mode fields with `m₁+m₂+m₃+m₄ = 0`; the integral is
/// `(2π)² c₁c₂c₃c₄`. Needs `M ≥ 32`.
pub fn random_zero_sum_configuration(grid: FourierGrid<f64>, seed: u64, index: u64) -> Result<[Field64; 4], EstimateError> {
    let mut r = rng::stream(seed, tag::VANISH + 2 * index + 1);
    let ms: Vec<(i64, i64)> = (0..3).map(|_| random_mode(&mut r, 0, 5)).collect();
    let last = (-ms.iter().map(|m| m.0).sum::<i64>(), -ms.iter().map(|m| m.1).sum::<i64>());
    let mut out = Vec::with_capacity(4);
    for m in ms.into_iter().chain([last]) {
        let c = random_coeff(&mut r);
        out.push(Field::single_mode(grid, m, c)?);
    }
    Ok(out.try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::spectral::{FourierGrid, TorusGeometry};
    use rand::Rng;

    fn grid() -> FourierGrid<f64> {
        FourierGrid::new(TorusGeometry::standard(), 32).unwrap()
    }

    fn mode(m: (i64, i64)) -> Field64 {
        Field::single_mode(grid(), m, Complex64::new(1.0, 0.0)).unwrap()
    }

    #[test]
    fn zero_sum_single_modes() {
        let f = [mode((3, 1)), mode((-1, 2)), mode((-4, -5)), mode((2, 2))];
        let r = quadrilinear_vanish_check([&f[0], &f[1], &f[2], &f[3]]).unwrap();
        assert!(!r.predicted_zero);
        assert!((r.integral - Complex64::new(TAU * TAU, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn dominant_first_component_vanishes() {
        let f = [mode((13, 1)), mode((-3, 2)), mode((3, -5)), mode((-2, 2))];
        let r = quadrilinear_vanish_check([&f[0], &f[1], &f[2], &f[3]]).unwrap();
        assert!(r.predicted_zero && r.consistent);
        assert_eq!(r.integral, Complex64::default());
    }

    #[test]
    fn collocation_agrees_on_random_fields() {
        let g = grid();
        let mut r = rng::stream(11, 0);
        let mut rand_field = || {
            Field::from_fn(g, |a, b| {
                if a.abs() <= 6 && b.abs() <= 6 && r.gen_bool(0.3) {
                    Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
                } else {
                    Complex64::default()
                }
            })
        };
        let f = [rand_field(), rand_field(), rand_field(), rand_field()];
        let exact = quadrilinear_integral([&f[0], &f[1], &f[2], &f[3]]).unwrap();
        let col = quadrilinear_collocation([&f[0], &f[1], &f[2], &f[3]], 4).unwrap();
        assert!((exact - col).norm() <= 1e-10 * exact.norm().max(1.0));
    }

    #[test]
    fn bandwidth_overflow() {
        let g = FourierGrid::new(TorusGeometry::standard(), 8).unwrap();
        let m = Field::single_mode(g, (-4, 0), Complex64::new(1.0, 0.0)).unwrap();
        assert!(quadrilinear_collocation([&m, &m, &m, &m], 2).is_err());
        assert!(quadrilinear_collocation([&m, &m, &m, &m], 4).is_ok());
    }

    #[test]
    fn generated_configurations() {
        for i in 0..20 {
            let f = random_vanishing_configuration(grid(), 3, i).unwrap();
            let rep = quadrilinear_vanish_check([&f[0], &f[1], &f[2], &f[3]]).unwrap();
            assert!(rep.predicted_zero && rep.consistent);
            let z = random_zero_sum_configuration(grid(), 3, i).unwrap();
            let rep = quadrilinear_vanish_check([&z[0], &z[1], &z[2], &z[3]]).unwrap();
            assert!(!rep.predicted_zero);
        }
        let a = random_zero_sum_configuration(grid(), 3, 5).unwrap();
        let b = random_zero_sum_configuration(grid(), 3, 5).unwrap();
        assert_eq!(a, b);
    }
}
