use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{SpaceTimeField, TimeTransform, XsbError};
use crate::spectral::{Collocation, Field, SpectralError};

fn check(fields: [&SpaceTimeField; 4], oversample: usize) -> Result<Collocation<f64>, XsbError> {
    let grid = fields[0].grid();
    let time = fields[0].time();
    if fields.iter().any(|f| f.grid() != grid || f.time() != time) {
        return Err(XsbError::Mismatch("quadrilinear form needs common grids".into()));
    }
    let p = oversample * grid.modes();
    let reach = |axis: usize| -> i64 {
        fields
            .iter()
            .map(|f| f.modes().iter().map(|s| if axis == 0 { s.m.0.abs() } else { s.m.1.abs() }).max().unwrap_or(0))
            .sum()
    };
    let band = reach(0).max(reach(1));
    if band >= p as i64 {
        return Err(SpectralError::Aliasing(format!("product bandwidth {band} needs more than {p} points per axis")).into());
    }
    Ok(Collocation::with_side(grid, p)?)
}

fn spatial(col: &mut Collocation<f64>, f: [&Field<f64>; 4]) -> Complex64 {
    let v: Vec<Vec<Complex64>> = f.iter().map(|x| col.to_values(x)).collect();
    let p = col.side();
    let sum: Complex64 = (0..p * p).map(|i| v[0][i] * v[1][i] * v[2][i].conj() * v[3][i]).sum();
    sum * (TAU * TAU / (p * p) as f64)
}

/// `∫₀¹∫ u₁u₂ conj(u₃) u₄ dx dt`: trapezoid over the lift's samples on
/// `[0, 1]`, spatial integral exact on the `oversample·M` grid.
pub fn quadrilinear_form(fields: [&SpaceTimeField; 4], oversample: usize) -> Result<Complex64, XsbError> {
    let mut col = check(fields, oversample)?;
    if fields.iter().any(|f| f.is_zero()) {
        return Ok(Complex64::default());
    }
    let samples: Vec<Vec<Field<f64>>> = fields.iter().map(|f| f.samples_on_unit()).collect();
    let n_t = fields[0].time().n_t;
    let h = fields[0].time().step();
    let mut total = Complex64::default();
    for j in 0..n_t {
        let w = if j == 0 || j == n_t - 1 { 0.5 * h } else { h };
        total += spatial(&mut col, [&samples[0][j], &samples[1][j], &samples[2][j], &samples[3][j]]) * w;
    }
    Ok(total)
}

/// `∫∫ (wu₁)(wu₂) conj(wu₃)(wu₄) dx dt` over the padded interval `[−1, 2]`.
pub fn quadrilinear_form_windowed(fields: [&SpaceTimeField; 4], oversample: usize) -> Result<Complex64, XsbError> {
    let mut col = check(fields, oversample)?;
    if fields.iter().any(|f| f.is_zero()) {
        return Ok(Complex64::default());
    }
    let time = fields[0].time();
    let tt = TimeTransform::new(time);
    let grid = fields[0].grid();
    let values: Vec<_> = fields.iter().map(|f| f.windowed_values(&tt)).collect();
    let mut total = Complex64::default();
    for i in 0..time.padded_len() {
        let at = |k: usize| {
            let mut f = Field::zeros(grid);
            for (m, v) in &values[k] {
                f.set(*m, v[i]).expect("mode is on the grid");
            }
            f
        };
        let (a, b, c, d) = (at(0), at(1), at(2), at(3));
        total += spatial(&mut col, [&a, &b, &c, &d]);
    }
    Ok(total * time.step())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use crate::spectral::{FourierGrid, TorusGeometry};
    use crate::xsb::{free_flow_samples, lift, Extension, Frame, LiftConfig};
    use rand::Rng;

    fn grid() -> FourierGrid<f64> {
        FourierGrid::new(TorusGeometry::standard(), 16).unwrap()
    }

    fn static_mode(m: (i64, i64), c: Complex64) -> SpaceTimeField {
        let f = Field::single_mode(grid(), m, c).unwrap();
        lift(&vec![f; 64], LiftConfig { extension: Extension::Hold, frame: Frame::Rest }).unwrap()
    }

    fn random(seed: u64) -> SpaceTimeField {
        let mut r = rng::stream(seed, 0);
        let u = Field::from_fn(grid(), |a, b| {
            if a.abs() <= 2 && b.abs() <= 2 {
                Complex64::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))
            } else {
                Complex64::default()
            }
        });
        lift(&free_flow_samples(&u, 64), LiftConfig::default()).unwrap()
    }

    #[test]
    fn zero_factor() {
        let z = lift(&vec![Field::zeros(grid()); 64], LiftConfig::default()).unwrap();
        let r = random(1);
        assert_eq!(quadrilinear_form([&r, &r, &z, &r], 4).unwrap(), Complex64::default());
    }

    #[test]
    fn static_zero_sum_modes() {
        let c = [Complex64::new(1.0, 0.5), Complex64::new(-0.3, 0.2), Complex64::new(0.7, -0.1), Complex64::new(0.0, 1.0)];
        // m1 + m2 − m3 + m4 = 0.
        let f = [static_mode((1, 2), c[0]), static_mode((-2, 1), c[1]), static_mode((3, 0), c[2]), static_mode((4, -3), c[3])];
        let v = quadrilinear_form([&f[0], &f[1], &f[2], &f[3]], 4).unwrap();
        let expect = c[0] * c[1] * c[2].conj() * c[3] * (TAU * TAU);
        assert!((v - expect).norm() < 1e-10);
        let w = quadrilinear_form_windowed([&f[0], &f[1], &f[2], &f[3]], 4).unwrap();
        let h = 1.0 / 63.0;
        let w4: f64 = (0..190).map(|i| super::super::window(-1.0 + i as f64 * h).powi(4)).sum::<f64>() * h;
        assert!((w - expect * w4).norm() < 1e-10);
    }

    #[test]
    fn separated_supports_vanish() {
        let f = [static_mode((7, 0), Complex64::new(1.0, 0.0)), static_mode((1, 1), Complex64::new(1.0, 0.0)),
                 static_mode((-1, 0), Complex64::new(1.0, 0.0)), static_mode((1, -1), Complex64::new(1.0, 0.0))];
        let v = quadrilinear_form([&f[0], &f[1], &f[2], &f[3]], 4).unwrap();
        assert!(v.norm() < 1e-12);
    }

    #[test]
    fn conjugate_symmetry() {
        let f: Vec<_> = (0..4).map(|s| random(10 + s)).collect();
        let c: Vec<_> = f.iter().map(|x| x.conj().unwrap()).collect();
        let a = quadrilinear_form([&f[0], &f[1], &f[2], &f[3]], 4).unwrap();
        let b = quadrilinear_form([&c[0], &c[1], &c[2], &c[3]], 4).unwrap();
        assert!((a.conj() - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn bandwidth_overflow() {
        let g = FourierGrid::new(TorusGeometry::standard(), 8).unwrap();
        let f = lift(&vec![Field::single_mode(g, (-4, 0), Complex64::new(1.0, 0.0)).unwrap(); 64], LiftConfig::default()).unwrap();
        assert!(quadrilinear_form([&f, &f, &f, &f], 2).is_err());
    }
}
