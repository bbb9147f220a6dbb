//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use toruslab::spectral::Field;
use toruslab::Rational64;

/// A rational form `a m² + b mn + c n²` and threshold scaled to integers.
struct Scaled {
    a: i128,
    b: i128,
    c: i128,
    x: i128,
}

fn scale(a: Rational64, b: Rational64, c: Rational64, x: Rational64) -> Scaled {
    let l = [a, b, c, x].iter().fold(1i128, |l, r| {
        let d = *r.denom() as i128;
        l / gcd(l, d) * d
    });
    let s = |r: Rational64| *r.numer() as i128 * (l / *r.denom() as i128);
    Scaled { a: s(a), b: s(b), c: s(c), x: s(x) }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// `#{Q(m, n) ≤ x}` (or `< x` when `strict`) by scanning the full bounding
/// box of the ellipse.
pub fn brute_count(a: Rational64, b: Rational64, c: Rational64, x: Rational64, strict: bool) -> u64 {
    if x < Rational64::from_integer(0) || (strict && x == Rational64::from_integer(0)) {
        return 0;
    }
    let f = |r: Rational64| *r.numer() as f64 / *r.denom() as f64;
    let d = 4.0 * f(a) * f(c) - f(b) * f(b);
    let mmax = (4.0 * f(c) * f(x) / d).sqrt().floor() as i128 + 1;
    let nmax = (4.0 * f(a) * f(x) / d).sqrt().floor() as i128 + 1;
    let s = scale(a, b, c, x);
    let mut count = 0;
    for m in -mmax..=mmax {
        for n in -nmax..=nmax {
            let q = s.a * m * m + s.b * m * n + s.c * n * n;
            if q < s.x || (!strict && q == s.x) {
                count += 1;
            }
        }
    }
    count
}

/// `|G_l| = #{|Q − l| ≤ 1}` from two brute-force counts.
pub fn brute_annulus(a: Rational64, b: Rational64, c: Rational64, l: i64) -> u64 {
    let one = Rational64::from_integer(1);
    let l = Rational64::from_integer(l);
    brute_count(a, b, c, l + one, false) - brute_count(a, b, c, l - one, true)
}

/// Composite Gauss–Legendre rule, 5 nodes per panel.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [0.0, -0.538_469_310_105_683_1, 0.538_469_310_105_683_1, -0.906_179_845_938_664, 0.906_179_845_938_664];
    const W: [f64; 5] =
        [0.568_888_888_888_888_9, 0.478_628_670_499_366_5, 0.478_628_670_499_366_5, 0.236_926_885_056_189_1, 0.236_926_885_056_189_1];
    let h = (hi - lo) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for (x, w) in X.iter().zip(W) {
            s += w * f(mid + 0.5 * h * x);
        }
        total += 0.5 * h * s;
    }
    total
}

/// `∫₀¹ |Σ bₙ e^{itaₙ}|² dt` by 2000 × 5-point Gauss–Legendre.
pub fn exp_sum_quadrature(a: &[f64], b: &[Complex64]) -> f64 {
    gauss_legendre(
        |t| a.iter().zip(b).map(|(&x, &c)| c * Complex64::from_polar(1.0, x * t)).sum::<Complex64>().norm_sqr(),
        0.0,
        1.0,
        2000,
    )
}

/// `∫ u₁u₂u₃u₄ dx` by summing over every quadruple of support frequencies.
pub fn quadrilinear_bruteforce(fields: [&Field<f64>; 4]) -> Complex64 {
    let supp: Vec<Vec<((i64, i64), Complex64)>> =
        fields.iter().map(|f| f.support().into_iter().map(|m| (m, f.coeff(m).unwrap())).collect()).collect();
    let mut total = Complex64::default();
    for &(m1, c1) in &supp[0] {
        for &(m2, c2) in &supp[1] {
            for &(m3, c3) in &supp[2] {
                for &(m4, c4) in &supp[3] {
                    if m1.0 + m2.0 + m3.0 + m4.0 == 0 && m1.1 + m2.1 + m3.1 + m4.1 == 0 {
                        total += c1 * c2 * c3 * c4;
                    }
                }
            }
        }
    }
    total * (TAU * TAU)
}

/// `|u|²` coefficients by direct convolution.
pub fn modulus_squared(u: &Field<f64>) -> HashMap<(i64, i64), Complex64> {
    let sup: Vec<_> = u.support().into_iter().map(|m| (m, u.coeff(m).unwrap())).collect();
    let mut w = HashMap::new();
    for &(a, ca) in &sup {
        for &(b, cb) in &sup {
            *w.entry((a.0 - b.0, a.1 - b.1)).or_insert(Complex64::default()) += ca * cb.conj();
        }
    }
    w
}
