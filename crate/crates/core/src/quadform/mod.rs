//! Positive-definite binary quadratic forms `a m² + b mn + c n²`: exact
//! evaluation, lattice counting below a threshold, the `2π x/√D` main term
//! and its remainder, annulus counts and remainder-exponent scans.
//!
//! Coefficients are generic over [`FormScalar`]. With [`Rational64`]
//! coefficients every count is exact (integer arithmetic on the cleared
//! form). With `f64`/`f32` coefficients, counts use floating roots refined
//! by direct evaluation, and any lattice point within a relative guard band
//! of the threshold sets [`LatticeCount::ambiguous`].

mod count;
mod scan;

use std::fmt::Debug;
use std::ops::Neg;

use num_rational::Rational64;
use num_traits::Num;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fit::FitError;

pub use count::{count_integer_form, for_each_row, IntegerForm};
pub use scan::{
    annulus_profile, block_maxima, fit_annulus_exponent, fit_block_maxima, fit_remainder_exponent,
    fit_remainder_exponent_with, geometric_blocks, BlockMax, FitReport, ScanConfig,
};

/// Lattice-remainder exponent 131/416.
pub const REMAINDER_EXPONENT: f64 = 131.0 / 416.0;

/// Relative guard band for float-mode boundary decisions.
pub const FLOAT_GUARD_BAND: f64 = 1.0 / (1u64 << 40) as f64;

#[derive(Debug, Error, PartialEq)]
pub enum QuadFormError {
    #[error("form is not positive definite (a = {a}, 4ac - b^2 = {discriminant})")]
    NotPositiveDefinite { a: f64, discriminant: f64 },
    #[error("integer overflow while counting lattice points")]
    Overflow,
    #[error("non-finite threshold or coefficient")]
    NonFinite,
    #[error("invalid scan range: {0}")]
    InvalidRange(String),
    #[error("degenerate fit: {0}")]
    Fit(#[from] FitError),
}

/// Which side of the threshold is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    /// `Q(m, n) <= x`
    Closed,
    /// `Q(m, n) < x`
    Open,
}

/// A lattice count plus the float-mode precision flag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeCount {
    pub count: u64,
    /// Some lattice point sits within the guard band of the threshold, so
    /// the float decision for it may be wrong. Always `false` in exact mode.
    pub ambiguous: bool,
}

/// Count, main term and remainder at one threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub x: f64,
    pub count: u64,
    pub main_term: f64,
    pub remainder: f64,
    pub precision_warning: bool,
}

/// Coefficient type of a [`QuadForm`].
pub trait FormScalar: Copy + PartialOrd + Debug + Send + Sync + Num + Neg<Output = Self> + 'static {
    /// Whether counts with this coefficient type are exact.
    const EXACT: bool;

    fn approx_f64(self) -> f64;

    /// The value `num / den`, exactly when the type allows it.
    fn from_ratio(num: i64, den: i64) -> Self;

    fn count_rows(form: &QuadForm<Self>, x: Self, bound: Bound) -> Result<LatticeCount, QuadFormError>;

    /// Spacing `1/L` of the values taken by the form, for exact forms.
    fn value_denominator(_form: &QuadForm<Self>) -> Option<i64> {
        None
    }
}

/// Positive-definite binary quadratic form `a m² + b mn + c n²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadForm<T> {
    a: T,
    b: T,
    c: T,
}

impl<T: FormScalar> QuadForm<T> {
    pub fn new(a: T, b: T, c: T) -> Result<Self, QuadFormError> {
        let four = T::one() + T::one() + T::one() + T::one();
        let disc = four * a * c - b * b;
        let finite = [a, b, c].iter().all(|v| v.approx_f64().is_finite());
        if !finite {
            return Err(QuadFormError::NonFinite);
        }
        if !(a > T::zero()) || !(disc > T::zero()) {
            return Err(QuadFormError::NotPositiveDefinite { a: a.approx_f64(), discriminant: disc.approx_f64() });
        }
        Ok(Self { a, b, c })
    }

    /// The torus symbol `(θ₁ m)² + (θ₂ n)²` has this shape with `a = θ₁²`, `c = θ₂²`.
    pub fn diagonal(a: T, c: T) -> Result<Self, QuadFormError> {
        Self::new(a, T::zero(), c)
    }

    pub fn coefficients(&self) -> (T, T, T) {
        (self.a, self.b, self.c)
    }

    /// `D = 4ac − b²`.
    pub fn discriminant(&self) -> T {
        let four = T::one() + T::one() + T::one() + T::one();
        four * self.a * self.c - self.b * self.b
    }

    pub fn eval(&self, m: i64, n: i64) -> T {
        let m = T::from_ratio(m, 1);
        let n = T::from_ratio(n, 1);
        self.a * m * m + self.b * m * n + self.c * n * n
    }

    /// `#{(m, n) ∈ ℤ² : Q(m, n) ≤ x}` by row scans.
    pub fn count_leq(&self, x: T) -> Result<LatticeCount, QuadFormError> {
        T::count_rows(self, x, Bound::Closed)
    }

    /// `#{(m, n) ∈ ℤ² : Q(m, n) < x}`.
    pub fn count_lt(&self, x: T) -> Result<LatticeCount, QuadFormError> {
        T::count_rows(self, x, Bound::Open)
    }

    /// `2π x / √D`.
    pub fn main_term(&self, x: T) -> f64 {
        std::f64::consts::TAU / self.discriminant().approx_f64().sqrt() * x.approx_f64()
    }

    pub fn remainder(&self, x: T) -> Result<f64, QuadFormError> {
        Ok(self.count(x)?.remainder)
    }

    pub fn count(&self, x: T) -> Result<CountResult, QuadFormError> {
        let lc = self.count_leq(x)?;
        let main_term = self.main_term(x);
        Ok(CountResult {
            x: x.approx_f64(),
            count: lc.count,
            main_term,
            remainder: lc.count as f64 - main_term,
            precision_warning: lc.ambiguous,
        })
    }

    /// `|G_l|` with `G_l = {a ∈ ℤ² : |Q(a) − l| ≤ 1}`, computed as
    /// `#{Q ≤ l + 1} − #{Q < l − 1}` (closed outer cut, open inner cut).
    pub fn annulus_count(&self, l: T) -> Result<LatticeCount, QuadFormError> {
        let outer = self.count_leq(l + T::one())?;
        let inner = self.count_lt(l - T::one())?;
        Ok(LatticeCount { count: outer.count - inner.count, ambiguous: outer.ambiguous || inner.ambiguous })
    }
}

impl QuadForm<Rational64> {
    pub fn from_integers(a: i64, b: i64, c: i64) -> Result<Self, QuadFormError> {
        Self::new(Rational64::from_integer(a), Rational64::from_integer(b), Rational64::from_integer(c))
    }
}

impl FormScalar for Rational64 {
    const EXACT: bool = true;

    fn approx_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Rational64::new(num, den)
    }

    fn count_rows(form: &QuadForm<Self>, x: Self, bound: Bound) -> Result<LatticeCount, QuadFormError> {
        let int = IntegerForm::from_rational(form)?;
        let threshold = int.threshold(x, bound)?;
        Ok(LatticeCount { count: count_integer_form(&int, threshold)?, ambiguous: false })
    }

    fn value_denominator(form: &QuadForm<Self>) -> Option<i64> {
        IntegerForm::from_rational(form).ok().and_then(|f| i64::try_from(f.scale).ok())
    }
}

macro_rules! float_form_scalar {
    ($f:ty) => {
        impl FormScalar for $f {
            const EXACT: bool = false;

            fn approx_f64(self) -> f64 {
                self as f64
            }

            fn from_ratio(num: i64, den: i64) -> Self {
                num as $f / den as $f
            }

            fn count_rows(form: &QuadForm<Self>, x: Self, bound: Bound) -> Result<LatticeCount, QuadFormError> {
                count::count_float(form, x, bound)
            }
        }
    };
}

float_form_scalar!(f32);
float_form_scalar!(f64);

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn exact(a: i64, b: i64, c: i64) -> QuadForm<Rational64> {
        QuadForm::from_integers(a, b, c).unwrap()
    }

    fn r(n: i64) -> Rational64 {
        Rational64::from_integer(n)
    }

    #[test]
    fn eval_examples() {
        assert_eq!(exact(1, 0, 1).eval(3, 4), r(25));
        assert_eq!(exact(1, 0, 2).eval(1, 1), r(3));
        assert_eq!(exact(3, -1, 5).eval(0, 0), r(0));
        let f = QuadForm::new(1.0, 0.0, 2.0).unwrap();
        assert_eq!(f.eval(1, 1), 3.0);
    }

    #[test]
    fn rejects_indefinite_and_degenerate_forms() {
        assert!(matches!(QuadForm::new(1.0, 2.0, 1.0), Err(QuadFormError::NotPositiveDefinite { .. })));
        assert!(matches!(QuadForm::new(-1.0, 0.0, -1.0), Err(QuadFormError::NotPositiveDefinite { .. })));
        assert!(matches!(QuadForm::new(1.0, f64::NAN, 1.0), Err(QuadFormError::NonFinite)));
        assert!(QuadForm::from_integers(1, 3, 1).is_err());
    }

    #[test]
    fn count_examples() {
        let q = exact(1, 0, 1);
        assert_eq!(q.count_leq(r(25)).unwrap().count, 81);
        assert_eq!(q.count_leq(r(-1)).unwrap().count, 0);
        assert_eq!(q.count_leq(r(0)).unwrap().count, 1);
        assert_eq!(exact(7, 3, 2).count_leq(r(0)).unwrap().count, 1);
        assert_eq!(q.count_lt(r(0)).unwrap().count, 0);
        assert_eq!(q.count_lt(r(25)).unwrap().count, 81 - 12);
    }

    #[test]
    fn main_term_and_remainder_examples() {
        let q = exact(1, 0, 1);
        assert!((q.main_term(r(100)) - 100.0 * PI).abs() < 1e-9);
        assert_eq!(q.main_term(r(0)), 0.0);
        let q2 = exact(1, 0, 2);
        assert!((q2.main_term(r(1)) - 2.221_441_469_079_183).abs() < 1e-12);
        assert_eq!(q.remainder(r(0)).unwrap(), 1.0);
        assert!((q.remainder(r(25)).unwrap() - (81.0 - 25.0 * PI)).abs() < 1e-12);
        let c = q.count(r(25)).unwrap();
        assert_eq!(c.remainder, c.count as f64 - c.main_term);
    }

    #[test]
    fn annulus_examples() {
        let q = exact(1, 0, 1);
        assert_eq!(q.annulus_count(r(0)).unwrap().count, 5);
        assert_eq!(q.annulus_count(r(2)).unwrap().count, 8);
        assert_eq!(q.annulus_count(r(-10)).unwrap().count, 0);
        let f = QuadForm::new(1.0, 0.0, 1.0).unwrap();
        let g = f.annulus_count(2.0).unwrap();
        assert_eq!(g.count, 8);
        // Q = 1 and Q = 3 sit exactly on the cuts.
        assert!(g.ambiguous);
    }

    #[test]
    fn float_mode_agrees_with_exact_mode_on_rational_forms() {
        let e = QuadForm::new(Rational64::new(3, 2), Rational64::new(1, 3), Rational64::new(5, 4)).unwrap();
        let f = QuadForm::new(1.5, 1.0 / 3.0, 1.25).unwrap();
        for k in 0..200 {
            let x = k as f64 * 7.37 + 0.11;
            let xe = Rational64::new((x * 100.0).round() as i64, 100);
            let xf = (x * 100.0).round() / 100.0;
            let fe = e.count_leq(xe).unwrap();
            let ff = f.count_leq(xf).unwrap();
            if !ff.ambiguous {
                assert_eq!(fe.count, ff.count, "x = {xf}");
            }
        }
    }

    #[test]
    fn irrational_float_form_flags_nothing_generic() {
        let s2 = 2f64.sqrt();
        let q = QuadForm::diagonal(1.0, s2).unwrap();
        let c = q.count_leq(1000.5).unwrap();
        assert!(!c.ambiguous);
        assert_eq!(c.count % 2, 1);
    }

    #[test]
    fn f32_forms_count() {
        let q = QuadForm::<f32>::diagonal(1.0, 1.0).unwrap();
        assert_eq!(q.count_leq(25.5).unwrap().count, 81);
    }
}
