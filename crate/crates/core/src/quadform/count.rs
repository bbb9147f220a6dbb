use num_integer::{Integer, Roots};
use num_rational::Rational64;
use num_traits::Float;

use super::{Bound, FormScalar, LatticeCount, QuadForm, QuadFormError, FLOAT_GUARD_BAND};

/// A rational form with denominators cleared: `scale · Q = A m² + B mn + C n²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegerForm {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    /// Common denominator `L` of the original coefficients.
    pub scale: i128,
}

impl IntegerForm {
    pub fn from_rational(form: &QuadForm<Rational64>) -> Result<Self, QuadFormError> {
        let (a, b, c) = form.coefficients();
        let scale = [a, b, c].iter().fold(1i128, |l, r| l.lcm(&(*r.denom() as i128)));
        let clear = |r: Rational64| -> Result<i128, QuadFormError> {
            (*r.numer() as i128).checked_mul(scale / *r.denom() as i128).ok_or(QuadFormError::Overflow)
        };
        Ok(Self { a: clear(a)?, b: clear(b)?, c: clear(c)?, scale })
    }

    pub fn discriminant(&self) -> i128 {
        4 * self.a * self.c - self.b * self.b
    }

    pub fn eval(&self, m: i128, n: i128) -> i128 {
        self.a * m * m + self.b * m * n + self.c * n * n
    }

    /// Largest integer `X` such that `scale·Q ≤ X` is equivalent to the
    /// requested comparison of `Q` against `x`.
    pub fn threshold(&self, x: Rational64, bound: Bound) -> Result<i128, QuadFormError> {
        let num = (*x.numer() as i128).checked_mul(self.scale).ok_or(QuadFormError::Overflow)?;
        let den = *x.denom() as i128;
        Ok(match bound {
            Bound::Closed => Integer::div_floor(&num, &den),
            Bound::Open => -(Integer::div_floor(&-num, &den)) - 1,
        })
    }
}

/// Visit every nonempty row `m` of `{A m² + B mn + C n² ≤ X}` with its
/// inclusive column range `lo..=hi`.
pub fn for_each_row<F>(form: &IntegerForm, threshold: i128, mut visit: F) -> Result<(), QuadFormError>
where
    F: FnMut(i128, i128, i128),
{
    if threshold < 0 {
        return Ok(());
    }
    let d = form.discriminant();
    let four_cx = form
        .c
        .checked_mul(threshold)
        .and_then(|v| v.checked_mul(4))
        .ok_or(QuadFormError::Overflow)?;
    let m_max = (four_cx / d).sqrt();
    let two_c = 2 * form.c;
    for m in -m_max..=m_max {
        let delta = four_cx - d * m * m;
        if delta < 0 {
            continue;
        }
        let s = delta.sqrt();
        let bm = form.b.checked_mul(m).ok_or(QuadFormError::Overflow)?;
        // (2C n + B m)² ≤ Δ  ⇔  |2C n + B m| ≤ ⌊√Δ⌋ for integer n.
        let lo = -(Integer::div_floor(&(s + bm), &two_c));
        let hi = Integer::div_floor(&(s - bm), &two_c);
        if hi >= lo {
            visit(m, lo, hi);
        }
    }
    Ok(())
}

/// `#{(m, n) : A m² + B mn + C n² ≤ X}` in O(√X) row scans.
pub fn count_integer_form(form: &IntegerForm, threshold: i128) -> Result<u64, QuadFormError> {
    let mut total: u64 = 0;
    let mut overflow = false;
    for_each_row(form, threshold, |_, lo, hi| {
        let row = u64::try_from(hi - lo + 1).unwrap_or(u64::MAX);
        match total.checked_add(row) {
            Some(t) => total = t,
            None => overflow = true,
        }
    })?;
    if overflow {
        return Err(QuadFormError::Overflow);
    }
    Ok(total)
}

pub(super) fn count_float<F>(form: &QuadForm<F>, x: F, bound: Bound) -> Result<LatticeCount, QuadFormError>
where
    F: Float + FormScalar,
{
    if !x.is_finite() {
        return Err(QuadFormError::NonFinite);
    }
    let (a, b, c) = form.coefficients();
    let two = F::one() + F::one();
    let four = two + two;
    let d = form.discriminant();
    let band = F::from(FLOAT_GUARD_BAND).unwrap().max(F::epsilon() * F::from(64.0).unwrap());
    let guard = band * x.abs().max(F::one());
    let eval = |m: i64, n: i64| {
        let (mf, nf) = (F::from(m).unwrap(), F::from(n).unwrap());
        a * mf * mf + b * mf * nf + c * nf * nf
    };
    let inside = |m: i64, n: i64| match bound {
        Bound::Closed => eval(m, n) <= x,
        Bound::Open => eval(m, n) < x,
    };

    let reach = (four * c * x.max(F::zero()) / d).sqrt();
    let m_max = reach.floor().to_i64().ok_or(QuadFormError::Overflow)? + 1;
    let mut total: u64 = 0;
    let mut ambiguous = false;
    for m in -m_max..=m_max {
        let mf = F::from(m).unwrap();
        let centre = -b * mf / (two * c);
        let delta = four * c * x - d * mf * mf;
        let half_width = delta.max(F::zero()).sqrt() / (two * c);
        let n0 = centre.round().to_i64().ok_or(QuadFormError::Overflow)?;
        let (mut lo, mut hi) = if delta >= F::zero() {
            (
                (centre - half_width).ceil().to_i64().ok_or(QuadFormError::Overflow)?,
                (centre + half_width).floor().to_i64().ok_or(QuadFormError::Overflow)?,
            )
        } else {
            (n0, n0 - 1)
        };
        if lo > hi && inside(m, n0) {
            lo = n0;
            hi = n0;
        }
        if lo <= hi {
            while inside(m, lo - 1) {
                lo -= 1;
            }
            while lo <= hi && !inside(m, lo) {
                lo += 1;
            }
            while inside(m, hi + 1) {
                hi += 1;
            }
            while hi >= lo && !inside(m, hi) {
                hi -= 1;
            }
        }
        let probes: &[i64] = if lo <= hi { &[lo - 1, lo, hi, hi + 1] } else { &[n0 - 1, n0, n0 + 1] };
        if probes.iter().any(|&n| (eval(m, n) - x).abs() <= guard) {
            ambiguous = true;
        }
        if hi >= lo {
            total = total.checked_add((hi - lo + 1) as u64).ok_or(QuadFormError::Overflow)?;
        }
    }
    Ok(LatticeCount { count: total, ambiguous })
}
