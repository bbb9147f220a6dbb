//! Numerical laboratory for the cubic Schrödinger equation on 2-D irrational
//! tori.
//!
//! * [`quadform`]: exact lattice counting for binary quadratic forms.
//! * [`spectral`]: Fourier fields on `[0, 2π)²` with the anisotropic symbol.
//! * [`nls`]: split-step solver, conserved quantities, Picard iteration.
//! * [`estimates`]: Strichartz, bilinear, exponential-sum and vanishing checks.
//! * [`xsb`]: windowed X^{s,b} norms and localized product checks.
//! * [`growth`]: Sobolev-norm growth tracking and the recurrence oracle.

pub mod estimates;
pub mod fit;
pub mod growth;
pub mod nls;
pub mod quadform;
pub mod rng;
pub mod scalar;
pub mod spectral;
pub mod xsb;

pub use num_complex::Complex;
pub use num_rational::Rational64;
pub use scalar::Real;

/// Exact form with rational coefficients.
pub type ExactForm = quadform::QuadForm<Rational64>;
/// Form with double-precision coefficients (irrational torus symbols).
pub type FloatForm = quadform::QuadForm<f64>;

/// Double-precision field.
pub type Field64 = spectral::Field<f64>;
/// Single-precision field.
pub type Field32 = spectral::Field<f32>;
