//! Design toolkit and experiment harness for asymmetric two-description
//! lattice vector quantizers.
//!
//! The pipeline: construct similar clean sublattices of a base lattice by
//! algebraic-integer multiplication ([`rings`], [`sublattice`]), solve the
//! labeling problem as an exact min-cost assignment ([`labeling`]), run the
//! two-description quantizer and measure its rate-distortion behavior
//! ([`quantizer`]), and compare against closed-form high-rate predictions and
//! the Gaussian two-description bound ([`analysis`]).
//!
//! All lattice algebra is exact: lattice points are integer coefficient
//! vectors and every geometric comparison goes through the (rational) Gram
//! form. Floating point appears only in source sampling and Monte-Carlo
//! integration.

pub mod analysis;
pub mod assignment;
pub mod error;
pub mod labeling;
pub mod lattice;
pub mod linalg;
pub mod quantizer;
pub mod rings;
pub mod scalar;
pub mod sublattice;
pub mod suites;

/// Exact rational scalar used throughout the design-time code paths.
pub type Rat = num_rational::BigRational;
/// Exact integer scalar backing [`Rat`] and the integer matrix routines.
pub type Int = num_bigint::BigInt;
/// Floating-point scalar used on the sampling / Monte-Carlo paths.
pub type Real = f64;

pub use error::{Error, Result};

/// Exact rational from a machine integer.
pub fn rat_from_i64(v: i64) -> Rat {
    Rat::from_integer(Int::from(v))
}

/// Lossy conversion of an exact rational to `f64` for reporting.
pub fn rat_to_f64(r: &Rat) -> f64 {
    use num_traits::ToPrimitive;
    r.to_f64().unwrap_or_else(|| {
        // Fall back to a quotient of lossy conversions for huge operands.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}
