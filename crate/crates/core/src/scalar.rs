//! Scalar abstraction over the exact and floating-point code paths.
//!
//! The geometric kernels (Gram-form evaluation, Babai rounding, per-kind
//! nearest-point search) are written once, generically over [`Scalar`], and
//! instantiated with [`crate::Rat`] on the exact design path and with `f64`
//! on the sampling path.

use crate::{Int, Rat};
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_i64(v: i64) -> Self;
    fn from_ratio(num: &Int, den: &Int) -> Self;

    /// Largest integer `<= self`. Must be exact for exact scalars.
    fn floor_i64(&self) -> i64;

    fn to_f64(&self) -> f64;

    /// Whether comparisons are exact. Tie detection is only meaningful when
    /// this holds.
    const EXACT: bool;

    fn from_rat(r: &Rat) -> Self {
        Self::from_ratio(r.numer(), r.denom())
    }
}

impl Scalar for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_ratio(num: &Int, den: &Int) -> Self {
        let n = num.to_f64().unwrap_or(f64::MAX);
        let d = den.to_f64().unwrap_or(f64::MAX);
        n / d
    }

    fn floor_i64(&self) -> i64 {
        self.floor() as i64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    const EXACT: bool = false;
}

impl Scalar for Rat {
    fn from_i64(v: i64) -> Self {
        Rat::from_integer(Int::from(v))
    }

    fn from_ratio(num: &Int, den: &Int) -> Self {
        Rat::new(num.clone(), den.clone())
    }

    fn floor_i64(&self) -> i64 {
        let f = self.floor();
        f.numer()
            .to_i64()
            .expect("rational floor out of i64 range")
    }

    fn to_f64(&self) -> f64 {
        crate::rat_to_f64(self)
    }

    const EXACT: bool = true;
}

/// Dot product in a quadratic form: `x · A · y^T`.
pub fn quad_form<S: Scalar>(a: &[Vec<S>], x: &[S], y: &[S]) -> S {
    let mut acc = S::zero();
    for (i, xi) in x.iter().enumerate() {
        for (j, yj) in y.iter().enumerate() {
            acc = acc + xi.clone() * a[i][j].clone() * yj.clone();
        }
    }
    acc
}

/// Sign of `a + b*sqrt(3)` for exact rationals, computed without radicals.
pub fn surd3_sign(a: &Rat, b: &Rat) -> i32 {
    let za = a.is_zero();
    let zb = b.is_zero();
    if za && zb {
        return 0;
    }
    let sa = if za {
        0
    } else if a.is_positive() {
        1
    } else {
        -1
    };
    let sb = if zb {
        0
    } else if b.is_positive() {
        1
    } else {
        -1
    };
    if sa >= 0 && sb >= 0 {
        return 1;
    }
    if sa <= 0 && sb <= 0 {
        return -1;
    }
    // Opposite signs: compare a^2 with 3 b^2.
    let lhs = a * a;
    let rhs = Rat::from_integer(Int::from(3)) * b * b;
    let cmp = lhs.cmp(&rhs);
    match (sa > 0, cmp) {
        (true, std::cmp::Ordering::Greater) => 1,
        (true, std::cmp::Ordering::Less) => -1,
        (true, std::cmp::Ordering::Equal) => 0,
        (false, std::cmp::Ordering::Greater) => -1,
        (false, std::cmp::Ordering::Less) => 1,
        (false, std::cmp::Ordering::Equal) => 0,
    }
}
