//! Arithmetic in the five integer rings used to build similar sublattices:
//! rational integers, Gaussian integers, Eisenstein integers, and the
//! Lipschitz / Hurwitz integral quaternions.
//!
//! Conventions:
//! - Gaussian `a + b i`, norm `a^2 + b^2`.
//! - Eisenstein `a + b w` where `w = exp(i pi / 3)` (so `w^2 = w - 1`),
//!   norm `a^2 + a b + b^2`. The six units are the powers of `w`.
//! - Quaternions are stored with doubled coordinates so Hurwitz
//!   half-integers stay exact; the norm is always an integer.

use crate::error::{Error, Result};
use crate::linalg::RatMat;
use crate::{Int, Rat};
use serde::{Deserialize, Serialize};
use std::fmt;

macro_rules! fmt_complex_like {
    ($t:ty, $unit:literal) => {
        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                if self.b == 0 {
                    write!(f, "{}", self.a)
                } else if self.a == 0 {
                    write!(f, "{}{}", self.b, $unit)
                } else {
                    write!(f, "{}{:+}{}", self.a, self.b, $unit)
                }
            }
        }
    };
}

// ---------------------------------------------------------------------------
// Gaussian integers

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussianInt {
    pub a: i64,
    pub b: i64,
}

impl GaussianInt {
    pub fn new(a: i64, b: i64) -> Self {
        GaussianInt { a, b }
    }

    pub fn norm(&self) -> i64 {
        self.a * self.a + self.b * self.b
    }

    pub fn conj(&self) -> Self {
        GaussianInt::new(self.a, -self.b)
    }

    pub fn mul(&self, o: &Self) -> Self {
        GaussianInt::new(self.a * o.a - self.b * o.b, self.a * o.b + self.b * o.a)
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    /// Exact division; `None` when `o` does not divide `self`.
    pub fn div_exact(&self, o: &Self) -> Option<Self> {
        let n = o.norm();
        if n == 0 {
            return None;
        }
        let p = self.mul(&o.conj());
        if p.a % n == 0 && p.b % n == 0 {
            Some(GaussianInt::new(p.a / n, p.b / n))
        } else {
            None
        }
    }

    /// The associate in the first quadrant (`a > 0, b >= 0`); zero maps to
    /// itself. Each nonzero class has exactly one such representative.
    pub fn canonical_associate(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let i = GaussianInt::new(0, 1);
        let mut best = *self;
        for _ in 0..4 {
            if best.a > 0 && best.b >= 0 {
                return best;
            }
            best = best.mul(&i);
        }
        unreachable!("one of the four associates lies in the first quadrant")
    }
}

fmt_complex_like!(GaussianInt, "i");

// ---------------------------------------------------------------------------
// Eisenstein integers

#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EisensteinInt {
    pub a: i64,
    pub b: i64,
}

impl EisensteinInt {
    pub fn new(a: i64, b: i64) -> Self {
        EisensteinInt { a, b }
    }

    pub fn norm(&self) -> i64 {
        self.a * self.a + self.a * self.b + self.b * self.b
    }

    /// Complex conjugate: `conj(w) = 1 - w`.
    pub fn conj(&self) -> Self {
        EisensteinInt::new(self.a + self.b, -self.b)
    }

    /// Product using `w^2 = w - 1`.
    pub fn mul(&self, o: &Self) -> Self {
        EisensteinInt::new(
            self.a * o.a - self.b * o.b,
            self.a * o.b + self.b * o.a + self.b * o.b,
        )
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    pub fn div_exact(&self, o: &Self) -> Option<Self> {
        let n = o.norm();
        if n == 0 {
            return None;
        }
        let p = self.mul(&o.conj());
        if p.a % n == 0 && p.b % n == 0 {
            Some(EisensteinInt::new(p.a / n, p.b / n))
        } else {
            None
        }
    }

    /// The associate with argument in `[0, 60)` degrees (`a > 0, b >= 0`).
    pub fn canonical_associate(&self) -> Self {
        if self.is_zero() {
            return *self;
        }
        let w = EisensteinInt::new(0, 1);
        let mut best = *self;
        for _ in 0..6 {
            if best.a > 0 && best.b >= 0 {
                return best;
            }
            best = best.mul(&w);
        }
        unreachable!("one of the six associates lies in the base sector")
    }
}

fmt_complex_like!(EisensteinInt, "w");

// ---------------------------------------------------------------------------
// Quaternions

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum QuatRing {
    Lipschitz,
    Hurwitz,
}

/// Integral quaternion `w + x i + y j + z k`, stored as doubled coordinates
/// `(2w, 2x, 2y, 2z)`. Lipschitz elements have all even doubled coordinates;
/// Hurwitz elements additionally allow all odd.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Quaternion {
    pub twice: [i64; 4],
    pub ring: QuatRing,
}

impl Quaternion {
    pub fn from_ints(w: i64, x: i64, y: i64, z: i64) -> Self {
        Quaternion {
            twice: [2 * w, 2 * x, 2 * y, 2 * z],
            ring: QuatRing::Lipschitz,
        }
    }

    /// Build from doubled coordinates; validates the parity rule.
    pub fn from_halves(twice: [i64; 4], ring: QuatRing) -> Result<Self> {
        let all_even = twice.iter().all(|c| c % 2 == 0);
        let all_odd = twice.iter().all(|c| c % 2 != 0);
        match ring {
            QuatRing::Lipschitz if !all_even => Err(Error::input(
                "Lipschitz quaternion requires integer coordinates",
            )),
            QuatRing::Hurwitz if !(all_even || all_odd) => Err(Error::input(
                "Hurwitz quaternion requires all-integer or all-half-integer coordinates",
            )),
            _ => Ok(Quaternion { twice, ring }),
        }
    }

    pub fn zero(ring: QuatRing) -> Self {
        Quaternion { twice: [0; 4], ring }
    }

    pub fn is_zero(&self) -> bool {
        self.twice.iter().all(|&c| c == 0)
    }

    /// `xi * conj(xi)`; an integer for both rings.
    pub fn norm(&self) -> i64 {
        let s: i64 = self.twice.iter().map(|&c| c * c).sum();
        debug_assert_eq!(s % 4, 0);
        s / 4
    }

    pub fn conj(&self) -> Self {
        let [w, x, y, z] = self.twice;
        Quaternion {
            twice: [w, -x, -y, -z],
            ring: self.ring,
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let [a, b, c, d] = self.twice;
        let [e, f, g, h] = o.twice;
        let prod = [
            a * e - b * f - c * g - d * h,
            a * f + b * e + c * h - d * g,
            a * g - b * h + c * e + d * f,
            a * h + b * g - c * f + d * e,
        ];
        debug_assert!(prod.iter().all(|p| p % 2 == 0));
        let twice = [prod[0] / 2, prod[1] / 2, prod[2] / 2, prod[3] / 2];
        let ring = if self.ring == QuatRing::Lipschitz && o.ring == QuatRing::Lipschitz {
            QuatRing::Lipschitz
        } else {
            QuatRing::Hurwitz
        };
        Quaternion { twice, ring }
    }

    pub fn coords(&self) -> [Rat; 4] {
        self.twice.map(|c| Rat::new(Int::from(c), Int::from(2)))
    }
}

impl fmt::Debug for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let units = ["", "i", "j", "k"];
        let mut first = true;
        for (c, u) in self.twice.iter().zip(units) {
            if *c == 0 {
                continue;
            }
            if !first && *c > 0 {
                write!(f, "+")?;
            }
            if c % 2 == 0 {
                write!(f, "{}{}", c / 2, u)?;
            } else {
                write!(f, "{}/2{}", c, u)?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Matrix of left multiplication by `xi` in the row-vector convention:
/// the row `(w, x, y, z)` times this matrix is `xi * (w + xi + yj + zk)`.
pub fn left_matrix(q: &Quaternion) -> RatMat {
    let [a, b, c, d] = q.coords();
    let n = |v: &Rat| -v.clone();
    vec![
        vec![a.clone(), b.clone(), c.clone(), d.clone()],
        vec![n(&b), a.clone(), d.clone(), n(&c)],
        vec![n(&c), n(&d), a.clone(), b.clone()],
        vec![n(&d), c.clone(), n(&b), a.clone()],
    ]
}

/// Matrix of right multiplication by `xi` (row-vector convention).
pub fn right_matrix(q: &Quaternion) -> RatMat {
    let [a, b, c, d] = q.coords();
    let n = |v: &Rat| -v.clone();
    vec![
        vec![a.clone(), b.clone(), c.clone(), d.clone()],
        vec![n(&b), a.clone(), n(&d), c.clone()],
        vec![n(&c), d.clone(), a.clone(), n(&b)],
        vec![n(&d), n(&c), b.clone(), a.clone()],
    ]
}

// ---------------------------------------------------------------------------
// Representability and square decompositions

pub(crate) fn isqrt(n: i64) -> i64 {
    if n < 0 {
        return -1;
    }
    let mut r = (n as f64).sqrt() as i64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// Sum-of-two-squares test with witness: `N = a^2 + b^2` is possible iff
/// every prime `p = 3 (mod 4)` divides `N` to an even power. The witness is
/// the representation with `a >= b >= 0` minimizing `a`.
pub fn two_squares_representable(n: i64) -> Option<(i64, i64)> {
    assert!(n >= 1);
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if p % 4 == 3 && e % 2 != 0 {
                return None;
            }
        }
        p += 1;
    }
    if m > 1 && m % 4 == 3 {
        return None;
    }
    let mut best: Option<(i64, i64)> = None;
    for a in 0..=isqrt(n) {
        let b2 = n - a * a;
        let b = isqrt(b2);
        if b * b == b2 && a >= b {
            best = match best {
                None => Some((a, b)),
                Some(cur) if a < cur.0 => Some((a, b)),
                keep => keep,
            };
        }
    }
    Some(best.expect("criterion and search must agree"))
}

/// Test for `N = a^2 + ab + b^2` (primes `p = 2 (mod 3)` to even powers),
/// with the `a >= b >= 0`, minimal-`a` witness.
pub fn eisenstein_representable(n: i64) -> Option<(i64, i64)> {
    assert!(n >= 1);
    let mut m = n;
    let mut p = 2;
    while p * p <= m {
        if m % p == 0 {
            let mut e = 0;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if p % 3 == 2 && e % 2 != 0 {
                return None;
            }
        }
        p += 1;
    }
    if m > 1 && m % 3 == 2 {
        return None;
    }
    let mut best: Option<(i64, i64)> = None;
    for a in 0..=isqrt(n) {
        for b in 0..=a {
            if a * a + a * b + b * b == n {
                best = match best {
                    None => Some((a, b)),
                    Some(cur) if a < cur.0 => Some((a, b)),
                    keep => keep,
                };
            }
        }
    }
    Some(best.expect("criterion and search must agree"))
}

/// Four-square decomposition `m = a^2 + b^2 + c^2 + d^2` with
/// `a >= b >= c >= d >= 0`, picking the lexicographically greatest such
/// tuple (largest `a`, then largest `b`, ...). Always exists.
pub fn four_squares(m: i64) -> (i64, i64, i64, i64) {
    assert!(m >= 1);
    for a in (0..=isqrt(m)).rev() {
        let ra = m - a * a;
        for b in (0..=isqrt(ra).min(a)).rev() {
            let rb = ra - b * b;
            for c in (0..=isqrt(rb).min(b)).rev() {
                let rc = rb - c * c;
                let d = isqrt(rc);
                if d * d == rc && d <= c {
                    return (a, b, c, d);
                }
            }
        }
    }
    unreachable!("every positive integer is a sum of four squares")
}

// ---------------------------------------------------------------------------
// gcd / lcm in the commutative rings

/// Element of one of the three commutative rings with well-defined gcd/lcm.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum RingElem {
    Int(i64),
    Gauss(GaussianInt),
    Eisen(EisensteinInt),
}

impl RingElem {
    pub fn norm(&self) -> i64 {
        match self {
            RingElem::Int(v) => v.abs(),
            RingElem::Gauss(g) => g.norm(),
            RingElem::Eisen(e) => e.norm(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RingElem::Int(v) => *v == 0,
            RingElem::Gauss(g) => g.is_zero(),
            RingElem::Eisen(e) => e.is_zero(),
        }
    }

    pub fn is_unit(&self) -> bool {
        self.norm() == 1
    }

    pub fn mul(&self, o: &RingElem) -> RingElem {
        match (self, o) {
            (RingElem::Int(a), RingElem::Int(b)) => RingElem::Int(a * b),
            (RingElem::Gauss(a), RingElem::Gauss(b)) => RingElem::Gauss(a.mul(b)),
            (RingElem::Eisen(a), RingElem::Eisen(b)) => RingElem::Eisen(a.mul(b)),
            _ => panic!("mixed-ring multiplication"),
        }
    }

    pub fn div_exact(&self, o: &RingElem) -> Option<RingElem> {
        match (self, o) {
            (RingElem::Int(a), RingElem::Int(b)) => {
                if *b != 0 && a % b == 0 {
                    Some(RingElem::Int(a / b))
                } else {
                    None
                }
            }
            (RingElem::Gauss(a), RingElem::Gauss(b)) => a.div_exact(b).map(RingElem::Gauss),
            (RingElem::Eisen(a), RingElem::Eisen(b)) => a.div_exact(b).map(RingElem::Eisen),
            _ => panic!("mixed-ring division"),
        }
    }

    pub fn canonical_associate(&self) -> RingElem {
        match self {
            RingElem::Int(v) => RingElem::Int(v.abs()),
            RingElem::Gauss(g) => RingElem::Gauss(g.canonical_associate()),
            RingElem::Eisen(e) => RingElem::Eisen(e.canonical_associate()),
        }
    }

    fn div_round(&self, o: &RingElem) -> RingElem {
        fn round_div(p: i64, q: i64) -> i64 {
            // Nearest integer to p/q, half away from zero; q > 0.
            if p >= 0 {
                (2 * p + q) / (2 * q)
            } else {
                -((-2 * p + q) / (2 * q))
            }
        }
        match (self, o) {
            (RingElem::Int(a), RingElem::Int(b)) => {
                let q = if *b > 0 {
                    round_div(*a, *b)
                } else {
                    -round_div(*a, -*b)
                };
                RingElem::Int(q)
            }
            (RingElem::Gauss(a), RingElem::Gauss(b)) => {
                let n = b.norm();
                let p = a.mul(&b.conj());
                RingElem::Gauss(GaussianInt::new(round_div(p.a, n), round_div(p.b, n)))
            }
            (RingElem::Eisen(a), RingElem::Eisen(b)) => {
                let n = b.norm();
                let p = a.mul(&b.conj());
                RingElem::Eisen(EisensteinInt::new(round_div(p.a, n), round_div(p.b, n)))
            }
            _ => panic!("mixed-ring division"),
        }
    }

    fn sub(&self, o: &RingElem) -> RingElem {
        match (self, o) {
            (RingElem::Int(a), RingElem::Int(b)) => RingElem::Int(a - b),
            (RingElem::Gauss(a), RingElem::Gauss(b)) => {
                RingElem::Gauss(GaussianInt::new(a.a - b.a, a.b - b.b))
            }
            (RingElem::Eisen(a), RingElem::Eisen(b)) => {
                RingElem::Eisen(EisensteinInt::new(a.a - b.a, a.b - b.b))
            }
            _ => panic!("mixed-ring subtraction"),
        }
    }
}

/// Euclidean gcd and lcm, both normalized to the canonical associate
/// (positive integers; first-quadrant Gaussians; base-sector Eisensteins).
pub fn gcd_lcm(xi1: &RingElem, xi2: &RingElem) -> Result<(RingElem, RingElem)> {
    if xi1.is_zero() || xi2.is_zero() {
        return Err(Error::input("gcd/lcm of zero ring element"));
    }
    let mut a = *xi1;
    let mut b = *xi2;
    while !b.is_zero() {
        let q = a.div_round(&b);
        let r = a.sub(&q.mul(&b));
        debug_assert!(r.norm() < b.norm(), "division step must shrink the norm");
        a = b;
        b = r;
    }
    let gcd = a.canonical_associate();
    let prod = xi1.mul(xi2);
    let lcm = prod
        .div_exact(&gcd)
        .expect("gcd divides the product")
        .canonical_associate();
    Ok((gcd, lcm))
}

impl fmt::Display for RingElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingElem::Int(v) => write!(f, "{v}"),
            RingElem::Gauss(g) => write!(f, "{g:?}"),
            RingElem::Eisen(e) => write!(f, "{e:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn norms_of_named_elements() {
        assert_eq!(GaussianInt::new(2, 1).norm(), 5);
        assert_eq!(Quaternion::from_ints(1, 0, 0, 0).norm(), 1);
        // xi = (1/2)(1+i) + (1/2)(j+k): doubled coords (1,1,1,1), norm 1.
        let xi = Quaternion::from_halves([1, 1, 1, 1], QuatRing::Hurwitz).unwrap();
        assert_eq!(xi.norm(), 1);
        // General (alpha/2)(1+i) + (beta/2)(j+k) has norm (alpha^2+beta^2)/2.
        let xi = Quaternion::from_halves([3, 3, 1, 1], QuatRing::Hurwitz).unwrap();
        assert_eq!(xi.norm(), 5);
    }

    #[test]
    fn eisenstein_norm_formula_matches_complex_modulus() {
        // a + b w with w = exp(i pi/3); |.|^2 = a^2 + ab + b^2.
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..200 {
            let e = EisensteinInt::new(rng.gen_range(-9..=9), rng.gen_range(-9..=9));
            let (re, im) = (e.a as f64 + e.b as f64 * 0.5, e.b as f64 * 0.75f64.sqrt());
            assert!((re * re + im * im - e.norm() as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn norm_is_multiplicative_in_every_ring() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let g1 = GaussianInt::new(rng.gen_range(-20..=20), rng.gen_range(-20..=20));
            let g2 = GaussianInt::new(rng.gen_range(-20..=20), rng.gen_range(-20..=20));
            assert_eq!(g1.mul(&g2).norm(), g1.norm() * g2.norm());

            let e1 = EisensteinInt::new(rng.gen_range(-20..=20), rng.gen_range(-20..=20));
            let e2 = EisensteinInt::new(rng.gen_range(-20..=20), rng.gen_range(-20..=20));
            assert_eq!(e1.mul(&e2).norm(), e1.norm() * e2.norm());

            let parity = rng.gen_range(0..2);
            let mut q = [0i64; 4];
            for c in q.iter_mut() {
                *c = 2 * rng.gen_range(-8..=8) + parity;
            }
            let q1 = Quaternion::from_halves(q, QuatRing::Hurwitz).unwrap();
            for c in q.iter_mut() {
                *c = 2 * rng.gen_range(-8..=8) + parity;
            }
            let q2 = Quaternion::from_halves(q, QuatRing::Hurwitz).unwrap();
            assert_eq!(q1.mul(&q2).norm(), q1.norm() * q2.norm());
        }
    }

    #[test]
    fn two_square_sequence_prefix() {
        let got: Vec<i64> = (1..=20)
            .filter(|&n| two_squares_representable(n).is_some())
            .collect();
        assert_eq!(got, vec![1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20]);
        assert!(two_squares_representable(3).is_none());
        assert_eq!(two_squares_representable(45), Some((6, 3)));
    }

    #[test]
    fn two_squares_agrees_with_brute_force() {
        for n in 1..=10_000 {
            let brute = (0..=isqrt(n)).any(|a| {
                let b2 = n - a * a;
                let b = isqrt(b2);
                b * b == b2
            });
            assert_eq!(two_squares_representable(n).is_some(), brute, "n={n}");
            if let Some((a, b)) = two_squares_representable(n) {
                assert_eq!(a * a + b * b, n);
                assert!(a >= b && b >= 0);
            }
        }
    }

    #[test]
    fn eisenstein_sequence_prefix() {
        let got: Vec<i64> = (1..=27)
            .filter(|&n| eisenstein_representable(n).is_some())
            .collect();
        assert_eq!(got, vec![1, 3, 4, 7, 9, 12, 13, 16, 19, 21, 25, 27]);
        assert!(eisenstein_representable(2).is_none());
        let (a, b) = eisenstein_representable(49).unwrap();
        assert_eq!(a * a + a * b + b * b, 49);
        assert_eq!((a, b), (5, 3));
    }

    #[test]
    fn four_squares_small_cases_and_validity() {
        assert_eq!(four_squares(1), (1, 0, 0, 0));
        assert_eq!(four_squares(7), (2, 1, 1, 1));
        // Lexicographically greatest descending tuple: (5,0,0,0) beats (4,3,0,0).
        assert_eq!(four_squares(25), (5, 0, 0, 0));
        for m in 1..=10_000 {
            let (a, b, c, d) = four_squares(m);
            assert_eq!(a * a + b * b + c * c + d * d, m);
            assert!(a >= b && b >= c && c >= d && d >= 0);
        }
    }

    #[test]
    fn four_squares_picks_lexicographically_greatest() {
        // Oracle: enumerate all descending tuples, take the max.
        for m in 1..=500 {
            let mut all = vec![];
            for a in 0..=isqrt(m) {
                for b in 0..=a {
                    for c in 0..=b {
                        let rem = m - a * a - b * b - c * c;
                        if rem < 0 {
                            continue;
                        }
                        let d = isqrt(rem);
                        if d * d == rem && d <= c {
                            all.push((a, b, c, d));
                        }
                    }
                }
            }
            let expect = *all.iter().max().unwrap();
            assert_eq!(four_squares(m), expect, "m={m}");
        }
    }

    #[test]
    fn quaternion_multiplication_matrices() {
        use crate::linalg::{mat_identity, mat_mul, mat_transpose};
        use crate::rat_from_i64;
        let one = Quaternion::from_ints(1, 0, 0, 0);
        assert_eq!(left_matrix(&one), mat_identity(4));
        let i = Quaternion::from_ints(0, 1, 0, 0);
        let li = left_matrix(&i);
        assert_eq!(mat_mul(&li, &mat_transpose(&li)), mat_identity(4));

        // L and R matrices commute for arbitrary pairs, and L_xi L_xi^T = m I.
        let mut rng = StdRng::seed_from_u64(3);
        for _ in 0..50 {
            let xi = Quaternion::from_ints(
                rng.gen_range(-5..=5),
                rng.gen_range(-5..=5),
                rng.gen_range(-5..=5),
                rng.gen_range(-5..=5),
            );
            let eta = Quaternion::from_ints(
                rng.gen_range(-5..=5),
                rng.gen_range(-5..=5),
                rng.gen_range(-5..=5),
                rng.gen_range(-5..=5),
            );
            let (l, r) = (left_matrix(&xi), right_matrix(&eta));
            assert_eq!(mat_mul(&l, &r), mat_mul(&r, &l));
            let m = rat_from_i64(xi.norm());
            let ll = mat_mul(&l, &mat_transpose(&l));
            for (idx, row) in ll.iter().enumerate() {
                for (jdx, v) in row.iter().enumerate() {
                    let expect = if idx == jdx { m.clone() } else { Rat::zero() };
                    assert_eq!(*v, expect);
                }
            }
        }
    }

    #[test]
    fn left_matrix_acts_as_left_multiplication() {
        use crate::linalg::row_times_mat;
        let mut rng = StdRng::seed_from_u64(5);
        let rand_q = |rng: &mut StdRng| {
            Quaternion::from_ints(
                rng.gen_range(-6..=6),
                rng.gen_range(-6..=6),
                rng.gen_range(-6..=6),
                rng.gen_range(-6..=6),
            )
        };
        for _ in 0..100 {
            let xi = rand_q(&mut rng);
            let v = rand_q(&mut rng);
            let prod = xi.mul(&v);
            let row: Vec<Rat> = v.coords().to_vec();
            let got = row_times_mat(&row, &left_matrix(&xi));
            assert_eq!(got, prod.coords().to_vec());
            let prod_r = v.mul(&xi);
            let got_r = row_times_mat(&row, &right_matrix(&xi));
            assert_eq!(got_r, prod_r.coords().to_vec());
        }
    }

    #[test]
    fn gcd_lcm_examples_and_divisibility() {
        let (g, l) = gcd_lcm(&RingElem::Int(3), &RingElem::Int(5)).unwrap();
        assert_eq!((g, l), (RingElem::Int(1), RingElem::Int(15)));

        let (g, _) = gcd_lcm(
            &RingElem::Gauss(GaussianInt::new(2, 1)),
            &RingElem::Gauss(GaussianInt::new(3, 0)),
        )
        .unwrap();
        assert_eq!(g, RingElem::Gauss(GaussianInt::new(1, 0)));

        // 2 = -i (1+i)^2, so gcd(1+i, 2) = 1+i and lcm = 2.
        let (g, l) = gcd_lcm(
            &RingElem::Gauss(GaussianInt::new(1, 1)),
            &RingElem::Gauss(GaussianInt::new(2, 0)),
        )
        .unwrap();
        assert_eq!(g, RingElem::Gauss(GaussianInt::new(1, 1)));
        assert_eq!(l, RingElem::Gauss(GaussianInt::new(2, 0)));

        assert!(gcd_lcm(&RingElem::Int(0), &RingElem::Int(3)).is_err());

        let mut rng = StdRng::seed_from_u64(13);
        for _ in 0..500 {
            let x = RingElem::Gauss(GaussianInt::new(
                rng.gen_range(-12..=12),
                rng.gen_range(-12..=12),
            ));
            let y = RingElem::Gauss(GaussianInt::new(
                rng.gen_range(-12..=12),
                rng.gen_range(-12..=12),
            ));
            if x.is_zero() || y.is_zero() {
                continue;
            }
            let (g, l) = gcd_lcm(&x, &y).unwrap();
            assert!(x.div_exact(&g).is_some());
            assert!(y.div_exact(&g).is_some());
            assert!(l.div_exact(&x).is_some());
            assert!(l.div_exact(&y).is_some());
            // Any common divisor divides the gcd: check over a small box.
            for a in -4..=4i64 {
                for b in -4..=4i64 {
                    let d = RingElem::Gauss(GaussianInt::new(a, b));
                    if d.is_zero() {
                        continue;
                    }
                    if x.div_exact(&d).is_some() && y.div_exact(&d).is_some() {
                        assert!(g.div_exact(&d).is_some());
                    }
                }
            }
        }
    }

    #[test]
    fn canonical_associates_are_in_sector() {
        for a in -5..=5i64 {
            for b in -5..=5i64 {
                let g = GaussianInt::new(a, b);
                if !g.is_zero() {
                    let c = g.canonical_associate();
                    assert!(c.a > 0 && c.b >= 0);
                    assert_eq!(c.norm(), g.norm());
                }
                let e = EisensteinInt::new(a, b);
                if !e.is_zero() {
                    let c = e.canonical_associate();
                    assert!(c.a > 0 && c.b >= 0);
                    assert_eq!(c.norm(), e.norm());
                }
            }
        }
    }

    #[test]
    fn eisenstein_units_are_powers_of_w() {
        let w = EisensteinInt::new(0, 1);
        let mut p = EisensteinInt::new(1, 0);
        let mut seen = vec![];
        for _ in 0..6 {
            assert!(p.is_unit());
            seen.push(p);
            p = p.mul(&w);
        }
        assert_eq!(p, EisensteinInt::new(1, 0), "w has order 6");
        seen.sort_by_key(|u| (u.a, u.b));
        seen.dedup();
        assert_eq!(seen.len(), 6);
        let _ = Rat::one();
    }
}
