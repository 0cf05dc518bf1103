//! Small exact linear algebra: rational matrices, elements of Q(sqrt 3) for
//! hexagonal-lattice coordinates, and integer matrix normal forms (Hermite,
//! Smith) used for coset enumeration and lattice join/intersection.
//!
//! Everything here is sized for lattice dimensions <= 4; clarity over speed.

use crate::error::{Error, Result};
use crate::scalar::surd3_sign;
use crate::{rat_from_i64, Int, Rat};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

// ---------------------------------------------------------------------------
// Q(sqrt 3)

/// Exact element `a + b*sqrt(3)`. The hexagonal lattice generator lives in
/// this field; for the other lattice kinds the surd part is zero.
#[derive(Clone, PartialEq, Eq)]
pub struct Surd {
    pub a: Rat,
    pub b: Rat,
}

impl Surd {
    pub fn rational(a: Rat) -> Self {
        Surd { a, b: Rat::zero() }
    }

    pub fn from_i64(v: i64) -> Self {
        Self::rational(rat_from_i64(v))
    }

    pub fn zero() -> Self {
        Self::rational(Rat::zero())
    }

    pub fn sqrt3(coeff: Rat) -> Self {
        Surd {
            a: Rat::zero(),
            b: coeff,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn sign(&self) -> i32 {
        surd3_sign(&self.a, &self.b)
    }

    pub fn to_f64(&self) -> f64 {
        crate::rat_to_f64(&self.a) + crate::rat_to_f64(&self.b) * 3f64.sqrt()
    }

    pub fn scale(&self, r: &Rat) -> Surd {
        Surd {
            a: &self.a * r,
            b: &self.b * r,
        }
    }
}

impl Add for Surd {
    type Output = Surd;
    fn add(self, rhs: Surd) -> Surd {
        Surd {
            a: self.a + rhs.a,
            b: self.b + rhs.b,
        }
    }
}

impl Sub for Surd {
    type Output = Surd;
    fn sub(self, rhs: Surd) -> Surd {
        Surd {
            a: self.a - rhs.a,
            b: self.b - rhs.b,
        }
    }
}

impl Mul for Surd {
    type Output = Surd;
    fn mul(self, rhs: Surd) -> Surd {
        let three = rat_from_i64(3);
        Surd {
            a: &self.a * &rhs.a + three * &self.b * &rhs.b,
            b: &self.a * &rhs.b + &self.b * &rhs.a,
        }
    }
}

impl Neg for Surd {
    type Output = Surd;
    fn neg(self) -> Surd {
        Surd {
            a: -self.a,
            b: -self.b,
        }
    }
}

impl fmt::Debug for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            write!(f, "{}r3", self.b)
        } else {
            write!(f, "{}{}{}r3", self.a, if self.b.is_negative() { "" } else { "+" }, self.b)
        }
    }
}

/// Parse the `Display` form back: `a`, `br3`, or `a+br3` / `a-br3`.
pub fn parse_surd(s: &str) -> Result<Surd> {
    let parse_rat = |t: &str| -> Result<Rat> {
        t.parse::<Rat>()
            .map_err(|_| Error::input(format!("bad rational '{t}'")))
    };
    if let Some(stripped) = s.strip_suffix("r3") {
        // Split off the trailing rational coefficient of sqrt(3).
        for idx in (1..stripped.len()).rev() {
            let (head, tail) = stripped.split_at(idx);
            if (tail.starts_with('+') || tail.starts_with('-'))
                && !head.ends_with('/')
                && !head.ends_with('e')
            {
                if let (Ok(a), Ok(b)) = (parse_rat(head), parse_rat(tail)) {
                    return Ok(Surd { a, b });
                }
            }
        }
        return Ok(Surd {
            a: Rat::zero(),
            b: parse_rat(stripped)?,
        });
    }
    Ok(Surd::rational(parse_rat(s)?))
}

// ---------------------------------------------------------------------------
// Rational matrices (row-vector convention: points are rows, `p * M`).

pub type RatVec = Vec<Rat>;
pub type RatMat = Vec<Vec<Rat>>;

pub fn rat_vec_from_i64(v: &[i64]) -> RatVec {
    v.iter().map(|&x| rat_from_i64(x)).collect()
}

pub fn mat_identity(n: usize) -> RatMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect()
}

pub fn mat_mul(a: &RatMat, b: &RatMat) -> RatMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![Rat::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] = &out[i][j] + &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn mat_transpose(a: &RatMat) -> RatMat {
    let n = a.len();
    let m = a[0].len();
    (0..m).map(|j| (0..n).map(|i| a[i][j].clone()).collect()).collect()
}

pub fn row_times_mat(v: &[Rat], m: &RatMat) -> RatVec {
    let cols = m[0].len();
    (0..cols)
        .map(|j| {
            let mut acc = Rat::zero();
            for (i, vi) in v.iter().enumerate() {
                if !vi.is_zero() {
                    acc = acc + vi * &m[i][j];
                }
            }
            acc
        })
        .collect()
}

/// Gauss-Jordan inverse. Panics on singular input (callers guarantee full
/// rank; generator matrices are validated at construction).
pub fn mat_inverse(a: &RatMat) -> RatMat {
    let n = a.len();
    let mut work = a.clone();
    let mut inv = mat_identity(n);
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !work[r][col].is_zero())
            .expect("singular matrix");
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let p = work[col][col].clone();
        for j in 0..n {
            work[col][j] = &work[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r != col && !work[r][col].is_zero() {
                let f = work[r][col].clone();
                for j in 0..n {
                    work[r][j] = &work[r][j] - &f * &work[col][j];
                    inv[r][j] = &inv[r][j] - &f * &inv[col][j];
                }
            }
        }
    }
    inv
}

pub fn mat_det(a: &RatMat) -> Rat {
    let n = a.len();
    let mut work = a.clone();
    let mut det = Rat::one();
    for col in 0..n {
        let pivot = match (col..n).find(|&r| !work[r][col].is_zero()) {
            Some(p) => p,
            None => return Rat::zero(),
        };
        if pivot != col {
            work.swap(col, pivot);
            det = -det;
        }
        let p = work[col][col].clone();
        det = det * p.clone();
        for r in col + 1..n {
            if !work[r][col].is_zero() {
                let f = &work[r][col] / &p;
                for j in col..n {
                    work[r][j] = &work[r][j] - &f * &work[col][j];
                }
            }
        }
    }
    det
}

// ---------------------------------------------------------------------------
// Integer matrices

pub type IMat = Vec<Vec<Int>>;

pub fn imat_from_i64(rows: &[Vec<i64>]) -> IMat {
    rows.iter()
        .map(|r| r.iter().map(|&x| Int::from(x)).collect())
        .collect()
}

pub fn imat_identity(n: usize) -> IMat {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Int::one() } else { Int::zero() })
                .collect()
        })
        .collect()
}

pub fn imat_mul(a: &IMat, b: &IMat) -> IMat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![Int::zero(); m]; n];
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] = &out[i][j] + &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn imat_det(a: &IMat) -> Int {
    let rat: RatMat = a
        .iter()
        .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect();
    let d = mat_det(&rat);
    assert!(d.is_integer());
    d.to_integer()
}

pub fn imat_to_rat(a: &IMat) -> RatMat {
    a.iter()
        .map(|r| r.iter().map(|x| Rat::from_integer(x.clone())).collect())
        .collect()
}

pub fn imat_to_i64(a: &IMat) -> Option<Vec<Vec<i64>>> {
    a.iter()
        .map(|r| r.iter().map(|x| x.to_i64()).collect())
        .collect()
}

/// Row-style Hermite normal form of a full-row-rank matrix, with the
/// unimodular transform: returns `(h, u)` with `u * a = h`, `h` in row
/// echelon (pivots positive, entries above each pivot reduced into
/// `[0, pivot)`), zero rows last. `u` rows spanning the zero rows of `h`
/// form a basis of the left kernel.
pub fn hnf_with_transform(a: &IMat) -> (IMat, IMat) {
    let rows = a.len();
    let cols = a[0].len();
    let mut h = a.to_vec();
    let mut u = imat_identity(rows);
    let mut pivot_row = 0;
    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        // Euclidean elimination below the pivot.
        loop {
            let mut best: Option<usize> = None;
            for r in pivot_row..rows {
                if !h[r][col].is_zero() {
                    let mag = h[r][col].abs();
                    best = match best {
                        None => Some(r),
                        Some(b) if mag < h[b][col].abs() => Some(r),
                        keep => keep,
                    };
                }
            }
            let Some(b) = best else { break };
            h.swap(pivot_row, b);
            u.swap(pivot_row, b);
            let mut done = true;
            for r in pivot_row + 1..rows {
                if !h[r][col].is_zero() {
                    let q = div_round_to_zero(&h[r][col], &h[pivot_row][col]);
                    row_sub_mul(&mut h, r, pivot_row, &q);
                    row_sub_mul(&mut u, r, pivot_row, &q);
                    if !h[r][col].is_zero() {
                        done = false;
                    }
                }
            }
            if done {
                break;
            }
        }
        if h[pivot_row][col].is_zero() {
            continue;
        }
        if h[pivot_row][col].is_negative() {
            row_negate(&mut h, pivot_row);
            row_negate(&mut u, pivot_row);
        }
        // Reduce entries above the pivot into [0, pivot).
        for r in 0..pivot_row {
            let q = h[r][col].div_floor(&h[pivot_row][col]);
            if !q.is_zero() {
                row_sub_mul(&mut h, r, pivot_row, &q);
                row_sub_mul(&mut u, r, pivot_row, &q);
            }
        }
        pivot_row += 1;
    }
    (h, u)
}

/// Canonical HNF basis of the row span (zero rows dropped).
pub fn hnf_basis(a: &IMat) -> IMat {
    let (h, _) = hnf_with_transform(a);
    h.into_iter().filter(|r| r.iter().any(|x| !x.is_zero())).collect()
}

fn div_round_to_zero(a: &Int, b: &Int) -> Int {
    a / b
}

fn row_sub_mul(m: &mut IMat, dst: usize, src: usize, q: &Int) {
    if q.is_zero() {
        return;
    }
    for j in 0..m[dst].len() {
        let v = &m[dst][j] - q * &m[src][j];
        m[dst][j] = v;
    }
}

fn row_negate(m: &mut IMat, r: usize) {
    for x in m[r].iter_mut() {
        *x = -x.clone();
    }
}

/// Basis (rows) of the left kernel `{w : w * a = 0}`.
pub fn left_kernel(a: &IMat) -> IMat {
    let (h, u) = hnf_with_transform(a);
    h.iter()
        .zip(u.iter())
        .filter(|(hr, _)| hr.iter().all(|x| x.is_zero()))
        .map(|(_, ur)| ur.clone())
        .collect()
}

/// Smith normal form restricted to what coset enumeration needs: returns
/// `(d, q)` where `d` are the positive diagonal invariants (d1 | d2 | ...)
/// and `q` is the accumulated unimodular column transform, so that the row
/// span of `a` expressed in coordinates `z = n * q` is exactly
/// `d1 Z x d2 Z x ... x dn Z`.
pub fn smith_diagonal(a: &IMat) -> (Vec<Int>, IMat) {
    let n = a.len();
    assert_eq!(n, a[0].len(), "smith_diagonal expects a square matrix");
    let mut m = a.to_vec();
    let mut q = imat_identity(n);

    fn col_sub_mul(m: &mut IMat, q: &mut IMat, dst: usize, src: usize, f: &Int) {
        if f.is_zero() {
            return;
        }
        for r in 0..m.len() {
            let v = &m[r][dst] - f * &m[r][src];
            m[r][dst] = v;
        }
        for r in 0..q.len() {
            let v = &q[r][dst] - f * &q[r][src];
            q[r][dst] = v;
        }
    }
    fn col_add(m: &mut IMat, q: &mut IMat, dst: usize, src: usize) {
        for r in 0..m.len() {
            let v = &m[r][dst] + &m[r][src];
            m[r][dst] = v;
        }
        for r in 0..q.len() {
            let v = &q[r][dst] + &q[r][src];
            q[r][dst] = v;
        }
    }
    fn col_swap(m: &mut IMat, q: &mut IMat, i: usize, j: usize) {
        for r in 0..m.len() {
            m[r].swap(i, j);
        }
        for r in 0..q.len() {
            q[r].swap(i, j);
        }
    }
    fn col_negate(m: &mut IMat, q: &mut IMat, i: usize) {
        for r in 0..m.len() {
            m[r][i] = -m[r][i].clone();
        }
        for r in 0..q.len() {
            q[r][i] = -q[r][i].clone();
        }
    }

    fn eliminate_at(m: &mut IMat, q: &mut IMat, k: usize) {
        let n = m.len();
        loop {
            let mut best: Option<(usize, usize)> = None;
            for i in k..n {
                for j in k..n {
                    if !m[i][j].is_zero() {
                        best = match best {
                            None => Some((i, j)),
                            Some((bi, bj)) if m[i][j].abs() < m[bi][bj].abs() => Some((i, j)),
                            keep => keep,
                        };
                    }
                }
            }
            let Some((bi, bj)) = best else {
                panic!("smith_diagonal expects full rank");
            };
            m.swap(k, bi);
            if bj != k {
                col_swap(m, q, k, bj);
            }
            let mut dirty = false;
            for j in k + 1..n {
                if !m[k][j].is_zero() {
                    let f = &m[k][j] / &m[k][k];
                    col_sub_mul(m, q, j, k, &f);
                    if !m[k][j].is_zero() {
                        dirty = true;
                    }
                }
            }
            for i in k + 1..n {
                if !m[i][k].is_zero() {
                    let f = m[i][k].clone() / m[k][k].clone();
                    for j in 0..n {
                        let v = &m[i][j] - &f * &m[k][j];
                        m[i][j] = v;
                    }
                    if !m[i][k].is_zero() {
                        dirty = true;
                    }
                }
            }
            if !dirty
                && (k + 1..n).all(|j| m[k][j].is_zero())
                && (k + 1..n).all(|i| m[i][k].is_zero())
            {
                break;
            }
        }
        if m[k][k].is_negative() {
            col_negate(m, q, k);
        }
    }

    for k in 0..n {
        eliminate_at(&mut m, &mut q, k);
    }

    // Divisibility chain d1 | d2 | ...: when it fails at k, fold column k+1
    // into column k and re-eliminate; the pivot shrinks to the gcd.
    loop {
        let mut changed = false;
        for k in 0..n.saturating_sub(1) {
            if !(&m[k + 1][k + 1] % &m[k][k]).is_zero() {
                col_add(&mut m, &mut q, k, k + 1);
                for kk in k..n {
                    eliminate_at(&mut m, &mut q, kk);
                }
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let d: Vec<Int> = (0..n).map(|k| m[k][k].clone()).collect();
    (d, q)
}

/// Join of two row lattices (the lattice generated by all rows of both).
pub fn lattice_join(a: &IMat, b: &IMat) -> IMat {
    let mut stacked = a.to_vec();
    stacked.extend_from_slice(b);
    hnf_basis(&stacked)
}

/// Intersection of two full-rank row lattices in Z^n.
///
/// Solves `u*a = v*b` through the left kernel of the stacked matrix
/// `[a; -b]`; the `u`-halves of the kernel basis give intersection
/// generators.
pub fn lattice_intersect(a: &IMat, b: &IMat) -> IMat {
    let ra = a.len();
    let mut stacked = a.to_vec();
    for row in b {
        stacked.push(row.iter().map(|x| -x.clone()).collect());
    }
    let kernel = left_kernel(&stacked);
    let gens: IMat = kernel
        .iter()
        .map(|w| {
            let u = &w[..ra];
            let cols = a[0].len();
            (0..cols)
                .map(|j| {
                    let mut acc = Int::zero();
                    for (i, ui) in u.iter().enumerate() {
                        acc += ui * &a[i][j];
                    }
                    acc
                })
                .collect()
        })
        .collect();
    hnf_basis(&gens)
}

/// Does the row span of `sub` lie inside the row span of `sup`?
/// Both must be full rank square.
pub fn lattice_contains(sup: &IMat, sub: &IMat) -> bool {
    // Row r of sub must solve x * sup = r in integers.
    let sup_rat = imat_to_rat(sup);
    let inv = mat_inverse(&sup_rat);
    sub.iter().all(|row| {
        let r: RatVec = row.iter().map(|x| Rat::from_integer(x.clone())).collect();
        row_times_mat(&r, &inv).iter().all(|x| x.is_integer())
    })
}

/// Exact inverse of a unimodular integer matrix (det = +-1).
pub fn imat_inverse_unimodular(a: &IMat) -> IMat {
    let inv = mat_inverse(&imat_to_rat(a));
    inv.iter()
        .map(|r| {
            r.iter()
                .map(|x| {
                    assert!(x.is_integer(), "matrix is not unimodular");
                    x.to_integer()
                })
                .collect()
        })
        .collect()
}

/// Smallest integer `k >= 0` with `k^2 >= r` (for nonnegative rational `r`).
pub fn ceil_sqrt_rat(r: &Rat) -> i64 {
    assert!(!r.is_negative());
    let num = r.numer().to_biguint().expect("nonnegative");
    let den = r.denom().to_biguint().expect("positive");
    // floor(sqrt(ceil(r))) as a starting point, then adjust upward.
    let ceil_r = (&num + &den - 1u32) / &den;
    let mut k = Int::from(ceil_r.sqrt());
    while &k * &k < Int::from((&num + &den - 1u32) / &den) {
        k += 1;
    }
    // k = ceil(sqrt(ceil(r))) now satisfies k^2 >= ceil(r) >= r, but might
    // overshoot by one; tighten while (k-1)^2 >= r.
    loop {
        let km1: Int = &k - 1;
        if km1.is_negative() {
            break;
        }
        let sq = Rat::from_integer(&km1 * &km1);
        if sq >= *r {
            k = km1;
        } else {
            break;
        }
    }
    k.to_i64().expect("sqrt bound out of i64 range")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn im(rows: &[&[i64]]) -> IMat {
        rows.iter().map(|r| r.iter().map(|&x| Int::from(x)).collect()).collect()
    }

    #[test]
    fn smith_of_z2_product_sublattice() {
        // Generators (6,3), (-3,6): index 45, invariants (3, 15).
        let a = im(&[&[6, 3], &[-3, 6]]);
        let (d, q) = smith_diagonal(&a);
        assert_eq!(d, vec![Int::from(3), Int::from(15)]);
        assert_eq!(imat_det(&q).abs(), Int::one());
        // Every generator row must map to coordinates divisible by d.
        for row in &a {
            let z = imat_mul(&vec![row.clone()], &q);
            for (zi, di) in z[0].iter().zip(&d) {
                assert!((zi % di).is_zero());
            }
        }
    }

    #[test]
    fn hnf_transform_is_consistent() {
        let a = im(&[&[4, 2], &[2, 8]]);
        let (h, u) = hnf_with_transform(&a);
        assert_eq!(imat_mul(&u, &a), h);
        assert_eq!(imat_det(&u).abs(), Int::one());
    }

    #[test]
    fn join_and_intersect_of_scaled_integer_lattices() {
        let a = im(&[&[3, 0], &[0, 3]]);
        let b = im(&[&[5, 0], &[0, 5]]);
        let join = lattice_join(&a, &b);
        assert_eq!(imat_det(&join).abs(), Int::one());
        let meet = lattice_intersect(&a, &b);
        assert_eq!(imat_det(&meet).abs(), Int::from(225));
        assert!(lattice_contains(&a, &meet));
        assert!(lattice_contains(&b, &meet));
    }

    #[test]
    fn ceil_sqrt_of_rationals() {
        assert_eq!(ceil_sqrt_rat(&rat_from_i64(0)), 0);
        assert_eq!(ceil_sqrt_rat(&rat_from_i64(16)), 4);
        assert_eq!(ceil_sqrt_rat(&rat_from_i64(17)), 5);
        assert_eq!(ceil_sqrt_rat(&Rat::new(Int::from(45), Int::from(2))), 5);
    }

    #[test]
    fn surd_arithmetic_and_parse() {
        let x = Surd {
            a: rat_from_i64(-1) / rat_from_i64(2),
            b: rat_from_i64(1) / rat_from_i64(2),
        };
        let sq = x.clone() * x.clone();
        // (-1/2 + (1/2) r3)^2 = 1 - (1/2) r3
        assert_eq!(sq.a, rat_from_i64(1));
        assert_eq!(sq.b, rat_from_i64(-1) / rat_from_i64(2));
        assert!(x.sign() > 0);
        let printed = format!("{}", x);
        let parsed = parse_surd(&printed).unwrap();
        assert_eq!(parsed, x);
        assert_eq!(parse_surd("7/3").unwrap(), Surd::rational(Rat::new(Int::from(7), Int::from(3))));
    }
}
