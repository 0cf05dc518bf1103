//! Base lattices and geometric primitives: exact representations of Z^n,
//! the hexagonal lattice A2, and D4, together with nearest-point
//! quantization, Voronoi second moments and index arithmetic.
//!
//! Every lattice handled here is a (strictly) similar copy of one of the
//! three base kinds, recorded as an integer transform `U` against the base:
//! the rows of `U * G_base` span the lattice. All exact geometry happens in
//! base-coefficient space through the rational Gram form, so cleanliness and
//! coset questions never touch floating point. The nearest-point kernels are
//! generic over [`Scalar`] and run both on the exact path (`Rat`) and the
//! sampling path (`f64`).

use crate::error::{Error, Result};
use crate::linalg::{
    ceil_sqrt_rat, imat_det, imat_identity, imat_mul, imat_to_i64, imat_to_rat, mat_inverse,
    mat_mul, mat_transpose, IMat, RatMat, RatVec, Surd,
};
use crate::scalar::Scalar;
use crate::{rat_from_i64, rat_to_f64, Int, Rat};
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub enum LatticeKind {
    Zn,
    A2,
    D4,
}

impl LatticeKind {
    pub fn default_dim(&self) -> Option<usize> {
        match self {
            LatticeKind::Zn => None,
            LatticeKind::A2 => Some(2),
            LatticeKind::D4 => Some(4),
        }
    }

    /// Base generator rows, exact.
    pub fn base_generator(&self, dim: usize) -> Vec<Vec<Surd>> {
        match self {
            LatticeKind::Zn => (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| Surd::from_i64(if i == j { 1 } else { 0 }))
                        .collect()
                })
                .collect(),
            LatticeKind::A2 => vec![
                vec![Surd::from_i64(1), Surd::from_i64(0)],
                vec![
                    Surd::rational(Rat::new(Int::from(-1), Int::from(2))),
                    Surd::sqrt3(Rat::new(Int::from(1), Int::from(2))),
                ],
            ],
            LatticeKind::D4 => [[1, 1, 0, 0], [-1, 0, 1, 0], [0, -1, 0, 1], [0, -1, 0, -1]]
                .iter()
                .map(|r| r.iter().map(|&x| Surd::from_i64(x)).collect())
                .collect(),
        }
    }

    /// Base Gram matrix (always rational).
    pub fn base_gram(&self, dim: usize) -> RatMat {
        match self {
            LatticeKind::Zn => crate::linalg::mat_identity(dim),
            LatticeKind::A2 => {
                let half = Rat::new(Int::from(-1), Int::from(2));
                vec![vec![Rat::one(), half.clone()], vec![half, Rat::one()]]
            }
            LatticeKind::D4 => {
                let m = rat_from_i64;
                vec![
                    vec![m(2), m(-1), m(-1), m(-1)],
                    vec![m(-1), m(2), m(0), m(0)],
                    vec![m(-1), m(0), m(2), m(0)],
                    vec![m(-1), m(0), m(0), m(2)],
                ]
            }
        }
    }

    /// Squared covering radius of the base lattice (unnormalized Euclidean).
    pub fn base_covering_radius_sq(&self, dim: usize) -> Rat {
        match self {
            LatticeKind::Zn => Rat::new(Int::from(dim as i64), Int::from(4)),
            LatticeKind::A2 => Rat::new(Int::from(1), Int::from(3)),
            LatticeKind::D4 => Rat::one(),
        }
    }

    fn validate_dim(&self, dim: usize) -> Result<()> {
        match self {
            LatticeKind::Zn if dim >= 1 => Ok(()),
            LatticeKind::A2 if dim == 2 => Ok(()),
            LatticeKind::D4 if dim == 4 => Ok(()),
            _ => Err(Error::input(format!(
                "kind {self:?} does not support dimension {dim}"
            ))),
        }
    }
}

/// A lattice point: integer coefficients against the owning lattice plus its
/// exact ambient coordinates (`coords = coeffs * generator`).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct LatticePoint {
    pub coeffs: Vec<i64>,
    pub coords: Vec<Surd>,
}

/// Similarity record `U G = G W` with `W = c K`, `K` orthogonal with
/// determinant +1 and `c^2` rational. `W` rather than `K` itself is stored
/// because `c` is irrational whenever the index is not an `L`-th power.
#[derive(Clone, Debug)]
pub struct Similarity {
    pub u: IMat,
    pub c_sq: Rat,
    pub w: Vec<Vec<Surd>>,
}

impl Similarity {
    /// Index `N = det U = c^L`, validated to be a positive integer.
    pub fn index(&self, dim: usize) -> Result<Int> {
        let det = imat_det(&self.u);
        if det <= Int::zero() {
            return Err(Error::construction(
                "similarity determinant must be positive for a strict similarity",
            ));
        }
        let mut c_pow = Rat::one();
        for _ in 0..dim {
            c_pow = c_pow * self.c_sq.clone();
        }
        let det_sq = Rat::from_integer(&det * &det);
        if det_sq != c_pow {
            return Err(Error::construction(
                "similarity invariant det(U)^2 = (c^2)^L violated",
            ));
        }
        Ok(det)
    }
}

/// Exact quantization outcome: the nearest lattice point(s) to a query
/// expressed in base coefficients.
#[derive(Clone, Debug)]
pub struct NearestExact {
    /// Nearest point, own-lattice coefficients (lexicographically smallest
    /// on a tie).
    pub coeffs: Vec<i64>,
    /// Same point in base-lattice coefficients.
    pub base_coeffs: Vec<i64>,
    /// Unnormalized squared Euclidean distance.
    pub dist_sq: Rat,
    /// All minimizers (own-lattice coefficients); length > 1 means a tie.
    pub ties: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SecondMoment {
    pub value: f64,
    pub stderr: f64,
    /// Present when the value is known in closed form (Z^n).
    pub exact: Option<String>,
    pub samples: u64,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    kind: LatticeKind,
    dim: usize,
    u: IMat,
    u_i64: Vec<Vec<i64>>,
    u_inv: RatMat,
    index: Int,
    c_sq: Rat,
    gram: RatMat,
    generator: Vec<Vec<Surd>>,
    gen_f64: Vec<Vec<f64>>,
    gen_inv_f64: Vec<Vec<f64>>,
    covering_radius_sq: Rat,
    base_gram: RatMat,
    base_gram_f64: Vec<Vec<f64>>,
}

impl Lattice {
    pub fn base(kind: LatticeKind, dim: usize) -> Result<Lattice> {
        kind.validate_dim(dim)?;
        Self::with_transform(kind, dim, imat_identity(dim))
    }

    pub fn zn(dim: usize) -> Lattice {
        Self::base(LatticeKind::Zn, dim).expect("Z^n exists in every dimension")
    }

    pub fn a2() -> Lattice {
        Self::base(LatticeKind::A2, 2).expect("A2 is two-dimensional")
    }

    pub fn d4() -> Lattice {
        Self::base(LatticeKind::D4, 4).expect("D4 is four-dimensional")
    }

    /// Build the lattice spanned by the rows of `u * G_base`, validating
    /// that it is a strictly similar sublattice of the base kind.
    pub fn with_transform(kind: LatticeKind, dim: usize, u: IMat) -> Result<Lattice> {
        kind.validate_dim(dim)?;
        if u.len() != dim || u.iter().any(|r| r.len() != dim) {
            return Err(Error::input(
                "transform must be a square matrix of the lattice dimension",
            ));
        }
        let det = imat_det(&u);
        if det.is_zero() {
            return Err(Error::input("transform is singular"));
        }
        if det.is_negative() {
            return Err(Error::construction(
                "transform has negative determinant: similarity is not strict",
            ));
        }
        // c^2 = N^(2/L) must be rational, i.e. N^2 = (c^2)^L solvable.
        let c_sq = match dim {
            2 => Rat::from_integer(det.clone()),
            4 => {
                let root = det.sqrt();
                if &root * &root != det {
                    return Err(Error::construction(
                        "index of a 4-dimensional similar sublattice must be a perfect square",
                    ));
                }
                Rat::from_integer(root)
            }
            d => {
                // c = N^(1/L) must itself be an integer (1-D and odd cases).
                let n = det
                    .to_i64()
                    .ok_or_else(|| Error::construction("index out of range"))?;
                let c = (n as f64).powf(1.0 / d as f64).round() as i64;
                if c.pow(d as u32) != n {
                    return Err(Error::construction(
                        "index is not an L-th power in this dimension",
                    ));
                }
                rat_from_i64(c * c)
            }
        };
        let base_gram = kind.base_gram(dim);
        let u_rat = imat_to_rat(&u);
        let gram = mat_mul(&mat_mul(&u_rat, &base_gram), &mat_transpose(&u_rat));
        // Similarity criterion: U A U^T = c^2 A.
        for i in 0..dim {
            for j in 0..dim {
                if gram[i][j] != c_sq.clone() * base_gram[i][j].clone() {
                    return Err(Error::construction(
                        "transform does not define a geometrically similar sublattice",
                    ));
                }
            }
        }
        let base_gen = kind.base_generator(dim);
        let generator: Vec<Vec<Surd>> = u
            .iter()
            .map(|row| {
                (0..dim)
                    .map(|j| {
                        let mut acc = Surd::zero();
                        for (k, cell) in row.iter().enumerate() {
                            let f = Rat::from_integer(cell.clone());
                            acc = acc + base_gen[k][j].scale(&f);
                        }
                        acc
                    })
                    .collect()
            })
            .collect();
        let gen_f64: Vec<Vec<f64>> = generator
            .iter()
            .map(|r| r.iter().map(|s| s.to_f64()).collect())
            .collect();
        let gen_inv_f64 = invert_f64(&gen_f64);
        let u_inv = mat_inverse(&u_rat);
        let u_i64 =
            imat_to_i64(&u).ok_or_else(|| Error::construction("transform entries exceed i64"))?;
        let covering_radius_sq = c_sq.clone() * kind.base_covering_radius_sq(dim);
        let base_gram_f64 = base_gram
            .iter()
            .map(|r| r.iter().map(rat_to_f64).collect())
            .collect();
        Ok(Lattice {
            kind,
            dim,
            u,
            u_i64,
            u_inv,
            index: det,
            c_sq,
            gram,
            generator,
            gen_f64,
            gen_inv_f64,
            covering_radius_sq,
            base_gram,
            base_gram_f64,
        })
    }

    /// Sublattice of `self` given by a transform relative to `self`.
    pub fn sublattice(&self, u_rel: &IMat) -> Result<Lattice> {
        let abs = imat_mul(u_rel, &self.u);
        Lattice::with_transform(self.kind, self.dim, abs)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Base-relative integer transform (rows of `u * G_base` span self).
    pub fn transform(&self) -> &IMat {
        &self.u
    }

    pub fn transform_i64(&self) -> &Vec<Vec<i64>> {
        &self.u_i64
    }

    /// Index in the base lattice, `det U = c^L`.
    pub fn index_in_base(&self) -> &Int {
        &self.index
    }

    pub fn c_sq(&self) -> &Rat {
        &self.c_sq
    }

    pub fn gram(&self) -> &RatMat {
        &self.gram
    }

    pub fn base_gram(&self) -> &RatMat {
        &self.base_gram
    }

    pub fn generator(&self) -> &Vec<Vec<Surd>> {
        &self.generator
    }

    pub fn generator_f64(&self) -> &Vec<Vec<f64>> {
        &self.gen_f64
    }

    /// Unnormalized squared covering radius.
    pub fn covering_radius_sq(&self) -> &Rat {
        &self.covering_radius_sq
    }

    /// Dimension-normalized squared covering radius.
    pub fn covering_radius_sq_normalized(&self) -> Rat {
        self.covering_radius_sq.clone() / rat_from_i64(self.dim as i64)
    }

    /// Volume of a fundamental cell (exactly `index * vol(base kind)`).
    pub fn cell_volume_f64(&self) -> f64 {
        let base = match self.kind {
            LatticeKind::Zn => 1.0,
            LatticeKind::A2 => 0.75f64.sqrt(),
            LatticeKind::D4 => 2.0,
        };
        base * self.index.to_f64().unwrap_or(f64::MAX)
    }

    pub fn similarity(&self) -> Similarity {
        // W = G_base^-1 U G_base, exact in Q(sqrt 3).
        let base_gen = self.kind.base_generator(self.dim);
        let base_inv = surd_inverse(&base_gen);
        let u_surd: Vec<Vec<Surd>> = self
            .u
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| Surd::rational(Rat::from_integer(x.clone())))
                    .collect()
            })
            .collect();
        let w = surd_mat_mul(&surd_mat_mul(&base_inv, &u_surd), &base_gen);
        Similarity {
            u: self.u.clone(),
            c_sq: self.c_sq.clone(),
            w,
        }
    }

    /// Exact coordinates of a point given own-lattice coefficients.
    pub fn coords_of(&self, coeffs: &[i64]) -> Vec<Surd> {
        (0..self.dim)
            .map(|j| {
                let mut acc = Surd::zero();
                for (i, &c) in coeffs.iter().enumerate() {
                    acc = acc + self.generator[i][j].scale(&rat_from_i64(c));
                }
                acc
            })
            .collect()
    }

    pub fn point(&self, coeffs: Vec<i64>) -> LatticePoint {
        let coords = self.coords_of(&coeffs);
        LatticePoint { coeffs, coords }
    }

    /// Own-lattice coefficients -> base-lattice coefficients.
    pub fn to_base_coeffs(&self, coeffs: &[i64]) -> Vec<i64> {
        (0..self.dim)
            .map(|j| {
                coeffs
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| c * self.u_i64[i][j])
                    .sum()
            })
            .collect()
    }

    /// Base-lattice coefficients -> own coefficients, when the point lies in
    /// this lattice.
    pub fn from_base_coeffs(&self, base: &[i64]) -> Option<Vec<i64>> {
        let r: RatVec = base.iter().map(|&x| rat_from_i64(x)).collect();
        let own = crate::linalg::row_times_mat(&r, &self.u_inv);
        own.iter()
            .map(|x| if x.is_integer() { x.numer().to_i64() } else { None })
            .collect()
    }

    /// Membership test for a point given in base coefficients.
    pub fn contains_base_point(&self, base: &[i64]) -> bool {
        self.from_base_coeffs(base).is_some()
    }

    /// Exact unnormalized squared Euclidean distance between two rational
    /// points given in base-coefficient space.
    pub fn base_dist_sq(&self, x: &[Rat], y: &[Rat]) -> Rat {
        let d: RatVec = x.iter().zip(y).map(|(a, b)| a - b).collect();
        crate::scalar::quad_form(&self.base_gram, &d, &d)
    }

    // -- nearest-point machinery ----------------------------------------------

    /// Exact nearest point of `self` to a query expressed as rational
    /// coefficients against the *base* lattice. Ties are reported; the
    /// returned representative has lexicographically smallest coefficients.
    pub fn nearest_exact(&self, base_query: &[Rat]) -> NearestExact {
        // Own coefficient-space query: y = t U^-1. Because self is similar
        // to the base, nearest-point search in (y, base Gram) solves the
        // ambient problem exactly.
        let y = crate::linalg::row_times_mat(base_query, &self.u_inv);
        let (mut ties, _qf) = kind_argmins_rat(&self.kind, &self.base_gram, &y);
        ties.sort();
        let coeffs = ties[0].clone();
        let base_coeffs = self.to_base_coeffs(&coeffs);
        let n_rat: RatVec = base_coeffs.iter().map(|&v| rat_from_i64(v)).collect();
        let dist_sq = self.base_dist_sq(&n_rat, base_query);
        NearestExact {
            coeffs,
            base_coeffs,
            dist_sq,
            ties,
        }
    }

    /// Floating-point nearest point for real ambient queries. Returns
    /// own-lattice coefficients.
    pub fn nearest_f64(&self, x: &[f64]) -> Result<Vec<i64>> {
        if x.len() != self.dim {
            return Err(Error::input(format!(
                "query has dimension {}, lattice has {}",
                x.len(),
                self.dim
            )));
        }
        for v in x {
            if !v.is_finite() {
                return Err(Error::input("query coordinates must be finite"));
            }
        }
        let y: Vec<f64> = (0..self.dim)
            .map(|j| (0..self.dim).map(|i| x[i] * self.gen_inv_f64[i][j]).sum())
            .collect();
        let (mut cands, _) = kind_argmins_f64(&self.kind, &self.base_gram_f64, &y);
        cands.sort();
        Ok(cands.into_iter().next().expect("nonempty candidate set"))
    }

    /// Spec-facing nearest point: real query, full [`LatticePoint`].
    pub fn nearest_point(&self, x: &[f64]) -> Result<LatticePoint> {
        let coeffs = self.nearest_f64(x)?;
        Ok(self.point(coeffs))
    }

    /// All points of `self` (own coefficients) with unnormalized squared
    /// norm at most `r_sq`, sorted lexicographically.
    pub fn points_within(&self, r_sq: &Rat) -> Vec<Vec<i64>> {
        let gram_inv = mat_inverse(&self.gram);
        let bounds: Vec<i64> = (0..self.dim)
            .map(|i| ceil_sqrt_rat(&(r_sq.clone() * gram_inv[i][i].clone())))
            .collect();
        let mut out = vec![];
        let mut cur = vec![0i64; self.dim];
        enumerate_box(&bounds, 0, &mut cur, &mut |c: &[i64]| {
            let v: RatVec = c.iter().map(|&x| rat_from_i64(x)).collect();
            let q = crate::scalar::quad_form(&self.gram, &v, &v);
            if q <= *r_sq {
                out.push(c.to_vec());
            }
        });
        out.sort();
        out
    }

    // -- second moment ---------------------------------------------------------

    /// Dimension-normalized second moment `G(lattice)`. Exact 1/12 for Z^n;
    /// Monte-Carlo with reported standard error otherwise. Sampling folds a
    /// uniform draw over the fundamental parallelepiped into the Voronoi
    /// cell, so no rejection is needed.
    pub fn second_moment(&self, samples: u64, seed: u64) -> SecondMoment {
        if self.kind == LatticeKind::Zn {
            return SecondMoment {
                value: 1.0 / 12.0,
                stderr: 0.0,
                exact: Some("1/12".to_string()),
                samples: 0,
            };
        }
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let vol = self.cell_volume_f64();
        let norm_scale = vol.powf(2.0 / self.dim as f64);
        let mut sum = 0.0f64;
        let mut sum_sq = 0.0f64;
        for _ in 0..samples {
            let r: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>()).collect();
            let x: Vec<f64> = (0..self.dim)
                .map(|j| (0..self.dim).map(|i| r[i] * self.gen_f64[i][j]).sum())
                .collect();
            let n = self.nearest_f64(&x).expect("dimension matches");
            let y: Vec<f64> = (0..self.dim)
                .map(|j| {
                    x[j]
                        - (0..self.dim)
                            .map(|i| n[i] as f64 * self.gen_f64[i][j])
                            .sum::<f64>()
                })
                .collect();
            let e = y.iter().map(|v| v * v).sum::<f64>() / self.dim as f64 / norm_scale;
            sum += e;
            sum_sq += e * e;
        }
        let mean = sum / samples as f64;
        let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
        SecondMoment {
            value: mean,
            stderr: (var / samples as f64).sqrt(),
            exact: None,
            samples,
        }
    }
}

/// Index of a similarity: `N = det U = c^L` as an exact integer.
pub fn index_of(sim: &Similarity, dim: usize) -> Result<Int> {
    sim.index(dim)
}

// ---------------------------------------------------------------------------
// Per-kind nearest-point kernels (coefficient space, generic scalar)

/// All nearest lattice points to the own-coefficient query `y`, together
/// with the minimal value of `(n - y) A (n - y)^T`.
fn kind_argmins<S: Scalar>(
    kind: &LatticeKind,
    gram_at: &impl Fn(usize, usize) -> S,
    y: &[S],
) -> (Vec<Vec<i64>>, S) {
    match kind {
        LatticeKind::Zn => zn_argmins(y),
        LatticeKind::A2 => box_argmins(gram_at, y, 2),
        LatticeKind::D4 => d4_argmins(y),
    }
}

pub(crate) fn kind_argmins_rat(
    kind: &LatticeKind,
    gram: &RatMat,
    y: &[Rat],
) -> (Vec<Vec<i64>>, Rat) {
    kind_argmins(kind, &|i, j| gram[i][j].clone(), y)
}

pub(crate) fn kind_argmins_f64(
    kind: &LatticeKind,
    gram: &[Vec<f64>],
    y: &[f64],
) -> (Vec<Vec<i64>>, f64) {
    kind_argmins(kind, &|i, j| gram[i][j], y)
}

fn zn_argmins<S: Scalar>(y: &[S]) -> (Vec<Vec<i64>>, S) {
    let half = S::from_ratio(&Int::one(), &Int::from(2));
    let mut options: Vec<Vec<i64>> = vec![];
    let mut dist = S::zero();
    for v in y {
        let f = v.floor_i64();
        let frac = v.clone() - S::from_i64(f);
        let (opts, d) = if frac < half {
            (vec![f], frac.clone() * frac.clone())
        } else if frac > half {
            let e = S::one() - frac.clone();
            (vec![f + 1], e.clone() * e)
        } else {
            // exact half: nearest-point tie in this coordinate
            (vec![f, f + 1], half.clone() * half.clone())
        };
        dist = dist + d;
        options.push(opts);
    }
    let mut out = vec![];
    let mut cur = vec![0i64; y.len()];
    cartesian(&options, 0, &mut cur, &mut out);
    (out, dist)
}

fn cartesian(options: &[Vec<i64>], k: usize, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
    if k == options.len() {
        out.push(cur.clone());
        return;
    }
    for &o in &options[k] {
        cur[k] = o;
        cartesian(options, k + 1, cur, out);
    }
}

/// Box search around the rounded query; the halfwidth must dominate the
/// coefficient deviation of a covering-radius step (2 suffices for A2).
fn box_argmins<S: Scalar>(
    gram_at: &impl Fn(usize, usize) -> S,
    y: &[S],
    halfwidth: i64,
) -> (Vec<Vec<i64>>, S) {
    let dim = y.len();
    let centers: Vec<i64> = y
        .iter()
        .map(|v| (v.clone() + S::from_ratio(&Int::one(), &Int::from(2))).floor_i64())
        .collect();
    let mut best: Option<S> = None;
    let mut mins: Vec<Vec<i64>> = vec![];
    let bounds: Vec<i64> = vec![halfwidth; dim];
    let mut cur = vec![0i64; dim];
    enumerate_box(&bounds, 0, &mut cur, &mut |offs: &[i64]| {
        let cand: Vec<i64> = centers.iter().zip(offs).map(|(c, o)| c + o).collect();
        let d: Vec<S> = cand
            .iter()
            .zip(y)
            .map(|(&c, v)| S::from_i64(c) - v.clone())
            .collect();
        let mut q = S::zero();
        for i in 0..dim {
            for j in 0..dim {
                q = q + d[i].clone() * gram_at(i, j) * d[j].clone();
            }
        }
        match &best {
            None => {
                best = Some(q);
                mins = vec![cand];
            }
            Some(b) => {
                if q < *b {
                    best = Some(q);
                    mins = vec![cand];
                } else if q == *b {
                    mins.push(cand);
                }
            }
        }
    });
    (mins, best.expect("box is nonempty"))
}

/// D4 nearest point via ambient space: convert the coefficient query through
/// the integer generator, search integers within distance 1 per coordinate
/// restricted to even coordinate sums, convert back.
fn d4_argmins<S: Scalar>(y: &[S]) -> (Vec<Vec<i64>>, S) {
    const G: [[i64; 4]; 4] = [[1, 1, 0, 0], [-1, 0, 1, 0], [0, -1, 0, 1], [0, -1, 0, -1]];
    let z: Vec<S> = (0..4)
        .map(|j| {
            let mut acc = S::zero();
            for i in 0..4 {
                if G[i][j] != 0 {
                    acc = acc + y[i].clone() * S::from_i64(G[i][j]);
                }
            }
            acc
        })
        .collect();
    // The nearest D4 point is within the covering radius 1, hence within 1
    // per ambient coordinate.
    let options: Vec<Vec<i64>> = z
        .iter()
        .map(|v| {
            let lo = (v.clone() - S::one()).floor_i64();
            let hi = (v.clone() + S::one()).floor_i64() + 1;
            (lo..=hi)
                .filter(|&k| {
                    let d = S::from_i64(k) - v.clone();
                    d.clone() * d <= S::one()
                })
                .collect()
        })
        .collect();
    let mut best: Option<S> = None;
    let mut mins: Vec<Vec<i64>> = vec![];
    let mut cur = [0i64; 4];
    fn rec<S: Scalar>(
        options: &[Vec<i64>],
        z: &[S],
        k: usize,
        cur: &mut [i64; 4],
        best: &mut Option<S>,
        mins: &mut Vec<Vec<i64>>,
    ) {
        if k == 4 {
            if cur.iter().sum::<i64>() % 2 != 0 {
                return;
            }
            let mut q = S::zero();
            for i in 0..4 {
                let d = S::from_i64(cur[i]) - z[i].clone();
                q = q + d.clone() * d;
            }
            match best {
                None => {
                    *best = Some(q);
                    *mins = vec![cur.to_vec()];
                }
                Some(b) => {
                    if q < *b {
                        *best = Some(q);
                        *mins = vec![cur.to_vec()];
                    } else if q == *b {
                        mins.push(cur.to_vec());
                    }
                }
            }
            return;
        }
        for &o in &options[k] {
            cur[k] = o;
            rec(options, z, k + 1, cur, best, mins);
        }
    }
    rec(&options, &z, 0, &mut cur, &mut best, &mut mins);
    // Ambient vector back to coefficients: n = z* G^-1 with det G = 2; the
    // transpose-of-adjugate below is exact and membership guarantees
    // integrality.
    const G_ADJ_T: [[i64; 4]; 4] = [
        [2, 0, 2, 0],
        [0, 0, 2, 0],
        [1, -1, 1, 1],
        [1, -1, 1, -1],
    ];
    let to_coeffs = |zv: &[i64]| -> Vec<i64> {
        (0..4)
            .map(|j| {
                let num: i64 = (0..4).map(|i| zv[i] * G_ADJ_T[j][i]).sum();
                debug_assert_eq!(num % 2, 0, "ambient point not in D4");
                num / 2
            })
            .collect()
    };
    let coeff_mins: Vec<Vec<i64>> = mins.iter().map(|m| to_coeffs(m)).collect();
    (coeff_mins, best.expect("candidate box is nonempty"))
}

fn enumerate_box(bounds: &[i64], k: usize, cur: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
    if k == bounds.len() {
        f(cur);
        return;
    }
    for v in -bounds[k]..=bounds[k] {
        cur[k] = v;
        enumerate_box(bounds, k + 1, cur, f);
    }
}

// ---------------------------------------------------------------------------
// Surd matrix helpers

fn surd_mat_mul(a: &[Vec<Surd>], b: &[Vec<Surd>]) -> Vec<Vec<Surd>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let mut acc = Surd::zero();
                    for l in 0..k {
                        acc = acc + a[i][l].clone() * b[l][j].clone();
                    }
                    acc
                })
                .collect()
        })
        .collect()
}

/// Inverse of a small Surd matrix by Gauss-Jordan in Q(sqrt 3).
pub(crate) fn surd_inverse(a: &[Vec<Surd>]) -> Vec<Vec<Surd>> {
    let n = a.len();
    let mut work: Vec<Vec<Surd>> = a.to_vec();
    let mut inv: Vec<Vec<Surd>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| Surd::from_i64(if i == j { 1 } else { 0 }))
                .collect()
        })
        .collect();
    let recip = |s: &Surd| -> Surd {
        // 1/(a + b r3) = (a - b r3) / (a^2 - 3 b^2)
        let den = &s.a * &s.a - rat_from_i64(3) * &s.b * &s.b;
        assert!(!den.is_zero(), "singular surd matrix");
        Surd {
            a: &s.a / &den,
            b: -(&s.b / &den),
        }
    };
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !work[r][col].is_zero())
            .expect("singular surd matrix");
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let p = recip(&work[col][col].clone());
        for j in 0..n {
            work[col][j] = work[col][j].clone() * p.clone();
            inv[col][j] = inv[col][j].clone() * p.clone();
        }
        for r in 0..n {
            if r != col && !work[r][col].is_zero() {
                let f = work[r][col].clone();
                for j in 0..n {
                    work[r][j] = work[r][j].clone() - f.clone() * work[col][j].clone();
                    inv[r][j] = inv[r][j].clone() - f.clone() * inv[col][j].clone();
                }
            }
        }
    }
    inv
}

fn invert_f64(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut work: Vec<Vec<f64>> = a.to_vec();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| work[r][col].abs().partial_cmp(&work[s][col].abs()).unwrap())
            .unwrap();
        work.swap(col, pivot);
        inv.swap(col, pivot);
        let p = work[col][col];
        for j in 0..n {
            work[col][j] /= p;
            inv[col][j] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = work[r][col];
                if f != 0.0 {
                    for j in 0..n {
                        work[r][j] -= f * work[col][j];
                        inv[r][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    inv
}
