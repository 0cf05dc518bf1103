//! Construction of the labeling function: the discrete Voronoi set of the
//! product sublattice, the edge sets between the two descriptions, the
//! min-cost assignment that pairs every Voronoi point with an edge class,
//! and the shift-invariant extension to the whole lattice.
//!
//! Points are carried as integer coefficient vectors against the system's
//! base lattice; every distance comparison is exact through the rational
//! Gram form. Costs handed to the assignment solver are scaled to integers,
//! so equal-cost ties are decided exactly, never by rounding.

use crate::assignment::{
    canonical_optimal_assignment, enumerate_optimal_assignments,
};
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::linalg::{imat_to_i64, IMat};
use crate::sublattice::{relative_transform, SublatticeSystem};
use crate::{rat_from_i64, Int, Rat};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// How nearest-point ties are treated while carving discrete Voronoi sets.
///
/// `Strict` refuses non-clean configurations (the design-time default).
/// `Resolve` assigns each boundary point to the lexicographically smallest
/// tied sublattice point; the rule is translation-equivariant, so resolved
/// Voronoi sets are still exact fundamental domains. The scaled-family
/// asymptotics use it because even-index scalings are never clean.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TieMode {
    Strict,
    Resolve,
}

/// Mixed-radix coset indexing for the quotient of the base lattice by a
/// full-rank sublattice, through the Smith decomposition of its transform.
#[derive(Clone, Debug)]
pub struct CosetIndex {
    dims: Vec<i64>,
    q: Vec<Vec<i64>>,
    total: i64,
}

impl CosetIndex {
    pub fn new(v_rel: &IMat) -> Result<CosetIndex> {
        let (d, q) = crate::linalg::smith_diagonal(v_rel);
        let dims: Vec<i64> = d
            .iter()
            .map(|x| x.to_i64().ok_or_else(|| Error::construction("index too large")))
            .collect::<Result<_>>()?;
        let q = imat_to_i64(&q).ok_or_else(|| Error::construction("transform too large"))?;
        let total = dims.iter().product();
        Ok(CosetIndex { dims, q, total })
    }

    pub fn total(&self) -> i64 {
        self.total
    }

    /// Coset id of a base-coefficient vector, in `[0, total)`.
    pub fn id_of(&self, coeffs: &[i64]) -> u64 {
        let mut id: i128 = 0;
        let mut stride: i128 = 1;
        for j in 0..self.dims.len() {
            let mut z: i128 = 0;
            for (i, &c) in coeffs.iter().enumerate() {
                z += c as i128 * self.q[i][j] as i128;
            }
            let d = self.dims[j] as i128;
            let r = z.rem_euclid(d);
            id += r * stride;
            stride *= d;
        }
        id as u64
    }
}

/// An edge: a usable label pair with one endpoint in each description
/// sublattice, plus the id of its class modulo the product sublattice.
/// Endpoints are base-lattice coefficient vectors.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Edge {
    pub lam1: Vec<i64>,
    pub lam2: Vec<i64>,
    pub coset_id: u64,
}

/// The discrete Voronoi set of `center` (a point of `coarse`) inside
/// `fine`: one point per coset of `fine / coarse`, each nearer to `center`
/// than to any other coarse point. Returned as fine-lattice coefficient
/// vectors sorted lexicographically.
pub fn discrete_voronoi(
    fine: &Lattice,
    coarse: &Lattice,
    center: &[i64],
    mode: TieMode,
) -> Result<Vec<Vec<i64>>> {
    let v_rel = relative_transform(fine, coarse)?;
    let index = crate::linalg::imat_det(&v_rel)
        .to_i64()
        .ok_or_else(|| Error::construction("index too large"))?
        .abs();
    let rho_sq = coarse.covering_radius_sq().clone();
    let candidates = fine.points_within(&rho_sq);
    let mut out = vec![];
    for cand in candidates {
        let base_coeffs = fine.to_base_coeffs(&cand);
        let q: Vec<Rat> = base_coeffs.iter().map(|&x| rat_from_i64(x)).collect();
        let near = coarse.nearest_exact(&q);
        if near.ties.len() > 1 {
            match mode {
                TieMode::Strict => {
                    return Err(Error::NotClean { point: cand });
                }
                TieMode::Resolve => {
                    if near.ties[0].iter().any(|&c| c != 0) {
                        continue;
                    }
                }
            }
        } else if near.coeffs.iter().any(|&c| c != 0) {
            continue;
        }
        out.push(cand);
    }
    if out.len() as i64 != index {
        return Err(Error::construction(format!(
            "discrete Voronoi set has {} points, expected {index}",
            out.len()
        )));
    }
    // Shift to the requested center.
    let mut shifted: Vec<Vec<i64>> = out
        .into_iter()
        .map(|c| c.iter().zip(center).map(|(a, b)| a + b).collect())
        .collect();
    shifted.sort();
    Ok(shifted)
}

/// Everything the labeling steps share: the Voronoi set of the product
/// sublattice, its membership table, the description point sets, and the
/// edge classes.
pub struct LabelingContext {
    /// V0 in base coefficients, sorted.
    pub v0: Vec<Vec<i64>>,
    v0_ids: BTreeMap<u64, Vec<i64>>,
    pub p1: Vec<Vec<i64>>,
    pub p2: Vec<Vec<i64>>,
    /// Canonical edge representatives (lam1 in P1), sorted, ids assigned in
    /// order.
    pub classes: Vec<Edge>,
    class_lookup: BTreeMap<(Vec<i64>, Vec<i64>), u64>,
    pub coset_index: CosetIndex,
    pub mode: TieMode,
}

fn require_identity_base(sys: &SublatticeSystem) -> Result<()> {
    let u = sys.base.transform();
    for (i, row) in u.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            let expect = if i == j { Int::one() } else { Int::zero() };
            if *x != expect {
                return Err(Error::input(
                    "labeling requires the system base to be an unscaled base lattice",
                ));
            }
        }
    }
    Ok(())
}

impl LabelingContext {
    pub fn new(sys: &SublatticeSystem, mode: TieMode) -> Result<LabelingContext> {
        require_identity_base(sys)?;
        if mode == TieMode::Strict && !sys.all_clean() {
            return Err(Error::NotClean {
                point: crate::sublattice::find_boundary_point(&sys.base, &sys.product)?
                    .or(crate::sublattice::find_boundary_point(&sys.base, &sys.sub1)?)
                    .or(crate::sublattice::find_boundary_point(&sys.base, &sys.sub2)?)
                    .unwrap_or_default(),
            });
        }
        let center = vec![0i64; sys.dim()];
        let v0 = discrete_voronoi(&sys.base, &sys.product, &center, mode)?;
        let coset_index = CosetIndex::new(sys.product.transform())?;
        let mut v0_ids = BTreeMap::new();
        for p in &v0 {
            v0_ids.insert(coset_index.id_of(p), p.clone());
        }
        let p1: Vec<Vec<i64>> = v0
            .iter()
            .filter(|p| sys.sub1.contains_base_point(p))
            .cloned()
            .collect();
        let p2: Vec<Vec<i64>> = v0
            .iter()
            .filter(|p| sys.sub2.contains_base_point(p))
            .cloned()
            .collect();
        if p1.len() as i64 != sys.n_s / sys.n1 || p2.len() as i64 != sys.n_s / sys.n2 {
            return Err(Error::construction(format!(
                "description point sets have sizes {} and {}, expected {} and {}",
                p1.len(),
                p2.len(),
                sys.n_s / sys.n1,
                sys.n_s / sys.n2
            )));
        }
        // Edge classes with canonical representatives anchored in P1.
        let mut classes = vec![];
        for lam1 in &p1 {
            for v in &v0 {
                let lam2: Vec<i64> = lam1.iter().zip(v).map(|(a, b)| a + b).collect();
                if sys.sub2.contains_base_point(&lam2) {
                    classes.push((lam1.clone(), lam2));
                }
            }
        }
        classes.sort();
        if classes.len() as i64 != sys.n_s {
            return Err(Error::construction(format!(
                "edge class count {} differs from N1*N2 = {}",
                classes.len(),
                sys.n_s
            )));
        }
        let classes: Vec<Edge> = classes
            .into_iter()
            .enumerate()
            .map(|(i, (lam1, lam2))| Edge {
                lam1,
                lam2,
                coset_id: i as u64,
            })
            .collect();
        let class_lookup: BTreeMap<(Vec<i64>, Vec<i64>), u64> = classes
            .iter()
            .map(|e| ((e.lam1.clone(), e.lam2.clone()), e.coset_id))
            .collect();
        Ok(LabelingContext {
            v0,
            v0_ids,
            p1,
            p2,
            classes,
            class_lookup,
            coset_index,
            mode,
        })
    }

    pub fn contains_in_v0(&self, p: &[i64]) -> bool {
        self.v0_ids.get(&self.coset_index.id_of(p)) == Some(&p.to_vec())
    }

    /// Canonical V0 representative of an arbitrary base point, together
    /// with the product-sublattice shift that moves the representative onto
    /// the point.
    pub fn reduce_to_v0(&self, p: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let rep = self
            .v0_ids
            .get(&self.coset_index.id_of(p))
            .expect("every coset has a V0 representative")
            .clone();
        let shift: Vec<i64> = p.iter().zip(&rep).map(|(a, b)| a - b).collect();
        (rep, shift)
    }

    /// Class id of an arbitrary edge (endpoints in base coefficients).
    pub fn class_of_edge(&self, lam1: &[i64], lam2: &[i64]) -> Option<u64> {
        let (l1c, shift) = self.reduce_to_v0(lam1);
        let l2c: Vec<i64> = lam2.iter().zip(&shift).map(|(a, s)| a - s).collect();
        self.class_lookup.get(&(l1c, l2c)).copied()
    }
}

/// The two description point sets inside the Voronoi set of the product
/// sublattice (base coefficients, sorted).
pub fn build_p_sets(sys: &SublatticeSystem) -> Result<(Vec<Vec<i64>>, Vec<Vec<i64>>)> {
    let ctx = LabelingContext::new(sys, TieMode::Strict)?;
    Ok((ctx.p1, ctx.p2))
}

/// The neighbor list of a description point: all points of the other
/// description falling in the Voronoi set translated to `point`. The result
/// has exactly N1 members for side 1 (N2 for side 2), pairwise in distinct
/// product-sublattice cosets.
pub fn neighbor_list(
    sys: &SublatticeSystem,
    side: u8,
    point: &[i64],
) -> Result<Vec<Vec<i64>>> {
    let ctx = LabelingContext::new(sys, TieMode::Strict)?;
    neighbor_list_in_ctx(sys, &ctx, side, point)
}

pub fn neighbor_list_in_ctx(
    sys: &SublatticeSystem,
    ctx: &LabelingContext,
    side: u8,
    point: &[i64],
) -> Result<Vec<Vec<i64>>> {
    let (own, other) = match side {
        1 => (&ctx.p1, &sys.sub2),
        2 => (&ctx.p2, &sys.sub1),
        _ => return Err(Error::input("side must be 1 or 2")),
    };
    if !own.iter().any(|p| p == point) {
        return Err(Error::input(format!(
            "point {point:?} is not in the side-{side} description set"
        )));
    }
    let mut out = vec![];
    for v in &ctx.v0 {
        let cand: Vec<i64> = point.iter().zip(v).map(|(a, b)| a + b).collect();
        if other.contains_base_point(&cand) {
            out.push(cand);
        }
    }
    out.sort();
    let expect = if side == 1 { sys.n1 } else { sys.n2 };
    if out.len() as i64 != expect {
        return Err(Error::construction(format!(
            "neighbor list has {} members, expected {expect}",
            out.len()
        )));
    }
    Ok(out)
}

/// Edge classes modulo the product sublattice, with canonical
/// representatives anchored at description-1 points. For clean systems the
/// dual formulation (anchoring at description-2 points) is checked to give
/// the same classes.
pub fn edge_cosets(sys: &SublatticeSystem) -> Result<Vec<Edge>> {
    let ctx = LabelingContext::new(sys, TieMode::Strict)?;
    // Dual formulation: edges (lam1 in L2(lam2), lam2 in P2), mapped to
    // canonical representatives; the class sets must coincide.
    let mut dual = std::collections::BTreeSet::new();
    for lam2 in &ctx.p2 {
        for v in &ctx.v0 {
            let lam1: Vec<i64> = lam2.iter().zip(v).map(|(a, b)| a + b).collect();
            if sys.sub1.contains_base_point(&lam1) {
                let id = ctx
                    .class_of_edge(&lam1, lam2)
                    .ok_or_else(|| Error::construction("dual edge misses the class list"))?;
                dual.insert(id);
            }
        }
    }
    if dual.len() != ctx.classes.len() {
        return Err(Error::construction(
            "the two edge-set formulations disagree",
        ));
    }
    Ok(ctx.classes.clone())
}

// ---------------------------------------------------------------------------
// Costs

/// The per-point cost summand `gamma1 ||x - lam1||^2 + gamma2 ||x - lam2||^2`
/// with dimension-normalized norms, evaluated exactly.
pub fn edge_cost(
    sys: &SublatticeSystem,
    point: &[i64],
    edge: &Edge,
    gamma1: &Rat,
    gamma2: &Rat,
) -> Result<Rat> {
    if gamma1.is_negative() || gamma2.is_negative() {
        return Err(Error::input("weights must be nonnegative"));
    }
    if gamma1.is_zero() && gamma2.is_zero() {
        return Err(Error::input("weights must not both be zero"));
    }
    let l = rat_from_i64(sys.dim() as i64);
    let p: Vec<Rat> = point.iter().map(|&x| rat_from_i64(x)).collect();
    let l1: Vec<Rat> = edge.lam1.iter().map(|&x| rat_from_i64(x)).collect();
    let l2: Vec<Rat> = edge.lam2.iter().map(|&x| rat_from_i64(x)).collect();
    let d1 = sys.base.base_dist_sq(&p, &l1);
    let d2 = sys.base.base_dist_sq(&p, &l2);
    Ok((gamma1 * d1 + gamma2 * d2) / l)
}

/// The weighted-mean decomposition of the same summand: the edge-length
/// term plus the distance of the point to the weighted mean of the two
/// labels. Exactly equal to [`edge_cost`] whenever `gamma1 + gamma2 > 0`.
pub fn edge_cost_decomposed(
    sys: &SublatticeSystem,
    point: &[i64],
    edge: &Edge,
    gamma1: &Rat,
    gamma2: &Rat,
) -> Result<(Rat, Rat)> {
    if gamma1.is_zero() && gamma2.is_zero() {
        return Err(Error::input("weights must not both be zero"));
    }
    let l = rat_from_i64(sys.dim() as i64);
    let s = gamma1 + gamma2;
    let p: Vec<Rat> = point.iter().map(|&x| rat_from_i64(x)).collect();
    let l1: Vec<Rat> = edge.lam1.iter().map(|&x| rat_from_i64(x)).collect();
    let l2: Vec<Rat> = edge.lam2.iter().map(|&x| rat_from_i64(x)).collect();
    let edge_term = gamma1 * gamma2 / &s * sys.base.base_dist_sq(&l1, &l2) / &l;
    let mean: Vec<Rat> = l1
        .iter()
        .zip(&l2)
        .map(|(a, b)| (gamma1 * a + gamma2 * b) / &s)
        .collect();
    let mean_term = s.clone() * sys.base.base_dist_sq(&p, &mean) / &l;
    Ok((edge_term, mean_term))
}

/// Integer-scaled class costs: the exact minimum of the cost summand over
/// all product-sublattice shifts of the class representative, scaled by
/// `2 L K S` (`K` clears the weight denominators, `S` is the integer weight
/// sum, 2 clears the Gram halves). Also returns the minimizing shift.
struct ClassCoster<'a> {
    sys: &'a SublatticeSystem,
    a1: i128,
    a2: i128,
    s: i128,
    gram2: Vec<Vec<i128>>,
    scale: Rat,
    /// cached: 2*A as i128
    dim: usize,
}

impl<'a> ClassCoster<'a> {
    fn new(sys: &'a SublatticeSystem, gamma1: &Rat, gamma2: &Rat) -> Result<ClassCoster<'a>> {
        if gamma1.is_negative() || gamma2.is_negative() {
            return Err(Error::input("weights must be nonnegative"));
        }
        if gamma1.is_zero() && gamma2.is_zero() {
            return Err(Error::input("weights must not both be zero"));
        }
        let k = gamma1.denom().lcm(gamma2.denom());
        let a1 = (gamma1 * Rat::from_integer(k.clone()))
            .to_integer()
            .to_i128()
            .ok_or_else(|| Error::input("weights too large"))?;
        let a2 = (gamma2 * Rat::from_integer(k.clone()))
            .to_integer()
            .to_i128()
            .ok_or_else(|| Error::input("weights too large"))?;
        let s = a1 + a2;
        let dim = sys.dim();
        let two = rat_from_i64(2);
        let gram2: Vec<Vec<i128>> = sys
            .base
            .base_gram()
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| {
                        let v = x * &two;
                        debug_assert!(v.is_integer());
                        v.to_integer().to_i128().expect("small gram entries")
                    })
                    .collect()
            })
            .collect();
        // True cost = scaled / (2 L K S).
        let scale = rat_from_i64(2)
            * rat_from_i64(dim as i64)
            * Rat::from_integer(k)
            * Rat::new(Int::from((a1 + a2) as i64), Int::one());
        Ok(ClassCoster {
            sys,
            a1,
            a2,
            s,
            gram2,
            scale,
            dim,
        })
    }

    fn e2(&self, x: &[i128]) -> i128 {
        let mut acc = 0i128;
        for i in 0..self.dim {
            for j in 0..self.dim {
                if self.gram2[i][j] != 0 {
                    acc += x[i] * self.gram2[i][j] * x[j];
                }
            }
        }
        acc
    }

    /// Scaled integer cost of assigning `point` to the class of `edge`,
    /// plus the minimizing shifted edge.
    fn cost(&self, point: &[i64], edge: &Edge) -> (i128, Edge) {
        let delta: Vec<i128> = edge
            .lam2
            .iter()
            .zip(&edge.lam1)
            .map(|(a, b)| (*a - *b) as i128)
            .collect();
        let fixed = self.a1 * self.a2 * self.e2(&delta);
        // w = S*point - a1*lam1 - a2*lam2; minimize e2(w - S*shift) over the
        // product sublattice by quantizing w / S.
        let w: Vec<i128> = (0..self.dim)
            .map(|i| {
                self.s * point[i] as i128
                    - self.a1 * edge.lam1[i] as i128
                    - self.a2 * edge.lam2[i] as i128
            })
            .collect();
        let w_over_s: Vec<Rat> = w
            .iter()
            .map(|&x| Rat::new(Int::from(x), Int::from(self.s)))
            .collect();
        let near = self.sys.product.nearest_exact(&w_over_s);
        let shift = near.base_coeffs;
        let w_shifted: Vec<i128> = (0..self.dim)
            .map(|i| w[i] - self.s * shift[i] as i128)
            .collect();
        let total = fixed + self.e2(&w_shifted);
        let shifted_edge = Edge {
            lam1: edge.lam1.iter().zip(&shift).map(|(a, s)| a + s).collect(),
            lam2: edge.lam2.iter().zip(&shift).map(|(a, s)| a + s).collect(),
            coset_id: edge.coset_id,
        };
        (total, shifted_edge)
    }

    /// Convert a scaled integer cost back to the exact rational value.
    fn unscale(&self, c: i128) -> Rat {
        Rat::from_integer(Int::from(c)) / self.scale.clone()
    }
}

// ---------------------------------------------------------------------------
// Labeling

/// One table row: a Voronoi-set point and the edge labeling it.
#[derive(Clone, Debug)]
pub struct LabelEntry {
    pub point: Vec<i64>,
    pub edge: Edge,
    /// Exact cost summand of this row (dimension-normalized).
    pub cost: Rat,
}

/// The labeling function: a table over the Voronoi set of the product
/// sublattice, extended to the whole lattice by shift invariance.
#[derive(Clone, Debug)]
pub struct Labeling {
    pub gamma1: Rat,
    pub gamma2: Rat,
    /// Entries indexed by the coset id of their point.
    pub entries: Vec<LabelEntry>,
    /// Total cost `(1/N_s) * sum of summands` (exact).
    pub total_cost: Rat,
    /// Excess distortion sums `(1/N_s) * sum ||x - alpha_i(x)||^2`
    /// (dimension-normalized, exact).
    pub excess1: Rat,
    pub excess2: Rat,
    coset_index: CosetIndex,
    /// (coset id of lam1, lam2 - lam1) -> entry position; the shift-reduced
    /// inverse of the labeling.
    decode_map: BTreeMap<(u64, Vec<i64>), usize>,
    entry_order: Vec<usize>,
    pub n_s: i64,
    pub reduced_from_lcm: bool,
}

impl Labeling {
    /// Labels of an arbitrary base-lattice point (base coefficients).
    pub fn label_of(&self, point: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let id = self.coset_index.id_of(point) as usize;
        let entry = &self.entries[self.entry_order[id]];
        let shift: Vec<i64> = point.iter().zip(&entry.point).map(|(a, b)| a - b).collect();
        let lam1 = entry.edge.lam1.iter().zip(&shift).map(|(a, s)| a + s).collect();
        let lam2 = entry.edge.lam2.iter().zip(&shift).map(|(a, s)| a + s).collect();
        (lam1, lam2)
    }

    /// Invert a label pair back to the lattice point, failing on pairs no
    /// encoder output could produce.
    pub fn invert(&self, lam1: &[i64], lam2: &[i64]) -> Result<Vec<i64>> {
        let delta: Vec<i64> = lam2.iter().zip(lam1).map(|(a, b)| a - b).collect();
        let key = (self.coset_index.id_of(lam1), delta);
        let pos = self.decode_map.get(&key).ok_or_else(|| {
            Error::Corruption(format!(
                "label pair {lam1:?}, {lam2:?} is not in the labeling's range"
            ))
        })?;
        let e = &self.entries[*pos];
        let shift: Vec<i64> = lam1.iter().zip(&e.edge.lam1).map(|(a, b)| a - b).collect();
        Ok(e.point_shifted(&shift))
    }

    pub fn excess_pair(&self) -> (Rat, Rat) {
        (self.excess1.clone(), self.excess2.clone())
    }
}

impl LabelEntry {
    fn point_shifted(&self, shift: &[i64]) -> Vec<i64> {
        self.point.iter().zip(shift).map(|(a, s)| a + s).collect()
    }
}

/// Solve the labeling problem on the full Voronoi set of the product
/// sublattice: an exact min-cost perfect matching between Voronoi points
/// and edge classes, with costs minimized over each class. Equal-cost
/// optima are resolved to the lexicographically minimal matching.
pub fn solve_labeling(sys: &SublatticeSystem, gamma1: &Rat, gamma2: &Rat) -> Result<Labeling> {
    solve_labeling_with_mode(sys, gamma1, gamma2, TieMode::Strict)
}

pub fn solve_labeling_with_mode(
    sys: &SublatticeSystem,
    gamma1: &Rat,
    gamma2: &Rat,
    mode: TieMode,
) -> Result<Labeling> {
    let ctx = LabelingContext::new(sys, mode)?;
    let coster = ClassCoster::new(sys, gamma1, gamma2)?;
    let (cost, shifted) = class_cost_matrix(&ctx, &coster);
    let assignment = canonical_optimal_assignment(&cost)?;
    build_labeling(sys, &ctx, &coster, &cost, &shifted, &assignment.row_to_col, gamma1, gamma2, false)
}

fn class_cost_matrix(ctx: &LabelingContext, coster: &ClassCoster) -> (Vec<Vec<i128>>, Vec<Vec<Edge>>) {
    let n = ctx.v0.len();
    let mut cost = vec![vec![0i128; n]; n];
    let mut shifted: Vec<Vec<Edge>> = Vec::with_capacity(n);
    for (i, point) in ctx.v0.iter().enumerate() {
        let mut row_edges = Vec::with_capacity(n);
        for (j, class) in ctx.classes.iter().enumerate() {
            let (c, e) = coster.cost(point, class);
            cost[i][j] = c;
            row_edges.push(e);
        }
        shifted.push(row_edges);
    }
    (cost, shifted)
}

/// The exact integer-scaled (point, edge-class) cost matrix together with
/// the factor relating it to the true rational costs. Rows follow the
/// sorted Voronoi set, columns the sorted class list.
pub fn scaled_cost_matrix(
    sys: &SublatticeSystem,
    gamma1: &Rat,
    gamma2: &Rat,
    mode: TieMode,
) -> Result<(Vec<Vec<i128>>, Rat)> {
    let ctx = LabelingContext::new(sys, mode)?;
    let coster = ClassCoster::new(sys, gamma1, gamma2)?;
    let (cost, _) = class_cost_matrix(&ctx, &coster);
    Ok((cost, coster.scale.clone()))
}

#[allow(clippy::too_many_arguments)]
fn build_labeling(
    sys: &SublatticeSystem,
    ctx: &LabelingContext,
    coster: &ClassCoster,
    cost: &[Vec<i128>],
    shifted: &[Vec<Edge>],
    row_to_col: &[usize],
    gamma1: &Rat,
    gamma2: &Rat,
    reduced: bool,
) -> Result<Labeling> {
    let n = ctx.v0.len();
    let mut entries = Vec::with_capacity(n);
    let mut excess1 = Rat::zero();
    let mut excess2 = Rat::zero();
    let mut total = Rat::zero();
    let l = rat_from_i64(sys.dim() as i64);
    for i in 0..n {
        let j = row_to_col[i];
        let point = ctx.v0[i].clone();
        let edge = shifted[i][j].clone();
        let c = coster.unscale(cost[i][j]);
        let p: Vec<Rat> = point.iter().map(|&x| rat_from_i64(x)).collect();
        let l1: Vec<Rat> = edge.lam1.iter().map(|&x| rat_from_i64(x)).collect();
        let l2: Vec<Rat> = edge.lam2.iter().map(|&x| rat_from_i64(x)).collect();
        excess1 = excess1 + sys.base.base_dist_sq(&p, &l1) / &l;
        excess2 = excess2 + sys.base.base_dist_sq(&p, &l2) / &l;
        total = total + c.clone();
        entries.push(LabelEntry { point, edge, cost: c });
    }
    let n_rat = rat_from_i64(n as i64);
    let total_cost = total / &n_rat;
    let excess1 = excess1 / &n_rat;
    let excess2 = excess2 / &n_rat;
    // Bijectivity bookkeeping.
    let mut used_class = vec![false; n];
    for &j in row_to_col.iter() {
        if used_class[j] {
            return Err(Error::construction("labeling assigns a class twice"));
        }
        used_class[j] = true;
    }
    let coset_index = CosetIndex::new(sys.product.transform())?;
    let mut entry_order = vec![usize::MAX; n];
    let mut decode_map = BTreeMap::new();
    for (pos, e) in entries.iter().enumerate() {
        let id = ctx.coset_index.id_of(&e.point) as usize;
        if id >= n || entry_order[id] != usize::MAX {
            return Err(Error::construction("coset ids do not form a bijection"));
        }
        entry_order[id] = pos;
        let delta: Vec<i64> = e.edge.lam2.iter().zip(&e.edge.lam1).map(|(a, b)| a - b).collect();
        if decode_map
            .insert((coset_index.id_of(&e.edge.lam1), delta), pos)
            .is_some()
        {
            return Err(Error::construction("two entries share an edge class"));
        }
    }
    Ok(Labeling {
        gamma1: gamma1.clone(),
        gamma2: gamma2.clone(),
        entries,
        total_cost,
        excess1,
        excess2,
        coset_index,
        decode_map,
        entry_order,
        n_s: sys.n_s,
        reduced_from_lcm: reduced,
    })
}

// ---------------------------------------------------------------------------
// Reduced solve over the lcm sublattice

/// A labeling solved on the smaller quotient by the lcm sublattice.
#[derive(Clone, Debug)]
pub struct ReducedLabeling {
    pub domain: Vec<Vec<i64>>,
    pub edges: Vec<Edge>,
    pub row_to_col: Vec<usize>,
    pub total_cost: Rat,
    pub assigned: Vec<Edge>,
}

/// Solve the assignment on the quotient by the lcm sublattice (when the
/// system has one): only lcm(N1, N2) points need labels, with edge classes
/// taken modulo the lcm sublattice.
pub fn solve_labeling_reduced(
    sys: &SublatticeSystem,
    gamma1: &Rat,
    gamma2: &Rat,
    mode: TieMode,
) -> Result<ReducedLabeling> {
    let lcm = sys
        .lcm_sub
        .as_ref()
        .ok_or_else(|| Error::Unsupported("system has no lcm sublattice".into()))?;
    let ctx = LabelingContext::new(sys, mode)?;
    let center = vec![0i64; sys.dim()];
    let domain = discrete_voronoi(&sys.base, lcm, &center, mode)?;
    // P1' = Voronoi set of the lcm sublattice inside description 1.
    let p1_red = discrete_voronoi(&sys.sub1, lcm, &center, mode)?;
    let mut edges: Vec<(Vec<i64>, Vec<i64>)> = vec![];
    for lam1_own in &p1_red {
        let lam1 = sys.sub1.to_base_coeffs(lam1_own);
        for v in &ctx.v0 {
            let lam2: Vec<i64> = lam1.iter().zip(v).map(|(a, b)| a + b).collect();
            if sys.sub2.contains_base_point(&lam2) {
                edges.push((lam1.clone(), lam2));
            }
        }
    }
    edges.sort();
    let n_lcm = sys.n_lcm.unwrap_or(sys.n_s);
    if edges.len() as i64 != n_lcm {
        return Err(Error::construction(format!(
            "reduced edge set has {} classes, expected {n_lcm}",
            edges.len()
        )));
    }
    let edges: Vec<Edge> = edges
        .into_iter()
        .enumerate()
        .map(|(i, (lam1, lam2))| Edge {
            lam1,
            lam2,
            coset_id: i as u64,
        })
        .collect();
    // Costs minimize over lcm-sublattice shifts.
    let coster = LcmCoster {
        inner: ClassCoster::new(sys, gamma1, gamma2)?,
        lcm,
    };
    let n = domain.len();
    let mut cost = vec![vec![0i128; n]; n];
    let mut shifted: Vec<Vec<Edge>> = Vec::with_capacity(n);
    for (i, point) in domain.iter().enumerate() {
        let mut row = Vec::with_capacity(n);
        for (j, class) in edges.iter().enumerate() {
            let (c, e) = coster.cost(point, class);
            cost[i][j] = c;
            row.push(e);
        }
        shifted.push(row);
    }
    let assignment = canonical_optimal_assignment(&cost)?;
    let mut total = Rat::zero();
    let mut assigned = Vec::with_capacity(n);
    for i in 0..n {
        let j = assignment.row_to_col[i];
        total = total + coster.inner.unscale(cost[i][j]);
        assigned.push(shifted[i][j].clone());
    }
    Ok(ReducedLabeling {
        domain,
        edges,
        row_to_col: assignment.row_to_col,
        total_cost: total / rat_from_i64(n as i64),
        assigned,
    })
}

struct LcmCoster<'a> {
    inner: ClassCoster<'a>,
    lcm: &'a Lattice,
}

impl<'a> LcmCoster<'a> {
    fn cost(&self, point: &[i64], edge: &Edge) -> (i128, Edge) {
        let delta: Vec<i128> = edge
            .lam2
            .iter()
            .zip(&edge.lam1)
            .map(|(a, b)| (*a - *b) as i128)
            .collect();
        let fixed = self.inner.a1 * self.inner.a2 * self.inner.e2(&delta);
        let w: Vec<i128> = (0..self.inner.dim)
            .map(|i| {
                self.inner.s * point[i] as i128
                    - self.inner.a1 * edge.lam1[i] as i128
                    - self.inner.a2 * edge.lam2[i] as i128
            })
            .collect();
        let w_over_s: Vec<Rat> = w
            .iter()
            .map(|&x| Rat::new(Int::from(x), Int::from(self.inner.s)))
            .collect();
        let near = self.lcm.nearest_exact(&w_over_s);
        let shift = near.base_coeffs;
        let w_shifted: Vec<i128> = (0..self.inner.dim)
            .map(|i| w[i] - self.inner.s * shift[i] as i128)
            .collect();
        let total = fixed + self.inner.e2(&w_shifted);
        let shifted_edge = Edge {
            lam1: edge.lam1.iter().zip(&shift).map(|(a, s)| a + s).collect(),
            lam2: edge.lam2.iter().zip(&shift).map(|(a, s)| a + s).collect(),
            coset_id: edge.coset_id,
        };
        (total, shifted_edge)
    }
}

/// Expand a reduced labeling to the full table over the Voronoi set of the
/// product sublattice, using invariance under lcm-sublattice shifts.
pub fn lcm_reduce(
    sys: &SublatticeSystem,
    reduced: &ReducedLabeling,
    gamma1: &Rat,
    gamma2: &Rat,
    mode: TieMode,
) -> Result<Labeling> {
    let lcm = sys
        .lcm_sub
        .as_ref()
        .ok_or_else(|| Error::Unsupported("system has no lcm sublattice".into()))?;
    let ctx = LabelingContext::new(sys, mode)?;
    // Map each V0 point to its reduced-domain representative.
    let lcm_index = CosetIndex::new(lcm.transform())?;
    let mut red_by_id: BTreeMap<u64, usize> = BTreeMap::new();
    for (i, p) in reduced.domain.iter().enumerate() {
        red_by_id.insert(lcm_index.id_of(p), i);
    }
    let l = rat_from_i64(sys.dim() as i64);
    let mut entries = Vec::with_capacity(ctx.v0.len());
    let mut excess1 = Rat::zero();
    let mut excess2 = Rat::zero();
    let mut total = Rat::zero();
    for point in &ctx.v0 {
        let rid = *red_by_id
            .get(&lcm_index.id_of(point))
            .ok_or_else(|| Error::construction("V0 point misses the reduced domain"))?;
        let rep = &reduced.domain[rid];
        let shift: Vec<i64> = point.iter().zip(rep).map(|(a, b)| a - b).collect();
        let base_edge = &reduced.assigned[rid];
        let edge = Edge {
            lam1: base_edge.lam1.iter().zip(&shift).map(|(a, s)| a + s).collect(),
            lam2: base_edge.lam2.iter().zip(&shift).map(|(a, s)| a + s).collect(),
            coset_id: 0, // assigned below from the full class table
        };
        let id = ctx
            .class_of_edge(&edge.lam1, &edge.lam2)
            .ok_or_else(|| Error::construction("expanded edge misses the class table"))?;
        let edge = Edge { coset_id: id, ..edge };
        let c = edge_cost(sys, point, &edge, gamma1, gamma2)?;
        let p: Vec<Rat> = point.iter().map(|&x| rat_from_i64(x)).collect();
        let l1: Vec<Rat> = edge.lam1.iter().map(|&x| rat_from_i64(x)).collect();
        let l2: Vec<Rat> = edge.lam2.iter().map(|&x| rat_from_i64(x)).collect();
        excess1 = excess1 + sys.base.base_dist_sq(&p, &l1) / &l;
        excess2 = excess2 + sys.base.base_dist_sq(&p, &l2) / &l;
        total = total + c.clone();
        entries.push(LabelEntry {
            point: point.clone(),
            edge,
            cost: c,
        });
    }
    let n = entries.len();
    let n_rat = rat_from_i64(n as i64);
    // Bijectivity of the expanded table.
    let mut used_class = vec![false; n];
    for e in entries.iter() {
        let j = e.edge.coset_id as usize;
        if used_class[j] {
            return Err(Error::construction(
                "expanded labeling assigns a class twice",
            ));
        }
        used_class[j] = true;
    }
    let coset_index = CosetIndex::new(sys.product.transform())?;
    let mut entry_order = vec![usize::MAX; n];
    let mut decode_map = BTreeMap::new();
    for (pos, e) in entries.iter().enumerate() {
        let id = ctx.coset_index.id_of(&e.point) as usize;
        entry_order[id] = pos;
        let delta: Vec<i64> = e.edge.lam2.iter().zip(&e.edge.lam1).map(|(a, b)| a - b).collect();
        if decode_map
            .insert((coset_index.id_of(&e.edge.lam1), delta), pos)
            .is_some()
        {
            return Err(Error::construction("two expanded entries share an edge class"));
        }
    }
    Ok(Labeling {
        gamma1: gamma1.clone(),
        gamma2: gamma2.clone(),
        entries,
        total_cost: total / &n_rat,
        excess1: excess1 / &n_rat,
        excess2: excess2 / &n_rat,
        coset_index,
        decode_map,
        entry_order,
        n_s: sys.n_s,
        reduced_from_lcm: true,
    })
}

// ---------------------------------------------------------------------------
// Equal-cost optima and mixing

/// Enumerate equal-cost optimal labelings (bounded count).
pub fn enumerate_optimal_labelings(
    sys: &SublatticeSystem,
    gamma1: &Rat,
    gamma2: &Rat,
    cap: usize,
) -> Result<Vec<Labeling>> {
    let ctx = LabelingContext::new(sys, TieMode::Strict)?;
    let coster = ClassCoster::new(sys, gamma1, gamma2)?;
    let (cost, shifted) = class_cost_matrix(&ctx, &coster);
    let optima = enumerate_optimal_assignments(&cost, cap);
    optima
        .iter()
        .map(|a| {
            build_labeling(
                sys,
                &ctx,
                &coster,
                &cost,
                &shifted,
                &a.row_to_col,
                gamma1,
                gamma2,
                false,
            )
        })
        .collect()
}

/// Time-shared mixture of two equal-cost labelings.
#[derive(Clone, Debug)]
pub struct MixedLabelingReport {
    pub proportion: f64,
    /// Excess side distortions of the two inputs (exact).
    pub excess_a: (Rat, Rat),
    pub excess_b: (Rat, Rat),
    /// Interpolated excess side distortions.
    pub mixed_excess1: f64,
    pub mixed_excess2: f64,
}

pub fn mix_labelings(a: &Labeling, b: &Labeling, proportion: f64) -> Result<MixedLabelingReport> {
    if !(0.0..=1.0).contains(&proportion) {
        return Err(Error::input("proportion must lie in [0, 1]"));
    }
    if a.total_cost != b.total_cost || a.gamma1 != b.gamma1 || a.gamma2 != b.gamma2 {
        return Err(Error::input(
            "mixing requires equal-cost labelings for the same weights",
        ));
    }
    if a.n_s != b.n_s {
        return Err(Error::input("labelings come from different systems"));
    }
    let ea = a.excess_pair();
    let eb = b.excess_pair();
    let mix = |x: &Rat, y: &Rat| {
        proportion * crate::rat_to_f64(x) + (1.0 - proportion) * crate::rat_to_f64(y)
    };
    Ok(MixedLabelingReport {
        proportion,
        excess_a: ea.clone(),
        excess_b: eb.clone(),
        mixed_excess1: mix(&ea.0, &eb.0),
        mixed_excess2: mix(&ea.1, &eb.1),
    })
}

// ---------------------------------------------------------------------------
// Table export

/// CSV rows: coset id, point coefficients and exact coordinates, the two
/// labels, and the row cost. The format is stable and round-trips through
/// [`parse_labeling_csv`].
pub fn labeling_to_csv(sys: &SublatticeSystem, lab: &Labeling) -> Result<String> {
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "coset_id", "coeffs", "coords", "lam1", "lam2", "edge_class", "cost",
    ])
    .map_err(|e| Error::construction(format!("csv: {e}")))?;
    let fmt_vec = |v: &[i64]| {
        v.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut rows: Vec<&LabelEntry> = lab.entries.iter().collect();
    rows.sort_by_key(|e| lab.coset_index.id_of(&e.point));
    for e in rows {
        let coords = sys
            .base
            .coords_of(&e.point)
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ");
        w.write_record([
            lab.coset_index.id_of(&e.point).to_string(),
            fmt_vec(&e.point),
            coords,
            fmt_vec(&e.edge.lam1),
            fmt_vec(&e.edge.lam2),
            e.edge.coset_id.to_string(),
            e.cost.to_string(),
        ])
        .map_err(|e| Error::construction(format!("csv: {e}")))?;
    }
    String::from_utf8(
        w.into_inner()
            .map_err(|e| Error::construction(format!("csv: {e}")))?,
    )
    .map_err(|e| Error::construction(format!("csv: {e}")))
}

/// Parsed labeling row (the documented export schema).
#[derive(Clone, Debug, PartialEq)]
pub struct LabelingCsvRow {
    pub coset_id: u64,
    pub coeffs: Vec<i64>,
    pub lam1: Vec<i64>,
    pub lam2: Vec<i64>,
    pub edge_class: u64,
    pub cost: Rat,
}

pub fn parse_labeling_csv(data: &str) -> Result<Vec<LabelingCsvRow>> {
    let mut r = csv::Reader::from_reader(data.as_bytes());
    let parse_vec = |s: &str| -> Result<Vec<i64>> {
        if s.is_empty() {
            return Ok(vec![]);
        }
        s.split(' ')
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::input(format!("bad integer '{t}'")))
            })
            .collect()
    };
    let mut out = vec![];
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::input(format!("csv: {e}")))?;
        out.push(LabelingCsvRow {
            coset_id: rec[0]
                .parse()
                .map_err(|_| Error::input("bad coset id"))?,
            coeffs: parse_vec(&rec[1])?,
            lam1: parse_vec(&rec[3])?,
            lam2: parse_vec(&rec[4])?,
            edge_class: rec[5]
                .parse()
                .map_err(|_| Error::input("bad class id"))?,
            cost: rec[6]
                .parse::<Rat>()
                .map_err(|_| Error::input("bad cost"))?,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Structural checks shared by the verification suites

/// Per-class usage counts of description points: every coset of
/// `Lambda_i / Lambda_s` must label exactly `N_i` table rows.
pub fn usage_counts_ok(sys: &SublatticeSystem, lab: &Labeling) -> Result<bool> {
    let idx1 = CosetIndex::new(sys.product.transform())?;
    let mut count1: BTreeMap<u64, i64> = BTreeMap::new();
    let mut count2: BTreeMap<u64, i64> = BTreeMap::new();
    for e in &lab.entries {
        *count1.entry(idx1.id_of(&e.edge.lam1)).or_default() += 1;
        *count2.entry(idx1.id_of(&e.edge.lam2)).or_default() += 1;
    }
    let ok1 = count1.len() as i64 == sys.n_s / sys.n1
        && count1.values().all(|&c| c == sys.n1);
    let ok2 = count2.len() as i64 == sys.n_s / sys.n2
        && count2.values().all(|&c| c == sys.n2);
    Ok(ok1 && ok2)
}
