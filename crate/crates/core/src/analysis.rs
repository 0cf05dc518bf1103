//! Closed-form high-rate predictions, optimal weight selection under packet
//! loss, and the Gaussian two-description lower bound used as the reference
//! curve in the experiments.

use crate::error::{Error, Result};
use crate::labeling::{discrete_voronoi, Labeling, TieMode};
use crate::sublattice::SublatticeSystem;
use crate::{rat_from_i64, Rat};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

/// Inputs to the high-rate prediction. `h_p` is the per-dimension
/// differential entropy of the source (1/2 log2(2 pi e) for the unit
/// Gaussian), `g_s` and `g_base` the normalized second moments of the
/// product and base lattices, and `rho_cap_sq_normalized` the squared
/// covering radius of the intersection sublattice of the unscaled design
/// (used only for the neglected-term bound).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PredictInputs {
    pub gamma1: f64,
    pub gamma2: f64,
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub h_p: f64,
    pub g_s: f64,
    pub g_base: f64,
    pub dim: usize,
    pub n1: i64,
    pub n2: i64,
    pub rho_cap_sq_normalized: Option<f64>,
}

/// High-rate closed-form predictions for a design.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HighRatePrediction {
    /// Dominant Lagrangian excess term.
    pub j: f64,
    /// Upper bound on the neglected mean-offset term, when the covering
    /// radius was supplied.
    pub j_s2_bound: Option<f64>,
    pub d0_pred: f64,
    pub d1_pred: f64,
    pub d2_pred: f64,
    /// `(gamma2 / gamma1)^2` when both weights are positive.
    pub ratio_pred: Option<f64>,
    pub inputs: PredictInputs,
}

/// High-rate prediction of the central and side distortions.
///
/// Requires consistent rates: the excess exponent `r1 + r2 - r0` must stay
/// below both individual rates.
pub fn predict(inp: &PredictInputs) -> Result<HighRatePrediction> {
    if inp.gamma1 < 0.0 || inp.gamma2 < 0.0 || (inp.gamma1 == 0.0 && inp.gamma2 == 0.0) {
        return Err(Error::input("weights must be nonnegative, not both zero"));
    }
    let excess_rate = inp.r1 + inp.r2 - inp.r0;
    if excess_rate >= inp.r1.min(inp.r2) {
        return Err(Error::input(
            "inconsistent rates: r1 + r2 - r0 must stay below min(r1, r2)",
        ));
    }
    let e = inp.g_s * 2f64.powf(2.0 * inp.h_p) * 2f64.powf(-2.0 * excess_rate);
    let s = inp.gamma1 + inp.gamma2;
    let (d1, d2, j, ratio) = if inp.gamma1 == 0.0 {
        // Degenerate weight: description 1 is unconstrained and behaves as
        // a single-description quantizer at its own rate.
        let d1 = inp.g_s * 2f64.powf(2.0 * inp.h_p) * 2f64.powf(-2.0 * inp.r1);
        (d1, e, 0.0, None)
    } else if inp.gamma2 == 0.0 {
        let d2 = inp.g_s * 2f64.powf(2.0 * inp.h_p) * 2f64.powf(-2.0 * inp.r2);
        (e, d2, 0.0, None)
    } else {
        let d1 = (inp.gamma2 / s).powi(2) * e;
        let d2 = (inp.gamma1 / s).powi(2) * e;
        let j = inp.gamma1 * inp.gamma2 / s * e;
        (d1, d2, j, Some((inp.gamma2 / inp.gamma1).powi(2)))
    };
    let d0 = inp.g_base * 2f64.powf(2.0 * (inp.h_p - inp.r0));
    let beta_sq = 2f64.powf(2.0 * (inp.h_p - inp.r0));
    let j_s2_bound = inp.rho_cap_sq_normalized.map(|rho| s * rho * beta_sq);
    Ok(HighRatePrediction {
        j,
        j_s2_bound,
        d0_pred: d0,
        d1_pred: d1,
        d2_pred: d2,
        ratio_pred: ratio,
        inputs: inp.clone(),
    })
}

/// Packet-loss channel pair with the source power needed for the total
/// outage term.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct ChannelModel {
    pub p1: f64,
    pub p2: f64,
    pub source_power: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GammaChoice {
    /// Optimal weight ratio `gamma1 / gamma2`.
    pub ratio: f64,
    /// Second derivative of the averaged distortion in the normalized
    /// weight; positive, certifying a minimum.
    pub second_derivative: f64,
}

/// The weight ratio minimizing the average distortion at high rate:
/// `(1 - p1) p2 / ((1 - p2) p1)`, with the convexity certificate.
pub fn optimal_gamma_ratio(ch: &ChannelModel) -> Result<GammaChoice> {
    if !(ch.p1 > 0.0 && ch.p1 < 1.0 && ch.p2 > 0.0 && ch.p2 < 1.0) {
        return Err(Error::input("loss probabilities must lie strictly in (0, 1)"));
    }
    let b1 = (1.0 - ch.p2) * ch.p1;
    let b2 = (1.0 - ch.p1) * ch.p2;
    Ok(GammaChoice {
        ratio: b2 / b1,
        second_derivative: 2.0 * (b1 + b2),
    })
}

/// Average end-to-end distortion over the four channel outcomes.
pub fn average_distortion(ch: &ChannelModel, d0: f64, d1: f64, d2: f64) -> f64 {
    (1.0 - ch.p1) * (1.0 - ch.p2) * d0
        + (1.0 - ch.p1) * ch.p2 * d1
        + (1.0 - ch.p2) * ch.p1 * d2
        + ch.p1 * ch.p2 * ch.source_power
}

/// Lower bound on the central distortion of any two-description code for
/// the unit-variance memoryless Gaussian source, given the rates and side
/// distortions. Side distortions above 1 carry no information and are
/// clamped.
pub fn ozarow_bound(r1: f64, r2: f64, d1: f64, d2: f64) -> Result<f64> {
    let pi = 2f64.powf(-2.0 * (r1 + r2));
    let tol = 1.0 + 1e-12;
    if d1 * tol < 2f64.powf(-2.0 * r1) || d2 * tol < 2f64.powf(-2.0 * r2) {
        return Err(Error::input(
            "side distortions below their single-description limits",
        ));
    }
    let d1 = d1.min(1.0);
    let d2 = d2.min(1.0);
    if d1 + d2 >= 1.0 + pi {
        return Ok(pi);
    }
    let good = ((1.0 - d1) * (1.0 - d2)).sqrt();
    let bad = (d1 * d2 - pi).max(0.0).sqrt();
    let denom = 1.0 - (good - bad) * (good - bad);
    Ok(pi / denom)
}

/// Decibel gap between a measured profile and the bound: scale both side
/// distortions by `t` until the bound meets the measured central
/// distortion; the gap is `-10 log10(t)`. Positive when the scheme sits
/// above the bound.
pub fn gap_to_bound_db(r1: f64, r2: f64, d0: f64, d1: f64, d2: f64) -> Result<f64> {
    // Side distortions below their single-description limits are
    // unachievable at any central distortion; treat them as an infinite
    // requirement so the bisection stays bracketed.
    let f = |t: f64| -> f64 { ozarow_bound(r1, r2, t * d1, t * d2).unwrap_or(f64::INFINITY) };
    let (mut lo, mut hi) = (1e-9f64, 1e9f64);
    if f(lo) < d0 || f(hi) > d0 {
        return Err(Error::input(
            "measured profile is outside the bound's bracket",
        ));
    }
    for _ in 0..200 {
        let m = ((lo.ln() + hi.ln()) / 2.0).exp();
        if f(m) > d0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let t = (lo * hi).sqrt();
    Ok(-10.0 * t.log10())
}

/// Exact sums behind the high-rate side-distortion approximation on the
/// intersection sublattice's Voronoi set: the true side sum
/// `sum ||x - lam1||^2`, the mean-projected sum `sum ||lam1 - mean||^2`,
/// and their relative deviation, all dimension-normalized rationals.
pub fn side_approximation_deviation(
    sys: &SublatticeSystem,
    lab: &dyn Fn(&[i64]) -> (Vec<i64>, Vec<i64>),
    gamma1: &Rat,
    gamma2: &Rat,
) -> Result<(Rat, Rat, Rat)> {
    let center = vec![0i64; sys.dim()];
    let v_cap = discrete_voronoi(&sys.base, &sys.meet, &center, TieMode::Resolve)?;
    let l = rat_from_i64(sys.dim() as i64);
    let s = gamma1 + gamma2;
    if s.is_zero() || gamma1.is_negative() || gamma2.is_negative() {
        return Err(Error::input("weights must be nonnegative, not both zero"));
    }
    let mut s1 = Rat::zero();
    let mut s2 = Rat::zero();
    for p in &v_cap {
        let (l1, l2) = lab(p);
        let pr: Vec<Rat> = p.iter().map(|&x| rat_from_i64(x)).collect();
        let l1r: Vec<Rat> = l1.iter().map(|&x| rat_from_i64(x)).collect();
        let l2r: Vec<Rat> = l2.iter().map(|&x| rat_from_i64(x)).collect();
        s1 = s1 + sys.base.base_dist_sq(&pr, &l1r) / &l;
        // || lam1 - mean ||^2 = (gamma2/s)^2 ||lam2 - lam1||^2
        let w = gamma2 / &s;
        s2 = s2 + w.clone() * w * sys.base.base_dist_sq(&l1r, &l2r) / &l;
    }
    if s2.is_zero() {
        return Err(Error::construction("degenerate design: zero edge lengths"));
    }
    let dev = (s1.clone() - s2.clone()).abs() / s2.clone();
    Ok((s1, s2, dev))
}

/// Convenience overload for a full labeling table.
pub fn side_approximation_deviation_for_labeling(
    sys: &SublatticeSystem,
    lab: &Labeling,
) -> Result<(Rat, Rat, Rat)> {
    let f = |p: &[i64]| lab.label_of(p);
    side_approximation_deviation(sys, &f, &lab.gamma1.clone(), &lab.gamma2.clone())
}
