//! The runtime two-description quantizer: encode a source vector to a pair
//! of sublattice indices, decode from either or both descriptions, and
//! measure empirical rates and distortions against the closed-form values.
//!
//! Rates are plug-in entropies of the observed index streams. For the
//! aligned uniform source the streams are wrapped modulo a large frame
//! lattice (an integer multiple of the product sublattice); the wrapped
//! distribution is exactly uniform per cell, so the index entropies obey
//! the rate laws without boundary artifacts.

use crate::error::{Error, Result};
use crate::labeling::{CosetIndex, Labeling};
use crate::linalg::imat_mul;
use crate::sublattice::SublatticeSystem;
use crate::{rat_to_f64, Int};
use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;

#[derive(Clone, Copy, PartialEq, Debug, Serialize, Deserialize)]
pub enum Source {
    /// Independent standard normal coordinates.
    UnitGaussian,
    /// Uniform over the fundamental parallelepiped of `frame * Lambda_s`
    /// (scaled by beta): exactly uniform modulo every lattice in the
    /// system.
    UniformAligned { frame: u32 },
}

impl Source {
    /// Differential entropy per dimension, given the system and scale.
    pub fn entropy_per_dim(&self, sys: &SublatticeSystem, beta: f64) -> f64 {
        match self {
            Source::UnitGaussian => 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2(),
            Source::UniformAligned { frame } => {
                let l = sys.dim() as f64;
                let vol = (*frame as f64).powf(l)
                    * sys.product.cell_volume_f64()
                    * beta.powf(l);
                vol.log2() / l
            }
        }
    }
}

/// Runtime configuration of a measurement run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuantizerConfig {
    pub beta: f64,
    pub source: Source,
    pub seed: u64,
    pub samples: u64,
}

impl QuantizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0) {
            return Err(Error::input("beta must be positive"));
        }
        if self.samples < 1 {
            return Err(Error::input("need at least one sample"));
        }
        Ok(())
    }
}

/// The encoder/decoder pair for a solved design.
pub struct Quantizer<'a> {
    pub sys: &'a SublatticeSystem,
    pub labeling: &'a Labeling,
    pub beta: f64,
}

impl<'a> Quantizer<'a> {
    pub fn new(sys: &'a SublatticeSystem, labeling: &'a Labeling, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::input("beta must be positive"));
        }
        Ok(Quantizer { sys, labeling, beta })
    }

    /// Quantize and label: returns the fine-lattice point (base
    /// coefficients) and the two description indices (own coefficients in
    /// each sublattice).
    pub fn encode(&self, x: &[f64]) -> Result<(Vec<i64>, Vec<i64>, Vec<i64>)> {
        let scaled: Vec<f64> = x.iter().map(|v| v / self.beta).collect();
        let lam = self.sys.base.nearest_f64(&scaled)?;
        let lam_base = self.sys.base.to_base_coeffs(&lam);
        let (l1, l2) = self.labeling.label_of(&lam_base);
        let idx1 = self
            .sys
            .sub1
            .from_base_coeffs(&l1)
            .ok_or_else(|| Error::construction("label 1 is not in description lattice 1"))?;
        let idx2 = self
            .sys
            .sub2
            .from_base_coeffs(&l2)
            .ok_or_else(|| Error::construction("label 2 is not in description lattice 2"))?;
        Ok((lam_base, idx1, idx2))
    }

    /// Central decoder: invert the labeling.
    pub fn decode0(&self, idx1: &[i64], idx2: &[i64]) -> Result<Vec<i64>> {
        let l1 = self.sys.sub1.to_base_coeffs(idx1);
        let l2 = self.sys.sub2.to_base_coeffs(idx2);
        self.labeling.invert(&l1, &l2)
    }

    /// Side decoders: the sublattice points themselves (base coefficients).
    pub fn decode1(&self, idx1: &[i64]) -> Vec<i64> {
        self.sys.sub1.to_base_coeffs(idx1)
    }

    pub fn decode2(&self, idx2: &[i64]) -> Vec<i64> {
        self.sys.sub2.to_base_coeffs(idx2)
    }

    /// Ambient reconstruction of a base-coefficient point.
    pub fn reconstruct(&self, base_coeffs: &[i64]) -> Vec<f64> {
        let dim = self.sys.dim();
        let g = self.sys.base.generator_f64();
        (0..dim)
            .map(|j| {
                self.beta
                    * (0..dim)
                        .map(|i| base_coeffs[i] as f64 * g[i][j])
                        .sum::<f64>()
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Measured and predicted rate-distortion behavior of a design.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateDistortionReport {
    pub n_samples: u64,
    pub seed: u64,
    pub beta: f64,
    pub source: Source,
    /// Plug-in rates, bits per sample (per dimension).
    pub r0: Estimate,
    pub r1: Estimate,
    pub r2: Estimate,
    /// Closed-form rates from the volume/index laws.
    pub r0_analytic: f64,
    pub r1_analytic: f64,
    pub r2_analytic: f64,
    /// Measured distortions (dimension-normalized MSE).
    pub d0: Estimate,
    pub d1: Estimate,
    pub d2: Estimate,
    /// Closed-form excess distortions from the labeling table (exact sums
    /// scaled by beta^2).
    pub excess1_closed: f64,
    pub excess2_closed: f64,
    /// Set when the sample count is too small to resolve the index support.
    pub support_warning: bool,
    pub n1: i64,
    pub n2: i64,
}

impl RateDistortionReport {
    /// Side decoders can never beat the central decoder beyond noise.
    pub fn validate(&self) -> Result<()> {
        let slack1 = 3.0 * (self.d0.stderr + self.d1.stderr);
        let slack2 = 3.0 * (self.d0.stderr + self.d2.stderr);
        if self.d1.value + slack1 < self.d0.value || self.d2.value + slack2 < self.d0.value {
            return Err(Error::construction(
                "side distortion fell below the central distortion",
            ));
        }
        Ok(())
    }
}

struct Moments {
    n: u64,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    fn new() -> Self {
        Moments { n: 0, sum: 0.0, sum_sq: 0.0 }
    }

    fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    fn estimate(&self) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let var = (self.sum_sq / n - mean * mean).max(0.0);
        Estimate {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// Plug-in entropy of an observed key stream, with its asymptotic standard
/// error, in bits.
fn plugin_entropy(counts: &BTreeMap<Vec<i64>, u64>, total: u64) -> Estimate {
    let n = total as f64;
    let mut h = 0.0;
    let mut second = 0.0;
    for &c in counts.values() {
        let p = c as f64 / n;
        let lg = p.log2();
        h -= p * lg;
        second += p * lg * lg;
    }
    let var = (second - h * h).max(0.0);
    Estimate {
        value: h,
        stderr: (var / n).sqrt(),
    }
}

/// Run the quantizer over a sampled source and report empirical rates and
/// distortions alongside the analytic values. With `log`, emits one CSV row
/// per sample (`x, lambda, idx1, idx2`).
pub fn measure(
    sys: &SublatticeSystem,
    labeling: &Labeling,
    cfg: &QuantizerConfig,
    mut log: Option<&mut dyn Write>,
) -> Result<RateDistortionReport> {
    cfg.validate()?;
    let q = Quantizer::new(sys, labeling, cfg.beta)?;
    let dim = sys.dim();
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(cfg.seed);

    // Frame lattice for wrapped rate measurement on the aligned source.
    let wrap = match cfg.source {
        Source::UniformAligned { frame } => {
            let k = frame as i64;
            let scaled: crate::linalg::IMat = (0..dim)
                .map(|i| {
                    (0..dim)
                        .map(|j| Int::from(if i == j { k } else { 0 }))
                        .collect()
                })
                .collect();
            let frame_transform = imat_mul(&scaled, sys.product.transform());
            Some(CosetIndex::new(&frame_transform)?)
        }
        Source::UnitGaussian => None,
    };

    let gen = sys.base.generator_f64().clone();
    let prod_gen = sys.product.generator_f64().clone();
    let mut c0: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let mut c1: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let mut c2: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let mut m0 = Moments::new();
    let mut m1 = Moments::new();
    let mut m2 = Moments::new();
    if let Some(w) = log.as_deref_mut() {
        writeln!(w, "x,lambda,idx1,idx2")
            .map_err(|e| Error::construction(format!("sample log: {e}")))?;
    }
    let normal = rand_distr::StandardNormal;
    for _ in 0..cfg.samples {
        let x: Vec<f64> = match cfg.source {
            Source::UnitGaussian => (0..dim).map(|_| rng.sample::<f64, _>(normal)).collect(),
            Source::UniformAligned { frame } => {
                let r: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
                (0..dim)
                    .map(|j| {
                        cfg.beta
                            * frame as f64
                            * (0..dim).map(|i| r[i] * prod_gen[i][j]).sum::<f64>()
                    })
                    .collect()
            }
        };
        let (lam, idx1, idx2) = q.encode(&x)?;
        let l1 = q.decode1(&idx1);
        let l2 = q.decode2(&idx2);
        let recon = |p: &[i64]| -> Vec<f64> {
            (0..dim)
                .map(|j| {
                    cfg.beta * (0..dim).map(|i| p[i] as f64 * gen[i][j]).sum::<f64>()
                })
                .collect()
        };
        let y0 = recon(&lam);
        let y1 = recon(&l1);
        let y2 = recon(&l2);
        let mse = |y: &[f64]| -> f64 {
            y.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / dim as f64
        };
        m0.push(mse(&y0));
        m1.push(mse(&y1));
        m2.push(mse(&y2));
        match &wrap {
            Some(ci) => {
                *c0.entry(wrap_key(ci, &lam)).or_default() += 1;
                *c1.entry(wrap_key(ci, &l1)).or_default() += 1;
                *c2.entry(wrap_key(ci, &l2)).or_default() += 1;
            }
            None => {
                *c0.entry(lam.clone()).or_default() += 1;
                *c1.entry(l1.clone()).or_default() += 1;
                *c2.entry(l2.clone()).or_default() += 1;
            }
        }
        if let Some(w) = log.as_deref_mut() {
            let fmt = |v: &[i64]| {
                v.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
            };
            let xs = x
                .iter()
                .map(|v| format!("{v:.9}"))
                .collect::<Vec<_>>()
                .join(" ");
            writeln!(w, "{xs},{},{},{}", fmt(&lam), fmt(&idx1), fmt(&idx2))
                .map_err(|e| Error::construction(format!("sample log: {e}")))?;
        }
    }

    let l = dim as f64;
    let h = cfg.source.entropy_per_dim(sys, cfg.beta);
    let cell = sys.base.cell_volume_f64() * cfg.beta.powf(l);
    let r0_analytic = h - cell.log2() / l;
    let r1_analytic = r0_analytic - (sys.n1 as f64).log2() / l;
    let r2_analytic = r0_analytic - (sys.n2 as f64).log2() / l;

    let scale_rate = |e: Estimate| Estimate {
        value: e.value / l,
        stderr: e.stderr / l,
    };
    let r0 = scale_rate(plugin_entropy(&c0, cfg.samples));
    let r1 = scale_rate(plugin_entropy(&c1, cfg.samples));
    let r2 = scale_rate(plugin_entropy(&c2, cfg.samples));
    let support_warning = (c0.len() as u64) * 10 > cfg.samples;

    let report = RateDistortionReport {
        n_samples: cfg.samples,
        seed: cfg.seed,
        beta: cfg.beta,
        source: cfg.source,
        r0,
        r1,
        r2,
        r0_analytic,
        r1_analytic,
        r2_analytic,
        d0: m0.estimate(),
        d1: m1.estimate(),
        d2: m2.estimate(),
        excess1_closed: cfg.beta * cfg.beta * rat_to_f64(&labeling.excess1),
        excess2_closed: cfg.beta * cfg.beta * rat_to_f64(&labeling.excess2),
        support_warning,
        n1: sys.n1,
        n2: sys.n2,
    };
    report.validate()?;
    Ok(report)
}

fn wrap_key(ci: &CosetIndex, p: &[i64]) -> Vec<i64> {
    vec![ci.id_of(p) as i64]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::labeling::solve_labeling;
    use crate::lattice::Lattice;
    use crate::rings::GaussianInt;
    use crate::sublattice::{build_system, Xi};
    use crate::{rat_from_i64, Rat};

    fn paper_design() -> (SublatticeSystem, Labeling) {
        let sys = build_system(
            &Lattice::zn(2),
            Xi::Gauss(GaussianInt::new(2, 1)),
            Xi::Gauss(GaussianInt::new(3, 0)),
        )
        .unwrap();
        let lab = solve_labeling(&sys, &rat_from_i64(9), &rat_from_i64(5)).unwrap();
        (sys, lab)
    }

    #[test]
    fn encode_at_zero_and_shift_rule() {
        let (sys, lab) = paper_design();
        let q = Quantizer::new(&sys, &lab, 1.0).unwrap();
        let (lam, idx1, idx2) = q.encode(&[0.0, 0.0]).unwrap();
        assert_eq!(lam, vec![0, 0]);
        let (t1, t2) = lab.label_of(&[0, 0]);
        assert_eq!(q.decode1(&idx1), t1);
        assert_eq!(q.decode2(&idx2), t2);
        // A product-sublattice point maps to the zero labels shifted.
        let (_, j1, j2) = q.encode(&[6.0, 3.0]).unwrap();
        assert_eq!(q.decode1(&j1), vec![t1[0] + 6, t1[1] + 3]);
        assert_eq!(q.decode2(&j2), vec![t2[0] + 6, t2[1] + 3]);
    }

    #[test]
    fn decode_inverts_encode_everywhere() {
        let (sys, lab) = paper_design();
        let q = Quantizer::new(&sys, &lab, 0.25).unwrap();
        use rand::rngs::StdRng;
        use rand::{Rng, SeedableRng};
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..100_000 {
            let x = [rng.gen_range(-4.0..4.0), rng.gen_range(-4.0..4.0)];
            let (lam, idx1, idx2) = q.encode(&x).unwrap();
            assert_eq!(q.decode0(&idx1, &idx2).unwrap(), lam);
        }
    }

    #[test]
    fn trivial_design_has_equal_distortions() {
        let sys = build_system(
            &Lattice::zn(2),
            Xi::Gauss(GaussianInt::new(1, 0)),
            Xi::Gauss(GaussianInt::new(1, 0)),
        )
        .unwrap();
        let lab = solve_labeling(&sys, &Rat::one(), &Rat::one()).unwrap();
        let cfg = QuantizerConfig {
            beta: 0.5,
            source: Source::UniformAligned { frame: 16 },
            seed: 3,
            samples: 20_000,
        };
        let rep = measure(&sys, &lab, &cfg, None).unwrap();
        assert_eq!(rep.d1.value, rep.d0.value);
        assert_eq!(rep.d2.value, rep.d0.value);
        assert_eq!(rep.excess1_closed, 0.0);
        use num_traits::One;
        let _ = Rat::one();
    }

    #[test]
    fn rate_law_holds_on_aligned_uniform_source() {
        let (sys, lab) = paper_design();
        let cfg = QuantizerConfig {
            beta: 1.0,
            source: Source::UniformAligned { frame: 4 },
            seed: 11,
            samples: 200_000,
        };
        let rep = measure(&sys, &lab, &cfg, None).unwrap();
        let l = 2.0;
        for (ri, ni) in [(&rep.r1, sys.n1), (&rep.r2, sys.n2)] {
            let gap = (ri.value - (rep.r0.value - (ni as f64).log2() / l)).abs();
            assert!(gap <= 0.05, "rate law violated: gap {gap}");
        }
        // Analytic rate additivity.
        let overhead = rep.r1_analytic + rep.r2_analytic
            - (2.0 * rep.r0_analytic - ((sys.n1 * sys.n2) as f64).log2() / l);
        assert!(overhead.abs() < 1e-12);
        assert!(!rep.support_warning);
    }

    #[test]
    fn measured_excess_matches_closed_form_on_uniform_source() {
        let (sys, lab) = paper_design();
        let cfg = QuantizerConfig {
            beta: 0.7,
            source: Source::UniformAligned { frame: 8 },
            seed: 21,
            samples: 400_000,
        };
        let rep = measure(&sys, &lab, &cfg, None).unwrap();
        let tol1 = 3.0 * (rep.d1.stderr + rep.d0.stderr);
        assert!(
            ((rep.d1.value - rep.d0.value) - rep.excess1_closed).abs() <= tol1,
            "excess 1: measured {} vs closed {}",
            rep.d1.value - rep.d0.value,
            rep.excess1_closed
        );
        let tol2 = 3.0 * (rep.d2.stderr + rep.d0.stderr);
        assert!(((rep.d2.value - rep.d0.value) - rep.excess2_closed).abs() <= tol2);
    }

    #[test]
    fn beta_scaling_scales_distortions_and_shifts_rates() {
        let (sys, lab) = paper_design();
        let mk = |beta: f64| QuantizerConfig {
            beta,
            source: Source::UniformAligned { frame: 4 },
            seed: 5,
            samples: 50_000,
        };
        let a = measure(&sys, &lab, &mk(0.5), None).unwrap();
        let b = measure(&sys, &lab, &mk(1.0), None).unwrap();
        // Same seed: the uniform aligned stream scales exactly with beta.
        for (da, db) in [(&a.d0, &b.d0), (&a.d1, &b.d1), (&a.d2, &b.d2)] {
            assert!((4.0 * da.value - db.value).abs() < 1e-12 * db.value.max(1.0));
        }
        // The aligned source scales with the lattice, so its rates are
        // beta-invariant; at fixed source entropy the rate shift is
        // -log2(s) per scale step.
        assert_eq!(a.r0_analytic, b.r0_analytic);
        assert_eq!(a.r0.value, b.r0.value, "wrapped streams are identical");
        let h = Source::UnitGaussian.entropy_per_dim(&sys, 1.0);
        let rate_at = |beta: f64| h - (sys.base.cell_volume_f64() * beta * beta).log2() / 2.0;
        assert!((rate_at(0.5) - (rate_at(1.0) + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn central_distortion_tracks_second_moment_at_high_rate() {
        let (sys, lab) = paper_design();
        // Gaussian source at a small cell size.
        let cfg = QuantizerConfig {
            beta: 0.02,
            source: Source::UnitGaussian,
            seed: 17,
            samples: 300_000,
        };
        let rep = measure(&sys, &lab, &cfg, None).unwrap();
        let h = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2();
        let predict = (1.0 / 12.0) * 2f64.powf(2.0 * (h - rep.r0_analytic));
        let rel = (rep.d0.value - predict).abs() / predict;
        assert!(rel <= 0.05, "relative error {rel}");
    }
}
