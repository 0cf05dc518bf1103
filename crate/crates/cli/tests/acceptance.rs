//! Acceptance gate: one test per criterion, each printing a PASS line with
//! the measured values (run with `--nocapture` to see them all).

use mdlq_core::analysis::{gap_to_bound_db, optimal_gamma_ratio, ChannelModel};
use mdlq_core::assignment::{brute_force_min_cost, hungarian, ssp_min_cost};
use mdlq_core::labeling::{
    discrete_voronoi, neighbor_list, scaled_cost_matrix, solve_labeling, LabelingContext,
    TieMode,
};
use mdlq_core::lattice::{Lattice, LatticeKind};
use mdlq_core::linalg::hnf_basis;
use mdlq_core::quantizer::{measure, QuantizerConfig, Source};
use mdlq_core::rings::{GaussianInt, Quaternion};
use mdlq_core::sublattice::{
    build_system, clean_index_catalog, exhaustive_clean_search_d4, is_clean,
    similar_index_catalog, similar_sublattice, Side, Xi,
};
use mdlq_core::suites::{all_pass, lemma51_suite, properties_suite};
use mdlq_core::{rat_from_i64, rat_to_f64};
use std::process::Command;
use std::time::Instant;

fn paper_system() -> mdlq_core::sublattice::SublatticeSystem {
    build_system(
        &Lattice::zn(2),
        Xi::Gauss(GaussianInt::new(2, 1)),
        Xi::Gauss(GaussianInt::new(3, 0)),
    )
    .unwrap()
}

fn gaussian_h() -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2()
}

#[test]
fn criterion_01_worked_example_reproduction() {
    let t = Instant::now();
    let sys = paper_system();
    let v0 = discrete_voronoi(&sys.base, &sys.product, &[0, 0], TieMode::Strict).unwrap();
    assert_eq!(v0.len(), 45);
    let ctx = LabelingContext::new(&sys, TieMode::Strict).unwrap();
    assert_eq!(ctx.p1.len(), 9);
    assert_eq!(ctx.p2.len(), 5);
    let mut l1 = neighbor_list(&sys, 1, &[2, 1]).unwrap();
    l1.sort();
    let mut expect = vec![vec![0, 0], vec![0, 3], vec![3, 3], vec![6, 0], vec![3, 0]];
    expect.sort();
    assert_eq!(l1, expect);
    let a = ctx.class_of_edge(&[-2, -1], &[-6, 0]).unwrap();
    let b = ctx.class_of_edge(&[4, 2], &[0, 3]).unwrap();
    assert_eq!(a, b, "the two named edges share a class");
    assert!(t.elapsed().as_secs_f64() < 1.0, "runtime budget");
    println!(
        "PASS criterion 1: worked example (45/9/5 counts, neighbor set, shared class) in {:?}",
        t.elapsed()
    );
}

#[test]
fn criterion_02_catalog_sequences_verbatim() {
    let t = Instant::now();
    assert_eq!(
        similar_index_catalog(LatticeKind::Zn, 2, 20).unwrap(),
        vec![1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20]
    );
    assert_eq!(
        clean_index_catalog(LatticeKind::Zn, 2, 45).unwrap(),
        vec![1, 5, 9, 13, 17, 25, 29, 37, 41, 45]
    );
    assert_eq!(
        similar_index_catalog(LatticeKind::A2, 2, 27).unwrap(),
        vec![1, 3, 4, 7, 9, 12, 13, 16, 19, 21, 25, 27]
    );
    assert_eq!(
        clean_index_catalog(LatticeKind::A2, 2, 67).unwrap(),
        vec![1, 7, 13, 19, 31, 37, 43, 49, 61, 67]
    );
    assert_eq!(
        clean_index_catalog(LatticeKind::D4, 4, 53).unwrap(),
        vec![1, 5, 7, 13, 17, 25, 29, 37, 41, 53]
    );
    assert!(t.elapsed().as_secs_f64() < 5.0);
    println!("PASS criterion 2: catalog sequences match verbatim in {:?}", t.elapsed());
}

#[test]
fn criterion_03_parity_rule_cross_check() {
    let t = Instant::now();
    // Z^2: every similar sublattice with index <= 81 (both chiralities).
    let z2 = Lattice::zn(2);
    let mut seen = std::collections::BTreeSet::new();
    let mut checked = 0;
    for a in -9i64..=9 {
        for b in -9i64..=9 {
            let n = a * a + b * b;
            if n == 0 || n > 81 {
                continue;
            }
            let Ok((sub, _)) =
                similar_sublattice(&z2, &Xi::Gauss(GaussianInt::new(a, b)), Side::Left)
            else {
                continue;
            };
            if !seen.insert(format!("{:?}", hnf_basis(sub.transform()))) {
                continue;
            }
            let clean = is_clean(&z2, &sub).unwrap();
            assert_eq!(clean, n % 2 == 1, "Z^2 index {n}");
            checked += 1;
        }
    }
    // Z^4: all quaternion multiples, left and right, with index m^2 <= 81.
    let z4 = Lattice::zn(4);
    let mut seen4 = std::collections::BTreeSet::new();
    let mut checked4 = 0;
    for m in 1i64..=9 {
        for w in -3i64..=3 {
            for x in -3i64..=3 {
                for y in -3i64..=3 {
                    for z in -3i64..=3 {
                        if w * w + x * x + y * y + z * z != m {
                            continue;
                        }
                        let q = Quaternion::from_ints(w, x, y, z);
                        for side in [Side::Left, Side::Right] {
                            let Ok((sub, _)) = similar_sublattice(&z4, &Xi::Quat(q), side)
                            else {
                                continue;
                            };
                            if !seen4.insert(format!("{:?}", hnf_basis(sub.transform()))) {
                                continue;
                            }
                            let clean = is_clean(&z4, &sub).unwrap();
                            assert_eq!(clean, (m * m) % 2 == 1, "Z^4 index {}", m * m);
                            checked4 += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(checked >= 40 && checked4 >= 60, "{checked} and {checked4} sublattices");
    assert!(t.elapsed().as_secs_f64() < 120.0);
    println!(
        "PASS criterion 3: clean iff odd index on {checked} Z^2 and {checked4} Z^4 sublattices in {:?}",
        t.elapsed()
    );
}

#[test]
fn criterion_04_d4_search_confirms_no_clean_index_nine() {
    let t = Instant::now();
    let report = exhaustive_clean_search_d4(3, 50_000_000).unwrap();
    assert!(!report.exists_clean);
    assert!(report.sublattices_examined > 0);
    assert!(t.elapsed().as_secs_f64() < 600.0);
    println!(
        "PASS criterion 4: no clean similar sublattice of index 9 ({} sublattices examined) in {:?}",
        report.sublattices_examined,
        t.elapsed()
    );
}

#[test]
fn criterion_05_assignment_optimality_oracles() {
    let t = Instant::now();
    // Z^1 (3,5): solver total equals the bitmask brute-force optimum.
    let sys1 = build_system(&Lattice::zn(1), Xi::Int(3), Xi::Int(5)).unwrap();
    let g1 = rat_from_i64(9);
    let g2 = rat_from_i64(5);
    let (cost1, scale1) = scaled_cost_matrix(&sys1, &g1, &g2, TieMode::Strict).unwrap();
    let lab1 = solve_labeling(&sys1, &g1, &g2).unwrap();
    let scaled_total1 = (lab1.total_cost.clone() * scale1 * rat_from_i64(cost1.len() as i64))
        .to_integer();
    use num_traits::ToPrimitive;
    assert_eq!(
        scaled_total1.to_i128().unwrap(),
        brute_force_min_cost(&cost1)
    );
    // Z^2 (5,9) with the worked-example weights: two independent exact
    // algorithms agree on the 45x45 instance.
    let sys2 = paper_system();
    let (cost2, scale2) = scaled_cost_matrix(&sys2, &g1, &g2, TieMode::Strict).unwrap();
    let h = hungarian(&cost2);
    let s = ssp_min_cost(&cost2);
    assert_eq!(h.total, s.total, "independent solvers agree");
    let lab2 = solve_labeling(&sys2, &g1, &g2).unwrap();
    let scaled_total2 = (lab2.total_cost.clone() * scale2 * rat_from_i64(cost2.len() as i64))
        .to_integer();
    assert_eq!(scaled_total2.to_i128().unwrap(), h.total);
    assert!(t.elapsed().as_secs_f64() < 60.0);
    println!(
        "PASS criterion 5: solver equals brute force (15) and independent solver (45) in {:?}",
        t.elapsed()
    );
}

#[test]
fn criterion_06_property_suite() {
    let t = Instant::now();
    let results = properties_suite().unwrap();
    for r in &results {
        assert!(r.pass, "{}: {}", r.name, r.detail);
    }
    assert!(t.elapsed().as_secs_f64() < 120.0);
    println!(
        "PASS criterion 6: {} structural checks hold on all systems in {:?}",
        results.len(),
        t.elapsed()
    );
}

#[test]
fn criterion_07_rate_law_on_uniform_source() {
    let t = Instant::now();
    let sys = paper_system();
    let lab = solve_labeling(&sys, &rat_from_i64(9), &rat_from_i64(5)).unwrap();
    let cfg = QuantizerConfig {
        beta: 1.0,
        source: Source::UniformAligned { frame: 8 },
        seed: 20240601,
        samples: 1_000_000,
    };
    let rep = measure(&sys, &lab, &cfg, None).unwrap();
    let l = 2.0;
    let gap1 = (rep.r1.value - (rep.r0.value - (sys.n1 as f64).log2() / l)).abs();
    let gap2 = (rep.r2.value - (rep.r0.value - (sys.n2 as f64).log2() / l)).abs();
    assert!(gap1 <= 0.05, "description 1 off by {gap1}");
    assert!(gap2 <= 0.05, "description 2 off by {gap2}");
    assert!(t.elapsed().as_secs_f64() < 60.0);
    println!(
        "PASS criterion 7: rate-index law within ({gap1:.4}, {gap2:.4}) bits at 1e6 samples in {:?}",
        t.elapsed()
    );
}

#[test]
fn criterion_08_high_rate_ratio_law() {
    let t = Instant::now();
    let sys = paper_system();
    let lab = solve_labeling(&sys, &rat_from_i64(9), &rat_from_i64(5)).unwrap();
    // Scale for a central rate of 6 bits/sample on the unit Gaussian.
    let r0 = 6.0;
    let beta = 2f64.powf(gaussian_h() - r0);
    let cfg = QuantizerConfig {
        beta,
        source: Source::UnitGaussian,
        seed: 99,
        samples: 1_000_000,
    };
    let rep = measure(&sys, &lab, &cfg, None).unwrap();
    assert!(rep.r0_analytic >= 6.0 - 1e-9);
    let ratio = rep.d1.value / rep.d2.value;
    let target = 25.0 / 81.0;
    let rel = (ratio - target).abs() / target;
    assert!(rel <= 0.20, "measured ratio {ratio:.4} is {rel:.3} away from {target:.4}");
    assert!(t.elapsed().as_secs_f64() < 120.0);
    println!(
        "PASS criterion 8: measured side ratio {ratio:.4} within {:.1}% of 25/81 in {:?}",
        rel * 100.0,
        t.elapsed()
    );
}

#[test]
fn criterion_09_gap_to_gaussian_bound() {
    let t = Instant::now();
    let sys = paper_system();
    let lab = solve_labeling(&sys, &rat_from_i64(9), &rat_from_i64(5)).unwrap();
    let mut gaps = vec![];
    for r0 in [5.0, 6.0] {
        let beta = 2f64.powf(gaussian_h() - r0);
        let cfg = QuantizerConfig {
            beta,
            source: Source::UnitGaussian,
            seed: 7 + r0 as u64,
            samples: 600_000,
        };
        let rep = measure(&sys, &lab, &cfg, None).unwrap();
        let gap = gap_to_bound_db(
            rep.r1_analytic,
            rep.r2_analytic,
            rep.d0.value,
            rep.d1.value,
            rep.d2.value,
        )
        .unwrap();
        assert!(
            (2.0..=4.0).contains(&gap),
            "gap {gap:.3} dB at r0 = {r0} outside 3 +- 1 dB"
        );
        gaps.push(gap);
    }
    assert!(t.elapsed().as_secs_f64() < 300.0);
    println!(
        "PASS criterion 9: side distortions sit {:.2} / {:.2} dB above the bound in {:?}",
        gaps[0],
        gaps[1],
        t.elapsed()
    );
}

#[test]
fn criterion_10_scaled_family_deviation_trend() {
    let t = Instant::now();
    let results = lemma51_suite().unwrap();
    assert!(all_pass(&results), "{results:?}");
    assert!(t.elapsed().as_secs_f64() < 120.0);
    let detail: Vec<String> = results
        .iter()
        .filter(|r| r.name.starts_with("scaled"))
        .map(|r| r.detail.clone())
        .collect();
    println!(
        "PASS criterion 10: deviation trend [{}] in {:?}",
        detail.join("; "),
        t.elapsed()
    );
}

#[test]
fn criterion_11_optimal_weight_claim() {
    let t = Instant::now();
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    let mut rng = StdRng::seed_from_u64(2718);
    for trial in 0..100 {
        let (p1, p2) = (rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98));
        // Random positive side coefficients; the quadratic form to minimize
        // is b1 g^2 + b2 (1-g)^2 with b_i = (1-p_j) p_i c.
        let c: f64 = rng.gen_range(0.1..10.0);
        let b1 = (1.0 - p2) * p1 * c;
        let b2 = (1.0 - p1) * p2 * c;
        let f = |g: f64| b1 * g * g + b2 * (1.0 - g) * (1.0 - g);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        let (mut f1, mut f2) = (f(x1), f(x2));
        for _ in 0..300 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - phi * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + phi * (hi - lo);
                f2 = f(x2);
            }
        }
        let g_star = 0.5 * (lo + hi);
        let numeric = g_star / (1.0 - g_star);
        let analytic = optimal_gamma_ratio(&ChannelModel {
            p1,
            p2,
            source_power: 1.0,
        })
        .unwrap()
        .ratio;
        assert!(
            (numeric - analytic).abs() <= 1e-6 * analytic.max(1.0),
            "trial {trial}: {numeric} vs {analytic}"
        );
    }
    assert!(t.elapsed().as_secs_f64() < 5.0);
    println!(
        "PASS criterion 11: analytic weights match numeric minimization on 100 channels in {:?}",
        t.elapsed()
    );
}

#[test]
fn criterion_12_byte_identical_reruns() {
    let t = Instant::now();
    let bin = env!("CARGO_BIN_EXE_mdlq");
    let base = std::env::temp_dir().join(format!("mdlq-accept-{}", std::process::id()));
    std::fs::create_dir_all(&base).unwrap();
    let run = |out: &std::path::Path| {
        let status = Command::new(bin)
            .args([
                "design",
                "--lattice",
                "z2",
                "--xi1",
                "2+1i",
                "--xi2",
                "3",
                "--gamma1",
                "9",
                "--gamma2",
                "5",
                "--beta",
                "0.05",
                "--source",
                "gaussian",
                "--samples",
                "100000",
                "--seed",
                "424242",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (a, b) = (base.join("a"), base.join("b"));
    run(&a);
    run(&b);
    for name in ["system.json", "labeling.csv", "report.json"] {
        let fa = std::fs::read(a.join(name)).unwrap();
        let fb = std::fs::read(b.join(name)).unwrap();
        assert_eq!(fa, fb, "{name} differs between identical runs");
    }
    // Sweep artifacts as well.
    let run_sweep = |out: &std::path::Path| {
        let status = Command::new(bin)
            .args([
                "sweep",
                "--lattice",
                "z2",
                "--xi1",
                "2+1i",
                "--xi2",
                "3",
                "--gamma1",
                "9",
                "--gamma2",
                "5",
                "--r0",
                "5",
                "--sweep",
                "rate",
                "--r0-list",
                "5,6",
                "--samples",
                "50000",
                "--seed",
                "3",
                "--out",
                out.to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    };
    let (sa, sb) = (base.join("sa"), base.join("sb"));
    run_sweep(&sa);
    run_sweep(&sb);
    assert_eq!(
        std::fs::read(sa.join("rd_curve.csv")).unwrap(),
        std::fs::read(sb.join("rd_curve.csv")).unwrap()
    );
    let _ = std::fs::remove_dir_all(&base);
    println!(
        "PASS criterion 12: byte-identical artifacts across reruns in {:?}",
        t.elapsed()
    );
}
