//! Command implementations: design a quantizer and write its artifacts,
//! sweep rate-distortion curves, emit catalogs, and run the verification
//! suites.

use anyhow::{anyhow, bail, Context, Result};
use mdlq_core::analysis::{
    gap_to_bound_db, optimal_gamma_ratio, ozarow_bound, predict, ChannelModel, PredictInputs,
};
use mdlq_core::labeling::{labeling_to_csv, solve_labeling, Labeling};
use mdlq_core::lattice::{Lattice, LatticeKind};
use mdlq_core::quantizer::{measure, QuantizerConfig, RateDistortionReport, Source};
use mdlq_core::rat_to_f64;
use mdlq_core::sublattice::{
    build_system, catalog_rows, clean_witness, SublatticeSystem, Xi,
};
use mdlq_core::suites::{all_pass, cld2_suite, lemma51_suite, properties_suite, CheckResult};
use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::parse::{load_config, parse_lattice, parse_rat, parse_xi};

/// Fully resolved experiment description.
pub struct ExperimentSpec {
    pub lattice: Lattice,
    pub lattice_name: String,
    pub xi1: Xi,
    pub xi2: Xi,
    pub gamma1: mdlq_core::Rat,
    pub gamma2: mdlq_core::Rat,
    pub channel: Option<ChannelModel>,
    pub beta: f64,
    pub r0_target: Option<f64>,
    pub source: Source,
    pub samples: u64,
    pub seed: u64,
    pub out: PathBuf,
    pub sample_log: Option<PathBuf>,
}

pub struct SpecFlags {
    pub config: Option<PathBuf>,
    pub lattice: Option<String>,
    pub xi1: Option<String>,
    pub xi2: Option<String>,
    pub n1: Option<i64>,
    pub n2: Option<i64>,
    pub gamma1: Option<String>,
    pub gamma2: Option<String>,
    pub p1: Option<String>,
    pub p2: Option<String>,
    pub beta: Option<f64>,
    pub r0: Option<f64>,
    pub source: Option<String>,
    pub frame: Option<u32>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<String>,
    pub sample_log: Option<PathBuf>,
}

fn gaussian_entropy_per_dim() -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).log2()
}

pub fn resolve_spec(flags: SpecFlags) -> Result<ExperimentSpec> {
    let file = load_config(&flags.config)?;
    let pick_s = |a: Option<String>, b: Option<String>| a.or(b);
    let lattice_name = pick_s(flags.lattice, file.lattice).unwrap_or_else(|| "z2".into());
    let lattice = parse_lattice(&lattice_name)?;

    let xi1_str = pick_s(flags.xi1, file.xi1);
    let xi2_str = pick_s(flags.xi2, file.xi2);
    let n1 = flags.n1.or(file.n1);
    let n2 = flags.n2.or(file.n2);
    let witness = |n: i64| -> Result<Xi> {
        let kind = lattice.kind();
        let target = if kind == LatticeKind::D4 {
            // Catalog entries for D4 are scale norms; accept either M or M^2.
            let m = (n as f64).sqrt().round() as i64;
            if m * m == n {
                m
            } else {
                n
            }
        } else {
            n
        };
        clean_witness(kind, lattice.dim(), target)
            .ok_or_else(|| anyhow!("no clean similar sublattice of index {n} for {lattice_name}"))
    };
    let xi1 = match (xi1_str, n1) {
        (Some(s), _) => parse_xi(&s, &lattice)?,
        (None, Some(n)) => witness(n)?,
        (None, None) => bail!("give --xi1 or --n1"),
    };
    let xi2 = match (xi2_str, n2) {
        (Some(s), _) => parse_xi(&s, &lattice)?,
        (None, Some(n)) => witness(n)?,
        (None, None) => bail!("give --xi2 or --n2"),
    };

    let g1 = pick_s(flags.gamma1, file.gamma1);
    let g2 = pick_s(flags.gamma2, file.gamma2);
    let p1 = pick_s(flags.p1, file.p1);
    let p2 = pick_s(flags.p2, file.p2);
    let (gamma1, gamma2, channel) = match (g1, g2, p1, p2) {
        (Some(a), Some(b), None, None) => (parse_rat(&a)?, parse_rat(&b)?, None),
        (None, None, Some(a), Some(b)) => {
            let (p1r, p2r) = (parse_rat(&a)?, parse_rat(&b)?);
            let one = mdlq_core::rat_from_i64(1);
            let num = (one.clone() - &p1r) * &p2r;
            let den = (one - &p2r) * &p1r;
            let ch = ChannelModel {
                p1: rat_to_f64(&p1r),
                p2: rat_to_f64(&p2r),
                source_power: 1.0,
            };
            // gamma1/gamma2 = (1-p1) p2 / ((1-p2) p1), kept exact.
            (num, den, Some(ch))
        }
        _ => bail!("give exactly one of (--gamma1, --gamma2) or (--p1, --p2)"),
    };

    let source_name = pick_s(flags.source, file.source).unwrap_or_else(|| "gaussian".into());
    let frame = flags.frame.or(file.frame).unwrap_or(8);
    let source = match source_name.as_str() {
        "gaussian" => Source::UnitGaussian,
        "uniform" => Source::UniformAligned { frame },
        other => bail!("unknown source '{other}' (gaussian or uniform)"),
    };

    let beta_flag = flags.beta.or(file.beta);
    let r0_flag = flags.r0.or(file.r0);
    let (beta, r0_target) = match (beta_flag, r0_flag) {
        (Some(b), None) => (b, None),
        (None, Some(r0)) => {
            if source != Source::UnitGaussian {
                bail!("--r0 requires the gaussian source (uniform sources scale with beta)");
            }
            (2f64.powf(gaussian_entropy_per_dim() - r0), Some(r0))
        }
        _ => bail!("give exactly one of --beta or --r0"),
    };

    Ok(ExperimentSpec {
        lattice,
        lattice_name,
        xi1,
        xi2,
        gamma1,
        gamma2,
        channel,
        beta,
        r0_target,
        source,
        samples: flags.samples.or(file.samples).unwrap_or(1_000_000),
        seed: flags.seed.or(file.seed).unwrap_or(1),
        out: PathBuf::from(pick_s(flags.out, file.out).unwrap_or_else(|| "out".into())),
        sample_log: flags.sample_log,
    })
}

#[derive(Serialize)]
struct SystemJson {
    lattice: String,
    dim: usize,
    xi1: String,
    xi2: String,
    n1: i64,
    n2: i64,
    n_join: i64,
    n_cap: i64,
    n_s: i64,
    n_lcm: Option<i64>,
    clean1: bool,
    clean2: bool,
    clean_s: bool,
    generator_sub1: Vec<Vec<String>>,
    generator_sub2: Vec<Vec<String>>,
    generator_product: Vec<Vec<String>>,
    gamma1: String,
    gamma2: String,
    beta: f64,
    seed: u64,
}

fn gen_strings(lat: &Lattice) -> Vec<Vec<String>> {
    lat.generator()
        .iter()
        .map(|r| r.iter().map(|s| s.to_string()).collect())
        .collect()
}

#[derive(Serialize)]
struct ReportJson {
    report: RateDistortionReport,
    prediction: Option<mdlq_core::analysis::HighRatePrediction>,
    ozarow_d0_ref: Option<f64>,
    gap_db: Option<f64>,
    labeling_cost: String,
    excess1_exact: String,
    excess2_exact: String,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}

fn build_design(
    spec: &ExperimentSpec,
) -> Result<(SublatticeSystem, Labeling)> {
    let sys = build_system(&spec.lattice, spec.xi1, spec.xi2)
        .map_err(anyhow::Error::new)
        .context("building system")?;
    let lab = solve_labeling(&sys, &spec.gamma1, &spec.gamma2)
        .map_err(anyhow::Error::new)
        .context("solving labeling")?;
    Ok((sys, lab))
}

fn measure_and_predict(
    spec: &ExperimentSpec,
    sys: &SublatticeSystem,
    lab: &Labeling,
    beta: f64,
    seed: u64,
) -> Result<(RateDistortionReport, Option<mdlq_core::analysis::HighRatePrediction>, Option<f64>, Option<f64>)> {
    let cfg = QuantizerConfig {
        beta,
        source: spec.source,
        seed,
        samples: spec.samples,
    };
    let mut log_file = match &spec.sample_log {
        Some(p) => {
            if let Some(parent) = p.parent() {
                fs::create_dir_all(parent)?;
            }
            Some(std::io::BufWriter::new(fs::File::create(p)?))
        }
        None => None,
    };
    let report = measure(
        sys,
        lab,
        &cfg,
        log_file.as_mut().map(|w| w as &mut dyn Write),
    )
    .map_err(anyhow::Error::new)
    .context("measuring")?;
    let h_p = spec.source.entropy_per_dim(sys, beta);
    let g_base = match sys.base.kind() {
        LatticeKind::Zn => 1.0 / 12.0,
        LatticeKind::A2 => 0.080_187_54,
        LatticeKind::D4 => 0.076_603_2,
    };
    let inputs = PredictInputs {
        gamma1: rat_to_f64(&spec.gamma1),
        gamma2: rat_to_f64(&spec.gamma2),
        r0: report.r0_analytic,
        r1: report.r1_analytic,
        r2: report.r2_analytic,
        h_p,
        g_s: g_base,
        g_base,
        dim: sys.dim(),
        n1: sys.n1,
        n2: sys.n2,
        rho_cap_sq_normalized: Some(rat_to_f64(&sys.meet.covering_radius_sq_normalized())),
    };
    let prediction = predict(&inputs).ok();
    let (ozarow_ref, gap) = if spec.source == Source::UnitGaussian {
        let b = ozarow_bound(
            report.r1_analytic,
            report.r2_analytic,
            report.d1.value,
            report.d2.value,
        )
        .ok();
        let g = gap_to_bound_db(
            report.r1_analytic,
            report.r2_analytic,
            report.d0.value,
            report.d1.value,
            report.d2.value,
        )
        .ok();
        (b, g)
    } else {
        (None, None)
    };
    Ok((report, prediction, ozarow_ref, gap))
}

/// `design`: build the system, solve the labeling, measure, and write
/// `system.json`, `labeling.csv` and `report.json`.
pub fn cmd_design(spec: &ExperimentSpec) -> Result<()> {
    let (sys, lab) = build_design(spec)?;
    let sys_json = SystemJson {
        lattice: spec.lattice_name.clone(),
        dim: sys.dim(),
        xi1: spec.xi1.to_string(),
        xi2: spec.xi2.to_string(),
        n1: sys.n1,
        n2: sys.n2,
        n_join: sys.n_join,
        n_cap: sys.n_cap,
        n_s: sys.n_s,
        n_lcm: sys.n_lcm,
        clean1: sys.clean1,
        clean2: sys.clean2,
        clean_s: sys.clean_s,
        generator_sub1: gen_strings(&sys.sub1),
        generator_sub2: gen_strings(&sys.sub2),
        generator_product: gen_strings(&sys.product),
        gamma1: spec.gamma1.to_string(),
        gamma2: spec.gamma2.to_string(),
        beta: spec.beta,
        seed: spec.seed,
    };
    write_atomic(
        &spec.out.join("system.json"),
        (serde_json::to_string_pretty(&sys_json)? + "\n").as_bytes(),
    )?;
    let csv = labeling_to_csv(&sys, &lab).map_err(anyhow::Error::new)?;
    write_atomic(&spec.out.join("labeling.csv"), csv.as_bytes())?;
    let (report, prediction, ozarow_ref, gap) =
        measure_and_predict(spec, &sys, &lab, spec.beta, spec.seed)?;
    let rj = ReportJson {
        report,
        prediction,
        ozarow_d0_ref: ozarow_ref,
        gap_db: gap,
        labeling_cost: lab.total_cost.to_string(),
        excess1_exact: lab.excess1.to_string(),
        excess2_exact: lab.excess2.to_string(),
    };
    write_atomic(
        &spec.out.join("report.json"),
        (serde_json::to_string_pretty(&rj)? + "\n").as_bytes(),
    )?;
    println!(
        "design: N1={} N2={} Ns={} cost={} -> {}",
        sys.n1,
        sys.n2,
        sys.n_s,
        lab.total_cost,
        spec.out.display()
    );
    Ok(())
}

pub enum SweepKind {
    Gamma(Vec<(mdlq_core::Rat, mdlq_core::Rat)>),
    Rate(Vec<f64>),
}

/// `sweep`: hold the sublattices fixed and vary either the weight pair or
/// the target rate; one CSV row per point.
pub fn cmd_sweep(spec: &ExperimentSpec, kind: SweepKind) -> Result<()> {
    let sys = build_system(&spec.lattice, spec.xi1, spec.xi2)
        .map_err(anyhow::Error::new)
        .context("building system")?;
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record([
        "gamma1",
        "gamma2",
        "beta",
        "r0_analytic",
        "r1_analytic",
        "r2_analytic",
        "r0_meas",
        "r1_meas",
        "r2_meas",
        "d0",
        "d0_stderr",
        "d1",
        "d1_stderr",
        "d2",
        "d2_stderr",
        "d0_pred",
        "d1_pred",
        "d2_pred",
        "ratio_meas",
        "ratio_pred",
        "ozarow_d0_ref",
        "gap_db",
    ])?;
    let mut write_point = |g1: &mdlq_core::Rat,
                           g2: &mdlq_core::Rat,
                           beta: f64,
                           seed: u64|
     -> Result<(f64, f64)> {
        let lab = solve_labeling(&sys, g1, g2).map_err(anyhow::Error::new)?;
        let mut sub_spec = ExperimentSpec {
            gamma1: g1.clone(),
            gamma2: g2.clone(),
            ..clone_spec(spec)
        };
        sub_spec.beta = beta;
        let (report, prediction, ozarow_ref, gap) =
            measure_and_predict(&sub_spec, &sys, &lab, beta, seed)?;
        let ratio_meas = report.d1.value / report.d2.value;
        let fmt = |v: f64| format!("{v}");
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        w.write_record([
            g1.to_string(),
            g2.to_string(),
            fmt(beta),
            fmt(report.r0_analytic),
            fmt(report.r1_analytic),
            fmt(report.r2_analytic),
            fmt(report.r0.value),
            fmt(report.r1.value),
            fmt(report.r2.value),
            fmt(report.d0.value),
            fmt(report.d0.stderr),
            fmt(report.d1.value),
            fmt(report.d1.stderr),
            fmt(report.d2.value),
            fmt(report.d2.stderr),
            opt(prediction.as_ref().map(|p| p.d0_pred)),
            opt(prediction.as_ref().map(|p| p.d1_pred)),
            opt(prediction.as_ref().map(|p| p.d2_pred)),
            fmt(ratio_meas),
            opt(prediction.as_ref().and_then(|p| p.ratio_pred)),
            opt(ozarow_ref),
            opt(gap),
        ])?;
        Ok((report.d1.value, report.d2.value))
    };
    match kind {
        SweepKind::Gamma(pairs) => {
            let mut last_d1 = f64::INFINITY;
            for (g1, g2) in &pairs {
                let (d1, _d2) = write_point(g1, g2, spec.beta, spec.seed)?;
                // Raising gamma1/gamma2 must not worsen side 1.
                if d1 > last_d1 * (1.0 + 0.02) {
                    eprintln!("warning: side-1 distortion not monotone at gamma {g1}:{g2}");
                }
                last_d1 = d1;
            }
        }
        SweepKind::Rate(r0s) => {
            for r0 in r0s {
                let beta = 2f64.powf(gaussian_entropy_per_dim() - r0);
                write_point(&spec.gamma1, &spec.gamma2, beta, spec.seed)?;
            }
        }
    }
    let data = String::from_utf8(w.into_inner()?)?;
    write_atomic(&spec.out.join("rd_curve.csv"), data.as_bytes())?;
    println!("sweep -> {}", spec.out.join("rd_curve.csv").display());
    Ok(())
}

fn clone_spec(s: &ExperimentSpec) -> ExperimentSpec {
    ExperimentSpec {
        sample_log: None,
        lattice: s.lattice.clone(),
        lattice_name: s.lattice_name.clone(),
        xi1: s.xi1,
        xi2: s.xi2,
        gamma1: s.gamma1.clone(),
        gamma2: s.gamma2.clone(),
        channel: s.channel,
        beta: s.beta,
        r0_target: s.r0_target,
        source: s.source,
        samples: s.samples,
        seed: s.seed,
        out: s.out.clone(),
    }
}

/// `catalog`: admissible-index table with witnesses and clean flags.
pub fn cmd_catalog(lattice: &str, limit: i64, out: &Path) -> Result<()> {
    let lat = parse_lattice(lattice)?;
    let rows = catalog_rows(lat.kind(), lat.dim(), limit).map_err(anyhow::Error::new)?;
    let mut w = csv::Writer::from_writer(vec![]);
    w.write_record(["kind", "L", "N", "xi", "clean"])?;
    for r in &rows {
        w.write_record([
            r.kind.clone(),
            r.dim.to_string(),
            r.n.to_string(),
            r.xi.clone(),
            r.clean.clone(),
        ])?;
    }
    let data = String::from_utf8(w.into_inner()?)?;
    write_atomic(out, data.as_bytes())?;
    println!("catalog: {} rows -> {}", rows.len(), out.display());
    Ok(())
}

/// `verify`: run a named suite, print one line per check, and fail the
/// process when any check fails.
pub fn cmd_verify(suite: &str, m: i64, cap: usize) -> Result<bool> {
    let results: Vec<CheckResult> = match suite {
        "properties" => properties_suite().map_err(anyhow::Error::new)?,
        "cld2" => cld2_suite(m, cap).map_err(anyhow::Error::new)?,
        "lemma51" => lemma51_suite().map_err(anyhow::Error::new)?,
        other => bail!("unknown suite '{other}' (properties, cld2, lemma51)"),
    };
    for r in &results {
        let tag = if r.pass { "PASS" } else { "FAIL" };
        if r.detail.is_empty() {
            println!("{tag} {}", r.name);
        } else {
            println!("{tag} {} — {}", r.name, r.detail);
        }
    }
    Ok(all_pass(&results))
}

/// Report the analytically optimal weights for a loss pair (used when the
/// spec carries channel probabilities instead of weights).
pub fn report_channel_choice(spec: &ExperimentSpec) {
    if let Some(ch) = &spec.channel {
        if let Ok(choice) = optimal_gamma_ratio(ch) {
            println!(
                "channel (p1={}, p2={}): gamma1/gamma2 = {} (second derivative {:.6} > 0)",
                ch.p1, ch.p2, choice.ratio, choice.second_derivative
            );
        }
    }
}
