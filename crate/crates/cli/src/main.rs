//! Experiment harness for asymmetric two-description lattice quantizers:
//! design a quantizer and export its labeling, sweep rate-distortion
//! curves, list admissible sublattice indices, and run the verification
//! suites.
//!
//! Exit codes: 0 success, 1 input error, 2 construction error,
//! 3 verification failure.

mod ops;
mod parse;

use clap::{Parser, Subcommand};
use ops::{cmd_catalog, cmd_design, cmd_sweep, cmd_verify, resolve_spec, SpecFlags, SweepKind};
use parse::parse_rat;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "mdlq", version, about = "Asymmetric two-description lattice quantizer toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SpecArgs {
    /// Flat TOML config; flags override file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base lattice: z1, z2, z4, a2, d4.
    #[arg(long)]
    lattice: Option<String>,
    /// Ring element for description 1 (e.g. "2+1i", "3", "1/2+1/2i+1/2j+5/2k").
    #[arg(long)]
    xi1: Option<String>,
    /// Ring element for description 2.
    #[arg(long)]
    xi2: Option<String>,
    /// Target index for description 1 (witness searched automatically).
    #[arg(long)]
    n1: Option<i64>,
    /// Target index for description 2.
    #[arg(long)]
    n2: Option<i64>,
    /// Weight on description 1 (rational or decimal).
    #[arg(long)]
    gamma1: Option<String>,
    /// Weight on description 2.
    #[arg(long)]
    gamma2: Option<String>,
    /// Loss probability of channel 1 (chooses weights analytically).
    #[arg(long)]
    p1: Option<String>,
    /// Loss probability of channel 2.
    #[arg(long)]
    p2: Option<String>,
    /// Lattice scale.
    #[arg(long)]
    beta: Option<f64>,
    /// Target central rate in bits/sample (gaussian source only).
    #[arg(long)]
    r0: Option<f64>,
    /// Source: gaussian | uniform.
    #[arg(long)]
    source: Option<String>,
    /// Frame multiplier of the aligned uniform source.
    #[arg(long)]
    frame: Option<u32>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Stream every sample to this CSV file (design only).
    #[arg(long)]
    sample_log: Option<PathBuf>,
}

impl SpecArgs {
    fn into_flags(self) -> SpecFlags {
        SpecFlags {
            config: self.config,
            lattice: self.lattice,
            xi1: self.xi1,
            xi2: self.xi2,
            n1: self.n1,
            n2: self.n2,
            gamma1: self.gamma1,
            gamma2: self.gamma2,
            p1: self.p1,
            p2: self.p2,
            beta: self.beta,
            r0: self.r0,
            source: self.source,
            frame: self.frame,
            samples: self.samples,
            seed: self.seed,
            out: self.out,
            sample_log: self.sample_log,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build a design and write system.json, labeling.csv, report.json.
    Design {
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Sweep weights or rates at fixed sublattices into rd_curve.csv.
    Sweep {
        #[command(flatten)]
        spec: SpecArgs,
        /// gamma | rate
        #[arg(long, default_value = "gamma")]
        sweep: String,
        /// Weight pairs for the gamma sweep, e.g. "1:9,1:3,1:1,3:1,9:1".
        #[arg(long)]
        gammas: Option<String>,
        /// Central rates for the rate sweep, e.g. "4,5,6,7".
        #[arg(long)]
        r0_list: Option<String>,
    },
    /// Admissible-index catalog for a lattice.
    Catalog {
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        limit: i64,
        /// Output CSV path.
        #[arg(long, default_value = "catalog.csv")]
        out: PathBuf,
    },
    /// Run a verification suite: properties | cld2 | lemma51.
    Verify {
        suite: String,
        /// Scale norm for the cld2 suite.
        #[arg(long, default_value_t = 3)]
        m: i64,
        /// Candidate-tuple cap for the cld2 suite.
        #[arg(long, default_value_t = 50_000_000)]
        cap: usize,
    },
}

fn run() -> anyhow::Result<i32> {
    let cli = Cli::parse();
    match cli.command {
        Command::Design { spec } => {
            let spec = resolve_spec(spec.into_flags())?;
            ops::report_channel_choice(&spec);
            cmd_design(&spec)?;
            Ok(0)
        }
        Command::Sweep {
            spec,
            sweep,
            gammas,
            r0_list,
        } => {
            let spec = resolve_spec(spec.into_flags())?;
            let kind = match sweep.as_str() {
                "gamma" => {
                    let default = "1:9,1:5,1:3,1:2,1:1,2:1,3:1,5:1,9:1";
                    let src = gammas.unwrap_or_else(|| default.to_string());
                    let mut pairs = vec![];
                    for tok in src.split(',') {
                        let (a, b) = tok
                            .split_once(':')
                            .ok_or_else(|| anyhow::anyhow!("weight pair '{tok}' is not a:b"))?;
                        pairs.push((parse_rat(a)?, parse_rat(b)?));
                    }
                    SweepKind::Gamma(pairs)
                }
                "rate" => {
                    let src = r0_list.unwrap_or_else(|| "4,5,6,7".to_string());
                    let mut r = vec![];
                    for tok in src.split(',') {
                        r.push(tok.trim().parse::<f64>()?);
                    }
                    SweepKind::Rate(r)
                }
                other => anyhow::bail!("unknown sweep kind '{other}'"),
            };
            cmd_sweep(&spec, kind)?;
            Ok(0)
        }
        Command::Catalog {
            lattice,
            limit,
            out,
        } => {
            cmd_catalog(&lattice, limit, &out)?;
            Ok(0)
        }
        Command::Verify { suite, m, cap } => {
            let ok = cmd_verify(&suite, m, cap)?;
            Ok(if ok { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            // Input errors from the core carry their own exit code; other
            // anyhow errors are treated as input problems unless the core
            // reports a construction failure.
            let code = e
                .downcast_ref::<mdlq_core::Error>()
                .map(|ce| ce.exit_code())
                .unwrap_or_else(|| {
                    if format!("{e}").contains("construction") {
                        2
                    } else {
                        1
                    }
                });
            ExitCode::from(code as u8)
        }
    }
}
