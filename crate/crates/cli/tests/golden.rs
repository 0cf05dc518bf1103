//! Golden-file regression: the exported CSV schemas are frozen byte for
//! byte, and every emitted CSV parses back through the documented schema.

use mdlq_core::labeling::{labeling_to_csv, parse_labeling_csv, solve_labeling};
use mdlq_core::lattice::Lattice;
use mdlq_core::rat_from_i64;
use mdlq_core::sublattice::{build_system, Xi};
use std::process::Command;

#[test]
fn labeling_table_matches_golden_file() {
    let sys = build_system(&Lattice::zn(1), Xi::Int(3), Xi::Int(5)).unwrap();
    let lab = solve_labeling(&sys, &rat_from_i64(9), &rat_from_i64(5)).unwrap();
    let csv = labeling_to_csv(&sys, &lab).unwrap();
    let golden = include_str!("golden/labeling_z1_3_5_g9_5.csv");
    assert_eq!(csv, golden);
    // Round trip through the schema parser.
    let rows = parse_labeling_csv(&csv).unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().any(|r| r.coeffs == vec![4] && r.lam1 == vec![6]));
}

#[test]
fn catalog_outputs_match_golden_files() {
    let bin = env!("CARGO_BIN_EXE_mdlq");
    let dir = std::env::temp_dir().join(format!("mdlq-golden-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    for (lattice, limit, golden) in [
        ("z2", "20", include_str!("golden/catalog_z2_20.csv")),
        ("d4", "11", include_str!("golden/catalog_d4_11.csv")),
    ] {
        let out = dir.join(format!("catalog_{lattice}.csv"));
        let status = Command::new(bin)
            .args(["catalog", "--lattice", lattice, "--limit", limit])
            .args(["--out", out.to_str().unwrap()])
            .status()
            .unwrap();
        assert!(status.success());
        let got = std::fs::read_to_string(&out).unwrap();
        assert_eq!(got, golden, "catalog for {lattice} drifted from the golden file");
        // Schema: five named columns, parseable rows.
        let mut rdr = csv::Reader::from_reader(got.as_bytes());
        assert_eq!(
            rdr.headers().unwrap().iter().collect::<Vec<_>>(),
            vec!["kind", "L", "N", "xi", "clean"]
        );
        for rec in rdr.records() {
            let rec = rec.unwrap();
            rec[1].parse::<usize>().unwrap();
            rec[2].parse::<i64>().unwrap();
            assert!(["yes", "no", "unknown"].contains(&&rec[4]));
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn sweep_csv_parses_through_schema() {
    let bin = env!("CARGO_BIN_EXE_mdlq");
    let dir = std::env::temp_dir().join(format!("mdlq-sweep-schema-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let status = Command::new(bin)
        .args([
            "sweep", "--lattice", "z2", "--xi1", "2+1i", "--xi2", "3", "--gamma1", "9",
            "--gamma2", "5", "--r0", "5", "--sweep", "rate", "--r0-list", "5", "--samples",
            "20000", "--seed", "2",
        ])
        .args(["--out", dir.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let got = std::fs::read_to_string(dir.join("rd_curve.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(got.as_bytes());
    let headers: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    for col in [
        "gamma1", "gamma2", "r0_analytic", "d0", "d1", "d2", "d1_pred", "d2_pred",
        "ratio_meas", "ratio_pred", "ozarow_d0_ref", "gap_db",
    ] {
        assert!(headers.iter().any(|h| h == col), "missing column {col}");
    }
    for rec in rdr.records() {
        let rec = rec.unwrap();
        for idx in [3usize, 9, 11, 13] {
            rec[idx].parse::<f64>().unwrap();
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn verify_command_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_mdlq");
    // cld2 with M = 1 is quick and passes.
    let status = Command::new(bin)
        .args(["verify", "cld2", "--m", "1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    // Unknown suite is an input error.
    let status = Command::new(bin)
        .args(["verify", "nonsense"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
    // Bad catalog limit is an input error.
    let status = Command::new(bin)
        .args(["catalog", "--lattice", "z2", "--limit", "0", "--out", "/dev/null"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(1));
}
