//! Flag and config-file parsing: ring elements, exact rationals, lattice
//! names, and the merged experiment specification.

use anyhow::{anyhow, bail, Context, Result};
use mdlq_core::lattice::{Lattice, LatticeKind};
use mdlq_core::rings::{EisensteinInt, GaussianInt, QuatRing, Quaternion};
use mdlq_core::sublattice::Xi;
use mdlq_core::{Int, Rat};
use num_traits::ToPrimitive;
use serde::Deserialize;
use std::path::PathBuf;

/// Exact rational from "9", "-3/4" or a plain decimal like "0.25".
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Ok(r) = s.parse::<Rat>() {
        return Ok(r);
    }
    if let Some((int_part, frac_part)) = s.split_once('.') {
        let neg = int_part.starts_with('-');
        let int_part = int_part.trim_start_matches(['-', '+']);
        let digits = format!("{int_part}{frac_part}");
        let num: Int = digits
            .parse()
            .map_err(|_| anyhow!("bad decimal '{s}'"))?;
        let den = Int::from(10u32).pow(frac_part.len() as u32);
        let r = Rat::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    bail!("cannot parse '{s}' as a rational")
}

pub fn parse_lattice(name: &str) -> Result<Lattice> {
    let name = name.to_ascii_lowercase();
    match name.as_str() {
        "a2" => Ok(Lattice::a2()),
        "d4" => Ok(Lattice::d4()),
        _ => {
            let dim: usize = name
                .strip_prefix('z')
                .and_then(|d| d.parse().ok())
                .ok_or_else(|| anyhow!("unknown lattice '{name}' (use z1, z2, z4, a2, d4)"))?;
            Lattice::base(LatticeKind::Zn, dim).map_err(|e| anyhow!("{e}"))
        }
    }
}

/// Ring element syntax: integers ("3"), Gaussian ("2+1i", "1-1i"),
/// Eisenstein ("2+1w"), quaternions as sums of rational multiples of
/// 1, i, j, k ("1/2+1/2i+1/2j+5/2k", "2+1i+1j").
pub fn parse_xi(s: &str, lat: &Lattice) -> Result<Xi> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        bail!("empty ring element");
    }
    // Tokenize into signed terms.
    let mut terms: Vec<(Rat, char)> = vec![];
    let mut rest = s.as_str();
    while !rest.is_empty() {
        let sign = if let Some(r) = rest.strip_prefix('-') {
            rest = r;
            -1
        } else {
            if let Some(r) = rest.strip_prefix('+') {
                rest = r;
            }
            1
        };
        let end = rest
            .char_indices()
            .find(|(i, c)| *i > 0 && (*c == '+' || *c == '-'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let (tok, tail) = rest.split_at(end);
        rest = tail;
        let (coeff_str, unit) = match tok.chars().last() {
            Some(u @ ('i' | 'j' | 'k' | 'w')) => (&tok[..tok.len() - 1], u),
            _ => (tok, '1'),
        };
        let coeff = if coeff_str.is_empty() {
            Rat::from_integer(Int::from(1))
        } else {
            parse_rat(coeff_str)?
        };
        let coeff = if sign < 0 { -coeff } else { coeff };
        terms.push((coeff, unit));
    }
    let mut parts: std::collections::BTreeMap<char, Rat> = Default::default();
    for (c, u) in terms {
        let e = parts.entry(u).or_insert_with(|| Rat::new(Int::from(0), Int::from(1)));
        *e = e.clone() + c;
    }
    let get = |u: char| parts.get(&u).cloned().unwrap_or_else(|| Rat::new(Int::from(0), Int::from(1)));
    let has = |u: char| parts.contains_key(&u);
    let as_i64 = |r: &Rat| -> Result<i64> {
        if !r.is_integer() {
            bail!("expected an integer coefficient, got {r}");
        }
        r.numer().to_i64().context("coefficient out of range")
    };
    let as_twice = |r: &Rat| -> Result<i64> {
        let d = r * Rat::from_integer(Int::from(2));
        if !d.is_integer() {
            bail!("quaternion coordinates must be integers or halves");
        }
        d.numer().to_i64().context("coefficient out of range")
    };
    let quat = || -> Result<Xi> {
        let twice = [
            as_twice(&get('1'))?,
            as_twice(&get('i'))?,
            as_twice(&get('j'))?,
            as_twice(&get('k'))?,
        ];
        let ring = if twice.iter().all(|c| c % 2 == 0) {
            QuatRing::Lipschitz
        } else {
            QuatRing::Hurwitz
        };
        Ok(Xi::Quat(
            Quaternion::from_halves(twice, ring).map_err(|e| anyhow!("{e}"))?,
        ))
    };
    match (lat.kind(), lat.dim()) {
        (LatticeKind::Zn, 4) | (LatticeKind::D4, _) => quat(),
        (LatticeKind::A2, _) => {
            if has('i') || has('j') || has('k') {
                bail!("A2 elements use the w unit");
            }
            Ok(Xi::Eisen(EisensteinInt::new(
                as_i64(&get('1'))?,
                as_i64(&get('w'))?,
            )))
        }
        (LatticeKind::Zn, 2) => {
            if has('w') || has('j') || has('k') {
                bail!("Z^2 elements use the i unit");
            }
            Ok(Xi::Gauss(GaussianInt::new(
                as_i64(&get('1'))?,
                as_i64(&get('i'))?,
            )))
        }
        (LatticeKind::Zn, _) => {
            if has('i') || has('w') || has('j') || has('k') {
                bail!("scalar lattices take plain integers");
            }
            Ok(Xi::Int(as_i64(&get('1'))?))
        }
    }
}

/// Flat key-value config document mirroring the experiment spec; any CLI
/// flag overrides the file value.
#[derive(Clone, Debug, Default, Deserialize)]
pub struct ConfigFile {
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
}

pub fn load_config(path: &Option<PathBuf>) -> Result<ConfigFile> {
    match path {
        None => Ok(ConfigFile::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}
