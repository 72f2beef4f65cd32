//! δ-graded knot Floer reference data for torus knots and the rank and
//! thinness comparisons against reduced Khovanov homology.
//!
//! Torus knots are L-space knots, so `HFK̂` is a staircase read off from
//! the Alexander polynomial: one generator per nonzero coefficient, with
//! Maslov gradings fixed by the gaps between consecutive exponents.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::khovanov::{KhHomology, PoincarePolynomial};
use crate::spectral::{admissible_differentials, Arrow};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReferenceError {
    #[error("T({0},{1}) is not a knot: need coprime 2 <= p < q")]
    NotKnot(u32, u32),
    #[error("reference table: {0}")]
    Table(String),
    #[error("unknown knot {0}")]
    Unknown(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Values given directly in the table.
    Tabulated,
    /// Computed from the Alexander polynomial.
    Staircase,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnotRecord {
    pub name: String,
    pub p: u32,
    pub q: u32,
    pub strands: usize,
    pub braid: String,
    pub source: Source,
    pub delta_hfk: PoincarePolynomial,
}

#[derive(Deserialize)]
struct RawTable {
    schema: u32,
    knots: Vec<RawRecord>,
}

#[derive(Deserialize)]
struct RawRecord {
    name: String,
    p: u32,
    q: u32,
    strands: usize,
    braid: String,
    source: Source,
    #[serde(default)]
    delta_hfk: Option<BTreeMap<i64, usize>>,
}

const TABLE: &str = include_str!("../data/reference_knots.json");

/// Parse a table in the bundled format, filling staircase entries.
pub fn parse_table(text: &str) -> Result<Vec<KnotRecord>, ReferenceError> {
    let raw: RawTable = serde_json::from_str(text).map_err(|e| ReferenceError::Table(e.to_string()))?;
    if raw.schema != 1 {
        return Err(ReferenceError::Table(format!("schema {}", raw.schema)));
    }
    raw.knots
        .into_iter()
        .map(|r| {
            let delta_hfk = match (r.source, r.delta_hfk) {
                (_, Some(c)) => PoincarePolynomial::from_pairs(&c.into_iter().collect::<Vec<_>>()),
                (Source::Staircase, None) => torus_hfk_delta(r.p, r.q)?,
                (Source::Tabulated, None) => return Err(ReferenceError::Table(format!("{} has no values", r.name))),
            };
            if delta_hfk.coefficients.values().any(|&c| c == 0) {
                return Err(ReferenceError::Table(format!("{} has a zero coefficient", r.name)));
            }
            Ok(KnotRecord {
                name: r.name,
                p: r.p,
                q: r.q,
                strands: r.strands,
                braid: r.braid,
                source: r.source,
                delta_hfk,
            })
        })
        .collect()
}

/// The bundled table.
pub fn reference_knots() -> &'static [KnotRecord] {
    static CELL: OnceLock<Vec<KnotRecord>> = OnceLock::new();
    CELL.get_or_init(|| parse_table(TABLE).expect("bundled table parses"))
}

pub fn lookup(name: &str) -> Result<&'static KnotRecord, ReferenceError> {
    reference_knots().iter().find(|k| k.name == name).ok_or_else(|| ReferenceError::Unknown(name.to_string()))
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn check_torus(p: u32, q: u32) -> Result<(), ReferenceError> {
    if p < 2 || q <= p || gcd(p, q) != 1 {
        return Err(ReferenceError::NotKnot(p, q));
    }
    Ok(())
}

pub fn genus(p: u32, q: u32) -> i64 {
    (p as i64 - 1) * (q as i64 - 1) / 2
}

/// Symmetrized Alexander polynomial `(t^pq - 1)(t - 1) / ((t^p - 1)(t^q - 1))`
/// as exponent to coefficient.
pub fn alexander(p: u32, q: u32) -> Result<BTreeMap<i64, i64>, ReferenceError> {
    check_torus(p, q)?;
    let (p, q) = (p as usize, q as usize);
    let mut num = vec![0i64; p * q + 2];
    // (t^pq - 1)(t - 1) = t^{pq+1} - t^pq - t + 1
    num[p * q + 1] += 1;
    num[p * q] -= 1;
    num[1] -= 1;
    num[0] += 1;
    let divide = |num: Vec<i64>, k: usize| -> Vec<i64> {
        // exact division by t^k - 1, highest degree first
        let mut rem = num;
        let deg = rem.len() - 1;
        let mut quo = vec![0i64; deg + 1 - k];
        for d in (k..=deg).rev() {
            let c = rem[d];
            quo[d - k] = c;
            rem[d] = 0;
            rem[d - k] += c;
        }
        debug_assert!(rem.iter().all(|&x| x == 0));
        quo
    };
    let quo = divide(divide(num, p), q);
    let g = genus(p as u32, q as u32);
    Ok(quo.into_iter().enumerate().filter(|(_, c)| *c != 0).map(|(e, c)| (e as i64 - g, c)).collect())
}

/// Staircase generators `(Maslov, Alexander)`, Alexander descending.
pub fn staircase(p: u32, q: u32) -> Result<Vec<(i64, i64)>, ReferenceError> {
    let delta = alexander(p, q)?;
    let exps: Vec<i64> = delta.keys().rev().copied().collect();
    let mut out = Vec::with_capacity(exps.len());
    let mut m = 0i64;
    for (j, &a) in exps.iter().enumerate() {
        if j > 0 {
            m = if j % 2 == 1 { m - 1 } else { m - 2 * (exps[j - 1] - a) + 1 };
        }
        out.push((m, a));
    }
    Ok(out)
}

/// `δ`-graded `HFK̂(T(p,q))` with `δ = 2M - 2A + 4g`, which puts `T(4,5)`
/// at `4δ^12 + δ^10 + 2δ^8`.
pub fn torus_hfk_delta(p: u32, q: u32) -> Result<PoincarePolynomial, ReferenceError> {
    let g = genus(p, q);
    let pairs: Vec<(i64, usize)> = staircase(p, q)?.into_iter().map(|(m, a)| (2 * m - 2 * a + 4 * g, 1)).collect();
    Ok(PoincarePolynomial::from_pairs(&pairs))
}

/// `HFK̂` of the mirror: `δ` changes sign.
pub fn mirror_delta(poly: &PoincarePolynomial) -> PoincarePolynomial {
    poly.negate()
}

pub fn thinness(poly: &PoincarePolynomial) -> bool {
    poly.coefficients.len() == 1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RankVerdict {
    pub name: String,
    pub kh_rank: usize,
    pub hfk_rank: usize,
    pub total_ok: bool,
    /// Shift `s` with `kh(δ + s) ≥ hfk(δ)` for every `δ`, if one exists.
    pub per_delta_shift: Option<i64>,
    pub kh_thin: bool,
    pub hfk_thin: bool,
    pub equality: bool,
}

impl RankVerdict {
    pub fn passed(&self) -> bool {
        self.total_ok && self.per_delta_shift.is_some()
    }
}

/// Total and per-δ comparison of reduced Khovanov against `HFK̂`.
pub fn rank_inequality(name: &str, hfk: &PoincarePolynomial, kh: &PoincarePolynomial) -> RankVerdict {
    let dominates = |s: i64| hfk.coefficients.iter().all(|(&d, &c)| kh.get(d + s) >= c);
    let per_delta_shift = match (kh.top(), hfk.top()) {
        (Some(kt), Some(ht)) => {
            let aligned = kt - ht;
            let lo = kh.support()[0] - hfk.support()[0];
            std::iter::once(aligned).chain((lo..=aligned).rev().step_by(2)).find(|&s| dominates(s))
        }
        (_, None) => Some(0),
        _ => None,
    };
    RankVerdict {
        name: name.to_string(),
        kh_rank: kh.total(),
        hfk_rank: hfk.total(),
        total_ok: kh.total() >= hfk.total(),
        per_delta_shift,
        kh_thin: thinness(kh),
        hfk_thin: thinness(hfk),
        equality: kh.total() == hfk.total(),
    }
}

/// Higher differentials on reduced Khovanov homology that could leave
/// exactly `hfk` behind, per feasible shift.
pub fn admissible_for(kh: &KhHomology, hfk: &PoincarePolynomial) -> Vec<(i64, Vec<Arrow>)> {
    admissible_differentials(&kh.nonzero(), hfk)
}
