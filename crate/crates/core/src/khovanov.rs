//! Khovanov homology from the unoriented cube of resolutions.
//!
//! Singular letters are smoothed unorientedly, so running this on a partially
//! singular diagram `D` computes the homology of `sm(D)`. For a crossing of
//! type `σ_i` the 0-smoothing is vertical; for `σ_i^{-1}` it is horizontal.
//!
//! Gradings: `h = |I| - n₋`, `q = n₊ - 2n₋ + |I| + k_I - 2·#X`, shifted by
//! `+1` in the reduced theory so that the unknot sits at `q = 0`.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{orient_components, DecoratedDiagram, SingularGraph, UnionFind, VertexKind};
use crate::linalg::{FiniteComplex, LinalgError, SparseMatrix};
use crate::polyring::{buchberger_truncated, GradedQuotient, Ideal, Polynomial};
use crate::rational::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KhError {
    #[error("reduced homology needs a knot; the diagram has {0} components")]
    NotAKnot(usize),
    #[error("pointed homology needs one basepoint per component: {0}")]
    Basepoints(String),
    #[error("diagram has {0} crossings; at most 24 are supported")]
    TooManyCrossings(usize),
    #[error("empty degree window")]
    EmptyWindow,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KhVariant {
    Unreduced,
    Reduced,
    /// Basepoint edge ids, one per component.
    Pointed(Vec<usize>),
}

impl KhVariant {
    pub fn name(&self) -> &'static str {
        match self {
            KhVariant::Unreduced => "unreduced",
            KhVariant::Reduced => "reduced",
            KhVariant::Pointed(_) => "pointed",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BiGrading {
    pub h: i64,
    pub q: i64,
}

impl BiGrading {
    pub fn new(h: i64, q: i64) -> BiGrading {
        BiGrading { h, q }
    }

    pub fn delta(&self) -> i64 {
        self.q - 2 * self.h
    }
}

/// `ε_{I,J} = Σ_{c' < c} I(c') mod 2` on the edge changing crossing `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeAssignment {
    pub crossings: usize,
}

impl EdgeAssignment {
    pub fn value(&self, source: u64, crossing: usize) -> bool {
        (source & ((1u64 << crossing) - 1)).count_ones() % 2 == 1
    }

    /// Every square face has odd total.
    pub fn check_faces(&self) -> bool {
        let n = self.crossings;
        for i in 0..1u64 << n {
            for a in 0..n {
                for b in a + 1..n {
                    if i >> a & 1 == 1 || i >> b & 1 == 1 {
                        continue;
                    }
                    let ia = i | 1 << a;
                    let ib = i | 1 << b;
                    let total = self.value(i, a) as u32
                        + self.value(ia, b) as u32
                        + self.value(i, b) as u32
                        + self.value(ib, a) as u32;
                    if total % 2 != 1 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

pub fn standard_edge_assignment(crossings: usize) -> EdgeAssignment {
    EdgeAssignment { crossings }
}

/// Coefficients indexed by a grading (a δ value, or `(h, q)`).
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PoincarePolynomial {
    pub coefficients: BTreeMap<i64, usize>,
}

impl PoincarePolynomial {
    pub fn from_pairs(pairs: &[(i64, usize)]) -> PoincarePolynomial {
        let mut coefficients = BTreeMap::new();
        for &(d, c) in pairs {
            if c > 0 {
                *coefficients.entry(d).or_insert(0) += c;
            }
        }
        PoincarePolynomial { coefficients }
    }

    pub fn total(&self) -> usize {
        self.coefficients.values().sum()
    }

    pub fn support(&self) -> Vec<i64> {
        self.coefficients.keys().copied().collect()
    }

    pub fn get(&self, d: i64) -> usize {
        self.coefficients.get(&d).copied().unwrap_or(0)
    }

    pub fn shift(&self, by: i64) -> PoincarePolynomial {
        PoincarePolynomial { coefficients: self.coefficients.iter().map(|(&d, &c)| (d + by, c)).collect() }
    }

    pub fn negate(&self) -> PoincarePolynomial {
        PoincarePolynomial { coefficients: self.coefficients.iter().map(|(&d, &c)| (-d, c)).collect() }
    }

    pub fn top(&self) -> Option<i64> {
        self.coefficients.keys().next_back().copied()
    }

    /// Equal after translating so the top gradings agree.
    pub fn equal_up_to_shift(&self, other: &PoincarePolynomial) -> bool {
        match (self.top(), other.top()) {
            (None, None) => true,
            (Some(a), Some(b)) => self.shift(b - a) == *other,
            _ => false,
        }
    }

    pub fn is_thin(&self) -> bool {
        self.coefficients.len() <= 1
    }
}

impl fmt::Display for PoincarePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coefficients.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.coefficients.iter().rev().map(|(d, c)| format!("{c}d^{d}")).collect();
        write!(f, "{}", parts.join("+"))
    }
}

/// Bigraded homology dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KhHomology {
    pub variant: KhVariant,
    pub ranks: BTreeMap<BiGrading, usize>,
}

impl KhHomology {
    pub fn total(&self) -> usize {
        self.ranks.values().sum()
    }

    pub fn nonzero(&self) -> Vec<(BiGrading, usize)> {
        self.ranks.iter().filter(|(_, &r)| r > 0).map(|(g, &r)| (*g, r)).collect()
    }

    pub fn delta_poincare(&self) -> PoincarePolynomial {
        delta_poincare(&self.ranks)
    }

    /// `Σ (-1)^h t^q dim`.
    pub fn q_euler(&self) -> BTreeMap<i64, i64> {
        let mut out = BTreeMap::new();
        for (g, &r) in &self.ranks {
            let s = if g.h % 2 == 0 { 1 } else { -1 };
            *out.entry(g.q).or_insert(0) += s * r as i64;
        }
        out.retain(|_, v| *v != 0);
        out
    }

    pub fn mirror(&self) -> KhHomology {
        KhHomology {
            variant: self.variant.clone(),
            ranks: self.ranks.iter().map(|(g, &r)| (BiGrading::new(-g.h, -g.q), r)).collect(),
        }
    }

    pub fn describe(&self) -> String {
        self.nonzero().iter().map(|(g, r)| format!("({},{}):{r}", g.h, g.q)).collect::<Vec<_>>().join(" ")
    }
}

pub fn delta_poincare(ranks: &BTreeMap<BiGrading, usize>) -> PoincarePolynomial {
    let pairs: Vec<(i64, usize)> = ranks.iter().map(|(g, &r)| (g.delta(), r)).collect();
    PoincarePolynomial::from_pairs(&pairs)
}

/// Circle structure of every cube vertex.
pub struct Cube {
    pub crossings: usize,
    pub n_plus: i64,
    pub n_minus: i64,
    /// Crossing vertex ports `[a, b, c, d]` and whether it is of type `σ_i`.
    ports: Vec<([usize; 4], bool)>,
    edge_count: usize,
    /// `circles[I][edge - 1]` = circle index, circles numbered by smallest edge.
    circles: Vec<Vec<u8>>,
    counts: Vec<u8>,
}

impl Cube {
    pub fn new(d: &DecoratedDiagram) -> Result<Cube, KhError> {
        let n = d.crossing_count();
        if n > 24 {
            return Err(KhError::TooManyCrossings(n));
        }
        let (_, forward) = orient_components(d);
        let mut ports = Vec::with_capacity(n);
        let (mut n_plus, mut n_minus) = (0, 0);
        for &v in d.crossings() {
            let vx = &d.vertices()[v];
            let positive = matches!(vx.kind, VertexKind::Crossing { positive: true });
            let p = [vx.ports[0], vx.ports[1], vx.ports[2], vx.ports[3]];
            // a strand runs upward through the crossing if it arrives at an in port
            let arrives_at = |edge: usize, port: usize| {
                let e = d.edge(edge);
                let arrival = e.ends[if forward[edge - 1] { 1 } else { 0 }];
                arrival.vertex == v && arrival.port == port
            };
            let up1 = arrives_at(p[2], 2);
            let up2 = arrives_at(p[3], 3);
            if positive == (up1 == up2) {
                n_plus += 1;
            } else {
                n_minus += 1;
            }
            ports.push((p, positive));
        }
        // fixed identifications from bivalent and singular vertices
        let m = d.edge_count();
        let mut base = UnionFind::new(m);
        for v in d.vertices() {
            match v.kind {
                VertexKind::Crossing { .. } => {}
                VertexKind::Singular => {
                    base.union(v.ports[0] - 1, v.ports[1] - 1);
                    base.union(v.ports[2] - 1, v.ports[3] - 1);
                }
                _ => base.union(v.ports[0] - 1, v.ports[1] - 1),
            }
        }
        let results: Vec<(Vec<u8>, u8)> = (0..1u64 << n)
            .into_par_iter()
            .map(|i| {
                let mut uf = base.clone();
                for (k, (p, positive)) in ports.iter().enumerate() {
                    let vertical = (i >> k & 1 == 0) == *positive;
                    if vertical {
                        uf.union(p[2] - 1, p[0] - 1);
                        uf.union(p[3] - 1, p[1] - 1);
                    } else {
                        uf.union(p[2] - 1, p[3] - 1);
                        uf.union(p[0] - 1, p[1] - 1);
                    }
                }
                let mut label = vec![u8::MAX; m];
                let mut circ = vec![0u8; m];
                let mut count = 0u8;
                for e in 0..m {
                    let r = uf.find(e);
                    if label[r] == u8::MAX {
                        label[r] = count;
                        count += 1;
                    }
                    circ[e] = label[r];
                }
                (circ, count)
            })
            .collect();
        let (circles, counts) = results.into_iter().unzip();
        Ok(Cube { crossings: n, n_plus, n_minus, ports, edge_count: m, circles, counts })
    }

    pub fn vertex_count(&self) -> usize {
        1 << self.crossings
    }

    pub fn circle_count(&self, i: u64) -> usize {
        self.counts[i as usize] as usize
    }

    pub fn circle_of(&self, i: u64, edge: usize) -> usize {
        self.circles[i as usize][edge - 1] as usize
    }

    /// q-grading of the all-`1` labelling at vertex `I`.
    pub fn base_q(&self, i: u64) -> i64 {
        self.n_plus - 2 * self.n_minus + i.count_ones() as i64 + self.circle_count(i) as i64
    }

    pub fn base_h(&self, i: u64) -> i64 {
        i.count_ones() as i64 - self.n_minus
    }

    /// The edge `I -> I + k`: whether it merges, the two source circles, the
    /// two target circles, and the image of every source circle.
    fn edge_data(&self, i: u64, k: usize) -> EdgeData {
        let j = i | 1 << k;
        let (p, positive) = &self.ports[k];
        let vertical_i = *positive;
        // arcs at the crossing: left-in edge `c` and one edge of the other arc
        let other_i = if vertical_i { p[3] } else { p[0] };
        let other_j = if vertical_i { p[0] } else { p[3] };
        let a1 = self.circle_of(i, p[2]);
        let a2 = self.circle_of(i, other_i);
        let b1 = self.circle_of(j, p[2]);
        let b2 = self.circle_of(j, other_j);
        let ki = self.circle_count(i);
        let mut rep = vec![usize::MAX; ki];
        for e in 1..=self.edge_count {
            let c = self.circle_of(i, e);
            if rep[c] == usize::MAX {
                rep[c] = e;
            }
        }
        let image: Vec<usize> = rep.iter().map(|&e| self.circle_of(j, e)).collect();
        EdgeData { merge: a1 != a2, a1, a2, b1, b2, image }
    }
}

struct EdgeData {
    merge: bool,
    a1: usize,
    a2: usize,
    b1: usize,
    b2: usize,
    image: Vec<usize>,
}

impl EdgeData {
    /// Labels are bitmasks (bit set = `X`). Returns target labellings.
    fn apply(&self, mask: u32, out: &mut Vec<u32>) {
        out.clear();
        let mut base = 0u32;
        for (c, &t) in self.image.iter().enumerate() {
            if c == self.a1 || c == self.a2 {
                continue;
            }
            if mask >> c & 1 == 1 {
                base |= 1 << t;
            }
        }
        let x1 = mask >> self.a1 & 1 == 1;
        if self.merge {
            let x2 = mask >> self.a2 & 1 == 1;
            match (x1, x2) {
                (true, true) => {}
                (false, false) => out.push(base),
                _ => out.push(base | 1 << self.b1),
            }
        } else if x1 {
            out.push(base | 1 << self.b1 | 1 << self.b2);
        } else {
            out.push(base | 1 << self.b1);
            out.push(base | 1 << self.b2);
        }
    }
}

/// Rank of `mask` among masks of the same popcount (colex order).
fn combinatorial_rank(mut mask: u32, binom: &[Vec<usize>]) -> usize {
    let mut rank = 0;
    let mut i = 0;
    while mask != 0 {
        let pos = mask.trailing_zeros() as usize;
        i += 1;
        rank += binom[pos][i];
        mask &= mask - 1;
    }
    rank
}

fn binomials(n: usize) -> Vec<Vec<usize>> {
    let mut b = vec![vec![0usize; n + 2]; n + 1];
    for i in 0..=n {
        b[i][0] = 1;
        for j in 1..=i {
            b[i][j] = b[i - 1][j - 1] + b[i - 1][j];
        }
    }
    b
}

/// Remove bit `marked` from `mask`, shifting higher bits down.
fn drop_bit(mask: u32, marked: usize) -> u32 {
    let low = mask & ((1 << marked) - 1);
    let high = mask >> (marked + 1);
    low | high << marked
}

/// The Khovanov complex as a finite complex over bigradings.
pub fn build_kh_complex(d: &DecoratedDiagram, variant: &KhVariant) -> Result<FiniteComplex<BiGrading>, KhError> {
    match variant {
        KhVariant::Pointed(bp) => pointed::build(d, bp, None),
        _ => {
            let cube = Cube::new(d)?;
            build_labelled(d, &cube, *variant == KhVariant::Reduced)
        }
    }
}

fn build_labelled(d: &DecoratedDiagram, cube: &Cube, reduced: bool) -> Result<FiniteComplex<BiGrading>, KhError> {
    if reduced {
        let comps = crate::diagram::component_count(d);
        if comps != 1 {
            return Err(KhError::NotAKnot(comps));
        }
    }
    let n = cube.crossings;
    let max_k = (0..cube.vertex_count() as u64).map(|i| cube.circle_count(i)).max().unwrap_or(0);
    let binom = binomials(max_k + 1);
    let shift = if reduced { 1 } else { 0 };
    // offsets[I][x]: index of the first generator of vertex I with x X-labels in its block
    let mut counters: HashMap<BiGrading, usize> = HashMap::new();
    let mut offsets: Vec<Vec<usize>> = Vec::with_capacity(cube.vertex_count());
    for i in 0..cube.vertex_count() as u64 {
        let k = cube.circle_count(i);
        let (free, x0) = if reduced { (k - 1, 1) } else { (k, 0) };
        let mut off = vec![0usize; k + 1];
        for extra in 0..=free {
            let x = x0 + extra;
            let g = BiGrading::new(cube.base_h(i), cube.base_q(i) - 2 * x as i64 + shift);
            let c = counters.entry(g).or_insert(0);
            off[x] = *c;
            *c += binom[free][extra];
        }
        offsets.push(off);
    }
    let marked = |i: u64| cube.circle_of(i, 1);
    let index_of = |i: u64, mask: u32| -> (BiGrading, usize) {
        let x = mask.count_ones() as usize;
        let g = BiGrading::new(cube.base_h(i), cube.base_q(i) - 2 * x as i64 + shift);
        let local = if reduced {
            combinatorial_rank(drop_bit(mask, marked(i)), &binom)
        } else {
            combinatorial_rank(mask, &binom)
        };
        (g, offsets[i as usize][x] + local)
    };
    let ea = standard_edge_assignment(n);
    let triplets: Vec<(BiGrading, usize, usize, bool)> = (0..cube.vertex_count() as u64)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut out = Vec::new();
            let k = cube.circle_count(i);
            let mut targets = Vec::new();
            for c in 0..n {
                if i >> c & 1 == 1 {
                    continue;
                }
                let j = i | 1 << c;
                let ed = cube.edge_data(i, c);
                let negative = ea.value(i, c);
                let mi = marked(i);
                for mask in 0..1u32 << k {
                    if reduced && mask >> mi & 1 == 0 {
                        continue;
                    }
                    let (g, col) = index_of(i, mask);
                    ed.apply(mask, &mut targets);
                    for &t in &targets {
                        let (_, row) = index_of(j, t);
                        out.push((g, col, row, negative));
                    }
                }
            }
            out
        })
        .collect();
    let mut complex = FiniteComplex::new();
    for (g, c) in &counters {
        complex.dims.insert(*g, *c);
    }
    let mut grouped: BTreeMap<BiGrading, Vec<(usize, usize, Q)>> = BTreeMap::new();
    for (g, col, row, neg) in triplets {
        grouped.entry(g).or_default().push((row, col, if neg { -Q::ONE } else { Q::ONE }));
    }
    let blocks: Vec<(BiGrading, (BiGrading, SparseMatrix))> = grouped
        .into_par_iter()
        .map(|(g, entries)| {
            let t = BiGrading::new(g.h + 1, g.q);
            let rows = counters.get(&t).copied().unwrap_or(0);
            let cols = counters[&g];
            (g, (t, SparseMatrix::from_triplets(rows, cols, entries)))
        })
        .collect();
    complex.differentials.extend(blocks);
    Ok(complex)
}

/// Bigraded homology of the chosen variant.
pub fn kh_homology(d: &DecoratedDiagram, variant: &KhVariant) -> Result<KhHomology, KhError> {
    let complex = build_kh_complex(d, variant)?;
    let ranks = complex.homology_dims()?;
    Ok(KhHomology { variant: variant.clone(), ranks: ranks.into_iter().filter(|(_, r)| *r > 0).collect() })
}

/// Pointed homology with a q-window `[lo, hi]`; `None` uses a default window
/// that is exact for knots.
pub fn kh_pointed(
    d: &DecoratedDiagram,
    basepoints: &[usize],
    window: Option<(i64, i64)>,
) -> Result<KhHomology, KhError> {
    let complex = pointed::build(d, basepoints, window)?;
    let ranks = complex.homology_dims()?;
    Ok(KhHomology {
        variant: KhVariant::Pointed(basepoints.to_vec()),
        ranks: ranks.into_iter().filter(|(_, r)| *r > 0).collect(),
    })
}

mod pointed {
    //! The minus complex over `Q[Y_c]/(Y_c² = Y_c'²)` tensored with one cone
    //! `X_p` per basepoint, split by quantum grading.

    use super::*;

    /// `Y_first^a · Π_{c ∈ S} Y_c`.
    #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
    struct Mono {
        a: u32,
        s: u32,
    }

    fn normalize(exps: &[u32]) -> Mono {
        // circle 0 plays the role of Y_first
        let mut a = exps[0];
        let mut s = 0u32;
        for (c, &e) in exps.iter().enumerate().skip(1) {
            a += 2 * (e / 2);
            if e % 2 == 1 {
                s |= 1 << c;
            }
        }
        Mono { a, s }
    }

    fn exps_of(m: Mono, k: usize) -> Vec<u32> {
        let mut e = vec![0u32; k];
        e[0] = m.a;
        for (c, slot) in e.iter_mut().enumerate().skip(1) {
            if m.s >> c & 1 == 1 {
                *slot = 1;
            }
        }
        e
    }

    fn times(m: Mono, c: usize, k: usize) -> Mono {
        let mut e = exps_of(m, k);
        e[c] += 1;
        normalize(&e)
    }

    fn degree(m: Mono) -> i64 {
        (m.a + m.s.count_ones()) as i64
    }

    pub(super) fn build(
        d: &DecoratedDiagram,
        basepoints: &[usize],
        window: Option<(i64, i64)>,
    ) -> Result<FiniteComplex<BiGrading>, KhError> {
        let (comp, _) = orient_components(d);
        let comps = comp.iter().copied().max().map_or(0, |c| c + 1);
        let mut covered: Vec<usize> = Vec::new();
        for &p in basepoints {
            if p == 0 || p > d.edge_count() {
                return Err(KhError::Basepoints(format!("edge {p} does not exist")));
            }
            covered.push(comp[p - 1]);
        }
        covered.sort_unstable();
        covered.dedup();
        if covered.len() != basepoints.len() || covered.len() != comps {
            return Err(KhError::Basepoints(format!(
                "{} basepoints on {} distinct components of {}",
                basepoints.len(),
                covered.len(),
                comps
            )));
        }
        let cube = Cube::new(d)?;
        let n = cube.crossings;
        let l = basepoints.len();
        let nv = cube.vertex_count() as u64;
        let (lo, hi) = window.unwrap_or_else(|| {
            let lo =
                (0..nv).map(|i| cube.base_q(i) - 2 * cube.circle_count(i) as i64).min().unwrap() - 3 * l as i64 - 2;
            let hi = (0..nv).map(|i| cube.base_q(i)).max().unwrap() + 1;
            (lo, hi)
        });
        // generator: (cone word, vertex, monomial); index per bigrading
        type Gen = (u32, u64, Mono);
        let q_of = |w: u32, i: u64, m: Mono| -> i64 {
            let sources = l as i64 - w.count_ones() as i64;
            cube.base_q(i) - 2 * degree(m) - 3 * sources - (l as i64 - sources)
        };
        let h_of = |w: u32, i: u64| -> i64 { cube.base_h(i) - (l as i64 - w.count_ones() as i64) };
        let mut index: HashMap<Gen, (BiGrading, usize)> = HashMap::new();
        let mut dims: BTreeMap<BiGrading, usize> = BTreeMap::new();
        let mut gens: Vec<Gen> = Vec::new();
        for w in 0..1u32 << l {
            for i in 0..nv {
                let k = cube.circle_count(i);
                for s in 0..1u32 << k {
                    if s & 1 == 1 {
                        continue;
                    }
                    let m0 = Mono { a: 0, s };
                    let top = q_of(w, i, m0);
                    if top < lo {
                        continue;
                    }
                    let mut a = 0;
                    loop {
                        let m = Mono { a, s };
                        let q = q_of(w, i, m);
                        if q < lo {
                            break;
                        }
                        if q <= hi {
                            let g = BiGrading::new(h_of(w, i), q);
                            let c = dims.entry(g).or_insert(0);
                            index.insert((w, i, m), (g, *c));
                            *c += 1;
                            gens.push((w, i, m));
                        }
                        a += 1;
                    }
                }
            }
        }
        let ea = standard_edge_assignment(n);
        let mut entries: BTreeMap<BiGrading, Vec<(usize, usize, Q)>> = BTreeMap::new();
        for &(w, i, m) in &gens {
            let (g, col) = index[&(w, i, m)];
            let k = cube.circle_count(i);
            let mut push = |target: Gen, coeff: Q| {
                if let Some(&(tg, row)) = index.get(&target) {
                    debug_assert_eq!(tg.q, g.q);
                    entries.entry(g).or_default().push((row, col, coeff));
                }
            };
            // Khovanov part
            for c in 0..n {
                if i >> c & 1 == 1 {
                    continue;
                }
                let j = i | 1 << c;
                let ed = cube.edge_data(i, c);
                let kj = cube.circle_count(j);
                let sign = if ea.value(i, c) { -Q::ONE } else { Q::ONE };
                let src = exps_of(m, k);
                let mut lifted = vec![0u32; kj];
                for (ci, &e) in src.iter().enumerate() {
                    lifted[ed.image[ci]] += e;
                }
                if ed.merge {
                    push((w, j, normalize(&lifted)), sign.clone());
                } else {
                    // lift sends the split circle to b1 (image), then multiply by Y_b1 + Y_b2
                    let mut l1 = lifted.clone();
                    let mut l2 = lifted.clone();
                    l1[ed.b1] += 1;
                    l2[ed.b2] += 1;
                    let (m1, m2) = (normalize(&l1), normalize(&l2));
                    if m1 == m2 {
                        push((w, j, m1), &sign + &sign);
                    } else {
                        push((w, j, m1), sign.clone());
                        push((w, j, m2), sign.clone());
                    }
                }
            }
            // cone parts
            for (jx, &p) in basepoints.iter().enumerate() {
                if w >> jx & 1 == 1 {
                    continue;
                }
                let before = (w & ((1 << jx) - 1)).count_ones() as usize;
                let negative = (i.count_ones() as usize + before) % 2 == 1;
                let c = cube.circle_of(i, p);
                let mm = times(m, c, k);
                push((w | 1 << jx, i, mm), if negative { -Q::ONE } else { Q::ONE });
            }
        }
        let mut complex = FiniteComplex::new();
        complex.dims = dims.clone();
        for (g, e) in entries {
            let t = BiGrading::new(g.h + 1, g.q);
            let rows = dims.get(&t).copied().unwrap_or(0);
            complex.differentials.insert(g, (t, SparseMatrix::from_triplets(rows, dims[&g], e)));
        }
        Ok(complex)
    }
}

/// Graded dimensions of `Q[U_1..U_m] / (U_i² - U_j², U_i ∓ U_j on shared
/// circles)` in internal degrees `lo..=hi`, with the action of each `U_i`
/// as matrices from degree `d` to `d + 1` (for `d < hi`).
pub struct KhMinusModule {
    pub degrees: Vec<u32>,
    pub dims: Vec<usize>,
    /// `actions[i][t]`: multiplication by `U_{i+1}` from `degrees[t]` to `degrees[t] + 1`.
    pub actions: Vec<Vec<SparseMatrix>>,
}

impl KhMinusModule {
    pub fn action_ranks(&self, var: usize) -> Vec<usize> {
        self.actions[var].iter().map(|m| m.rank()).collect()
    }
}

pub fn kh_minus_resolution_module(s: &SingularGraph, lo: u32, hi: u32) -> Result<KhMinusModule, KhError> {
    if lo > hi {
        return Err(KhError::EmptyWindow);
    }
    let m = s.edge_count();
    let sm = s.smooth();
    let mut gens = Vec::new();
    for i in 1..m {
        gens.push(Polynomial::binomial(m, &[i, i], &[0, 0]));
    }
    for circle in &sm.circles {
        let first = circle[0];
        for &e in &circle[1..] {
            let same = (s.edge_strand(e) + s.edge_strand(first)) % 2 == 0;
            let c = if same { -1 } else { 1 };
            gens.push(Polynomial::linear(m, &[(e - 1, 1), (first - 1, c)]));
        }
    }
    let ideal = Ideal::new(m, gens).expect("variable count");
    let gb = buchberger_truncated(&ideal, hi + 1).expect("homogeneous");
    let quotient = GradedQuotient::new(gb, hi + 1).expect("homogeneous");
    let degrees: Vec<u32> = (lo..=hi).collect();
    let dims = degrees.iter().map(|&d| quotient.dim(d)).collect();
    let actions = (0..m)
        .map(|v| {
            let u = Polynomial::var(m, v);
            degrees
                .iter()
                .filter(|&&d| d < hi)
                .map(|&d| {
                    let rows = quotient.dim(d + 1);
                    let cols = quotient.dim(d);
                    let entries = (0..cols)
                        .flat_map(|c| quotient.multiply_basis(&u, d, c).into_iter().map(move |(r, x)| (r, c, x)));
                    SparseMatrix::from_triplets(rows, cols, entries.collect::<Vec<_>>())
                })
                .collect()
        })
        .collect();
    Ok(KhMinusModule { degrees, dims, actions })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{augment_s2n, Closure, Resolution};

    fn braid(w: &str, s: usize) -> DecoratedDiagram {
        DecoratedDiagram::parse_braid(w, s, Closure::Braid).unwrap()
    }

    fn ranks(h: &KhHomology) -> Vec<(i64, i64, usize)> {
        h.nonzero().into_iter().map(|(g, r)| (g.h, g.q, r)).collect()
    }

    #[test]
    fn unknot() {
        let h = kh_homology(&braid("", 1), &KhVariant::Unreduced).unwrap();
        assert_eq!(ranks(&h), vec![(0, -1, 1), (0, 1, 1)]);
        assert_eq!(h.delta_poincare().to_string(), "1d^1+1d^-1");
        let r = kh_homology(&braid("", 1), &KhVariant::Reduced).unwrap();
        assert_eq!(ranks(&r), vec![(0, 0, 1)]);
    }

    #[test]
    fn one_crossing_unknot() {
        for w in ["s1", "s1^-1"] {
            let h = kh_homology(&braid(w, 2), &KhVariant::Unreduced).unwrap();
            assert_eq!(ranks(&h), vec![(0, -1, 1), (0, 1, 1)], "{w}");
        }
    }

    #[test]
    fn right_trefoil() {
        let d = braid("s1 s1 s1", 2);
        let h = kh_homology(&d, &KhVariant::Unreduced).unwrap();
        assert_eq!(ranks(&h), vec![(0, 1, 1), (0, 3, 1), (2, 5, 1), (3, 9, 1)]);
        let r = kh_homology(&d, &KhVariant::Reduced).unwrap();
        assert_eq!(ranks(&r), vec![(0, 2, 1), (2, 6, 1), (3, 8, 1)]);
        assert!(r.delta_poincare().is_thin());
        assert_eq!(r.delta_poincare().to_string(), "3d^2");
    }

    #[test]
    fn mirror_flips_gradings() {
        let d = braid("s1 s1 s1", 2);
        let r = kh_homology(&d, &KhVariant::Reduced).unwrap();
        let m = kh_homology(&d.mirror(), &KhVariant::Reduced).unwrap();
        assert_eq!(r.mirror().ranks, m.ranks);
    }

    #[test]
    fn hopf_link() {
        let h = kh_homology(&braid("s1 s1", 2), &KhVariant::Unreduced).unwrap();
        assert_eq!(ranks(&h), vec![(0, 0, 1), (0, 2, 1), (2, 4, 1), (2, 6, 1)]);
        assert!(matches!(kh_homology(&braid("s1 s1", 2), &KhVariant::Reduced), Err(KhError::NotAKnot(2))));
    }

    #[test]
    fn plat_trefoil_matches_braid_trefoil() {
        let plat = DecoratedDiagram::parse_braid("s2 s2 s2", 4, Closure::Plat).unwrap();
        let a = kh_homology(&plat, &KhVariant::Reduced).unwrap().delta_poincare();
        let b = kh_homology(&braid("s1 s1 s1", 2), &KhVariant::Reduced).unwrap().delta_poincare();
        assert!(a.equal_up_to_shift(&b));
        assert_eq!(a.total(), 3);
    }

    #[test]
    fn augmentation_smooths_to_plat_closure() {
        let plat = DecoratedDiagram::parse_braid("s2 s2 s2", 4, Closure::Plat).unwrap();
        let aug = augment_s2n(&plat).unwrap();
        let a = kh_homology(&plat, &KhVariant::Unreduced).unwrap();
        let b = kh_homology(&aug, &KhVariant::Unreduced).unwrap();
        assert_eq!(a.ranks, b.ranks);
    }

    #[test]
    fn pointed_equals_reduced_for_knots() {
        for (w, s) in [("s1 s1 s1", 2), ("s1 s2^-1 s1 s2^-1", 3), ("", 1)] {
            let d = braid(w, s);
            let r = kh_homology(&d, &KhVariant::Reduced).unwrap();
            let p = kh_homology(&d, &KhVariant::Pointed(vec![1])).unwrap();
            assert_eq!(r.ranks, p.ranks, "{w}");
        }
    }

    #[test]
    fn pointed_link_is_finite() {
        let d = braid("s1 s1", 2);
        let comps = orient_components(&d).0;
        let other = (1..=d.edge_count()).find(|&e| comps[e - 1] != comps[0]).unwrap();
        let p = kh_homology(&d, &KhVariant::Pointed(vec![1, other])).unwrap();
        assert!(p.total() > 0);
        assert!(kh_homology(&d, &KhVariant::Pointed(vec![1])).is_err());
    }

    #[test]
    fn edge_assignment_faces() {
        let ea = standard_edge_assignment(1);
        assert!(!ea.value(0, 0));
        let ea = standard_edge_assignment(2);
        assert!(ea.value(0b01, 1));
        for n in 1..=5 {
            assert!(standard_edge_assignment(n).check_faces());
        }
    }

    #[test]
    fn minus_module_examples() {
        let one = braid("", 1).resolve(&Resolution::zeros(0)).unwrap();
        let m = kh_minus_resolution_module(&one, 0, 5).unwrap();
        assert_eq!(m.dims, vec![1; 6]);
        let two = braid("s1 s1", 2).resolve(&Resolution::ones(2)).unwrap();
        assert_eq!(two.smooth().circle_count(), 2);
        let m = kh_minus_resolution_module(&two, 0, 4).unwrap();
        assert_eq!(m.dims, vec![1, 2, 2, 2, 2]);
        assert!(kh_minus_resolution_module(&two, 3, 2).is_err());
    }
}
