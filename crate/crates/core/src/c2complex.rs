//! The oriented cube of resolutions `C₂⁻(D)` and its reduction `Ĉ₂(D)`.
//!
//! At a vertex `I` the module is `R/(N(D_I) + L_I) ⊗ 𝓛⁺_D`, where `𝓛⁺_D` is
//! the Koszul matrix factorization over the singular letters of `D`. The
//! complex is graded by `gr₂` (every map has degree `-2`, as does each `U_i`)
//! and filtered by cube height. Everything is truncated to a finite `gr₂`
//! window; positions inside the reported window are exact.
//!
//! Sign conventions: `d₀` at vertex `I` carries `(-1)^{|I|}`; the factor of
//! `v` acts on `e_T` with sign `(-1)^{#{w ∈ T : w < v}}`; the edge changing
//! crossing `c` carries `(-1)^{#{c' < c : I(c') = 1}}`; the `j`-th reducing
//! cone carries `(-1)^{|I| + |T| + #{earlier cones taken}}`.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::diagram::{orient_components, DecoratedDiagram, DiagramError, Resolution, SingularGraph};
use crate::linalg::{normalize_row, FiniteComplex, LinalgError, SparseMatrix, SparseRow};
use crate::polyring::{buchberger_truncated, GradedQuotient, Ideal, Monomial, PolyError, Polynomial};
use crate::rational::Q;
use crate::spectral::{level_eliminate, FilteredComplex, PageReport, SpectralError, SpectralSequence};

/// Largest resolution graph whose vertex subsets are enumerated.
pub const MAX_GRAPH_VERTICES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum C2Error {
    #[error("resolution {0:#b} is disconnected")]
    Disconnected(u64),
    #[error("resolution graph has {0} vertices; at most {MAX_GRAPH_VERTICES} are supported")]
    TooManyVertices(usize),
    #[error("the ideal at resolution {0:#b} is the unit ideal")]
    UnitIdeal(u64),
    #[error("ω does not vanish in the quotient at resolution {0:#b}")]
    OmegaNonzero(u64),
    #[error("edge map at crossing {crossing} from resolution {from:#b} is not well defined")]
    IllDefined { crossing: usize, from: u64 },
    #[error("diagram has {0} crossings; at most 16 are supported")]
    TooManyCrossings(usize),
    #[error("empty gr2 window")]
    EmptyWindow,
    #[error("no stable window found down to gr2 = {0}")]
    Unstable(i64),
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Generators `P(W)` of `N(S)`, with the vertex subset each came from.
#[derive(Clone, Debug)]
pub struct NonLocalIdeal {
    pub nvars: usize,
    pub generators: Vec<Polynomial>,
    pub subsets: Vec<u32>,
}

impl NonLocalIdeal {
    pub fn ideal(&self) -> Ideal {
        Ideal::new(self.nvars, self.generators.clone()).expect("variable count")
    }
}

/// `P(W)` for every induced-connected vertex subset `W` in which the
/// decorated edge is not internal. Subsets with `P(W) = 0` are skipped and
/// generators are deduplicated up to sign.
///
/// A disconnected `W = W₁ ⊔ W₂` gives `P(W) = I₁(I₂ - O₂) + O₂(I₁ - O₁)`, so
/// dropping it does not change the ideal.
pub fn nonlocal_ideal(s: &SingularGraph, decorated: usize) -> Result<NonLocalIdeal, C2Error> {
    let n = s.vertices().len();
    if n > MAX_GRAPH_VERTICES {
        return Err(C2Error::TooManyVertices(n));
    }
    if !s.is_connected() {
        return Err(C2Error::Disconnected(0));
    }
    let m = s.edge_count();
    let ends = s.endpoints();
    let mut adj = vec![0u32; n];
    for &(t, h) in &ends {
        adj[t] |= 1 << h;
        adj[h] |= 1 << t;
    }
    let (dt, dh) = ends[decorated - 1];
    let pairs: Vec<(u32, Vec<u16>, Vec<u16>)> = (1u32..(1u32 << n))
        .into_par_iter()
        .filter(|&w| w >> dt & 1 == 0 || w >> dh & 1 == 0)
        .filter(|&w| induced_connected(w, &adj))
        .filter_map(|w| {
            let mut inn = vec![0u16; m];
            let mut out = vec![0u16; m];
            for (e, &(t, h)) in ends.iter().enumerate() {
                match (w >> t & 1 == 1, w >> h & 1 == 1) {
                    (false, true) => inn[e] += 1,
                    (true, false) => out[e] += 1,
                    _ => {}
                }
            }
            (inn != out).then_some((w, inn, out))
        })
        .collect();
    let mut seen = HashSet::new();
    let mut generators = Vec::new();
    let mut subsets = Vec::new();
    for (w, inn, out) in pairs {
        let key = if inn < out { (inn.clone(), out.clone()) } else { (out.clone(), inn.clone()) };
        if !seen.insert(key) {
            continue;
        }
        let p = Polynomial::from_terms(
            m,
            vec![(Monomial::from_exponents(inn), Q::ONE), (Monomial::from_exponents(out), -Q::ONE)],
        );
        generators.push(p);
        subsets.push(w);
    }
    Ok(NonLocalIdeal { nvars: m, generators, subsets })
}

fn induced_connected(w: u32, adj: &[u32]) -> bool {
    let start = w & w.wrapping_neg();
    let mut seen = start;
    let mut frontier = start;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[v] & w & !seen;
        seen |= new;
        frontier |= new;
    }
    seen == w
}

/// `U_a + U_b - U_c - U_d` for the quadruple `(a, b, c, d)`.
pub fn linear_term(nvars: usize, quad: (usize, usize, usize, usize)) -> Polynomial {
    let (a, b, c, d) = quad;
    Polynomial::linear(nvars, &[(a - 1, 1), (b - 1, 1), (c - 1, -1), (d - 1, -1)])
}

/// `U_a + U_b + U_c + U_d`.
pub fn linear_term_plus(nvars: usize, quad: (usize, usize, usize, usize)) -> Polynomial {
    let (a, b, c, d) = quad;
    Polynomial::linear(nvars, &[(a - 1, 1), (b - 1, 1), (c - 1, 1), (d - 1, 1)])
}

/// `U_a U_b - U_c U_d`.
pub fn quadratic_term(nvars: usize, quad: (usize, usize, usize, usize)) -> Polynomial {
    let (a, b, c, d) = quad;
    Polynomial::binomial(nvars, &[a - 1, b - 1], &[c - 1, d - 1])
}

/// The factor `𝓛⁺_D`: one periodic two-term piece per singular letter.
/// Generators `e_T` are indexed by subsets `T` of the letters.
#[derive(Clone, Debug)]
pub struct MfFactor {
    pub quads: Vec<(usize, usize, usize, usize)>,
    pub l: Vec<Polynomial>,
    pub l_plus: Vec<Polynomial>,
}

impl MfFactor {
    pub fn new(nvars: usize, quads: Vec<(usize, usize, usize, usize)>) -> MfFactor {
        let l = quads.iter().map(|&q| linear_term(nvars, q)).collect();
        let l_plus = quads.iter().map(|&q| linear_term_plus(nvars, q)).collect();
        MfFactor { quads, l, l_plus }
    }

    pub fn len(&self) -> usize {
        self.quads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    pub fn rank(&self) -> usize {
        1 << self.len()
    }

    pub fn z2(t: u32) -> u8 {
        (t.count_ones() % 2) as u8
    }

    /// Terms of `d e_T`: `(T', sign, polynomial)`.
    pub fn terms(&self, t: u32) -> Vec<(u32, bool, &Polynomial)> {
        (0..self.len())
            .map(|v| {
                let neg = (t & ((1 << v) - 1)).count_ones() % 2 == 1;
                if t >> v & 1 == 0 {
                    (t | 1 << v, neg, &self.l[v])
                } else {
                    (t & !(1 << v), neg, &self.l_plus[v])
                }
            })
            .collect()
    }

    /// `ω = Σ L(v) L⁺(v)`, so that `d² = ω·id`.
    pub fn omega(&self, nvars: usize) -> Polynomial {
        self.l.iter().zip(&self.l_plus).fold(Polynomial::zero(nvars), |acc, (a, b)| acc.add(&a.mul(b)))
    }
}

/// The ring `R/(N(D_I) + L_I)` at one cube vertex, through a degree bound.
#[derive(Clone, Debug)]
pub struct VertexModule {
    pub resolution: Resolution,
    pub graph: SingularGraph,
    pub nonlocal_generators: usize,
    pub ideal: Ideal,
    pub quotient: GradedQuotient,
    /// `gr₂` of `1`: `|v₄(D_I)| - |I|`.
    pub gr2: i64,
}

impl VertexModule {
    pub fn new(d: &DecoratedDiagram, res: Resolution, max_degree: u32) -> Result<VertexModule, C2Error> {
        VertexModule::with_extra(d, res, max_degree, &[])
    }

    /// The same ring with further generators added to the ideal.
    pub fn with_extra(
        d: &DecoratedDiagram,
        res: Resolution,
        max_degree: u32,
        extra: &[Polynomial],
    ) -> Result<VertexModule, C2Error> {
        let graph = d.resolve(&res)?;
        if !graph.is_connected() {
            return Err(C2Error::Disconnected(res.bits()));
        }
        let m = graph.edge_count();
        let n = nonlocal_ideal(&graph, 1)?;
        let bound = max_degree.max(2) + 1;
        let mut gens: Vec<Polynomial> =
            n.generators.iter().filter(|g| g.degree().is_some_and(|k| k <= bound)).cloned().collect();
        for v in graph.four_valent_from_resolution() {
            gens.push(linear_term(m, graph.vertices()[v].quad()));
        }
        gens.extend(extra.iter().cloned());
        let ideal = Ideal::new(m, gens)?;
        let gb = buchberger_truncated(&ideal, bound)?;
        if gb.is_unit() {
            return Err(C2Error::UnitIdeal(res.bits()));
        }
        let quotient = GradedQuotient::new(gb, max_degree)?;
        let gr2 = graph.four_valent().len() as i64 - res.height() as i64;
        Ok(VertexModule { resolution: res, graph, nonlocal_generators: n.generators.len(), ideal, quotient, gr2 })
    }

    pub fn max_degree(&self) -> u32 {
        self.quotient.max_degree()
    }

    pub fn dim(&self, degree: u32) -> usize {
        self.quotient.dim(degree)
    }

    pub fn contains(&self, f: &Polynomial) -> bool {
        self.quotient.groebner().contains(f).expect("within degree bound")
    }

    fn degree_bound(&self) -> u32 {
        self.quotient.groebner().degree_bound().unwrap_or(u32::MAX)
    }
}

fn mf_factor(d: &DecoratedDiagram) -> Result<MfFactor, C2Error> {
    let g = d.resolve(&Resolution::zeros(d.crossing_count()))?;
    let quads = g.four_valent_from_diagram().into_iter().map(|v| g.vertices()[v].quad()).collect();
    Ok(MfFactor::new(d.edge_count(), quads))
}

/// `(b, c)` of the singularized crossing `k`: right-out and left-in.
fn phi_minus_edges(d: &DecoratedDiagram, k: usize) -> (usize, usize) {
    let v = &d.vertices()[d.crossings()[k]];
    (v.ports[1], v.ports[2])
}

fn edge_polynomial(d: &DecoratedDiagram, k: usize) -> Polynomial {
    let m = d.edge_count();
    if d.crossing_sign(k) {
        Polynomial::one(m)
    } else {
        let (b, c) = phi_minus_edges(d, k);
        Polynomial::linear(m, &[(b - 1, 1), (c - 1, -1)])
    }
}

/// `d₀` and `ω ≡ 0` on one vertex module, graded by internal degree.
pub struct VertexComplex {
    pub module: VertexModule,
    pub mf: MfFactor,
    /// Keyed by internal degree `k`; `d₀: k -> k + 1`.
    pub complex: FiniteComplex<u32>,
}

impl VertexComplex {
    pub fn new(d: &DecoratedDiagram, res: Resolution, max_degree: u32) -> Result<VertexComplex, C2Error> {
        let module = VertexModule::new(d, res, max_degree + 1)?;
        let mf = mf_factor(d)?;
        if !module.contains(&mf.omega(d.edge_count())) {
            return Err(C2Error::OmegaNonzero(res.bits()));
        }
        let r = mf.rank();
        let mut complex = FiniteComplex::new();
        for k in 0..=max_degree + 1 {
            complex.dims.insert(k, r * module.dim(k));
        }
        for k in 0..=max_degree {
            let src = module.dim(k);
            let tgt = module.dim(k + 1);
            let entries: Vec<(usize, usize, Q)> = (0..r as u32)
                .into_par_iter()
                .flat_map_iter(|t| {
                    let mut out = Vec::new();
                    for (t2, neg, f) in mf.terms(t) {
                        for i in 0..src {
                            for (j, c) in module.quotient.multiply_basis(f, k, i) {
                                let c = if neg { -c } else { c };
                                out.push((t2 as usize * tgt + j, t as usize * src + i, c));
                            }
                        }
                    }
                    out
                })
                .collect();
            complex.differentials.insert(k, (k + 1, SparseMatrix::from_triplets(r * tgt, r * src, entries)));
        }
        Ok(VertexComplex { module, mf, complex })
    }

    /// Homology dimensions in degrees `0..=max_degree`.
    pub fn homology(&self) -> Result<Vec<usize>, C2Error> {
        let levels = self.complex.dims.iter().map(|(&k, &n)| (k, vec![0; n])).collect();
        let red = FilteredComplex::new(self.complex.clone(), levels)?.reduce();
        let h = &red.complex.dims;
        let top = *self.complex.differentials.keys().last().unwrap_or(&0);
        Ok((0..=top).map(|k| h[&k]).collect())
    }

    /// Rank of multiplication by `U_var` from `H_k` to `H_{k+1}`.
    pub fn action_rank(&self, var: usize, k: u32) -> Result<usize, C2Error> {
        let r = self.mf.rank();
        let m = self.module.graph.edge_count();
        let (src, tgt) = (self.module.dim(k), self.module.dim(k + 1));
        let u = Polynomial::var(m, var);
        let mut entries = Vec::new();
        for t in 0..r {
            for i in 0..src {
                for (j, c) in self.module.quotient.multiply_basis(&u, k, i) {
                    entries.push((t * tgt + j, t * src + i, c));
                }
            }
        }
        let mult = SparseMatrix::from_triplets(r * tgt, r * src, entries);
        let cycles = self.complex.differentials[&k].1.kernel_basis();
        let into_next = &self.complex.differentials[&k].1;
        let z = SparseMatrix::from_triplets(
            r * src,
            cycles.len(),
            cycles
                .iter()
                .enumerate()
                .flat_map(|(c, v)| {
                    v.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(move |(i, x)| (i, c, x.clone()))
                })
                .collect::<Vec<_>>(),
        );
        let image = mult.mul(&z);
        let joined = hcat(&image, into_next);
        Ok(joined.rank() - into_next.rank())
    }
}

/// Homology of the vertex complex in degrees `0..=top`. Each half of the
/// ℤ₂ splitting is reduced one differential at a time, so only one matrix
/// is held in memory.
pub fn vertex_homology(d: &DecoratedDiagram, res: Resolution, top: u32) -> Result<Vec<usize>, C2Error> {
    let module = VertexModule::new(d, res, top + 1)?;
    let mf = mf_factor(d)?;
    if !module.contains(&mf.omega(d.edge_count())) {
        return Err(C2Error::OmegaNonzero(res.bits()));
    }
    let (module, mf) = koszul_contract(d, res, module, &mf, top + 1)?;
    Ok(streamed_homology(&module, &mf, top))
}

/// Drops Koszul factors `(a, b)` whose `a` (either `L(v)` or `L⁺(v)`) is
/// injective on the current ring through `max_degree`, replacing the ring by
/// its quotient by `a`. The homology through `max_degree - 1` is unchanged.
pub fn koszul_contract(
    d: &DecoratedDiagram,
    res: Resolution,
    mut module: VertexModule,
    mf: &MfFactor,
    max_degree: u32,
) -> Result<(VertexModule, MfFactor), C2Error> {
    let mut extra: Vec<Polynomial> = Vec::new();
    let mut kept = Vec::new();
    for v in 0..mf.len() {
        let mut taken = false;
        for a in [&mf.l[v], &mf.l_plus[v]] {
            if module.contains(a) {
                continue;
            }
            extra.push(a.clone());
            let next = VertexModule::with_extra(d, res, max_degree, &extra)?;
            let injective = (1..=max_degree).all(|k| next.dim(k) + module.dim(k - 1) == module.dim(k))
                && next.dim(0) == module.dim(0);
            if injective {
                module = next;
                taken = true;
                break;
            }
            extra.pop();
        }
        if !taken {
            kept.push(v);
        }
    }
    log::debug!("koszul contraction of {:b}: {} of {} factors left", res.bits(), kept.len(), mf.len());
    let reduced = MfFactor {
        quads: kept.iter().map(|&v| mf.quads[v]).collect(),
        l: kept.iter().map(|&v| mf.l[v].clone()).collect(),
        l_plus: kept.iter().map(|&v| mf.l_plus[v].clone()).collect(),
    };
    Ok((module, reduced))
}

/// Homology through degree `top` without contraction.
pub fn vertex_homology_uncontracted(d: &DecoratedDiagram, res: Resolution, top: u32) -> Result<Vec<usize>, C2Error> {
    let module = VertexModule::new(d, res, top + 1)?;
    let mf = mf_factor(d)?;
    if !module.contains(&mf.omega(d.edge_count())) {
        return Err(C2Error::OmegaNonzero(res.bits()));
    }
    Ok(streamed_homology(&module, &mf, top))
}

fn streamed_homology(module: &VertexModule, mf: &MfFactor, top: u32) -> Vec<usize> {
    let r = mf.rank() as u32;
    let mut h = vec![0usize; top as usize + 1];
    for class in 0..2u32 {
        let ts = |k: u32| -> Vec<u32> { (0..r).filter(|t| (t.count_ones() + k) % 2 == class).collect() };
        let mut dead_tgt: Vec<bool> = Vec::new();
        for k in (0..=top).rev() {
            let (src_t, tgt_t) = (ts(k), ts(k + 1));
            let (src, tgt) = (module.dim(k), module.dim(k + 1));
            let slot: HashMap<u32, usize> = tgt_t.iter().enumerate().map(|(b, &t)| (t, b)).collect();
            let (nrows, ncols) = (tgt_t.len() * tgt, src_t.len() * src);
            if dead_tgt.len() != nrows {
                dead_tgt = vec![false; nrows];
            }
            let mut rows: Vec<SparseRow> = vec![Vec::new(); nrows];
            for (a, &t) in src_t.iter().enumerate() {
                for (t2, neg, f) in mf.terms(t) {
                    let b = slot[&t2];
                    for i in 0..src {
                        for (j, c) in module.quotient.multiply_basis(f, k, i) {
                            let row = b * tgt + j;
                            if !dead_tgt[row] {
                                rows[row].push(((a * src + i) as u32, if neg { -c } else { c }));
                            }
                        }
                    }
                }
            }
            let rows: Vec<SparseRow> = rows.into_iter().map(normalize_row).collect();
            let (_, pivots) = level_eliminate(rows, ncols, &vec![0; nrows], &vec![0; ncols]);
            if k < top {
                h[k as usize + 1] += nrows - dead_tgt.iter().filter(|&&x| x).count() - pivots.len();
            }
            dead_tgt = vec![false; ncols];
            for (_, c) in pivots {
                dead_tgt[c] = true;
            }
        }
        h[0] += dead_tgt.iter().filter(|&&x| !x).count();
    }
    h
}

fn hcat(a: &SparseMatrix, b: &SparseMatrix) -> SparseMatrix {
    assert_eq!(a.rows(), b.rows());
    let off = a.cols();
    let entries: Vec<(usize, usize, Q)> = a
        .entries()
        .map(|(r, c, v)| (r, c, v.clone()))
        .chain(b.entries().map(|(r, c, v)| (r, c + off, v.clone())))
        .collect();
    SparseMatrix::from_triplets(a.rows(), a.cols() + b.cols(), entries)
}

/// Comparison of `H(C₂⁻(D_I))` with `Kh⁻(sm(D_I))`.
#[derive(Clone, Debug, Serialize)]
pub struct VertexCheck {
    pub resolution: u64,
    pub c2_dims: Vec<usize>,
    pub kh_dims: Vec<usize>,
    /// Degree of the lowest nonzero homology.
    pub shift: usize,
    pub agree: bool,
}

/// Graded dimensions over `width` degrees starting at the bottom of the
/// homology; `H` below the bottom must vanish.
pub fn vertex_homology_check(d: &DecoratedDiagram, res: Resolution, width: usize) -> Result<VertexCheck, C2Error> {
    let mut top = width as u32 - 1;
    let (h, shift) = loop {
        let h = vertex_homology(d, res, top)?;
        let shift = h.iter().position(|&x| x > 0).unwrap_or(h.len());
        if shift + width <= h.len() {
            break (h, shift);
        }
        if shift == h.len() {
            return Err(C2Error::EmptyWindow);
        }
        top = (shift + width) as u32 - 1;
    };
    let c2_dims: Vec<usize> = h.iter().skip(shift).take(width).copied().collect();
    let km = crate::khovanov::kh_minus_resolution_module(&d.resolve(&res)?, 0, width as u32 - 1)
        .map_err(|_| C2Error::EmptyWindow)?;
    let agree = c2_dims.len() == width && c2_dims == km.dims;
    Ok(VertexCheck { resolution: res.bits(), c2_dims, kh_dims: km.dims, shift, agree })
}

#[derive(Clone, Debug)]
pub struct C2Options {
    pub reduce: bool,
    /// Reported `gr₂` positions `lo..=hi`; automatic when absent.
    pub window: Option<(i64, i64)>,
    /// Zero positions required below the support in automatic mode.
    pub stability_run: usize,
    /// Deepest automatic window, in steps of 2 below the top position.
    pub max_depth: usize,
    pub check_well_defined: bool,
}

impl Default for C2Options {
    fn default() -> Self {
        C2Options { reduce: true, window: None, stability_run: 3, max_depth: 40, check_well_defined: true }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VertexSummary {
    pub resolution: u64,
    pub height: usize,
    pub gr2: i64,
    pub nonlocal_generators: usize,
    pub groebner_size: usize,
    pub dims: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
struct BlockKey {
    cones: u32,
    res: u64,
    t: u32,
}

#[derive(Clone, Debug)]
struct Block {
    key: BlockKey,
    degree: u32,
    start: usize,
    len: usize,
}

#[derive(Default)]
struct Layout {
    blocks: Vec<Block>,
    offset: HashMap<BlockKey, usize>,
    dim: usize,
}

/// The truncated filtered complex. Keys are `gr₂` positions and `d` maps
/// position `g` to `g - 2`.
#[derive(Clone, Debug)]
pub struct C2Complex {
    pub complex: FiniteComplex<i64>,
    /// `d₀` part of each differential; the rest is `d₁` plus cones.
    pub d0: BTreeMap<i64, SparseMatrix>,
    /// Filtration level `|I| + #cones` per generator.
    pub levels: BTreeMap<i64, Vec<u32>>,
    /// ℤ₂ degree `|T| mod 2` per generator.
    pub z2: BTreeMap<i64, Vec<u8>>,
    /// Positions whose homology is exact.
    pub window: (i64, i64),
    pub marked_edges: Vec<usize>,
    pub filtration_width: u32,
    pub vertices: Vec<VertexSummary>,
}

impl C2Complex {
    /// Homology at positions inside the window.
    pub fn homology(&self) -> Result<BTreeMap<i64, usize>, C2Error> {
        let (lo, hi) = self.window;
        let h = self.complex.homology_dims()?;
        Ok(h.into_iter().filter(|(g, _)| (lo..=hi).contains(g)).collect())
    }

    pub fn positions(&self) -> impl Iterator<Item = i64> + '_ {
        self.complex.dims.keys().copied().filter(|g| (self.window.0..=self.window.1).contains(g))
    }

    /// `d₀` odd and `d₁`, cones even in the ℤ₂ grading.
    pub fn check_z2(&self) -> bool {
        self.complex.differentials.iter().all(|(g, (t, m))| {
            let d0 = &self.d0[g];
            let (zs, zt) = (&self.z2[g], &self.z2[t]);
            let d0_ok = d0.entries().all(|(r, c, _)| zs[c] != zt[r]);
            let rest = m.add(&d0.scale(&-Q::ONE));
            d0_ok && rest.entries().all(|(r, c, _)| zs[c] == zt[r])
        })
    }

    pub fn filtered(&self) -> Result<FilteredComplex<i64>, C2Error> {
        Ok(FilteredComplex::new(self.complex.clone(), self.levels.clone())?)
    }

    /// Cancel `d₀`; the result is `E₁`-sized with the same later pages.
    pub fn reduced(&self) -> Result<FilteredComplex<i64>, C2Error> {
        Ok(self.filtered()?.reduce())
    }

    /// Pages of the cube filtration, restricted to the window.
    pub fn spectral_sequence(&self) -> Result<SpectralSequence<i64>, C2Error> {
        let red = self.reduced()?;
        Ok(restrict_window(red.pages()?, self.window))
    }

    /// `d₀` preserves the level and the rest raises it by exactly one.
    pub fn check_filtration(&self) -> bool {
        self.complex.differentials.iter().all(|(g, (t, m))| {
            let d0 = &self.d0[g];
            let (ls, lt) = (&self.levels[g], &self.levels[t]);
            let rest = m.add(&d0.scale(&-Q::ONE));
            d0.entries().all(|(r, c, _)| ls[c] == lt[r]) && rest.entries().all(|(r, c, _)| lt[r] == ls[c] + 1)
        })
    }
}

/// Build the complex with exact homology at positions `lo..=max gr₂`.
pub fn assemble(d: &DecoratedDiagram, reduce: bool, lo: i64, check_well_defined: bool) -> Result<C2Complex, C2Error> {
    let nc = d.crossing_count();
    if nc > 16 {
        return Err(C2Error::TooManyCrossings(nc));
    }
    let m = d.edge_count();
    let mf = mf_factor(d)?;
    let resolutions: Vec<Resolution> = Resolution::all(nc).collect();
    let graphs: Vec<SingularGraph> = resolutions.iter().map(|r| d.resolve(r)).collect::<Result<_, _>>()?;
    let gr2: Vec<i64> =
        graphs.iter().zip(&resolutions).map(|(g, r)| g.four_valent().len() as i64 - r.height() as i64).collect();
    let hi = *gr2.iter().max().expect("at least one vertex");
    assert!(gr2.iter().all(|g| (hi - g) % 2 == 0), "gr2 parities differ");
    let lo = if (hi - lo).rem_euclid(2) == 0 { lo } else { lo - 1 };
    if lo > hi {
        return Err(C2Error::EmptyWindow);
    }
    let bottom = lo - 2;
    let max_deg: Vec<Option<u32>> =
        gr2.iter().map(|&g| if g >= bottom { Some(((g - bottom) / 2) as u32) } else { None }).collect();

    let modules: Vec<Option<VertexModule>> = resolutions
        .par_iter()
        .zip(&max_deg)
        .map(|(r, k)| k.map(|k| VertexModule::new(d, *r, k)).transpose())
        .collect::<Result<_, _>>()?;
    let omega = mf.omega(m);
    for md in modules.iter().flatten() {
        if md.degree_bound() >= 2 && !md.contains(&omega) {
            return Err(C2Error::OmegaNonzero(md.resolution.bits()));
        }
    }
    let edge_polys: Vec<Polynomial> = (0..nc).map(|k| edge_polynomial(d, k)).collect();
    if check_well_defined {
        check_edge_maps(&resolutions, &modules, &edge_polys)?;
    }

    let marked: Vec<usize> = if reduce { marked_edges(d) } else { Vec::new() };
    let ncones = marked.len();
    let cone_polys: Vec<Polynomial> = marked.iter().map(|&e| Polynomial::var(m, e - 1)).collect();
    let rank = mf.rank() as u32;

    let mut layouts: BTreeMap<i64, Layout> = BTreeMap::new();
    let mut g = hi;
    while g >= bottom {
        let mut lay = Layout::default();
        for w in 0..(1u32 << ncones) {
            for (ri, r) in resolutions.iter().enumerate() {
                let Some(md) = &modules[ri] else { continue };
                if gr2[ri] < g || (gr2[ri] - g) % 2 != 0 {
                    continue;
                }
                let k = ((gr2[ri] - g) / 2) as u32;
                let len = md.dim(k);
                if len == 0 {
                    continue;
                }
                for t in 0..rank {
                    let key = BlockKey { cones: w, res: r.bits(), t };
                    lay.offset.insert(key, lay.dim);
                    lay.blocks.push(Block { key, degree: k, start: lay.dim, len });
                    lay.dim += len;
                }
            }
        }
        layouts.insert(g, lay);
        g -= 2;
    }

    let mut complex = FiniteComplex::new();
    let mut d0s = BTreeMap::new();
    let mut levels = BTreeMap::new();
    let mut z2 = BTreeMap::new();
    for (&g, lay) in &layouts {
        complex.dims.insert(g, lay.dim);
        let mut lv = vec![0u32; lay.dim];
        let mut zz = vec![0u8; lay.dim];
        for b in &lay.blocks {
            let level = resolution_height(b.key.res) + b.key.cones.count_ones();
            lv[b.start..b.start + b.len].fill(level);
            zz[b.start..b.start + b.len].fill(MfFactor::z2(b.key.t));
        }
        levels.insert(g, lv);
        z2.insert(g, zz);
    }
    for (&g, lay) in layouts.range(lo..) {
        let target = &layouts[&(g - 2)];
        let parts: Vec<(Vec<(usize, usize, Q)>, Vec<(usize, usize, Q)>)> = lay
            .blocks
            .par_iter()
            .map(|b| {
                let md = modules[b.key.res as usize].as_ref().expect("block has a module");
                let height = resolution_height(b.key.res);
                let mut e0 = Vec::new();
                let mut e1 = Vec::new();
                let base_neg = height % 2 == 1;
                for (t2, neg, f) in mf.terms(b.key.t) {
                    let key = BlockKey { t: t2, ..b.key };
                    place(&mut e0, target, key, md, f, b, base_neg ^ neg);
                }
                for (k, f) in edge_polys.iter().enumerate() {
                    if b.key.res >> k & 1 == 1 {
                        continue;
                    }
                    let src = Resolution::new(b.key.res, nc);
                    let key = BlockKey { res: b.key.res | 1 << k, ..b.key };
                    let tm = modules[key.res as usize].as_ref();
                    if let Some(tm) = tm {
                        place_into(&mut e1, target, key, md, tm, f, b, src.edge_sign_parity(k));
                    }
                }
                for (j, f) in cone_polys.iter().enumerate() {
                    if b.key.cones >> j & 1 == 1 {
                        continue;
                    }
                    let prev = (b.key.cones & ((1 << j) - 1)).count_ones();
                    let neg = (height + b.key.t.count_ones() + prev) % 2 == 1;
                    let key = BlockKey { cones: b.key.cones | 1 << j, ..b.key };
                    place(&mut e1, target, key, md, f, b, neg);
                }
                (e0, e1)
            })
            .collect();
        let mut all0 = Vec::new();
        let mut all1 = Vec::new();
        for (a, b) in parts {
            all0.extend(a);
            all1.extend(b);
        }
        let m0 = SparseMatrix::from_triplets(target.dim, lay.dim, all0.clone());
        let full = SparseMatrix::from_triplets(target.dim, lay.dim, all0.into_iter().chain(all1));
        d0s.insert(g, m0);
        complex.differentials.insert(g, (g - 2, full));
    }

    let vertices = resolutions
        .iter()
        .zip(&modules)
        .zip(&gr2)
        .map(|((r, md), &g)| VertexSummary {
            resolution: r.bits(),
            height: r.height(),
            gr2: g,
            nonlocal_generators: md.as_ref().map_or(0, |x| x.nonlocal_generators),
            groebner_size: md.as_ref().map_or(0, |x| x.quotient.groebner().basis().len()),
            dims: md.as_ref().map_or(Vec::new(), |x| (0..=x.max_degree()).map(|k| x.dim(k)).collect()),
        })
        .collect();
    Ok(C2Complex {
        complex,
        d0: d0s,
        levels,
        z2,
        window: (lo, hi),
        marked_edges: marked,
        filtration_width: (nc + ncones) as u32,
        vertices,
    })
}

fn resolution_height(bits: u64) -> u32 {
    bits.count_ones()
}

/// Entries of `f · (block basis)` landing in block `key` of the same vertex.
fn place(
    out: &mut Vec<(usize, usize, Q)>,
    target: &Layout,
    key: BlockKey,
    md: &VertexModule,
    f: &Polynomial,
    b: &Block,
    neg: bool,
) {
    place_into(out, target, key, md, md, f, b, neg)
}

#[allow(clippy::too_many_arguments)]
fn place_into(
    out: &mut Vec<(usize, usize, Q)>,
    target: &Layout,
    key: BlockKey,
    src: &VertexModule,
    tgt: &VertexModule,
    f: &Polynomial,
    b: &Block,
    neg: bool,
) {
    let Some(&start) = target.offset.get(&key) else { return };
    let df = f.degree().expect("nonzero map");
    let td = b.degree + df;
    for i in 0..b.len {
        let prod = f.mul_term(&src.quotient.basis(b.degree)[i], &Q::ONE);
        for (j, c) in tgt.quotient.coordinates(&prod, td) {
            out.push((start + j, b.start + i, if neg { -c } else { c }));
        }
    }
}

fn check_edge_maps(
    resolutions: &[Resolution],
    modules: &[Option<VertexModule>],
    edge_polys: &[Polynomial],
) -> Result<(), C2Error> {
    let nc = edge_polys.len();
    let pairs: Vec<(usize, usize)> = resolutions
        .iter()
        .flat_map(|r| (0..nc).filter(move |&k| !r.get(k)).map(move |k| (r.bits() as usize, k)))
        .collect();
    let bad = pairs.par_iter().find_any(|&&(i, k)| {
        let (Some(s), Some(t)) = (&modules[i], &modules[i | 1 << k]) else { return false };
        let f = &edge_polys[k];
        let df = f.degree().unwrap_or(0);
        let bound = t.degree_bound();
        s.quotient.groebner().basis().iter().any(|g| {
            let dg = g.degree().unwrap_or(0);
            dg + df <= bound && !t.contains(&g.mul(f))
        })
    });
    match bad {
        Some(&(i, k)) => Err(C2Error::IllDefined { crossing: k, from: i as u64 }),
        None => Ok(()),
    }
}

/// Lowest-id edge on each component of `sm(D)`.
pub fn marked_edges(d: &DecoratedDiagram) -> Vec<usize> {
    let (comp, _) = orient_components(d);
    let mut first: BTreeMap<usize, usize> = BTreeMap::new();
    for (e, &c) in comp.iter().enumerate() {
        first.entry(c).or_insert(e + 1);
    }
    first.into_values().collect()
}

/// A complex together with its homology on a window found by widening
/// downwards until `stability_run` zero positions sit below the support.
pub struct StableHomology {
    pub complex: C2Complex,
    /// `E₁`-sized model of the same filtered complex.
    pub reduced: FilteredComplex<i64>,
    pub homology: BTreeMap<i64, usize>,
    pub stable: bool,
}

impl StableHomology {
    pub fn total(&self) -> usize {
        self.homology.values().sum()
    }

    pub fn spectral_sequence(&self) -> Result<SpectralSequence<i64>, C2Error> {
        Ok(restrict_window(self.reduced.pages()?, self.complex.window))
    }
}

fn solve(d: &DecoratedDiagram, opts: &C2Options, lo: i64) -> Result<StableHomology, C2Error> {
    let complex = assemble(d, opts.reduce, lo, opts.check_well_defined)?;
    let reduced = complex.reduced()?;
    let (lo, hi) = complex.window;
    let homology = reduced.complex.homology_dims()?.into_iter().filter(|(g, _)| (lo..=hi).contains(g)).collect();
    let stable = is_stable(&homology, lo, opts.stability_run);
    Ok(StableHomology { complex, reduced, homology, stable })
}

pub fn stable_homology(d: &DecoratedDiagram, opts: &C2Options) -> Result<StableHomology, C2Error> {
    if let Some((lo, _)) = opts.window {
        return solve(d, opts, lo);
    }
    let top = top_position(d)?;
    let floor = top - 2 * opts.max_depth as i64;
    let run = 2 * opts.stability_run as i64;
    let mut lo = top - 2 * (opts.stability_run as i64 + 2);
    loop {
        let s = solve(d, opts, lo.max(floor))?;
        if s.stable {
            return Ok(s);
        }
        if lo <= floor {
            if opts.reduce {
                return Err(C2Error::Unstable(floor));
            }
            return Ok(s);
        }
        lo = match s.homology.iter().find(|(_, &v)| v > 0) {
            Some((&bottom, _)) => (bottom - run).min(lo - 2),
            None => lo - run,
        };
    }
}

/// Keep only page entries at window positions.
pub fn restrict_window(mut ss: SpectralSequence<i64>, window: (i64, i64)) -> SpectralSequence<i64> {
    let inside = |k: &(i64, u32)| (window.0..=window.1).contains(&k.0);
    for PageReport { dims, d_ranks, .. } in ss.pages.iter_mut() {
        dims.retain(|k, _| inside(k));
        d_ranks.retain(|k, _| inside(k));
    }
    ss.stable_from = ss.pages.iter().rposition(|p| p.rank_total() > 0).map_or(0, |i| i as u32 + 1);
    ss
}

fn is_stable(h: &BTreeMap<i64, usize>, lo: i64, run: usize) -> bool {
    match h.iter().find(|(_, &v)| v > 0) {
        None => false,
        Some((&bottom, _)) => bottom - 2 * run as i64 >= lo,
    }
}

/// Largest `gr₂` of a vertex generator.
pub fn top_position(d: &DecoratedDiagram) -> Result<i64, C2Error> {
    let nc = d.crossing_count();
    let mut best = i64::MIN;
    for r in Resolution::all(nc) {
        let g = d.resolve(&r)?;
        best = best.max(g.four_valent().len() as i64 - r.height() as i64);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::{augment_s2n, Closure};

    fn braid(w: &str, s: usize) -> DecoratedDiagram {
        DecoratedDiagram::parse_braid(w, s, Closure::Braid).unwrap()
    }

    fn augmented_trefoil() -> DecoratedDiagram {
        augment_s2n(&DecoratedDiagram::parse_braid("s2 s2 s2", 4, Closure::Plat).unwrap()).unwrap()
    }

    #[test]
    fn unknot_ideal() {
        let g = braid("", 1).resolve(&Resolution::zeros(0)).unwrap();
        let n = nonlocal_ideal(&g, 1).unwrap();
        assert_eq!(n.generators.len(), 1);
        assert_eq!(n.generators[0].monic(), Polynomial::parse(2, "U1 - U2").unwrap().monic());
    }

    #[test]
    fn quadratic_relation_in_ideal() {
        let d = augmented_trefoil();
        for r in Resolution::all(d.crossing_count()) {
            let g = d.resolve(&r).unwrap();
            let n = nonlocal_ideal(&g, 1).unwrap();
            let gb = buchberger_truncated(&n.ideal(), 3).unwrap();
            for v in g.four_valent() {
                assert!(gb.contains(&quadratic_term(g.edge_count(), g.vertices()[v].quad())).unwrap());
            }
        }
    }

    #[test]
    fn mf_squares_to_omega() {
        let f = MfFactor::new(4, vec![(1, 2, 3, 4)]);
        let sq = f.l[0].mul(&f.l_plus[0]);
        let diff = Polynomial::parse(4, "U1^2 + 2*U1*U2 + U2^2 - U3^2 - 2*U3*U4 - U4^2").unwrap();
        assert_eq!(sq, diff);
        assert_eq!(f.omega(4), diff);
    }

    #[test]
    fn vertex_checks_small() {
        let d = augment_s2n(&braid("s1", 2)).unwrap();
        for r in Resolution::all(d.crossing_count()) {
            let c = vertex_homology_check(&d, r, 8).unwrap();
            assert!(c.agree, "{c:?}");
        }
    }

    #[test]
    fn contraction_keeps_homology() {
        for (w, s) in [("s1", 2), ("", 4), ("s2", 4)] {
            let d = augment_s2n(&DecoratedDiagram::parse_braid(w, s, Closure::Plat).unwrap()).unwrap();
            for r in Resolution::all(d.crossing_count()) {
                assert_eq!(vertex_homology(&d, r, 5).unwrap(), vertex_homology_uncontracted(&d, r, 5).unwrap());
            }
        }
    }

    #[test]
    fn unknot_reduced_total() {
        let d = augment_s2n(&braid("s1", 2)).unwrap();
        let s = stable_homology(&d, &C2Options::default()).unwrap();
        assert!(s.complex.complex.check_d_squared().is_ok());
        assert!(s.complex.check_z2());
        assert!(s.complex.check_filtration());
        assert_eq!(s.total(), 1);
    }
}
