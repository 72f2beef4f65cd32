//! Spectral sequences of finite filtered complexes over `Q`.
//!
//! Filtrations are decreasing: `F_p` is spanned by generators of level at
//! least `p`, and `d` never lowers the level. Pages follow the usual
//! indexing, `d_r: E_r^p -> E_r^{p+r}`, so for the cube filtration `d₁` is
//! the edge differential and `E₂` is Khovanov homology.
//!
//! With `ρ(a, b)` the rank of the block of `d` from levels `≥ a` to levels
//! `< b`, and `I(a, b) = dim(d F_a ∩ F_b)` for the incoming differential:
//!
//! ```text
//! dim E_r^p = (|F_p| - ρ(p, p+r)) - (|F_{p+1}| - ρ(p+1, p+r))
//!             - I(p-r+1, p) + I(p-r+1, p+1)
//! rank d_r^p = ρ(p, p+r+1) - ρ(p, p+r) - ρ(p+1, p+r+1) + ρ(p+1, p+r)
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::khovanov::{BiGrading, PoincarePolynomial};
use crate::linalg::{axpy, FiniteComplex, LinalgError, SparseMatrix, SparseRow};
use crate::rational::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("filtration levels missing or mis-sized at grading {0}")]
    Levels(String),
    #[error("differential lowers the filtration at grading {0}")]
    NotFiltered(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug)]
pub struct FilteredComplex<K: Ord + Clone> {
    pub complex: FiniteComplex<K>,
    pub levels: BTreeMap<K, Vec<u32>>,
}

/// One page: dimensions per `(key, level)` and ranks of `d_r` per source.
#[derive(Clone, Debug, Serialize)]
pub struct PageReport<K: Ord> {
    pub r: u32,
    pub dims: BTreeMap<(K, u32), usize>,
    pub d_ranks: BTreeMap<(K, u32), usize>,
}

impl<K: Ord + Clone> PageReport<K> {
    pub fn total(&self) -> usize {
        self.dims.values().sum()
    }

    pub fn rank_total(&self) -> usize {
        self.d_ranks.values().sum()
    }

    pub fn by_key(&self) -> BTreeMap<K, usize> {
        let mut out = BTreeMap::new();
        for ((k, _), &v) in &self.dims {
            *out.entry(k.clone()).or_insert(0) += v;
        }
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralSequence<K: Ord> {
    /// Pages `E_0 .. E_{w+1}` for filtration width `w`; the last is `E_∞`.
    pub pages: Vec<PageReport<K>>,
    /// First page after which every differential vanishes.
    pub stable_from: u32,
}

impl<K: Ord + Clone> SpectralSequence<K> {
    pub fn page(&self, r: u32) -> Option<&PageReport<K>> {
        self.pages.get(r as usize)
    }

    pub fn infinity(&self) -> &PageReport<K> {
        self.pages.last().expect("at least one page")
    }
}

impl<K: Ord + Clone + fmt::Debug + Send + Sync> FilteredComplex<K> {
    pub fn new(complex: FiniteComplex<K>, levels: BTreeMap<K, Vec<u32>>) -> Result<Self, SpectralError> {
        complex.check_shapes()?;
        for (k, &n) in &complex.dims {
            if levels.get(k).map(|l| l.len()) != Some(n) {
                return Err(SpectralError::Levels(format!("{k:?}")));
            }
        }
        let f = FilteredComplex { complex, levels };
        for (k, (t, m)) in &f.complex.differentials {
            let (ls, lt) = (&f.levels[k], &f.levels[t]);
            if m.entries().any(|(r, c, _)| lt[r] < ls[c]) {
                return Err(SpectralError::NotFiltered(format!("{k:?}")));
            }
        }
        Ok(f)
    }

    pub fn level_range(&self) -> Option<(u32, u32)> {
        let mut it = self.levels.values().flatten().copied();
        let first = it.next()?;
        Some(it.fold((first, first), |(a, b), x| (a.min(x), b.max(x))))
    }

    /// Cancel every level-preserving entry of `d` by Gaussian elimination.
    /// The result is filtered homotopy equivalent, has the same pages from
    /// `E₁` on, and its generators are a basis of `E₁`.
    pub fn reduce(&self) -> FilteredComplex<K> {
        let mut alive: BTreeMap<K, Vec<bool>> =
            self.complex.dims.iter().map(|(k, &n)| (k.clone(), vec![true; n])).collect();
        let mut reduced: BTreeMap<K, (K, Vec<SparseRow>)> = BTreeMap::new();
        for (k, (t, m)) in self.complex.differentials.iter().rev() {
            let rows: Vec<SparseRow> = (0..m.rows())
                .map(|r| {
                    if !alive[t][r] {
                        return Vec::new();
                    }
                    m.row(r).iter().filter(|(c, _)| alive[k][*c as usize]).cloned().collect()
                })
                .collect();
            let (rows, pivots) = level_eliminate(rows, m.cols(), &self.levels[t], &self.levels[k]);
            for (r, c) in pivots {
                alive.get_mut(t).unwrap()[r] = false;
                alive.get_mut(k).unwrap()[c] = false;
            }
            reduced.insert(k.clone(), (t.clone(), rows));
        }
        let index: BTreeMap<K, Vec<u32>> = alive
            .iter()
            .map(|(k, a)| {
                let mut next = 0u32;
                let v = a
                    .iter()
                    .map(|&x| {
                        if x {
                            next += 1;
                            next - 1
                        } else {
                            u32::MAX
                        }
                    })
                    .collect();
                (k.clone(), v)
            })
            .collect();
        let mut complex = FiniteComplex::new();
        let mut levels = BTreeMap::new();
        for (k, a) in &alive {
            complex.dims.insert(k.clone(), a.iter().filter(|&&x| x).count());
            levels.insert(k.clone(), a.iter().zip(&self.levels[k]).filter(|(x, _)| **x).map(|(_, &l)| l).collect());
        }
        for (k, (t, rows)) in reduced {
            let (ci, ri) = (&index[&k], &index[&t]);
            let entries: Vec<(usize, usize, Q)> = rows
                .into_iter()
                .enumerate()
                .filter(|(r, _)| alive[&t][*r])
                .flat_map(|(r, row)| {
                    let rr = ri[r] as usize;
                    row.into_iter()
                        .filter(|(c, _)| ci[*c as usize] != u32::MAX)
                        .map(move |(c, v)| (rr, ci[c as usize] as usize, v))
                        .collect::<Vec<_>>()
                })
                .collect();
            let m = SparseMatrix::from_triplets(complex.dims[&t], complex.dims[&k], entries);
            complex.differentials.insert(k, (t, m));
        }
        FilteredComplex { complex, levels }
    }

    /// All pages through `E_∞`, computed from ranks of filtration blocks.
    pub fn pages(&self) -> Result<SpectralSequence<K>, SpectralError> {
        self.complex.check_d_squared()?;
        let Some((lmin, lmax)) = self.level_range() else {
            return Ok(SpectralSequence { pages: vec![empty_page(0)], stable_from: 0 });
        };
        let width = lmax - lmin;
        let mut incoming: BTreeMap<K, Vec<K>> = BTreeMap::new();
        for (k, (t, _)) in &self.complex.differentials {
            incoming.entry(t.clone()).or_default().push(k.clone());
        }
        let mut cache: BTreeMap<(K, u32, u32), usize> = BTreeMap::new();
        // ρ for the differential leaving `k`
        let mut rho = |k: &K, a: u32, b: u32| -> usize {
            let Some((t, m)) = self.complex.differentials.get(k) else { return 0 };
            let a = a.clamp(lmin, lmax + 1);
            let b = b.clamp(lmin, lmax + 1);
            if a > lmax || b <= lmin {
                return 0;
            }
            *cache.entry((k.clone(), a, b)).or_insert_with(|| block_rank(m, &self.levels[t], &self.levels[k], a, b))
        };
        let fdim = |k: &K, p: u32| self.levels[k].iter().filter(|&&l| l >= p).count();
        let mut pages = Vec::new();
        for r in 0..=width + 1 {
            let mut dims = BTreeMap::new();
            let mut d_ranks = BTreeMap::new();
            for k in self.complex.dims.keys() {
                for p in lmin..=lmax {
                    let z = fdim(k, p) as i64 - rho(k, p, p + r) as i64;
                    let z1 = fdim(k, p + 1) as i64 - rho(k, p + 1, p + r) as i64;
                    let src = (p + 1).saturating_sub(r);
                    let mut b = 0i64;
                    for j in incoming.get(k).into_iter().flatten() {
                        let i_p = rho(j, src, u32::MAX) as i64 - rho(j, src, p) as i64;
                        let i_p1 = rho(j, src, u32::MAX) as i64 - rho(j, src, p + 1) as i64;
                        b += i_p - i_p1;
                    }
                    let e = z - z1 - b;
                    assert!(e >= 0, "negative page dimension");
                    if e > 0 {
                        dims.insert((k.clone(), p), e as usize);
                    }
                    let dr = rho(k, p, p + r + 1) as i64 - rho(k, p, p + r) as i64 - rho(k, p + 1, p + r + 1) as i64
                        + rho(k, p + 1, p + r) as i64;
                    if dr > 0 {
                        d_ranks.insert((k.clone(), p), dr as usize);
                    }
                }
            }
            pages.push(PageReport { r, dims, d_ranks });
        }
        let stable_from = pages.iter().rposition(|p| p.rank_total() > 0).map_or(0, |i| i as u32 + 1);
        Ok(SpectralSequence { pages, stable_from })
    }
}

fn empty_page<K: Ord>(r: u32) -> PageReport<K> {
    PageReport { r, dims: BTreeMap::new(), d_ranks: BTreeMap::new() }
}

/// Rank of the block from columns of level `≥ a` to rows of level `< b`.
fn block_rank(m: &SparseMatrix, row_level: &[u32], col_level: &[u32], a: u32, b: u32) -> usize {
    m.submatrix(|r| row_level[r] < b, |c| col_level[c] >= a).rank()
}

/// Elimination restricted to pivots whose row and column share a level.
/// Returns the Schur complement (pivot rows emptied, pivot columns removed)
/// and the pivots as `(row, col)`.
pub(crate) fn level_eliminate(
    mut rows: Vec<SparseRow>,
    ncols: usize,
    row_level: &[u32],
    col_level: &[u32],
) -> (Vec<SparseRow>, Vec<(usize, usize)>) {
    let eligible =
        |r: usize, row: &SparseRow| row.iter().filter(|(c, _)| col_level[*c as usize] == row_level[r]).count();
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); ncols];
    let mut col_count = vec![0u32; ncols];
    let mut queue: BTreeSet<(u32, u32, u32)> = BTreeSet::new();
    let mut key = vec![None; rows.len()];
    for (r, row) in rows.iter().enumerate() {
        for (c, _) in row {
            col_rows[*c as usize].push(r as u32);
            col_count[*c as usize] += 1;
        }
        let e = eligible(r, row);
        if e > 0 {
            let k = (row.len() as u32, e as u32, r as u32);
            queue.insert(k);
            key[r] = Some(k);
        }
    }
    let mut pivots = Vec::new();
    let mut dead_col = vec![false; ncols];
    let mut scratch = Vec::new();
    while let Some(&first) = queue.iter().next() {
        let mut best: Option<(u64, u64, u32, u32)> = None;
        for &(len, _, r) in queue.iter().take(4) {
            for (c, v) in &rows[r as usize] {
                if col_level[*c as usize] != row_level[r as usize] {
                    continue;
                }
                let cost = (len as u64 - 1) * (col_count[*c as usize] as u64 - 1);
                let cand = (cost, v.height(), r, *c);
                if best.map_or(true, |b| cand < b) {
                    best = Some(cand);
                }
            }
        }
        let (_, _, pr, pc) = best.unwrap_or((0, 0, first.2, 0));
        let pr = pr as usize;
        let prow = std::mem::take(&mut rows[pr]);
        if let Some(k) = key[pr].take() {
            queue.remove(&k);
        }
        for (c, _) in &prow {
            col_count[*c as usize] -= 1;
        }
        let pinv = prow.iter().find(|e| e.0 == pc).expect("pivot entry").1.recip();
        pivots.push((pr, pc as usize));
        dead_col[pc as usize] = true;
        scratch.clear();
        scratch.append(&mut col_rows[pc as usize]);
        scratch.sort_unstable();
        scratch.dedup();
        for &j in &scratch {
            let ju = j as usize;
            if ju == pr {
                continue;
            }
            let Ok(pos) = rows[ju].binary_search_by_key(&pc, |e| e.0) else { continue };
            let factor = -(&rows[ju][pos].1 * &pinv);
            let old = std::mem::take(&mut rows[ju]);
            let new = axpy(&old, &prow, &factor);
            let (mut a, mut b) = (0, 0);
            while a < old.len() || b < new.len() {
                if b == new.len() || (a < old.len() && old[a].0 < new[b].0) {
                    col_count[old[a].0 as usize] -= 1;
                    a += 1;
                } else if a == old.len() || new[b].0 < old[a].0 {
                    col_count[new[b].0 as usize] += 1;
                    col_rows[new[b].0 as usize].push(j);
                    b += 1;
                } else {
                    a += 1;
                    b += 1;
                }
            }
            if let Some(k) = key[ju].take() {
                queue.remove(&k);
            }
            let e = eligible(ju, &new);
            if e > 0 {
                let k = (new.len() as u32, e as u32, j);
                queue.insert(k);
                key[ju] = Some(k);
            }
            rows[ju] = new;
        }
    }
    for row in rows.iter_mut() {
        row.retain(|(c, _)| !dead_col[*c as usize]);
    }
    (rows, pivots)
}

/// Outcome of the structural checks on a run.
#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    /// `E₂` matches the expected Khovanov δ-polynomial up to shift.
    pub e2_matches: bool,
    /// `E_∞` matches the expected knot Floer δ-polynomial up to shift;
    /// `None` when no expectation was supplied.
    pub einf_matches: Option<bool>,
    /// `rank d_{2i} = 0` for `i ≥ 1`.
    pub even_vanish: bool,
    /// Every differential lowers `gr₂` by exactly 2.
    pub delta_degree: bool,
    pub e2: String,
    pub einf: String,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.e2_matches && self.einf_matches != Some(false) && self.even_vanish && self.delta_degree
    }
}

/// `gr₂`-graded page as a δ-polynomial (δ = gr₂ up to shift).
pub fn page_polynomial(page: &PageReport<i64>) -> PoincarePolynomial {
    let pairs: Vec<(i64, usize)> = page.by_key().into_iter().filter(|(_, v)| *v > 0).collect();
    PoincarePolynomial::from_pairs(&pairs)
}

pub fn verify_structure(
    ss: &SpectralSequence<i64>,
    complex: &FiniteComplex<i64>,
    kh_e2: &PoincarePolynomial,
    einf_expected: Option<&PoincarePolynomial>,
) -> Verdict {
    let e2 = ss.page(2).map(page_polynomial).unwrap_or_default();
    let einf = page_polynomial(ss.infinity());
    let even_vanish = ss.pages.iter().filter(|p| p.r >= 2 && p.r % 2 == 0).all(|p| p.rank_total() == 0);
    let delta_degree = complex.differentials.iter().all(|(k, (t, _))| *t == k - 2);
    Verdict {
        e2_matches: e2.equal_up_to_shift(kh_e2),
        einf_matches: einf_expected.map(|e| einf.equal_up_to_shift(e)),
        even_vanish,
        delta_degree,
        e2: e2.to_string(),
        einf: einf.to_string(),
    }
}

/// A possible higher differential between two Khovanov generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Arrow {
    pub from: BiGrading,
    pub to: BiGrading,
}

impl Arrow {
    /// `(Δh, Δq)`.
    pub fn bigrading(&self) -> (i64, i64) {
        (self.to.h - self.from.h, self.to.q - self.from.q)
    }
}

/// Index of `d_r` (`E₂` convention) when the first page is relabelled `E₀`
/// and only the odd differentials from `d₃` are kept: `d_k` has bigrading
/// `(2k + 3, 4k + 4)`.
pub fn relabel_index(r: u32) -> Option<u32> {
    (r >= 3 && r % 2 == 1).then(|| (r - 3) / 2)
}

/// Sets of arrows of bigrading `(r, 2r - 2)` with `r ≥ 3` odd, pairwise
/// disjoint, whose removal turns the Khovanov δ-distribution into
/// `target` (aligned by an overall even shift). Returns every solution for
/// every feasible shift.
pub fn admissible_differentials(kh: &[(BiGrading, usize)], target: &PoincarePolynomial) -> Vec<(i64, Vec<Arrow>)> {
    let gens: Vec<BiGrading> = kh.iter().flat_map(|&(g, n)| std::iter::repeat(g).take(n)).collect();
    let kh_poly = PoincarePolynomial::from_pairs(
        &gens
            .iter()
            .fold(BTreeMap::new(), |mut m: BTreeMap<i64, usize>, g| {
                *m.entry(g.delta()).or_insert(0) += 1;
                m
            })
            .into_iter()
            .collect::<Vec<_>>(),
    );
    let (Some(kt), Some(tt)) = (kh_poly.top(), target.top()) else { return Vec::new() };
    let (kb, tb) = (kh_poly.support()[0], target.support()[0]);
    let mut out = Vec::new();
    // top-aligned first, then every even shift keeping the target inside
    let shifts: Vec<i64> = (kb - tb..=kt - tt).rev().filter(|s| (kt - tt - s) % 2 == 0).collect();
    for s in shifts {
        let shifted = target.shift(s);
        let mut excess: BTreeMap<i64, i64> = BTreeMap::new();
        let mut feasible = true;
        for d in kh_poly.support().into_iter().chain(shifted.support()) {
            let e = kh_poly.get(d) as i64 - shifted.get(d) as i64;
            if e < 0 {
                feasible = false;
            }
            excess.insert(d, e);
        }
        if !feasible {
            continue;
        }
        let candidates: Vec<Arrow> = gens
            .iter()
            .flat_map(|&a| gens.iter().map(move |&b| Arrow { from: a, to: b }))
            .filter(|ar| {
                let (dh, dq) = ar.bigrading();
                dh >= 3 && dh % 2 == 1 && dq == 2 * dh - 2
            })
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut used: BTreeMap<BiGrading, usize> = BTreeMap::new();
        let avail: BTreeMap<BiGrading, usize> = kh.iter().copied().collect();
        let mut chosen = Vec::new();
        search(&candidates, 0, &mut excess, &mut used, &avail, &mut chosen, &mut |sol| out.push((s, sol.to_vec())));
    }
    out
}

fn search(
    cands: &[Arrow],
    start: usize,
    excess: &mut BTreeMap<i64, i64>,
    used: &mut BTreeMap<BiGrading, usize>,
    avail: &BTreeMap<BiGrading, usize>,
    chosen: &mut Vec<Arrow>,
    emit: &mut dyn FnMut(&[Arrow]),
) {
    if excess.values().all(|&e| e == 0) {
        emit(chosen);
        return;
    }
    for i in start..cands.len() {
        let a = cands[i];
        let (ds, dt) = (a.from.delta(), a.to.delta());
        let free = |g: &BiGrading, used: &BTreeMap<BiGrading, usize>| avail[g] > used.get(g).copied().unwrap_or(0);
        if excess[&ds] <= 0 || excess[&dt] <= 0 || !free(&a.from, used) {
            continue;
        }
        *used.entry(a.from).or_insert(0) += 1;
        if !free(&a.to, used) {
            *used.get_mut(&a.from).unwrap() -= 1;
            continue;
        }
        *used.entry(a.to).or_insert(0) += 1;
        *excess.get_mut(&ds).unwrap() -= 1;
        *excess.get_mut(&dt).unwrap() -= 1;
        chosen.push(a);
        search(cands, i, excess, used, avail, chosen, emit);
        chosen.pop();
        *excess.get_mut(&ds).unwrap() += 1;
        *excess.get_mut(&dt).unwrap() += 1;
        *used.get_mut(&a.from).unwrap() -= 1;
        *used.get_mut(&a.to).unwrap() -= 1;
    }
}
