//! Exact sparse matrices over `Q` and homology of finite complexes.
//!
//! Rank uses row elimination with an approximate Markowitz pivot rule: among
//! the few shortest active rows, pick the entry minimizing
//! `(row_len - 1) * (col_count - 1)`, then smallest height, then lowest
//! `(row, col)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::rational::Q;

pub type SparseRow = Vec<(u32, Q)>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("d∘d is nonzero at grading {0}")]
    NotAComplex(String),
    #[error("shape mismatch at grading {key}: {detail}")]
    Shape { key: String, detail: String },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<SparseRow>,
}

impl SparseMatrix {
    pub fn zero(rows: usize, cols: usize) -> SparseMatrix {
        SparseMatrix { rows, cols, data: vec![Vec::new(); rows] }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        let data = (0..n).map(|i| vec![(i as u32, Q::ONE)]).collect();
        SparseMatrix { rows: n, cols: n, data }
    }

    /// Duplicate entries are summed and zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        entries: impl IntoIterator<Item = (usize, usize, Q)>,
    ) -> SparseMatrix {
        let mut data: Vec<SparseRow> = vec![Vec::new(); rows];
        for (r, c, v) in entries {
            assert!(r < rows && c < cols, "entry ({r},{c}) out of range {rows}x{cols}");
            data[r].push((c as u32, v));
        }
        for row in &mut data {
            *row = normalize_row(std::mem::take(row));
        }
        SparseMatrix { rows, cols, data }
    }

    pub fn from_rows(cols: usize, rows: Vec<SparseRow>) -> SparseMatrix {
        let n = rows.len();
        let data = rows
            .into_iter()
            .map(|r| {
                assert!(r.iter().all(|(c, _)| (*c as usize) < cols));
                normalize_row(r)
            })
            .collect();
        SparseMatrix { rows: n, cols, data }
    }

    pub fn from_dense(rows: &[Vec<i64>]) -> SparseMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        SparseMatrix::from_triplets(
            rows.len(),
            cols,
            rows.iter().enumerate().flat_map(|(i, r)| r.iter().enumerate().map(move |(j, &v)| (i, j, Q::from_int(v)))),
        )
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &SparseRow {
        &self.data[r]
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    pub fn get(&self, r: usize, c: usize) -> Q {
        match self.data[r].binary_search_by_key(&(c as u32), |e| e.0) {
            Ok(k) => self.data[r][k].1.clone(),
            Err(_) => Q::ZERO,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &Q)> {
        self.data.iter().enumerate().flat_map(|(r, row)| row.iter().map(move |(c, v)| (r, *c as usize, v)))
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut data: Vec<SparseRow> = vec![Vec::new(); self.cols];
        for (r, c, v) in self.entries() {
            data[c].push((r as u32, v.clone()));
        }
        SparseMatrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn scale(&self, s: &Q) -> SparseMatrix {
        if s.is_zero() {
            return SparseMatrix::zero(self.rows, self.cols);
        }
        let data = self.data.iter().map(|r| r.iter().map(|(c, v)| (*c, v * s)).collect()).collect();
        SparseMatrix { rows: self.rows, cols: self.cols, data }
    }

    pub fn add(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| axpy(a, b, &Q::ONE)).collect();
        SparseMatrix { rows: self.rows, cols: self.cols, data }
    }

    /// `self * other`.
    pub fn mul(&self, other: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let data = self
            .data
            .par_iter()
            .map(|row| {
                let mut acc: SparseRow = Vec::new();
                for (k, a) in row {
                    acc.extend(other.data[*k as usize].iter().map(|(c, b)| (*c, a * b)));
                }
                normalize_row(acc)
            })
            .collect();
        SparseMatrix { rows: self.rows, cols: other.cols, data }
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(v.len(), self.cols);
        self.data.iter().map(|row| row.iter().fold(Q::ZERO, |acc, (c, a)| acc + a * &v[*c as usize])).collect()
    }

    /// Rows and columns selected by predicate, renumbered in order.
    pub fn submatrix(&self, keep_row: impl Fn(usize) -> bool, keep_col: impl Fn(usize) -> bool) -> SparseMatrix {
        let mut col_map = vec![u32::MAX; self.cols];
        let mut nc = 0u32;
        for (c, slot) in col_map.iter_mut().enumerate() {
            if keep_col(c) {
                *slot = nc;
                nc += 1;
            }
        }
        let data: Vec<SparseRow> = (0..self.rows)
            .filter(|&r| keep_row(r))
            .map(|r| {
                self.data[r]
                    .iter()
                    .filter(|(c, _)| col_map[*c as usize] != u32::MAX)
                    .map(|(c, v)| (col_map[*c as usize], v.clone()))
                    .collect()
            })
            .collect();
        SparseMatrix { rows: data.len(), cols: nc as usize, data }
    }

    pub fn to_dense(&self) -> Vec<Vec<Q>> {
        let mut out = vec![vec![Q::ZERO; self.cols]; self.rows];
        for (r, c, v) in self.entries() {
            out[r][c] = v.clone();
        }
        out
    }

    pub fn rank(&self) -> usize {
        if self.rows <= self.cols {
            eliminate(self.data.clone(), self.cols)
        } else {
            let t = self.transpose();
            eliminate(t.data, t.cols)
        }
    }

    /// A basis of the null space `{x : M x = 0}`, one dense vector per free column.
    pub fn kernel_basis(&self) -> Vec<Vec<Q>> {
        let (pivots, rref) = rref(&self.data);
        let pivot_of_col: BTreeMap<usize, usize> = pivots.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut out = Vec::new();
        for free in 0..self.cols {
            if pivot_of_col.contains_key(&free) {
                continue;
            }
            let mut v = vec![Q::ZERO; self.cols];
            v[free] = Q::ONE;
            for (i, &pc) in pivots.iter().enumerate() {
                if let Ok(k) = rref[i].binary_search_by_key(&(free as u32), |e| e.0) {
                    v[pc] = -rref[i][k].1.clone();
                }
            }
            out.push(v);
        }
        out
    }

    /// Matrix-market coordinate text.
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::from("%%MatrixMarket matrix coordinate rational general\n");
        let _ = writeln!(s, "{} {} {}", self.rows, self.cols, self.nnz());
        for (r, c, v) in self.entries() {
            let _ = writeln!(s, "{} {} {}", r + 1, c + 1, v);
        }
        s
    }
}

impl fmt::Display for SparseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_dense() {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

pub(crate) fn normalize_row(mut row: SparseRow) -> SparseRow {
    row.sort_by_key(|e| e.0);
    let mut out: SparseRow = Vec::with_capacity(row.len());
    for (c, v) in row {
        match out.last_mut() {
            Some(last) if last.0 == c => last.1 += &v,
            _ => out.push((c, v)),
        }
    }
    out.retain(|(_, v)| !v.is_zero());
    out
}

/// `a + s * b` for sorted sparse rows.
pub(crate) fn axpy(a: &SparseRow, b: &SparseRow, s: &Q) -> SparseRow {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        if j == b.len() || (i < a.len() && a[i].0 < b[j].0) {
            out.push(a[i].clone());
            i += 1;
        } else if i == a.len() || b[j].0 < a[i].0 {
            out.push((b[j].0, &b[j].1 * s));
            j += 1;
        } else {
            let v = &a[i].1 + &(&b[j].1 * s);
            if !v.is_zero() {
                out.push((a[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

const PIVOT_CANDIDATE_ROWS: usize = 4;

/// Rank by Markowitz-style sparse elimination; consumes the rows.
fn eliminate(rows: Vec<SparseRow>, ncols: usize) -> usize {
    let mut rows: Vec<SparseRow> = rows;
    let mut active = vec![true; rows.len()];
    let mut col_count = vec![0u32; ncols];
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); ncols];
    let mut queue: BTreeSet<(u32, u32)> = BTreeSet::new();
    for (r, row) in rows.iter().enumerate() {
        if row.is_empty() {
            active[r] = false;
            continue;
        }
        for (c, _) in row {
            col_count[*c as usize] += 1;
            col_rows[*c as usize].push(r as u32);
        }
        queue.insert((row.len() as u32, r as u32));
    }
    let mut rank = 0;
    let mut scratch: Vec<u32> = Vec::new();
    while !queue.is_empty() {
        // pivot choice
        let mut best: Option<(u64, u64, u32, u32, usize)> = None;
        for &(len, r) in queue.iter().take(PIVOT_CANDIDATE_ROWS) {
            for (k, (c, v)) in rows[r as usize].iter().enumerate() {
                let cost = (len as u64 - 1) * (col_count[*c as usize] as u64 - 1);
                let key = (cost, v.height(), r, *c, k);
                if best.as_ref().map_or(true, |b| (key.0, key.1, key.2, key.3) < (b.0, b.1, b.2, b.3)) {
                    best = Some(key);
                }
            }
        }
        let (_, _, pr, pc, _) = best.unwrap();
        let prow = std::mem::take(&mut rows[pr as usize]);
        queue.remove(&(prow.len() as u32, pr));
        active[pr as usize] = false;
        for (c, _) in &prow {
            col_count[*c as usize] -= 1;
        }
        rank += 1;
        let pval = prow.iter().find(|e| e.0 == pc).unwrap().1.clone();
        let pinv = pval.recip();
        scratch.clear();
        scratch.extend(col_rows[pc as usize].drain(..));
        scratch.sort_unstable();
        scratch.dedup();
        for &j in &scratch {
            let ju = j as usize;
            if !active[ju] {
                continue;
            }
            let Ok(k) = rows[ju].binary_search_by_key(&pc, |e| e.0) else { continue };
            let factor = -(&rows[ju][k].1 * &pinv);
            let old = std::mem::take(&mut rows[ju]);
            queue.remove(&(old.len() as u32, j));
            let new = axpy(&old, &prow, &factor);
            // update column bookkeeping from the symmetric difference of supports
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
            if new.is_empty() {
                active[ju] = false;
            } else {
                queue.insert((new.len() as u32, j));
            }
            rows[ju] = new;
        }
    }
    rank
}

/// Reduced row echelon form; returns pivot columns and the nonzero rows.
fn rref(rows: &[SparseRow]) -> (Vec<usize>, Vec<SparseRow>) {
    let mut pivots: Vec<usize> = Vec::new();
    let mut basis: Vec<SparseRow> = Vec::new();
    let mut by_col: BTreeMap<u32, usize> = BTreeMap::new();
    for row in rows {
        let mut r = row.clone();
        // reduce against existing pivots
        let mut pos = 0;
        while pos < r.len() {
            let c = r[pos].0;
            if let Some(&i) = by_col.get(&c) {
                let f = -r[pos].1.clone();
                r = axpy(&r, &basis[i], &f);
            } else {
                pos += 1;
            }
        }
        if r.is_empty() {
            continue;
        }
        let lead_c = r[0].0;
        let inv = r[0].1.recip();
        let r: SparseRow = r.into_iter().map(|(c, v)| (c, &v * &inv)).collect();
        // clear this column from earlier basis rows
        for b in basis.iter_mut() {
            if let Ok(k) = b.binary_search_by_key(&lead_c, |e| e.0) {
                let f = -b[k].1.clone();
                *b = axpy(b, &r, &f);
            }
        }
        by_col.insert(lead_c, basis.len());
        pivots.push(lead_c as usize);
        basis.push(r);
    }
    (pivots, basis)
}

/// A finite complex indexed by grading keys. `differentials[k] = (t, M)`
/// means `d: C_k -> C_t` with `M` of shape `dim C_t x dim C_k`.
#[derive(Clone, Debug)]
pub struct FiniteComplex<K: Ord + Clone> {
    pub dims: BTreeMap<K, usize>,
    pub differentials: BTreeMap<K, (K, SparseMatrix)>,
}

impl<K: Ord + Clone + fmt::Debug + Send + Sync> FiniteComplex<K> {
    pub fn new() -> Self {
        FiniteComplex { dims: BTreeMap::new(), differentials: BTreeMap::new() }
    }

    pub fn total_dim(&self) -> usize {
        self.dims.values().sum()
    }

    fn dim(&self, k: &K) -> usize {
        self.dims.get(k).copied().unwrap_or(0)
    }

    pub fn check_shapes(&self) -> Result<(), LinalgError> {
        for (k, (t, m)) in &self.differentials {
            if m.cols() != self.dim(k) || m.rows() != self.dim(t) {
                return Err(LinalgError::Shape {
                    key: format!("{k:?}"),
                    detail: format!("{}x{} vs {}->{}", m.rows(), m.cols(), self.dim(k), self.dim(t)),
                });
            }
        }
        Ok(())
    }

    pub fn check_d_squared(&self) -> Result<(), LinalgError> {
        self.check_shapes()?;
        let bad: Vec<&K> = self
            .differentials
            .par_iter()
            .filter_map(|(k, (t, m))| {
                let (_, m2) = self.differentials.get(t)?;
                if m2.mul(m).is_zero() {
                    None
                } else {
                    Some(k)
                }
            })
            .collect();
        match bad.first() {
            Some(k) => Err(LinalgError::NotAComplex(format!("{k:?}"))),
            None => Ok(()),
        }
    }

    /// `dim ker d_k - rank d_in` at every key of `dims`.
    pub fn homology_dims(&self) -> Result<BTreeMap<K, usize>, LinalgError> {
        self.check_d_squared()?;
        let ranks: BTreeMap<K, usize> =
            self.differentials.par_iter().map(|(k, (_, m))| (k.clone(), m.rank())).collect();
        let mut incoming: BTreeMap<K, usize> = BTreeMap::new();
        for (k, (t, _)) in &self.differentials {
            *incoming.entry(t.clone()).or_insert(0) += ranks[k];
        }
        let mut out = BTreeMap::new();
        for (k, &d) in &self.dims {
            let out_rank = ranks.get(k).copied().unwrap_or(0);
            let in_rank = incoming.get(k).copied().unwrap_or(0);
            out.insert(k.clone(), d - out_rank - in_rank);
        }
        Ok(out)
    }
}

impl<K: Ord + Clone + fmt::Debug + Send + Sync> Default for FiniteComplex<K> {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_examples() {
        assert_eq!(SparseMatrix::zero(3, 4).rank(), 0);
        assert_eq!(SparseMatrix::identity(5).rank(), 5);
        assert_eq!(SparseMatrix::from_dense(&[vec![1, 2], vec![2, 4]]).rank(), 1);
        assert_eq!(SparseMatrix::from_dense(&[vec![1, 1, 0], vec![0, 1, 1], vec![1, 0, -1]]).rank(), 2);
    }

    #[test]
    fn kernel_examples() {
        assert!(SparseMatrix::identity(3).kernel_basis().is_empty());
        assert_eq!(SparseMatrix::zero(2, 3).kernel_basis().len(), 3);
        let k = SparseMatrix::from_dense(&[vec![1, 1]]).kernel_basis();
        assert_eq!(k, vec![vec![-Q::ONE, Q::ONE]]);
    }

    #[test]
    fn kernel_vectors_are_annihilated() {
        let m = SparseMatrix::from_dense(&[vec![1, 2, 3, 4], vec![2, 4, 6, 8], vec![0, 1, 0, 1]]);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 4 - m.rank());
        for v in &k {
            assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
        }
    }

    #[test]
    fn small_complexes() {
        let mut c: FiniteComplex<i32> = FiniteComplex::new();
        c.dims.insert(0, 1);
        assert_eq!(c.homology_dims().unwrap()[&0], 1);
        c.dims.insert(1, 1);
        c.differentials.insert(0, (1, SparseMatrix::identity(1)));
        let h = c.homology_dims().unwrap();
        assert_eq!((h[&0], h[&1]), (0, 0));
    }

    #[test]
    fn d_squared_detected() {
        let mut c: FiniteComplex<i32> = FiniteComplex::new();
        for k in 0..3 {
            c.dims.insert(k, 1);
        }
        c.differentials.insert(0, (1, SparseMatrix::identity(1)));
        c.differentials.insert(1, (2, SparseMatrix::identity(1)));
        assert_eq!(c.homology_dims(), Err(LinalgError::NotAComplex("0".into())));
    }
}
