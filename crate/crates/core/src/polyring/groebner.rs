use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::{Monomial, MonomialOrder, PolyError, Polynomial};
use crate::rational::Q;

/// A list of generators in a fixed number of variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ideal {
    nvars: usize,
    generators: Vec<Polynomial>,
}

impl Ideal {
    /// Zero generators are dropped.
    pub fn new(nvars: usize, generators: Vec<Polynomial>) -> Result<Ideal, PolyError> {
        for g in &generators {
            if g.nvars() != nvars {
                return Err(PolyError::VariableMismatch { expected: nvars, found: g.nvars() });
            }
        }
        let generators = generators.into_iter().filter(|g| !g.is_zero()).collect();
        Ok(Ideal { nvars, generators })
    }

    pub fn zero(nvars: usize) -> Ideal {
        Ideal { nvars, generators: Vec::new() }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn generators(&self) -> &[Polynomial] {
        &self.generators
    }

    pub fn is_homogeneous(&self) -> bool {
        self.generators.iter().all(|g| g.with_order(MonomialOrder::DegRevLex).is_homogeneous())
    }

    pub fn push(&mut self, g: Polynomial) {
        assert_eq!(g.nvars(), self.nvars);
        if !g.is_zero() {
            self.generators.push(g);
        }
    }

    pub fn sum(&self, other: &Ideal) -> Ideal {
        assert_eq!(self.nvars, other.nvars);
        let mut gens = self.generators.clone();
        gens.extend(other.generators.iter().cloned());
        Ideal { nvars: self.nvars, generators: gens }
    }

    pub fn groebner(&self) -> GroebnerBasis {
        buchberger(self)
    }
}

/// A reduced Gröbner basis, possibly truncated at a degree bound.
///
/// With a bound `D` (homogeneous input only), the basis agrees with the full
/// reduced basis in all degrees `<= D`, which is all that normal forms of
/// polynomials of degree `<= D` depend on.
#[derive(Clone, Debug)]
pub struct GroebnerBasis {
    nvars: usize,
    order: MonomialOrder,
    basis: Vec<Polynomial>,
    masks: Vec<u64>,
    degree_bound: Option<u32>,
    homogeneous: bool,
}

impl PartialEq for GroebnerBasis {
    fn eq(&self, other: &Self) -> bool {
        self.nvars == other.nvars && self.order == other.order && self.basis == other.basis
    }
}

impl GroebnerBasis {
    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn basis(&self) -> &[Polynomial] {
        &self.basis
    }

    pub fn degree_bound(&self) -> Option<u32> {
        self.degree_bound
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn is_unit(&self) -> bool {
        self.basis.iter().any(|g| g.leading_monomial().map_or(false, |m| m.is_one()))
    }

    pub fn leading_monomials(&self) -> impl Iterator<Item = &Monomial> {
        self.basis.iter().map(|g| g.leading_monomial().unwrap())
    }

    fn find_divisor(&self, m: &Monomial) -> Option<usize> {
        find_divisor(&self.basis, &self.masks, m)
    }

    pub fn is_standard(&self, m: &Monomial) -> bool {
        self.find_divisor(m).is_none()
    }

    pub fn normal_form(&self, f: &Polynomial) -> Result<Polynomial, PolyError> {
        if f.nvars() != self.nvars {
            return Err(PolyError::VariableMismatch { expected: self.nvars, found: f.nvars() });
        }
        let f = if f.order() == self.order { f.clone() } else { f.with_order(self.order) };
        Ok(reduce(&f, &self.basis, &self.masks))
    }

    /// Membership; with a degree bound this is only decided for `f` whose
    /// degree does not exceed the bound.
    pub fn contains(&self, f: &Polynomial) -> Result<bool, PolyError> {
        if let (Some(b), Some(d)) = (self.degree_bound, f.weighted_degree()) {
            assert!(d <= b, "membership queried above the truncation degree");
        }
        Ok(self.normal_form(f)?.is_zero())
    }

    /// Standard monomials of the given degree, a basis of the degree-`d`
    /// piece of the quotient. Returned in decreasing monomial order.
    pub fn graded_basis(&self, degree: u32) -> Result<Vec<Monomial>, PolyError> {
        if !self.homogeneous {
            let bad = self.basis.iter().find(|g| !g.is_homogeneous()).map(|g| g.to_string());
            return Err(PolyError::Inhomogeneous(bad.unwrap_or_default()));
        }
        if let Some(b) = self.degree_bound {
            assert!(degree <= b, "graded basis requested above the truncation degree");
        }
        let mut out = Vec::new();
        let mut cur = vec![0u16; self.nvars];
        self.standard_rec(0, degree, &mut cur, &mut out);
        out.sort_by(|a, b| self.order.cmp(b, a));
        Ok(out)
    }

    fn standard_rec(&self, i: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<Monomial>) {
        let n = self.nvars;
        if n == 0 {
            if left == 0 && !self.is_unit() {
                out.push(Monomial::one(0));
            }
            return;
        }
        if i == n - 1 {
            cur[i] = left as u16;
            let m = Monomial::from_exponents(cur.clone());
            if self.is_standard(&m) {
                out.push(m);
            }
            cur[i] = 0;
            return;
        }
        for e in 0..=left {
            cur[i] = e as u16;
            let partial = Monomial::from_exponents(cur.clone());
            if !self.is_standard(&partial) {
                break;
            }
            self.standard_rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
}

fn find_divisor(basis: &[Polynomial], masks: &[u64], m: &Monomial) -> Option<usize> {
    let mm = m.mask();
    for (k, g) in basis.iter().enumerate() {
        if masks[k] & !mm != 0 {
            continue;
        }
        if g.leading_monomial().unwrap().divides(m) {
            return Some(k);
        }
    }
    None
}

/// Full reduction of `f` by a list of monic polynomials.
fn reduce(f: &Polynomial, basis: &[Polynomial], masks: &[u64]) -> Polynomial {
    let nvars = f.nvars();
    let order = f.order();
    let mut p = f.clone();
    let mut rem: Vec<(Monomial, Q)> = Vec::new();
    while let Some((m, c)) = p.leading().cloned() {
        match find_divisor(basis, masks, &m) {
            Some(k) => {
                let g = &basis[k];
                let q = g.leading_monomial().unwrap().quotient_of(&m);
                p = p.add_scaled(g, &q, &-c);
            }
            None => {
                rem.push((m, c));
                p = Polynomial::from_sorted(nvars, order, p.terms()[1..].to_vec());
            }
        }
    }
    Polynomial::from_sorted(nvars, order, rem)
}

impl Polynomial {
    pub(crate) fn from_sorted(nvars: usize, order: MonomialOrder, terms: Vec<(Monomial, Q)>) -> Polynomial {
        Polynomial { nvars, order, terms }
    }
}

#[derive(Clone, Debug)]
enum Task {
    Generator(usize),
    Pair(usize, usize),
}

#[derive(Clone, Debug)]
struct Item {
    degree: u32,
    lcm: Monomial,
    seq: usize,
    order: MonomialOrder,
    task: Task,
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Item {}
impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Item {
    // reversed: BinaryHeap pops the smallest degree, then smallest lcm, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .degree
            .cmp(&self.degree)
            .then_with(|| self.order.cmp(&other.lcm, &self.lcm))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Reduced Gröbner basis under degrevlex.
pub fn buchberger(ideal: &Ideal) -> GroebnerBasis {
    compute(ideal.nvars, MonomialOrder::DegRevLex, ideal.generators(), None)
}

/// Reduced Gröbner basis valid through the given degree; the input must be
/// homogeneous.
pub fn buchberger_truncated(ideal: &Ideal, degree_bound: u32) -> Result<GroebnerBasis, PolyError> {
    if let Some(g) = ideal.generators().iter().find(|g| !g.with_order(MonomialOrder::DegRevLex).is_homogeneous()) {
        return Err(PolyError::Inhomogeneous(g.to_string()));
    }
    Ok(compute(ideal.nvars, MonomialOrder::DegRevLex, ideal.generators(), Some(degree_bound)))
}

pub(crate) fn compute(nvars: usize, order: MonomialOrder, gens: &[Polynomial], bound: Option<u32>) -> GroebnerBasis {
    let gens: Vec<Polynomial> = gens.iter().filter(|g| !g.is_zero()).map(|g| g.with_order(order)).collect();
    let homogeneous = gens.iter().all(|g| g.is_homogeneous());
    let mut basis: Vec<Polynomial> = Vec::new();
    let mut masks: Vec<u64> = Vec::new();
    let mut heap = BinaryHeap::new();
    let mut seq = 0usize;
    let mut pending: HashSet<(usize, usize)> = HashSet::new();
    for (i, g) in gens.iter().enumerate() {
        heap.push(Item {
            degree: g.weighted_degree().unwrap(),
            lcm: g.leading_monomial().unwrap().clone(),
            seq,
            order,
            task: Task::Generator(i),
        });
        seq += 1;
    }
    while let Some(item) = heap.pop() {
        if let Some(b) = bound {
            if item.degree > b {
                break;
            }
        }
        let h = match item.task {
            Task::Generator(i) => reduce(&gens[i], &basis, &masks),
            Task::Pair(i, j) => {
                pending.remove(&(i, j));
                if chain_criterion(&basis, &pending, i, j, &item.lcm) {
                    continue;
                }
                let s = s_polynomial(&basis[i], &basis[j], &item.lcm);
                reduce(&s, &basis, &masks)
            }
        };
        if h.is_zero() {
            continue;
        }
        let h = h.monic();
        let lm = h.leading_monomial().unwrap().clone();
        let k = basis.len();
        for (i, g) in basis.iter().enumerate() {
            let lmi = g.leading_monomial().unwrap();
            if lmi.is_coprime(&lm) {
                continue;
            }
            let lcm = lmi.lcm(&lm);
            // homogeneous input: the S-pair degree is the lcm degree
            let degree = if homogeneous { order.weighted_degree(&lcm) } else { sugar(g, &h, &lcm, order) };
            heap.push(Item { degree, lcm, seq, order, task: Task::Pair(i, k) });
            pending.insert((i, k));
            seq += 1;
        }
        masks.push(lm.mask());
        basis.push(h);
        if basis.last().unwrap().leading_monomial().unwrap().is_one() {
            break;
        }
    }
    let (basis, masks) = interreduce(basis, order);
    GroebnerBasis { nvars, order, basis, masks, degree_bound: bound, homogeneous }
}

fn sugar(a: &Polynomial, b: &Polynomial, lcm: &Monomial, order: MonomialOrder) -> u32 {
    let la = order.weighted_degree(a.leading_monomial().unwrap());
    let lb = order.weighted_degree(b.leading_monomial().unwrap());
    let l = order.weighted_degree(lcm);
    (a.weighted_degree().unwrap() + l - la).max(b.weighted_degree().unwrap() + l - lb)
}

fn chain_criterion(
    basis: &[Polynomial],
    pending: &HashSet<(usize, usize)>,
    i: usize,
    j: usize,
    lcm: &Monomial,
) -> bool {
    for (k, g) in basis.iter().enumerate() {
        if k == i || k == j {
            continue;
        }
        if !g.leading_monomial().unwrap().divides(lcm) {
            continue;
        }
        let key = |a: usize, b: usize| (a.min(b), a.max(b));
        if !pending.contains(&key(i, k)) && !pending.contains(&key(j, k)) {
            return true;
        }
    }
    false
}

fn s_polynomial(f: &Polynomial, g: &Polynomial, lcm: &Monomial) -> Polynomial {
    let qf = f.leading_monomial().unwrap().quotient_of(lcm);
    let qg = g.leading_monomial().unwrap().quotient_of(lcm);
    f.mul_term(&qf, &Q::ONE).add_scaled(g, &qg, &-Q::ONE)
}

fn interreduce(basis: Vec<Polynomial>, order: MonomialOrder) -> (Vec<Polynomial>, Vec<u64>) {
    // keep only elements whose leading monomial is minimal
    let mut keep: Vec<Polynomial> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let lm = g.leading_monomial().unwrap();
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            let lh = h.leading_monomial().unwrap();
            j != i && lh.divides(lm) && (lh != lm || j < i)
        });
        if !redundant {
            keep.push(g.clone());
        }
    }
    keep.sort_by(|a, b| order.cmp(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
    let masks: Vec<u64> = keep.iter().map(|g| g.leading_monomial().unwrap().mask()).collect();
    let mut out = Vec::with_capacity(keep.len());
    for i in 0..keep.len() {
        let lead = keep[i].leading().unwrap().clone();
        let tail = Polynomial::from_sorted(keep[i].nvars(), order, keep[i].terms()[1..].to_vec());
        // tails contain no leading monomial of the others after full reduction
        let others: Vec<Polynomial> =
            keep.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g.clone()).collect();
        let omasks: Vec<u64> = masks.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, m)| *m).collect();
        let tail = reduce(&tail, &others, &omasks);
        let mut terms = vec![lead];
        terms.extend(tail.terms().iter().cloned());
        out.push(Polynomial::from_sorted(keep[i].nvars(), order, terms).monic());
    }
    (out, masks)
}
