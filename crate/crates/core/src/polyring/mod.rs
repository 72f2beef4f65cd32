//! Multivariate polynomials over `Q` in variables `U1..Um`.
//!
//! Terms are kept sorted in decreasing monomial order, so the leading term is
//! always `terms[0]`. Two orders are supported: degree reverse lexicographic
//! with `U1 > U2 > ...`, and an elimination order for the last variable used
//! by ideal-quotient computations.

mod groebner;
mod quotient;
mod regular;

pub use groebner::{buchberger, buchberger_truncated, GroebnerBasis, Ideal};
pub use quotient::GradedQuotient;
pub use regular::{ideal_intersection_principal, ideal_membership, ideal_quotient, is_regular_sequence};

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::rational::Q;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: expected {expected}, found {found}")]
    VariableMismatch { expected: usize, found: usize },
    #[error("inhomogeneous generator: {0}")]
    Inhomogeneous(String),
    #[error("cannot parse polynomial: {0}")]
    Parse(String),
}

#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Monomial {
    exps: Box<[u16]>,
}

impl Monomial {
    pub fn one(nvars: usize) -> Monomial {
        Monomial { exps: vec![0; nvars].into_boxed_slice() }
    }

    pub fn from_exponents(exps: Vec<u16>) -> Monomial {
        Monomial { exps: exps.into_boxed_slice() }
    }

    /// The variable `U_{index+1}`.
    pub fn var(nvars: usize, index: usize) -> Monomial {
        let mut e = vec![0; nvars];
        e[index] = 1;
        Monomial::from_exponents(e)
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn exponents(&self) -> &[u16] {
        &self.exps
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().map(|&e| e as u32).sum()
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.nvars(), other.nvars());
        Monomial { exps: self.exps.iter().zip(other.exps.iter()).map(|(a, b)| a + b).collect() }
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(other.exps.iter()).all(|(a, b)| a <= b)
    }

    /// `other / self`, assuming `self` divides `other`.
    pub fn quotient_of(&self, other: &Monomial) -> Monomial {
        Monomial { exps: self.exps.iter().zip(other.exps.iter()).map(|(a, b)| b - a).collect() }
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial { exps: self.exps.iter().zip(other.exps.iter()).map(|(a, b)| *a.max(b)).collect() }
    }

    pub fn is_coprime(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(other.exps.iter()).all(|(a, b)| *a == 0 || *b == 0)
    }

    /// Bit signature of the support, a cheap necessary condition for divisibility.
    pub fn mask(&self) -> u64 {
        let mut m = 0u64;
        for (i, &e) in self.exps.iter().enumerate() {
            if e > 0 {
                m |= 1 << (i % 64);
            }
        }
        m
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.exps.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "U{}", i + 1)?;
            } else {
                write!(f, "U{}^{}", i + 1, e)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MonomialOrder {
    /// Graded reverse lexicographic, `U1 > U2 > ... > Um`.
    DegRevLex,
    /// Block order for eliminating the last variable: its exponent is compared
    /// first, ties broken by degrevlex on the remaining variables. The last
    /// variable carries weight 0 for homogeneity purposes.
    EliminateLast,
}

impl MonomialOrder {
    pub fn cmp(self, a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            MonomialOrder::DegRevLex => degrevlex(&a.exps, &b.exps),
            MonomialOrder::EliminateLast => {
                let n = a.exps.len();
                a.exps[n - 1].cmp(&b.exps[n - 1]).then_with(|| degrevlex(&a.exps[..n - 1], &b.exps[..n - 1]))
            }
        }
    }

    pub fn weighted_degree(self, m: &Monomial) -> u32 {
        match self {
            MonomialOrder::DegRevLex => m.degree(),
            MonomialOrder::EliminateLast => m.degree() - *m.exps.last().unwrap() as u32,
        }
    }
}

fn degrevlex(a: &[u16], b: &[u16]) -> Ordering {
    let da: u32 = a.iter().map(|&e| e as u32).sum();
    let db: u32 = b.iter().map(|&e| e as u32).sum();
    if da != db {
        return da.cmp(&db);
    }
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            // smaller exponent in the last differing variable wins
            return b[i].cmp(&a[i]);
        }
    }
    Ordering::Equal
}

/// A polynomial with terms sorted by decreasing monomial order; no zero
/// coefficients are stored.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Polynomial {
    nvars: usize,
    order: MonomialOrder,
    terms: Vec<(Monomial, Q)>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Polynomial {
        Polynomial { nvars, order: MonomialOrder::DegRevLex, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: Q) -> Polynomial {
        Polynomial::from_terms(nvars, vec![(Monomial::one(nvars), c)])
    }

    pub fn one(nvars: usize) -> Polynomial {
        Polynomial::constant(nvars, Q::ONE)
    }

    /// `U_{index+1}`.
    pub fn var(nvars: usize, index: usize) -> Polynomial {
        Polynomial::from_terms(nvars, vec![(Monomial::var(nvars, index), Q::ONE)])
    }

    pub fn monomial(m: Monomial, c: Q) -> Polynomial {
        let n = m.nvars();
        Polynomial::from_terms(n, vec![(m, c)])
    }

    /// Build from arbitrary terms (duplicates are combined, zeros dropped).
    pub fn from_terms(nvars: usize, terms: Vec<(Monomial, Q)>) -> Polynomial {
        Polynomial::from_terms_with_order(nvars, MonomialOrder::DegRevLex, terms)
    }

    pub fn from_terms_with_order(nvars: usize, order: MonomialOrder, mut terms: Vec<(Monomial, Q)>) -> Polynomial {
        for (m, _) in &terms {
            assert_eq!(m.nvars(), nvars, "monomial has wrong variable count");
        }
        terms.sort_by(|a, b| order.cmp(&b.0, &a.0));
        let mut out: Vec<(Monomial, Q)> = Vec::with_capacity(terms.len());
        for (m, c) in terms {
            if let Some(last) = out.last_mut() {
                if last.0 == m {
                    last.1 += &c;
                    continue;
                }
            }
            out.push((m, c));
        }
        out.retain(|(_, c)| !c.is_zero());
        Polynomial { nvars, order, terms: out }
    }

    /// Product of variables minus product of variables; indices are 0-based
    /// and may repeat.
    pub fn binomial(nvars: usize, plus: &[usize], minus: &[usize]) -> Polynomial {
        let mono = |idx: &[usize]| {
            let mut e = vec![0u16; nvars];
            for &i in idx {
                e[i] += 1;
            }
            Monomial::from_exponents(e)
        };
        Polynomial::from_terms(nvars, vec![(mono(plus), Q::ONE), (mono(minus), -Q::ONE)])
    }

    /// Linear form `sum coeff * U_{index+1}`.
    pub fn linear(nvars: usize, coeffs: &[(usize, i64)]) -> Polynomial {
        Polynomial::from_terms(nvars, coeffs.iter().map(|&(i, c)| (Monomial::var(nvars, i), Q::from_int(c))).collect())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn terms(&self) -> &[(Monomial, Q)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn leading(&self) -> Option<&(Monomial, Q)> {
        self.terms.first()
    }

    pub fn leading_monomial(&self) -> Option<&Monomial> {
        self.terms.first().map(|t| &t.0)
    }

    pub fn with_order(&self, order: MonomialOrder) -> Polynomial {
        Polynomial::from_terms_with_order(self.nvars, order, self.terms.clone())
    }

    /// Total degree (maximum over terms); `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.iter().map(|(m, _)| m.degree()).max()
    }

    /// Homogeneous with respect to the weights of the polynomial's order.
    pub fn is_homogeneous(&self) -> bool {
        let mut it = self.terms.iter().map(|(m, _)| self.order.weighted_degree(m));
        match it.next() {
            None => true,
            Some(d) => it.all(|e| e == d),
        }
    }

    pub fn weighted_degree(&self) -> Option<u32> {
        self.terms.iter().map(|(m, _)| self.order.weighted_degree(m)).max()
    }

    pub fn scale(&self, c: &Q) -> Polynomial {
        if c.is_zero() {
            return Polynomial { nvars: self.nvars, order: self.order, terms: Vec::new() };
        }
        Polynomial {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(m, a)| (m.clone(), a * c)).collect(),
        }
    }

    pub fn monic(&self) -> Polynomial {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) => self.scale(&c.recip()),
        }
    }

    /// `c * mono * self`; multiplication by a monomial preserves term order.
    pub fn mul_term(&self, mono: &Monomial, c: &Q) -> Polynomial {
        if c.is_zero() {
            return Polynomial { nvars: self.nvars, order: self.order, terms: Vec::new() };
        }
        Polynomial {
            nvars: self.nvars,
            order: self.order,
            terms: self.terms.iter().map(|(m, a)| (m.mul(mono), a * c)).collect(),
        }
    }

    /// `self + c * mono * other` in one merge pass.
    pub fn add_scaled(&self, other: &Polynomial, mono: &Monomial, c: &Q) -> Polynomial {
        self.check_compatible(other);
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut i = 0;
        let order = self.order;
        let mut shifted = other.terms.iter().map(|(m, a)| (m.mul(mono), a * c)).peekable();
        loop {
            match (self.terms.get(i), shifted.peek()) {
                (None, None) => break,
                (Some(t), None) => {
                    out.push(t.clone());
                    i += 1;
                }
                (None, Some(_)) => {
                    let t = shifted.next().unwrap();
                    out.push(t);
                }
                (Some(a), Some(b)) => match order.cmp(&a.0, &b.0) {
                    Ordering::Greater => {
                        out.push(a.clone());
                        i += 1;
                    }
                    Ordering::Less => {
                        let t = shifted.next().unwrap();
                        out.push(t);
                    }
                    Ordering::Equal => {
                        let s = &a.1 + &b.1;
                        if !s.is_zero() {
                            out.push((a.0.clone(), s));
                        }
                        i += 1;
                        shifted.next();
                    }
                },
            }
        }
        Polynomial { nvars: self.nvars, order, terms: out }
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        self.add_scaled(other, &Monomial::one(self.nvars), &Q::ONE)
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add_scaled(other, &Monomial::one(self.nvars), &-Q::ONE)
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-Q::ONE)
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        self.check_compatible(other);
        let mut acc = Polynomial { nvars: self.nvars, order: self.order, terms: Vec::new() };
        for (m, c) in &other.terms {
            acc = acc.add_scaled(self, m, c);
        }
        acc
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut acc = Polynomial::one(self.nvars).with_order(self.order);
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Add a fresh variable at the end, keeping exponents of the old ones.
    pub fn extend_vars(&self, extra: usize, order: MonomialOrder) -> Polynomial {
        let n = self.nvars + extra;
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                let mut e = m.exps.to_vec();
                e.resize(n, 0);
                (Monomial::from_exponents(e), c.clone())
            })
            .collect();
        Polynomial::from_terms_with_order(n, order, terms)
    }

    /// Drop trailing variables, which must not occur.
    pub fn truncate_vars(&self, nvars: usize, order: MonomialOrder) -> Polynomial {
        let terms = self
            .terms
            .iter()
            .map(|(m, c)| {
                assert!(m.exps[nvars..].iter().all(|&e| e == 0), "dropped variable occurs");
                (Monomial::from_exponents(m.exps[..nvars].to_vec()), c.clone())
            })
            .collect();
        Polynomial::from_terms_with_order(nvars, order, terms)
    }

    /// Evaluate at a rational point.
    pub fn eval(&self, point: &[Q]) -> Q {
        assert_eq!(point.len(), self.nvars);
        let mut total = Q::ZERO;
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (i, &e) in m.exps.iter().enumerate() {
                for _ in 0..e {
                    v *= &point[i];
                }
            }
            total += &v;
        }
        total
    }

    fn check_compatible(&self, other: &Polynomial) {
        assert_eq!(self.nvars, other.nvars, "variable count mismatch");
        if !self.terms.is_empty() && !other.terms.is_empty() {
            assert_eq!(self.order, other.order, "monomial order mismatch");
        }
    }

    pub fn parse(nvars: usize, s: &str) -> Result<Polynomial, PolyError> {
        parse_polynomial(nvars, s)
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            let neg = c.signum() < 0;
            let a = c.abs();
            if k == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{a}")?;
            } else if a.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{a}*{m}")?;
            }
        }
        Ok(())
    }
}

fn parse_polynomial(nvars: usize, s: &str) -> Result<Polynomial, PolyError> {
    let err = |msg: &str| PolyError::Parse(format!("{msg} in `{s}`"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(err("empty input"));
    }
    let mut terms = Vec::new();
    let mut chunks: Vec<(bool, String)> = Vec::new();
    let mut cur = String::new();
    let mut neg = false;
    for (i, ch) in compact.chars().enumerate() {
        if (ch == '+' || ch == '-') && i > 0 && !cur.ends_with('^') {
            chunks.push((neg, std::mem::take(&mut cur)));
            neg = ch == '-';
        } else if (ch == '+' || ch == '-') && i == 0 {
            neg = ch == '-';
        } else {
            cur.push(ch);
        }
    }
    chunks.push((neg, cur));
    for (neg, chunk) in chunks {
        if chunk.is_empty() {
            return Err(err("dangling sign"));
        }
        let mut coeff = Q::ONE;
        let mut exps = vec![0u16; nvars];
        for factor in chunk.split('*') {
            if factor.is_empty() {
                return Err(err("empty factor"));
            }
            if let Some(rest) = factor.strip_prefix('U') {
                let (idx, e) = match rest.split_once('^') {
                    Some((i, e)) => (i, e.parse::<u16>().map_err(|_| err("bad exponent"))?),
                    None => (rest, 1),
                };
                let idx: usize = idx.parse().map_err(|_| err("bad variable index"))?;
                if idx == 0 || idx > nvars {
                    return Err(err("variable index out of range"));
                }
                exps[idx - 1] += e;
            } else {
                let c: Q = factor.parse().map_err(|e: String| PolyError::Parse(e))?;
                coeff *= &c;
            }
        }
        if neg {
            coeff = -coeff;
        }
        terms.push((Monomial::from_exponents(exps), coeff));
    }
    Ok(Polynomial::from_terms(nvars, terms))
}

/// Enumerate all monomials of a given total degree in `nvars` variables, in
/// decreasing degrevlex order.
pub fn monomials_of_degree(nvars: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut cur = vec![0u16; nvars];
    fn rec(i: usize, left: u32, cur: &mut Vec<u16>, out: &mut Vec<Monomial>) {
        let n = cur.len();
        if i == n - 1 {
            cur[i] = left as u16;
            out.push(Monomial::from_exponents(cur.clone()));
            cur[i] = 0;
            return;
        }
        for e in (0..=left).rev() {
            cur[i] = e as u16;
            rec(i + 1, left - e, cur, out);
        }
        cur[i] = 0;
    }
    if nvars == 0 {
        if degree == 0 {
            out.push(Monomial::one(0));
        }
        return out;
    }
    rec(0, degree, &mut cur, &mut out);
    out.sort_by(|a, b| MonomialOrder::DegRevLex.cmp(b, a));
    out
}
