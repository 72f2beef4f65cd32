use std::collections::HashMap;

use super::{GroebnerBasis, Monomial, PolyError, Polynomial};
use crate::rational::Q;

/// Graded pieces of `R/J` for a homogeneous ideal `J`, with standard
/// monomial bases and coordinate maps.
#[derive(Clone, Debug)]
pub struct GradedQuotient {
    gb: GroebnerBasis,
    bases: Vec<Vec<Monomial>>,
    index: Vec<HashMap<Monomial, usize>>,
}

impl GradedQuotient {
    /// Precompute bases for degrees `0..=max_degree`.
    pub fn new(gb: GroebnerBasis, max_degree: u32) -> Result<GradedQuotient, PolyError> {
        let mut bases = Vec::new();
        let mut index = Vec::new();
        for d in 0..=max_degree {
            let b = gb.graded_basis(d)?;
            index.push(b.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect());
            bases.push(b);
        }
        Ok(GradedQuotient { gb, bases, index })
    }

    pub fn groebner(&self) -> &GroebnerBasis {
        &self.gb
    }

    pub fn nvars(&self) -> usize {
        self.gb.nvars()
    }

    pub fn max_degree(&self) -> u32 {
        self.bases.len() as u32 - 1
    }

    pub fn dim(&self, degree: u32) -> usize {
        self.bases.get(degree as usize).map_or(0, |b| b.len())
    }

    pub fn basis(&self, degree: u32) -> &[Monomial] {
        &self.bases[degree as usize]
    }

    /// Coordinates of a homogeneous polynomial of the given degree in the
    /// standard monomial basis.
    pub fn coordinates(&self, f: &Polynomial, degree: u32) -> Vec<(usize, Q)> {
        if degree > self.max_degree() {
            return Vec::new();
        }
        let nf = self.gb.normal_form(f).expect("variable count");
        let idx = &self.index[degree as usize];
        nf.terms()
            .iter()
            .map(|(m, c)| {
                assert_eq!(m.degree(), degree, "inhomogeneous element in graded coordinates");
                (*idx.get(m).expect("normal form is standard"), c.clone())
            })
            .collect()
    }

    /// Coordinates of `f * m` where `m` is a basis monomial of degree `d`; the
    /// result lives in degree `d + deg f`.
    pub fn multiply_basis(&self, f: &Polynomial, degree: u32, basis_index: usize) -> Vec<(usize, Q)> {
        let m = &self.bases[degree as usize][basis_index];
        let prod = f.mul_term(m, &Q::ONE);
        match f.degree() {
            None => Vec::new(),
            Some(df) => self.coordinates(&prod, degree + df),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{buchberger, groebner::Ideal};
    use super::*;

    #[test]
    fn univariate_quotient() {
        let n = 2;
        let id = Ideal::new(n, vec![Polynomial::parse(n, "U1 - U2").unwrap()]).unwrap();
        let q = GradedQuotient::new(buchberger(&id), 4).unwrap();
        for d in 0..=4 {
            assert_eq!(q.dim(d), 1);
        }
        let c = q.coordinates(&Polynomial::parse(n, "U1*U2 + 2*U2^2").unwrap(), 2);
        assert_eq!(c, vec![(0, Q::from_int(3))]);
    }
}
