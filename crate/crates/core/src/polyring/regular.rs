//! Ideal quotients and regular sequences.
//!
//! `J ∩ (f)` is the `t`-free part of `t·J + (1 − t)·(f)` in `R[t]`, computed
//! with the block order that compares the exponent of `t` first. Giving `t`
//! weight 0 keeps every generator homogeneous, so the computation stays
//! graded. Then `(J : f) = (J ∩ (f)) / f`.

use super::groebner::{compute, Ideal};
use super::{buchberger, MonomialOrder, Polynomial};

pub fn ideal_membership(f: &Polynomial, ideal: &Ideal) -> bool {
    buchberger(ideal).contains(f).expect("variable count")
}

pub fn ideal_intersection_principal(j: &Ideal, f: &Polynomial) -> Ideal {
    let n = j.nvars();
    let order = MonomialOrder::EliminateLast;
    let t = Polynomial::var(n + 1, n).with_order(order);
    let one_minus_t = Polynomial::one(n + 1).with_order(order).sub(&t);
    let mut gens: Vec<Polynomial> = j.generators().iter().map(|g| t.mul(&g.extend_vars(1, order))).collect();
    gens.push(one_minus_t.mul(&f.extend_vars(1, order)));
    let gb = compute(n + 1, order, &gens, None);
    let inter = gb
        .basis()
        .iter()
        .filter(|g| g.leading_monomial().unwrap().exponents()[n] == 0)
        .map(|g| g.truncate_vars(n, MonomialOrder::DegRevLex))
        .collect();
    Ideal::new(n, inter).unwrap()
}

pub fn ideal_quotient(j: &Ideal, f: &Polynomial) -> Ideal {
    let n = j.nvars();
    if f.is_zero() {
        return Ideal::new(n, vec![Polynomial::one(n)]).unwrap();
    }
    let inter = ideal_intersection_principal(j, f);
    let gens = inter.generators().iter().map(|g| divide_exact(g, f)).collect();
    Ideal::new(n, gens).unwrap()
}

/// True iff each element is a non-zerodivisor modulo the base ideal plus the
/// preceding elements, and the final quotient is nonzero.
pub fn is_regular_sequence(base: &Ideal, seq: &[Polynomial]) -> bool {
    let mut j = base.clone();
    for f in seq {
        let gb = buchberger(&j);
        if gb.is_unit() {
            return false;
        }
        let quot = ideal_quotient(&j, f);
        for g in quot.generators() {
            if !gb.contains(g).unwrap() {
                return false;
            }
        }
        j.push(f.clone());
    }
    !buchberger(&j).is_unit()
}

/// `a / f` when `f` divides `a`.
fn divide_exact(a: &Polynomial, f: &Polynomial) -> Polynomial {
    let n = a.nvars();
    let a = a.with_order(MonomialOrder::DegRevLex);
    let f = f.with_order(MonomialOrder::DegRevLex);
    let (lf, cf) = f.leading().unwrap().clone();
    let mut rest = a;
    let mut quotient = Polynomial::zero(n);
    while let Some((m, c)) = rest.leading().cloned() {
        assert!(lf.divides(&m), "inexact polynomial division");
        let q = lf.quotient_of(&m);
        let coeff = &c / &cf;
        quotient = quotient.add(&Polynomial::monomial(q.clone(), coeff.clone()));
        rest = rest.add_scaled(&f, &q, &-coeff);
    }
    quotient
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, s: &str) -> Polynomial {
        Polynomial::parse(n, s).unwrap()
    }

    #[test]
    fn variables_are_regular() {
        let n = 2;
        assert!(is_regular_sequence(&Ideal::zero(n), &[p(n, "U1"), p(n, "U2")]));
        assert!(!is_regular_sequence(&Ideal::zero(n), &[p(n, "U1"), p(n, "U1")]));
    }

    #[test]
    fn zerodivisor_detected() {
        // U1 kills U2 modulo (U1*U2)
        let n = 2;
        let base = Ideal::new(n, vec![p(n, "U1*U2")]).unwrap();
        assert!(!is_regular_sequence(&base, &[p(n, "U1")]));
        assert!(is_regular_sequence(&base, &[p(n, "U1 + U2")]));
        let q = ideal_quotient(&base, &p(n, "U1"));
        assert!(ideal_membership(&p(n, "U2"), &q));
    }

    #[test]
    fn membership_examples() {
        let n = 3;
        let id = Ideal::new(n, vec![p(n, "U1 - U2"), p(n, "U2 - U3")]).unwrap();
        assert!(ideal_membership(&p(n, "U1 - U3"), &id));
        let one = Ideal::new(1, vec![p(1, "U1")]).unwrap();
        assert!(!ideal_membership(&p(1, "1"), &one));
    }

    #[test]
    fn intersection_with_principal() {
        let n = 2;
        let j = Ideal::new(n, vec![p(n, "U1^2")]).unwrap();
        let i = ideal_intersection_principal(&j, &p(n, "U1*U2"));
        // (U1^2) ∩ (U1*U2) = (U1^2*U2)
        let gb = buchberger(&i);
        assert_eq!(gb.basis().len(), 1);
        assert_eq!(gb.basis()[0], p(n, "U1^2*U2"));
    }
}
