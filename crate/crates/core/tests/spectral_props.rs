use std::collections::BTreeMap;

use proptest::prelude::*;

use khflow::khovanov::PoincarePolynomial;
use khflow::linalg::{FiniteComplex, SparseMatrix};
use khflow::rational::Q;
use khflow::spectral::{verify_structure, FilteredComplex};

const DEGREES: i64 = 3;

/// Generator levels per degree, the elementary pairs `(k, source, target)`
/// and the level-compatible row operations per degree.
#[derive(Clone, Debug)]
struct Recipe {
    levels: Vec<Vec<u32>>,
    pairs: Vec<(usize, usize, usize)>,
    ops: Vec<Vec<(usize, usize, i64)>>,
}

fn recipe() -> impl Strategy<Value = Recipe> {
    prop::collection::vec(prop::collection::vec(0u32..=4, 1..=5), DEGREES as usize)
        .prop_flat_map(|levels| {
            let sizes: Vec<usize> = levels.iter().map(|l| l.len()).collect();
            let pairs = prop::collection::vec(
                (0..DEGREES as usize - 1).prop_flat_map(move |k| (Just(k), 0..sizes[k], 0..sizes[k + 1])),
                0..=6,
            );
            let ops = levels
                .iter()
                .map(|l| prop::collection::vec((0..l.len(), 0..l.len(), -2i64..=2), 0..=6))
                .collect::<Vec<_>>();
            (Just(levels), pairs, ops)
        })
        .prop_map(|(levels, pairs, ops)| Recipe { levels, pairs, ops })
}

fn build(r: &Recipe) -> FilteredComplex<i64> {
    let n = |k: usize| r.levels[k].len();
    // keep only pairs that respect the filtration and do not reuse generators
    let mut used: Vec<Vec<bool>> = r.levels.iter().map(|l| vec![false; l.len()]).collect();
    let mut d: Vec<Vec<(usize, usize, Q)>> = vec![Vec::new(); DEGREES as usize - 1];
    for &(k, s, t) in &r.pairs {
        if used[k][s] || used[k + 1][t] || r.levels[k + 1][t] < r.levels[k][s] {
            continue;
        }
        used[k][s] = true;
        used[k + 1][t] = true;
        d[k].push((t, s, Q::ONE));
    }
    let mut u: Vec<SparseMatrix> = (0..DEGREES as usize).map(|k| SparseMatrix::identity(n(k))).collect();
    let mut inv = u.clone();
    for (k, ops) in r.ops.iter().enumerate() {
        for &(i, j, c) in ops {
            if i == j || c == 0 || r.levels[k][i] < r.levels[k][j] {
                continue;
            }
            let e = |c: i64| {
                SparseMatrix::identity(n(k)).add(&SparseMatrix::from_triplets(n(k), n(k), [(i, j, Q::from_int(c))]))
            };
            u[k] = e(c).mul(&u[k]);
            inv[k] = inv[k].mul(&e(-c));
        }
    }
    let mut complex = FiniteComplex::new();
    for k in 0..DEGREES as usize {
        complex.dims.insert(k as i64, n(k));
    }
    for (k, entries) in d.into_iter().enumerate() {
        let m = SparseMatrix::from_triplets(n(k + 1), n(k), entries);
        complex.differentials.insert(k as i64, (k as i64 + 1, u[k + 1].mul(&m).mul(&inv[k])));
    }
    let levels: BTreeMap<i64, Vec<u32>> = r.levels.iter().enumerate().map(|(k, l)| (k as i64, l.clone())).collect();
    FilteredComplex::new(complex, levels).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn pages_shrink(r in recipe()) {
        let ss = build(&r).pages().unwrap();
        for w in ss.pages.windows(2) {
            for (pos, &n) in &w[1].dims {
                prop_assert!(n <= w[0].dims.get(pos).copied().unwrap_or(0));
            }
            prop_assert_eq!(w[1].total() + 2 * w[0].rank_total(), w[0].total());
        }
    }

    #[test]
    fn infinity_page_is_homology(r in recipe()) {
        let fc = build(&r);
        let h: usize = fc.complex.homology_dims().unwrap().values().sum();
        let ss = fc.pages().unwrap();
        prop_assert_eq!(ss.infinity().total(), h);
        prop_assert_eq!(ss.infinity().by_key(), fc.complex.homology_dims().unwrap().into_iter().filter(|(_, n)| *n > 0).collect());
    }

    #[test]
    fn reduction_preserves_pages(r in recipe()) {
        let fc = build(&r);
        let (a, b) = (fc.pages().unwrap(), fc.reduce().pages().unwrap());
        prop_assert_eq!(a.stable_from.max(1), b.stable_from.max(1));
        for (p, q) in a.pages.iter().zip(&b.pages).skip(1) {
            prop_assert_eq!(&p.dims, &q.dims);
            prop_assert_eq!(&p.d_ranks, &q.d_ranks);
        }
    }
}

/// `x ↦ y` across two levels is a nonzero `d₂`, which the structural check
/// must reject.
#[test]
fn fake_even_differential_is_caught() {
    let mut complex = FiniteComplex::new();
    complex.dims = BTreeMap::from([(0, 1), (2, 1)]);
    complex.differentials.insert(2, (0, SparseMatrix::from_dense(&[vec![1]])));
    let levels = BTreeMap::from([(0, vec![2]), (2, vec![0])]);
    let fc = FilteredComplex::new(complex.clone(), levels).unwrap();
    let ss = fc.pages().unwrap();
    assert_eq!(ss.page(2).unwrap().rank_total(), 1);
    let kh = PoincarePolynomial::from_pairs(&[(0, 1), (2, 1)]);
    let v = verify_structure(&ss, &complex, &kh, None);
    assert!(!v.even_vanish);
    assert!(!v.passed());

    let odd = BTreeMap::from([(0, vec![1]), (2, vec![0])]);
    let ss = FilteredComplex::new(complex.clone(), odd).unwrap().pages().unwrap();
    let v = verify_structure(&ss, &complex, &kh, Some(&PoincarePolynomial::default()));
    assert!(v.even_vanish);
}
