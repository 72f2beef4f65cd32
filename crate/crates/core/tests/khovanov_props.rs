use std::collections::BTreeMap;

use proptest::prelude::*;

use khflow::c2complex::{linear_term, marked_edges};
use khflow::diagram::{augment_s2n, component_count, Closure, DecoratedDiagram, Resolution};
use khflow::khovanov::{build_kh_complex, kh_homology, kh_minus_resolution_module, kh_pointed, KhVariant};
use khflow::linalg::SparseMatrix;

fn word(strands: usize, max_len: usize) -> impl Strategy<Value = String> {
    let letter =
        (1..strands, any::<bool>()).prop_map(|(i, inv)| if inv { format!("s{i}^-1") } else { format!("s{i}") });
    prop::collection::vec(letter, 1..=max_len).prop_map(|v| v.join(" "))
}

fn closed_braid(max_len: usize) -> impl Strategy<Value = DecoratedDiagram> {
    (2usize..=4)
        .prop_flat_map(move |s| (Just(s), word(s, max_len)))
        .prop_map(|(s, w)| DecoratedDiagram::parse_braid(&w, s, Closure::Braid).unwrap())
}

fn knot(max_len: usize) -> impl Strategy<Value = DecoratedDiagram> {
    closed_braid(max_len).prop_filter("knot", |d| component_count(d) == 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complexes_square_to_zero(d in closed_braid(6)) {
        let mut variants = vec![KhVariant::Unreduced, KhVariant::Pointed(marked_edges(&d))];
        if component_count(&d) == 1 {
            variants.push(KhVariant::Reduced);
        }
        for v in variants {
            prop_assert!(build_kh_complex(&d, &v).unwrap().check_d_squared().is_ok());
        }
    }

    #[test]
    fn mirror_negates_gradings(d in knot(7)) {
        let kh = kh_homology(&d, &KhVariant::Reduced).unwrap();
        let mirrored = kh_homology(&d.mirror(), &KhVariant::Reduced).unwrap();
        prop_assert_eq!(mirrored.nonzero(), kh.mirror().nonzero());
    }

    #[test]
    fn pointed_is_reduced_for_knots(d in knot(7)) {
        let reduced = kh_homology(&d, &KhVariant::Reduced).unwrap();
        let pointed = kh_pointed(&d, &marked_edges(&d), None).unwrap();
        prop_assert_eq!(reduced.nonzero(), pointed.nonzero());
    }

    /// `χ_q(Kh) = (q + q⁻¹) χ_q(K̄h)` for knots.
    #[test]
    fn unreduced_euler_is_doubled(d in knot(7)) {
        let full = kh_homology(&d, &KhVariant::Unreduced).unwrap().q_euler();
        let reduced = kh_homology(&d, &KhVariant::Reduced).unwrap().q_euler();
        let mut doubled: BTreeMap<i64, i64> = BTreeMap::new();
        for (q, c) in reduced {
            *doubled.entry(q - 1).or_insert(0) += c;
            *doubled.entry(q + 1).or_insert(0) += c;
        }
        doubled.retain(|_, c| *c != 0);
        prop_assert_eq!(full, doubled);
    }

    /// `U_a + U_b = U_c + U_d` acts as zero at every four-valent vertex.
    #[test]
    fn split_relation_on_minus_module(n in 1usize..=2, w in prop::collection::vec(any::<bool>(), 0..=3)) {
        let s = 2 * n;
        let word: Vec<String> = w.iter().enumerate().map(|(k, inv)| {
            let i = 1 + k % (s - 1);
            if *inv { format!("s{i}^-1") } else { format!("s{i}") }
        }).collect();
        let d = augment_s2n(&DecoratedDiagram::parse_braid(&word.join(" "), s, Closure::Plat).unwrap()).unwrap();
        for r in Resolution::all(d.crossing_count()) {
            let g = d.resolve(&r).unwrap();
            let m = kh_minus_resolution_module(&g, 0, 4).unwrap();
            for v in g.four_valent() {
                let lin = linear_term(g.edge_count(), g.vertices()[v].quad());
                for t in 0..m.dims.len() - 1 {
                    let mut sum = SparseMatrix::zero(m.dims[t + 1], m.dims[t]);
                    for (mono, c) in lin.terms() {
                        let var = mono.exponents().iter().position(|&e| e == 1).unwrap();
                        sum = sum.add(&m.actions[var][t].scale(c));
                    }
                    prop_assert!(sum.is_zero(), "vertex {v} degree {t}");
                }
            }
        }
    }
}
