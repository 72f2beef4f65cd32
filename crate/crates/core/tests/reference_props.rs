use proptest::prelude::*;

use khflow::diagram::{Closure, DecoratedDiagram};
use khflow::khovanov::{kh_homology, KhVariant};
use khflow::reference::{alexander, mirror_delta, staircase, thinness, torus_hfk_delta};

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn torus() -> impl Strategy<Value = (u32, u32)> {
    (2u32..=7, 3u32..=11).prop_filter("coprime p < q", |&(p, q)| p < q && gcd(p, q) == 1)
}

proptest! {
    #[test]
    fn staircase_rank_is_alexander_mass((p, q) in torus()) {
        let mass: i64 = alexander(p, q).unwrap().values().map(|c| c.abs()).sum();
        let steps = staircase(p, q).unwrap();
        let hfk = torus_hfk_delta(p, q).unwrap();
        prop_assert_eq!(steps.len() as i64, mass);
        prop_assert_eq!(hfk.total() as i64, mass);
        prop_assert_eq!(hfk.total() % 2, 1);
        prop_assert_eq!(mirror_delta(&mirror_delta(&hfk)), hfk);
    }

    #[test]
    fn two_strand_torus_knots_are_thin(k in 1u32..=4) {
        let q = 2 * k + 1;
        let word = vec!["s1"; q as usize].join(" ");
        let d = DecoratedDiagram::parse_braid(&word, 2, Closure::Braid).unwrap();
        let kh = kh_homology(&d, &KhVariant::Reduced).unwrap().delta_poincare();
        let hfk = torus_hfk_delta(2, q).unwrap();
        prop_assert!(thinness(&kh));
        prop_assert!(thinness(&hfk));
        prop_assert!(kh.equal_up_to_shift(&hfk));
    }
}
