use proptest::prelude::*;

use khflow::c2complex::{marked_edges, stable_homology, C2Options, VertexModule};
use khflow::diagram::{augment_s2n, Closure, DecoratedDiagram, Resolution};
use khflow::khovanov::kh_pointed;
use khflow::spectral::verify_structure;

fn plat(max_len: usize) -> impl Strategy<Value = DecoratedDiagram> {
    prop::collection::vec(any::<bool>(), 0..=max_len).prop_map(|w| {
        let word: Vec<&str> = w.iter().map(|&inv| if inv { "s1^-1" } else { "s1" }).collect();
        augment_s2n(&DecoratedDiagram::parse_braid(&word.join(" "), 2, Closure::Plat).unwrap()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unit_survives(d in plat(4)) {
        for r in Resolution::all(d.crossing_count()) {
            let m = VertexModule::new(&d, r, 2).unwrap();
            prop_assert_eq!(m.dim(0), 1);
        }
    }

    #[test]
    fn assembled_complex_is_graded_and_filtered(d in plat(4)) {
        let s = stable_homology(&d, &C2Options::default()).unwrap();
        let c = &s.complex;
        prop_assert!(c.complex.check_d_squared().is_ok());
        prop_assert!(c.check_z2());
        prop_assert!(c.check_filtration());
        prop_assert!(c.complex.differentials.iter().all(|(k, (t, _))| *t == k - 2));
        let ss = s.spectral_sequence().unwrap();
        let kh = kh_pointed(&d.mirror(), &marked_edges(&d), None).unwrap().delta_poincare();
        let v = verify_structure(&ss, &c.complex, &kh, None);
        prop_assert!(v.e2_matches, "E2 {} vs {}", v.e2, kh);
        prop_assert!(v.even_vanish && v.delta_degree);
        prop_assert_eq!(ss.infinity().total(), s.total());
    }
}
