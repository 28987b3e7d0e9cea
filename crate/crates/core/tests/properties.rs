use gtdp_core::{DefectiveState, Prevalence, R1Options, R1Table, R3Table};
use proptest::prelude::*;

fn prevalence() -> impl Strategy<Value = Prevalence> {
    (0.05f64..0.9995).prop_map(|q| Prevalence::new(q).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn restricted_table_is_self_consistent(p in prevalence(), n_top in 1usize..80) {
        let t = R3Table::build(p, n_top, false).unwrap();
        prop_assert_eq!(t.expected(0).unwrap(), 0.0);
        prop_assert_eq!(t.expected(1).unwrap(), 1.0);
        for n in 1..=n_top {
            let x = t.first_test_size(n).unwrap();
            prop_assert!((1..=n).contains(&x));
            prop_assert_eq!(t.candidate_e(n, x), t.expected(n).unwrap());
            for y in 1..=n {
                prop_assert!(t.candidate_e(n, y) >= t.expected(n).unwrap());
            }
            // one more unit never makes the population cheaper
            prop_assert!(t.expected(n).unwrap() >= t.expected(n - 1).unwrap() - 1e-12);
            prop_assert!(t.expected(n).unwrap() <= n as f64 + 1e-12);
        }
        for m in 2..=n_top {
            let x = t.defective_choice(m).unwrap();
            prop_assert!((1..m).contains(&x));
            prop_assert_eq!(t.candidate_d(m, x), t.expected_defective(m).unwrap());
            prop_assert!(t.expected_defective(m).unwrap() >= 1.0);
        }
    }

    #[test]
    fn nested_table_is_self_consistent(p in prevalence(), n_top in 1usize..45) {
        let t = R1Table::build(p, n_top, R1Options::default()).unwrap();
        let r3 = R3Table::build(p, n_top, false).unwrap();
        for n in 1..=n_top {
            let x = t.first_test_size(n).unwrap();
            prop_assert_eq!(t.candidate_h(n, x), t.expected(n).unwrap());
            prop_assert!(t.expected(n).unwrap() <= r3.expected(n).unwrap() + 1e-12);
            prop_assert!(t.expected(n).unwrap() >= t.expected(n - 1).unwrap() - 1e-12);
        }
        for s in 2..=n_top {
            for m in 2..=s {
                let pool = s - m;
                let state = DefectiveState::new(m, pool).unwrap();
                let x = t.defective_choice(state).unwrap();
                prop_assert!((1..m).contains(&x));
                let g = t.value(state).unwrap();
                prop_assert!((t.candidate_g(m, pool, x) - g).abs() <= 1e-12 * g);
                for y in 1..m {
                    prop_assert!(t.candidate_g(m, pool, y) >= g - 1e-12 * g);
                }
            }
        }
    }

    #[test]
    fn windowed_search_agrees(p in prevalence(), n_top in 1usize..120) {
        let full = R1Table::build(p, n_top, R1Options::default()).unwrap();
        let win = R1Table::build(p, n_top, R1Options { windowed: true, ..R1Options::default() }).unwrap();
        for (a, b) in full.h_plane().iter().zip(win.h_plane()).chain(full.g_plane().iter().zip(win.g_plane())) {
            prop_assert!((a - b).abs() <= 1e-9, "{} vs {}", a, b);
        }
    }
}
