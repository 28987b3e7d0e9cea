use gtdp_core::oracle::{exhaustive_min_r1, exhaustive_min_r3, labeled_min_r1};
use gtdp_core::{Prevalence, R1Options, R1Table, R3Table};

const QS: [f64; 3] = [0.5, 0.9, 0.99];

#[test]
fn nested_engine_matches_enumeration() {
    for q in QS {
        let p = Prevalence::new(q).unwrap();
        let t = R1Table::build(p, 6, R1Options::default()).unwrap();
        for n in 0..=6 {
            let o = exhaustive_min_r1(p, n).unwrap();
            let h = t.expected(n).unwrap();
            assert!(
                (o.value - h).abs() <= 1e-12,
                "q={q} n={n}: {} vs {h}",
                o.value
            );
        }
    }
}

#[test]
fn restricted_engine_matches_enumeration() {
    for q in QS {
        let p = Prevalence::new(q).unwrap();
        let t = R3Table::build(p, 7, false).unwrap();
        for n in 0..=7 {
            let o = exhaustive_min_r3(p, n).unwrap();
            let e = t.expected(n).unwrap();
            assert!(
                (o.value - e).abs() <= 1e-12,
                "q={q} n={n}: {} vs {e}",
                o.value
            );
        }
    }
}

#[test]
fn labelled_policies_do_no_better() {
    for q in QS {
        let p = Prevalence::new(q).unwrap();
        let t = R1Table::build(p, 4, R1Options::default()).unwrap();
        for n in 0..=4 {
            let l = labeled_min_r1(p, n).unwrap();
            let h = t.expected(n).unwrap();
            assert!(l >= h - 1e-12, "q={q} n={n}: labelled {l} beats {h}");
            assert!((l - h).abs() <= 1e-12, "q={q} n={n}: labelled {l} vs {h}");
        }
    }
}

#[test]
fn oversized_enumeration_is_refused() {
    let p = Prevalence::new(0.9).unwrap();
    let err = exhaustive_min_r1(p, 7).unwrap_err();
    assert!(err.is_resource(), "{err}");
    assert!(exhaustive_min_r3(p, 8).is_err());
    assert!(labeled_min_r1(p, 5).is_err());
}
