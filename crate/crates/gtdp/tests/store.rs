use std::fs;

use gtdp::store::{decode, encode, load_table, save_table, Cache, DecodeError, StoreError};
use gtdp::table::{obtain, Table, TableSpec};
use gtdp_core::{Prevalence, Procedure, R1Options, R1Table, R3Table};
use proptest::prelude::*;

fn r3(q: f64, n: usize) -> Table {
    Table::R3(R3Table::build(Prevalence::new(q).unwrap(), n, false).unwrap())
}

fn r1(q: f64, n: usize) -> Table {
    Table::R1(R1Table::build(Prevalence::new(q).unwrap(), n, R1Options::default()).unwrap())
}

fn bytes_of(t: &Table) -> Vec<u8> {
    let mut v = Vec::new();
    encode(t, &mut v).unwrap();
    v
}

#[test]
fn round_trip_is_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    for t in [r3(0.9999, 10_778), r3(0.5, 0), r1(0.95, 120), r1(0.3, 1)] {
        let path = dir.path().join("t.gtdp");
        save_table(&t, &path).unwrap();
        let back = load_table(&path, t.prevalence().q(), t.procedure()).unwrap();
        assert_eq!(bytes_of(&back), bytes_of(&t));
        assert_eq!(back, t);
    }
}

#[test]
fn published_value_survives_persistence() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r3.gtdp");
    save_table(&r3(0.9999, 10_778), &path).unwrap();
    let t = load_table(&path, 0.9999, Procedure::R3).unwrap();
    assert!((t.expected(10_000).unwrap() - 19.20284).abs() <= 1e-5);
}

#[test]
fn q_and_procedure_must_match_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r3.gtdp");
    save_table(&r3(0.9999, 50), &path).unwrap();
    let near = f64::from_bits(0.9999f64.to_bits() + 1);
    match load_table(&path, near, Procedure::R3) {
        Err(StoreError::Decode {
            source: DecodeError::Q { .. },
            ..
        }) => {}
        other => panic!("{other:?}"),
    }
    match load_table(&path, 0.99990000001, Procedure::R3) {
        Err(StoreError::Decode {
            source: DecodeError::Q { .. },
            ..
        }) => {}
        other => panic!("{other:?}"),
    }
    match load_table(&path, 0.9999, Procedure::R1) {
        Err(StoreError::Decode {
            source: DecodeError::Procedure { .. },
            ..
        }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn truncation_and_missing_files_are_errors() {
    let bytes = bytes_of(&r1(0.9, 20));
    for len in [
        0,
        3,
        4,
        24,
        25,
        bytes.len() / 2,
        bytes.len() - 8,
        bytes.len() - 1,
    ] {
        assert!(decode(&bytes[..len]).is_err(), "len {len}");
    }
    let mut longer = bytes.clone();
    longer.push(0);
    assert!(decode(&longer).is_err());

    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.gtdp");
    let err = load_table(&missing, 0.9, Procedure::R1).unwrap_err();
    assert!(err.to_string().contains("nope.gtdp"), "{err}");
}

#[test]
fn overwrite_replaces_whole_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.gtdp");
    save_table(&r3(0.9, 500), &path).unwrap();
    save_table(&r3(0.9, 5), &path).unwrap();
    assert_eq!(fs::read(&path).unwrap(), bytes_of(&r3(0.9, 5)));
    // no stray temporaries left behind
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn cache_serves_covering_tables_and_separates_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let p = Prevalence::new(0.99).unwrap();
    let big = TableSpec::new(Procedure::R3, p, 300);
    let (t, prov) = obtain(&big, Some(&cache)).unwrap();
    assert!(!prov.from_cache);
    assert_eq!(prov.path.as_deref(), Some(cache.path_for(&big).as_path()));

    let small = TableSpec::new(Procedure::R3, p, 100);
    let (s, prov) = obtain(&small, Some(&cache)).unwrap();
    assert!(prov.from_cache);
    assert_eq!(
        s.expected(100).unwrap().to_bits(),
        t.expected(100).unwrap().to_bits()
    );

    let mut capped = small;
    capped.cap_to_nmax = true;
    assert!(!obtain(&capped, Some(&cache)).unwrap().1.from_cache);
    let other_q = TableSpec::new(Procedure::R3, Prevalence::new(0.98).unwrap(), 10);
    assert!(!obtain(&other_q, Some(&cache)).unwrap().1.from_cache);
    let nested = TableSpec::new(Procedure::R1, p, 10);
    assert!(!obtain(&nested, Some(&cache)).unwrap().1.from_cache);
}

#[test]
fn corrupt_cache_entry_is_reported_not_rebuilt() {
    let dir = tempfile::tempdir().unwrap();
    let cache = Cache::new(dir.path());
    let spec = TableSpec::new(Procedure::R1, Prevalence::new(0.9).unwrap(), 30);
    obtain(&spec, Some(&cache)).unwrap();
    let path = cache.path_for(&spec);
    let mut bytes = fs::read(&path).unwrap();
    bytes[40] ^= 0x10;
    fs::write(&path, bytes).unwrap();
    assert!(obtain(&spec, Some(&cache)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn any_single_byte_corruption_is_rejected(at in any::<prop::sample::Index>(), flip in 1u8..=255) {
        thread_local! {
            static BYTES: Vec<u8> = bytes_of(&r1(0.9, 25));
        }
        let mut bad = BYTES.with(Clone::clone);
        let i = at.index(bad.len());
        bad[i] ^= flip;
        prop_assert!(decode(&bad).is_err());
    }
}
