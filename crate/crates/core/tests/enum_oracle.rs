mod common;

use cubic_core::cubic_enum::*;
use cubic_core::Sign;
use proptest::prelude::*;

fn discs(x: i64, sign: Sign) -> Vec<i64> {
    enumerate(x + 1, sign).unwrap().iter().map(|r| r.disc).collect()
}

#[test]
fn matches_oracle_below_3000() {
    for (sign, pos) in [(Sign::Plus, true), (Sign::Minus, false)] {
        assert_eq!(discs(3000, sign), common::oracle_discriminants(3000, pos), "sign {sign}");
    }
}

#[test]
fn spot_facts() {
    assert_eq!(discs(24, Sign::Minus), vec![-23]);
    assert!(discs(147, Sign::Plus).is_empty());
    assert_eq!(discs(148, Sign::Plus), vec![148]);
}

#[test]
fn records_satisfy_invariants() {
    for sign in [Sign::Plus, Sign::Minus] {
        for r in enumerate(20_000, sign).unwrap() {
            assert_eq!(discriminant(&r.form).unwrap(), r.disc as i128);
            assert!(sign.matches(r.disc));
            assert!(is_irreducible(&r.form));
            assert!(!is_square(r.disc as i128));
            assert!(r.disc.rem_euclid(4) <= 1);
            assert_eq!(canonical_key(&r.form).unwrap(), r.form);
        }
    }
}

#[test]
fn enumeration_is_deterministic_and_monotone() {
    let a = enumerate(30_000, Sign::Minus).unwrap();
    let b = enumerate(30_000, Sign::Minus).unwrap();
    assert_eq!(a, b);
    let c = enumerate(10_000, Sign::Minus).unwrap();
    assert!(c.len() <= a.len());
    assert_eq!(&a[..c.len()], &c[..]);
}

#[test]
fn galois_variant_adds_cyclic_fields() {
    let all = enumerate_with(82, Sign::Plus, &EnumOptions { include_galois: true }).unwrap();
    let discs: Vec<i64> = all.iter().map(|r| r.disc).collect();
    assert_eq!(discs, vec![49, 81]);
}

#[test]
fn cache_roundtrip_and_corruption() {
    let dir = tempfile::tempdir().unwrap();
    let recs = enumerate(5000, Sign::Plus).unwrap();
    let path = cache_path(dir.path(), 5000, Sign::Plus, false);
    write_cache(&path, &recs).unwrap();
    assert_eq!(read_cache(&path).unwrap(), recs);
    let loaded = load_or_enumerate(Some(dir.path()), 2000, Sign::Plus, &EnumOptions::default()).unwrap();
    assert_eq!(loaded, enumerate(2000, Sign::Plus).unwrap());
    std::fs::write(&path, "disc,a,b,c,d\n148,1,1,1,1\n").unwrap();
    assert!(matches!(read_cache(&path), Err(EnumError::CacheCorruption { .. })));
}

proptest! {
    #[test]
    fn key_is_class_invariant(idx in 0usize..400, moves in proptest::collection::vec((0u8..3, -3i64..=3), 1..6)) {
        static RECS: std::sync::OnceLock<Vec<FieldRecord>> = std::sync::OnceLock::new();
        let recs = RECS.get_or_init(|| {
            let mut v = enumerate(4000, Sign::Minus).unwrap();
            v.extend(enumerate(8000, Sign::Plus).unwrap());
            v
        });
        let f = recs[idx % recs.len()].form;
        let mut g = f;
        for (kind, k) in moves {
            g = match kind {
                0 => g.transform(1, k, 0, 1).unwrap(),
                1 => g.transform(0, -1, 1, 0).unwrap(),
                _ => g.transform(-1, 0, 0, 1).unwrap(),
            };
        }
        prop_assert_eq!(canonical_key(&g).unwrap(), f);
        prop_assert_eq!(canonical_key(&g.negate()).unwrap(), f);
    }

    #[test]
    fn monic_maximality_matches_index(a1 in -3i64..=3, a2 in -40i64..=40, a3 in -60i64..=60) {
        let f = Form::new(1, -a1, a2, -a3);
        prop_assume!(is_irreducible(&f));
        let disc = discriminant(&f).unwrap();
        let idx = common::index_of_order(a1 as i128, a2 as i128, a3 as i128);
        for p in [2i64, 3, 5, 7, 11, 13] {
            if disc % (p as i128 * p as i128) == 0 {
                prop_assert_eq!(is_maximal_at(&f, p), idx % p as i128 != 0, "p={} f={}", p, f);
            }
        }
    }
}
