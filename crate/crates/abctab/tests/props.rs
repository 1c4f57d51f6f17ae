//! Property tests for the algebraic round-trip laws.

use abctab::fileformat::{parse, serialize};
use abctab::forge::{build_codebook, build_tables, FillPolicy, KeyedPermutation, Layout};
use abctab::model::SchemeKind;
use proptest::prelude::*;

proptest! {
    #[test]
    fn codebook_round_trips_every_coded_value(
        n in 2usize..12,
        m in 0usize..5,
        seed in any::<u64>(),
    ) {
        let cb = build_codebook(n, m, SchemeKind::Abc, seed, Layout::Random).unwrap();
        for (c, v, t) in cb.coded_values() {
            prop_assert_eq!(cb.encrypt(v, t).unwrap(), c);
            let d = cb.decrypt(c).unwrap().coded().unwrap();
            prop_assert_eq!(d, (v, t));
        }
    }

    #[test]
    fn serialization_is_a_bijection_on_built_tables(
        n in 2usize..6,
        m in 0usize..3,
        seed in any::<u64>(),
        redact in any::<bool>(),
    ) {
        let cb = build_codebook(n, m, SchemeKind::Abc, seed, Layout::Random).unwrap();
        let ts = build_tables(&cb, &FillPolicy::SafeRandom { seed }).unwrap();
        let text = serialize(&ts, Some(&cb), redact).unwrap();
        let tf = parse(&text).unwrap();
        prop_assert_eq!(tf.codebook.is_some(), !redact);
        let text2 = serialize(&tf.table_set(), tf.codebook.as_ref(), redact).unwrap();
        prop_assert_eq!(text, text2);
    }

    #[test]
    fn keyed_permutation_inverts(domain in 2u64..2000, seed in any::<u64>()) {
        let p = KeyedPermutation::new(domain, seed).unwrap();
        for q in 0..domain {
            let c = p.permute(q);
            prop_assert!(c < domain);
            prop_assert_eq!(p.invert(c), q);
        }
    }

    #[test]
    fn safe_fill_is_deterministic(seed in any::<u64>()) {
        let cb = build_codebook(2, 0, SchemeKind::Abc, seed, Layout::Random).unwrap();
        let a = build_tables(&cb, &FillPolicy::SafeRandom { seed }).unwrap();
        let b = build_tables(&cb, &FillPolicy::SafeRandom { seed }).unwrap();
        prop_assert_eq!(a.as_materialized().unwrap(), b.as_materialized().unwrap());
    }
}
