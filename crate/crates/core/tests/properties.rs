use num_bigint::BigUint;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kns_core::constructions::{hm_family, star_family, HmChoice};
use kns_core::formulas::{eval_f, eval_h};
use kns_core::predicates::{
    check_prop31_bound, covering_number, defect_set, is_s_almost_t_intersecting, is_t_cover, is_t_intersecting,
    restrict, Outcome,
};
use kns_core::search::{canonicalize, extend_to_maximal, max_family, SearchConfig};
use kns_core::sets::{apply_permutation, binomial, binomial_u64, enumerate_k_subsets, Family, KSubset, Params};

fn family_strategy() -> impl Strategy<Value = (Family, u32)> {
    (3u32..=8)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, k)| {
            let all: Vec<KSubset> = enumerate_k_subsets(n, k).unwrap().collect();
            let len = all.len();
            (
                Just((n, k)),
                proptest::sample::subsequence(all, 0..=len.min(12)),
                1..=k,
            )
        })
        .prop_map(|((n, k), members, t)| (Family::new(n, k, members).unwrap(), t))
}

fn pair_strategy() -> impl Strategy<Value = (Family, Family)> {
    (3u32..=8)
        .prop_flat_map(|n| (Just(n), 1..n))
        .prop_flat_map(|(n, k)| {
            let all: Vec<KSubset> = enumerate_k_subsets(n, k).unwrap().collect();
            let len = all.len().min(8);
            (
                Just((n, k)),
                proptest::sample::subsequence(all.clone(), 0..=len),
                proptest::sample::subsequence(all, 0..=len),
            )
        })
        .prop_map(|((n, k), a, b)| (Family::new(n, k, a).unwrap(), Family::new(n, k, b).unwrap()))
}

fn intersection_profile(f: &Family) -> Vec<u32> {
    let m = f.members();
    let mut v: Vec<u32> = m
        .iter()
        .enumerate()
        .flat_map(|(i, a)| m[i + 1..].iter().map(move |b| a.meet(b)))
        .collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn zero_defect_is_t_intersecting((f, t) in family_strategy()) {
        prop_assert_eq!(is_s_almost_t_intersecting(&f, t, 0).0, is_t_intersecting(&f, t));
    }

    #[test]
    fn subfamilies_inherit_the_property((f, t) in family_strategy(), s in 0usize..4, drop in any::<prop::sample::Index>()) {
        prop_assume!(!f.is_empty() && is_s_almost_t_intersecting(&f, t, s).0);
        let g = f.without_index(drop.index(f.len()));
        prop_assert!(is_s_almost_t_intersecting(&g, t, s).0);
        prop_assert!(is_s_almost_t_intersecting(&f, t, s + 1).0);
    }

    #[test]
    fn relabeling_preserves_everything((f, t) in family_strategy(), seed in any::<u64>()) {
        let n = f.n();
        let mut perm: Vec<u32> = (1..=n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let g = apply_permutation(&f, &perm).unwrap();
        prop_assert_eq!(is_t_intersecting(&f, t), is_t_intersecting(&g, t));
        prop_assert_eq!(canonicalize(&f).unwrap(), canonicalize(&g).unwrap());
        prop_assert_eq!(intersection_profile(&f), intersection_profile(&g));
        if !f.is_empty() {
            prop_assert_eq!(covering_number(&f, t, 1).unwrap().tau, covering_number(&g, t, 1).unwrap().tau);
        }
    }

    #[test]
    fn different_profiles_mean_different_forms((f, g) in pair_strategy()) {
        if intersection_profile(&f) != intersection_profile(&g) {
            prop_assert_ne!(canonicalize(&f).unwrap(), canonicalize(&g).unwrap());
        }
    }

    #[test]
    fn minimum_covers_are_covers((f, t) in family_strategy()) {
        prop_assume!(!f.is_empty());
        let c = covering_number(&f, t, 50).unwrap();
        prop_assert!(c.tau >= t && c.tau <= f.n());
        for w in &c.witnesses {
            prop_assert_eq!(w.len(), c.tau);
            prop_assert!(is_t_cover(w, &f, t));
        }
    }

    #[test]
    fn defect_sets_split_the_family((f, t) in family_strategy(), bits in any::<u64>()) {
        let h = KSubset::from_bits(f.n(), bits & ((1u64 << f.n()) - 1)).unwrap();
        let d = defect_set(&f, &h, t);
        let meeting = f.iter().filter(|m| m.meet(&h) >= t).count();
        prop_assert_eq!(d.len() + meeting, f.len());
        prop_assert!(d.is_subfamily_of(&f));
        let r = restrict(&f, &h);
        prop_assert!(r.iter().all(|m| h.is_subset_of(m)));
        prop_assert_eq!(r.len(), f.iter().filter(|m| h.is_subset_of(m)).count());
    }

    #[test]
    fn pascal_rule(n in 1u64..2000, r in 1u64..60) {
        let big = BigUint::from(n);
        let lhs = binomial(&big, r);
        let rhs = binomial(&(&big - 1u32), r - 1) + binomial(&(&big - 1u32), r);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pascal_rule_huge(e in 30u32..200, r in 1u64..12) {
        let n = BigUint::from(2u32).pow(e);
        prop_assert_eq!(binomial(&n, r), binomial(&(&n - 1u32), r - 1) + binomial(&(&n - 1u32), r));
    }

    #[test]
    fn f_at_t_is_the_star(n in 10u64..200, k in 2u64..8, t in 1u64..4, s in 0u64..5) {
        prop_assume!(t < k && k <= n);
        prop_assert_eq!(eval_f(&BigUint::from(n), k, t, s, t).unwrap(), binomial_u64(n - t, k - t));
    }

    #[test]
    fn star_beats_hm_type_for_large_n(k in 3u64..6, t in 1u64..3, s in 0u64..4) {
        prop_assume!(t + 1 < k);
        let n = 2 * (t + 1) * ((k - t + 1).pow(2) + s);
        let h = eval_h(&BigUint::from(n), k, t, s).unwrap();
        prop_assert!(binomial_u64(n - t, k - t) > h);
    }
}

#[test]
fn constructions_satisfy_their_predicates() {
    for n in 4..=11u64 {
        for k in 2..=4u64.min(n) {
            for t in 1..k {
                let star = star_family(n, k, t).unwrap();
                assert!(star.check().unwrap().consistent());
                let Some(s_max) = (n + t).checked_sub(2 * k) else { continue };
                for s in 0..=s_max {
                    for seed in [None, Some(n * 31 + s)] {
                        let choice = HmChoice { a_seed: seed, b_seed: seed };
                        let hm = hm_family(n, k, t, s, choice).unwrap();
                        let check = hm.check().unwrap();
                        assert!(check.consistent(), "({n},{k},{t},{s}) {check:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn restriction_bound_holds_on_embedded_families() {
    // k = 3, t = 1: the bound needs n >= 2 * 9 = 18.
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mut held = 0;
    for _ in 0..200 {
        let f = kns_core::search::random_maximal_family(7, 3, 1, 1, &mut rng).unwrap().embed(18).unwrap();
        for bits in [0b1u64, 0b10, 0b11, 0b101] {
            let h = KSubset::from_bits(18, bits).unwrap();
            match check_prop31_bound(&f, 1, 1, &h) {
                Outcome::Violated => panic!("{f:?} with {h:?}"),
                Outcome::Holds => held += 1,
                Outcome::Skipped => {}
            }
        }
    }
    assert!(held > 0);
}

#[test]
fn extremal_families_are_locally_optimal() {
    for (n, k, t, s) in [(5u64, 2u64, 1u64, 1u64), (6, 2, 1, 2), (5, 3, 2, 1), (6, 3, 2, 2)] {
        let mut cfg = SearchConfig::new(Params::new(n, k, t, s).unwrap());
        cfg.require_not_t_intersecting = true;
        cfg.collect_all_extremal = true;
        let r = max_family(&cfg).unwrap();
        let best = r.max_size.unwrap();
        let order: Vec<KSubset> = enumerate_k_subsets(n as u32, k as u32).unwrap().collect();
        for f in &r.extremal {
            assert_eq!(f.len(), best);
            assert!(is_s_almost_t_intersecting(f, t as u32, s as usize).0);
            assert!(!is_t_intersecting(f, t as u32));
            for i in 0..f.len() {
                let g = extend_to_maximal(&f.without_index(i), t as u32, s as usize, &order).unwrap();
                assert!(g.len() <= best);
            }
        }
    }
}
