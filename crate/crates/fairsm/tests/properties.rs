//! Property-based invariants over randomly generated instances.

mod common;

use std::collections::HashSet;
use std::ops::ControlFlow;

use proptest::prelude::*;

use fairsm::fairness::{score, ScoreReport};
use fairsm::gs::{is_stable, man_oriented_gs, reduce_rural_hospitals, woman_oriented_gs};
use fairsm::harness::summarize;
use fairsm::instance::{generate_random, parse_instance, Instance};
use fairsm::rotations::{for_each_stable_matching, stable_matchings, RotationPoset};

use common::count_closed_subsets_brute;

fn arb_instance() -> impl Strategy<Value = Instance> {
    (1usize..=8, any::<u64>()).prop_map(|(n, seed)| generate_random(n, seed))
}

/// A complete instance plus a seeded batch of pair deletions.
fn arb_incomplete() -> impl Strategy<Value = Instance> {
    (2usize..=7, any::<u64>(), proptest::collection::vec((any::<u16>(), any::<u16>()), 0..12))
        .prop_map(|(n, seed, cuts)| {
            let mut inst = generate_random(n, seed);
            for (a, b) in cuts {
                let m = a as usize % n;
                let prefs = inst.man_prefs(m).to_vec();
                if prefs.len() > 1 {
                    let w = prefs[b as usize % prefs.len()];
                    inst = inst.delete_pair(m, w).unwrap();
                }
            }
            inst
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Surgery shrinks the instance monotonically and never reorders the
    /// surviving entries or changes their ranks.
    #[test]
    fn surgery_preserves_order_and_ranks((inst, a, b) in (arb_instance(), 1u32..=8, 1u32..=8)) {
        for derived in [inst.truncate_men(a), inst.truncate_women(b)] {
            prop_assert!(derived.total_pref_length() <= inst.total_pref_length());
            for m in 0..inst.n_men() {
                let survived: Vec<usize> = inst
                    .man_prefs(m)
                    .iter()
                    .copied()
                    .filter(|&w| derived.is_acceptable(m, w))
                    .collect();
                prop_assert_eq!(derived.man_prefs(m), &survived[..]);
                for &w in derived.man_prefs(m) {
                    prop_assert_eq!(derived.rank_of_woman(m, w), inst.rank_of_woman(m, w));
                    prop_assert_eq!(derived.rank_of_man(w, m), inst.rank_of_man(w, m));
                }
            }
        }
    }

    /// Normalized instances have mutually consistent rank maps.
    #[test]
    fn ranks_and_acceptability_agree(inst in arb_incomplete()) {
        for m in 0..inst.n_men() {
            for w in 0..inst.n_women() {
                let forward = inst.rank_of_woman(m, w).is_some();
                prop_assert_eq!(forward, inst.rank_of_man(w, m).is_some());
                prop_assert_eq!(forward, inst.is_acceptable(m, w));
            }
        }
        let m_total: usize = (0..inst.n_men()).map(|m| inst.man_prefs(m).len()).sum();
        let w_total: usize = (0..inst.n_women()).map(|w| inst.woman_prefs(w).len()).sum();
        prop_assert_eq!(m_total + w_total, inst.total_pref_length());
    }

    /// The text format round-trips the preference lists whenever it is
    /// representable. Ranks come back positional: a derived instance with
    /// preserved parent ranks re-parses as a fresh baseline.
    #[test]
    fn text_round_trip(inst in arb_incomplete()) {
        if let Ok(text) = inst.to_text() {
            let reparsed = parse_instance(&text).unwrap();
            let men: Vec<Vec<usize>> = (0..inst.n_men()).map(|m| inst.man_prefs(m).to_vec()).collect();
            let women: Vec<Vec<usize>> =
                (0..inst.n_women()).map(|w| inst.woman_prefs(w).to_vec()).collect();
            prop_assert_eq!(reparsed, Instance::from_prefs(men, women).unwrap());
        }
    }

    /// Both orientations produce stable matchings with the optimality
    /// directions, even on incomplete instances.
    #[test]
    fn gs_outputs_are_stable_and_extremal(inst in arb_incomplete()) {
        let m0 = man_oriented_gs(&inst);
        let mz = woman_oriented_gs(&inst);
        prop_assert!(is_stable(&inst, &m0).unwrap().is_empty());
        prop_assert!(is_stable(&inst, &mz).unwrap().is_empty());
        for m in stable_matchings(&inst) {
            for man in 0..inst.n_men() {
                if let (Some(w0), Some(w)) = (m0.partner_of_man(man), m.partner_of_man(man)) {
                    prop_assert!(
                        inst.rank_of_woman(man, w0).unwrap() <= inst.rank_of_woman(man, w).unwrap()
                    );
                }
            }
            for woman in 0..inst.n_women() {
                if let (Some(mz_p), Some(p)) =
                    (mz.partner_of_woman(woman), m.partner_of_woman(woman))
                {
                    prop_assert!(
                        inst.rank_of_man(woman, mz_p).unwrap()
                            <= inst.rank_of_man(woman, p).unwrap()
                    );
                }
            }
        }
    }

    /// Enumeration emits distinct stable matchings, as many as the poset
    /// has closed subsets.
    #[test]
    fn enumeration_bijection(inst in arb_instance()) {
        let all = stable_matchings(&inst);
        let mut seen = HashSet::new();
        for m in &all {
            prop_assert!(is_stable(&inst, m).unwrap().is_empty());
            prop_assert!(seen.insert(m.clone()));
        }
        let poset = RotationPoset::build(&inst);
        prop_assert_eq!(all.len() as u64, count_closed_subsets_brute(&poset));
    }

    /// Closure is idempotent and its matchings are stable.
    #[test]
    fn closure_laws((inst, picks) in (arb_instance(), proptest::collection::vec(any::<u16>(), 0..4))) {
        let poset = RotationPoset::build(&inst);
        if poset.is_empty() {
            return Ok(());
        }
        let ids: Vec<usize> = picks.iter().map(|&p| p as usize % poset.len()).collect();
        let c = poset.closure(&ids);
        prop_assert_eq!(&poset.closure(&c), &c);
        prop_assert!(poset.is_closed(&c));
        let m = poset.matching_from_closed_subset(&c).unwrap();
        prop_assert!(is_stable(&inst, &m).unwrap().is_empty());
    }

    /// Score identities hold over every stable matching.
    #[test]
    fn score_identities(inst in arb_instance()) {
        let (reduced, _) = reduce_rural_hospitals(&inst);
        let _ = for_each_stable_matching(&reduced, |m| {
            let r = score(&reduced, m).unwrap();
            assert_eq!(r.cost, r.man_cost + r.woman_cost);
            assert_eq!(r.balanced, r.man_cost.max(r.woman_cost));
            assert_eq!(r.sex_equal + 2 * r.man_cost.min(r.woman_cost), r.cost);
            assert!(r.regret_equality <= r.regret_sum);
            assert_eq!(r.regret_equality % 2, r.regret_sum % 2);
            assert!(2 * r.balanced >= r.cost);
            ControlFlow::Continue(())
        });
    }

    /// Score report CSV rows round-trip for arbitrary field values.
    #[test]
    fn score_csv_round_trip(fields in proptest::array::uniform10(any::<u64>())) {
        let report = ScoreReport {
            man_cost: fields[0],
            woman_cost: fields[1],
            cost: fields[2],
            man_degree: fields[3],
            woman_degree: fields[4],
            degree: fields[5],
            balanced: fields[6],
            sex_equal: fields[7],
            regret_equality: fields[8],
            regret_sum: fields[9],
        };
        prop_assert_eq!(ScoreReport::parse_csv_row(&report.to_csv_row()).unwrap(), report);
    }

    /// Summaries ignore sample order and keep percentiles ordered.
    #[test]
    fn summary_laws(mut values in proptest::collection::vec(0u32..10_000, 1..80)) {
        let as_f64: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let a = summarize(&as_f64).unwrap();
        values.reverse();
        let rev: Vec<f64> = values.iter().map(|&v| v as f64).collect();
        let b = summarize(&rev).unwrap();
        prop_assert_eq!(a, b);
        prop_assert!(a.p5 <= a.median && a.median <= a.p95);
        prop_assert_eq!(a.count, values.len());
    }
}
