//! Shared brute-force oracles for the integration suites. Everything here
//! is deliberately independent of the library's rotation/enumeration
//! machinery: permutations are enumerated directly and closedness is
//! checked from the raw predecessor lists.

#![allow(dead_code)]

use fairsm::gs::{is_stable, Matching};
use fairsm::instance::Instance;
use fairsm::rotations::RotationPoset;

/// Every perfect matching of a complete-support instance that passes the
/// stability check, found by enumerating all n! assignments.
pub fn brute_force_stable_perfect(inst: &Instance) -> Vec<Matching> {
    let n = inst.n_men();
    assert_eq!(n, inst.n_women());
    let mut woman_of: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    permute(&mut woman_of, 0, &mut |perm| {
        let pairs: Vec<(usize, usize)> = perm.iter().copied().enumerate().collect();
        if pairs.iter().all(|&(m, w)| inst.is_acceptable(m, w)) {
            let matching = Matching::from_pairs(inst, &pairs).unwrap();
            if is_stable(inst, &matching).unwrap().is_empty() {
                out.push(matching);
            }
        }
    });
    out
}

/// Every stable matching of an arbitrary (possibly incomplete) instance,
/// by enumerating all partial injective assignments. Exponential; tiny
/// instances only.
pub fn brute_force_stable_all(inst: &Instance) -> Vec<Matching> {
    fn rec(
        inst: &Instance,
        man: usize,
        used: &mut Vec<bool>,
        pairs: &mut Vec<(usize, usize)>,
        out: &mut Vec<Matching>,
    ) {
        if man == inst.n_men() {
            let matching = Matching::from_pairs(inst, pairs).unwrap();
            if is_stable(inst, &matching).unwrap().is_empty() {
                out.push(matching);
            }
            return;
        }
        rec(inst, man + 1, used, pairs, out); // leave `man` unmatched
        for &w in inst.man_prefs(man) {
            if !used[w] {
                used[w] = true;
                pairs.push((man, w));
                rec(inst, man + 1, used, pairs, out);
                pairs.pop();
                used[w] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(inst, 0, &mut vec![false; inst.n_women()], &mut Vec::new(), &mut out);
    out
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
    let _ = items;
}

fn is_closed_by_preds(poset: &RotationPoset, mask: u64) -> bool {
    (0..poset.len()).all(|id| {
        mask >> id & 1 == 0 || poset.predecessors(id).iter().all(|&p| mask >> p & 1 == 1)
    })
}

/// Counts predecessor-closed subsets straight from the predecessor lists:
/// raw bitmask enumeration for small rotation sets, take/skip recursion on
/// the rare larger ones.
pub fn count_closed_subsets_brute(poset: &RotationPoset) -> u64 {
    let k = poset.len();
    if k <= 20 {
        (0u64..1 << k).filter(|&mask| is_closed_by_preds(poset, mask)).count() as u64
    } else {
        count_rec(poset, 0, 0)
    }
}

fn count_rec(poset: &RotationPoset, i: usize, taken: u128) -> u64 {
    if i == poset.len() {
        return 1;
    }
    let mut total = count_rec(poset, i + 1, taken); // skip i
    if poset.predecessors(i).iter().all(|&p| taken >> p & 1 == 1) {
        total += count_rec(poset, i + 1, taken | 1 << i);
    }
    total
}

/// All closed subsets as sorted id lists (small posets only).
pub fn all_closed_subsets_brute(poset: &RotationPoset) -> Vec<Vec<usize>> {
    let k = poset.len();
    assert!(k <= 20, "brute subset listing is for small posets");
    (0u64..1 << k)
        .filter(|&mask| is_closed_by_preds(poset, mask))
        .map(|mask| (0..k).filter(|&id| mask >> id & 1 == 1).collect())
        .collect()
}

/// Canonical pair-set form of a matching, for set comparisons.
pub fn pair_set(m: &Matching) -> Vec<(usize, usize)> {
    m.pairs().collect()
}

/// A pseudo-random incomplete instance: a complete instance with a seeded
/// selection of pairs deleted.
pub fn incomplete_instance(n: usize, seed: u64, deletions: usize) -> Instance {
    let mut inst = fairsm::instance::generate_random(n, seed);
    let mut state = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    let mut next = |bound: usize| {
        // xorshift is plenty for test-data scrambling
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % bound as u64) as usize
    };
    for _ in 0..deletions {
        let m = next(n);
        let prefs = inst.man_prefs(m).to_vec();
        if prefs.len() > 1 {
            let w = prefs[next(prefs.len())];
            inst = inst.delete_pair(m, w).unwrap();
        }
    }
    inst
}
