//! Rotations and the structure of the stable matching lattice: exposed
//! rotation discovery, elimination, the full rotation set via a minimal
//! differences sweep, the precedence poset, closures, and enumeration of
//! all stable matchings through the closed-subset correspondence.

use std::ops::ControlFlow;

use thiserror::Error;

use crate::gs::{man_oriented_gs, reduce_rural_hospitals, woman_oriented_gs, Matching};
use crate::instance::{Instance, ManId, WomanId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RotationError {
    #[error("man {0} is unmatched in this matching")]
    UnmatchedMan(ManId),
    #[error("rotation is not exposed on this matching")]
    NotExposed,
    #[error("rotation set is not closed in the poset")]
    NotClosed,
    #[error("({0}, {1}) is not a stable pair")]
    NotAStablePair(ManId, WomanId),
}

/// An ordered cyclic sequence of man-woman pairs; the atomic move between
/// stable matchings. Eliminating it on a matching that exposes it moves
/// every man in it to the next pair's woman (indices cyclic), making each
/// man strictly worse off and each woman strictly better off.
///
/// The pair list is canonicalized to start at the smallest man id, so two
/// rotations are equal iff they describe the same cyclic sequence. The
/// `id` is the dense discovery index within the rotation set it belongs
/// to and does not take part in equality.
#[derive(Debug, Clone)]
pub struct Rotation {
    pub id: usize,
    pairs: Vec<(ManId, WomanId)>,
}

impl Rotation {
    fn new(id: usize, mut pairs: Vec<(ManId, WomanId)>) -> Self {
        debug_assert!(pairs.len() >= 2);
        let min_pos = pairs
            .iter()
            .enumerate()
            .min_by_key(|(_, &(m, _))| m)
            .map(|(i, _)| i)
            .unwrap_or(0);
        pairs.rotate_left(min_pos);
        Self { id, pairs }
    }

    pub fn pairs(&self) -> &[(ManId, WomanId)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The woman each man moves to when the rotation is eliminated.
    pub fn target_of(&self, index: usize) -> WomanId {
        self.pairs[(index + 1) % self.pairs.len()].1
    }

    /// Rank of the woman `man` moves to, if the rotation contains him.
    pub fn target_rank_for_man(&self, inst: &Instance, man: ManId) -> Option<u32> {
        self.pairs
            .iter()
            .position(|&(mi, _)| mi == man)
            .map(|i| inst.rank_of_woman(man, self.target_of(i)).unwrap())
    }
}

impl PartialEq for Rotation {
    fn eq(&self, other: &Self) -> bool {
        self.pairs == other.pairs
    }
}

impl Eq for Rotation {}

impl std::hash::Hash for Rotation {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.pairs.hash(state);
    }
}

/// A set of rotation ids over a fixed universe, packed into machine words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotSet {
    words: Vec<u64>,
}

impl RotSet {
    pub fn new(universe: usize) -> Self {
        Self { words: vec![0; universe.div_ceil(64)] }
    }

    pub fn insert(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn contains(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
    }

    pub fn or_assign(&mut self, other: &RotSet) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    /// Elements of `self` not in `other`.
    pub fn subtract(&self, other: &RotSet) -> RotSet {
        RotSet { words: self.words.iter().zip(&other.words).map(|(a, b)| a & !b).collect() }
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_subset_of(&self, other: &RotSet) -> bool {
        self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Ids in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    return None;
                }
                let tz = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(wi * 64 + tz)
            })
        })
    }

    pub fn from_ids(universe: usize, ids: &[usize]) -> Self {
        let mut s = Self::new(universe);
        for &i in ids {
            s.insert(i);
        }
        s
    }
}

pub(crate) fn apply_rotation(m: &mut Matching, rot: &Rotation) {
    for &(mi, wi) in rot.pairs() {
        m.unset(mi, wi);
    }
    for (i, &(mi, _)) in rot.pairs().iter().enumerate() {
        m.set(mi, rot.target_of(i));
    }
}

pub(crate) fn undo_rotation(m: &mut Matching, rot: &Rotation) {
    for (i, &(mi, _)) in rot.pairs().iter().enumerate() {
        m.unset(mi, rot.target_of(i));
    }
    for &(mi, wi) in rot.pairs() {
        m.set(mi, wi);
    }
}

/// `s(m, M)`: the first woman after `M(m)` on `m`'s list who prefers `m`
/// to her own partner (an unmatched woman always accepts). `None` when no
/// such woman exists, i.e. `m` already has his partner in `M_z`.
pub fn next_successor(
    inst: &Instance,
    m: &Matching,
    man: ManId,
) -> Result<Option<WomanId>, RotationError> {
    let partner = m.partner_of_man(man).ok_or(RotationError::UnmatchedMan(man))?;
    let start = inst.index_in_man_list(man, partner).expect("partner must be acceptable");
    for &w in &inst.man_prefs(man)[start + 1..] {
        let accepts = match m.partner_of_woman(w) {
            None => true,
            Some(holder) => inst.woman_prefers(w, man, holder),
        };
        if accepts {
            return Ok(Some(w));
        }
    }
    Ok(None)
}

/// Cycles of the partial successor graph `m -> M(s(m, M))`.
fn successor_cycles(next_man: &[Option<ManId>]) -> Vec<Vec<ManId>> {
    let n = next_man.len();
    let mut state = vec![0u8; n]; // 0 new, 1 on current walk, 2 finished
    let mut cycles = Vec::new();
    for start in 0..n {
        if state[start] != 0 {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start;
        loop {
            state[cur] = 1;
            path.push(cur);
            match next_man[cur] {
                Some(nx) if state[nx] == 1 => {
                    let pos = path.iter().position(|&x| x == nx).unwrap();
                    cycles.push(path[pos..].to_vec());
                    break;
                }
                Some(nx) if state[nx] == 0 => cur = nx,
                _ => break,
            }
        }
        for &v in &path {
            state[v] = 2;
        }
    }
    cycles
}

/// All rotations exposed on the stable matching `M`; empty iff `M = M_z`.
/// Ids are local to the returned list, in order of smallest contained man.
pub fn find_exposed_rotations(inst: &Instance, m: &Matching) -> Vec<Rotation> {
    let mut next_man = vec![None; inst.n_men()];
    for (man, slot) in next_man.iter_mut().enumerate() {
        if m.partner_of_man(man).is_none() {
            continue;
        }
        *slot = next_successor(inst, m, man)
            .expect("matched")
            .map(|w| m.partner_of_woman(w).expect("successor is matched on stable matchings"));
    }
    let mut cycles = successor_cycles(&next_man);
    for c in &mut cycles {
        let min_pos = c.iter().enumerate().min_by_key(|(_, &v)| v).map(|(i, _)| i).unwrap();
        c.rotate_left(min_pos);
    }
    cycles.sort_by_key(|c| c[0]);
    cycles
        .into_iter()
        .enumerate()
        .map(|(id, cycle)| {
            Rotation::new(
                id,
                cycle.into_iter().map(|mi| (mi, m.partner_of_man(mi).unwrap())).collect(),
            )
        })
        .collect()
}

/// Eliminates an exposed rotation, producing the adjacent stable matching
/// in which every man of the rotation is one step worse off.
pub fn eliminate(m: &Matching, rot: &Rotation) -> Result<Matching, RotationError> {
    for &(mi, wi) in rot.pairs() {
        if m.partner_of_man(mi) != Some(wi) {
            return Err(RotationError::NotExposed);
        }
    }
    let mut out = m.clone();
    apply_rotation(&mut out, rot);
    Ok(out)
}

/// The complete rotation set of a reduced instance, found by sweeping
/// exposed rotations from `M_0` down to `M_z` (each rotation is exposed
/// exactly once along any maximal elimination chain). Ids are assigned in
/// discovery order, which is a linear extension of the rotation poset.
pub fn all_rotations(inst: &Instance) -> Vec<Rotation> {
    let mut m = man_oriented_gs(inst);
    assert!(
        m.is_perfect() && inst.n_men() == inst.n_women(),
        "all_rotations requires a reduced instance"
    );
    let mz = woman_oriented_gs(inst);
    let n = inst.n_men();
    // Per-man scan pointer into his list. A woman is skipped permanently
    // only when she prefers her current partner to the scanning man;
    // partners of women only improve across eliminations, so skips stay
    // valid. The stopping candidate is re-verified on every round.
    let mut ptr: Vec<usize> = (0..n)
        .map(|mi| inst.index_in_man_list(mi, m.partner_of_man(mi).unwrap()).unwrap() + 1)
        .collect();
    let mut rotations: Vec<Rotation> = Vec::new();
    loop {
        let mut next_man: Vec<Option<ManId>> = vec![None; n];
        for mi in 0..n {
            let prefs = inst.man_prefs(mi);
            while ptr[mi] < prefs.len() {
                let w = prefs[ptr[mi]];
                let holder = m.partner_of_woman(w).expect("perfect matching");
                if inst.woman_prefers(w, mi, holder) {
                    next_man[mi] = Some(holder);
                    break;
                }
                ptr[mi] += 1;
            }
        }
        let cycles = successor_cycles(&next_man);
        let Some(cycle) = cycles.into_iter().next() else { break };
        let pairs: Vec<(ManId, WomanId)> =
            cycle.iter().map(|&mi| (mi, m.partner_of_man(mi).unwrap())).collect();
        let rot = Rotation::new(rotations.len(), pairs);
        apply_rotation(&mut m, &rot);
        for &(mi, _) in rot.pairs() {
            let w_new = m.partner_of_man(mi).unwrap();
            ptr[mi] = inst.index_in_man_list(mi, w_new).unwrap() + 1;
        }
        rotations.push(rot);
    }
    assert_eq!(m, mz, "rotation sweep must end at the woman-optimal matching");
    rotations
}

/// The rotation poset: all rotations of a reduced instance plus the
/// precedence relation. Closed subsets (predecessor-closed sets) are in
/// one-to-one correspondence with the stable matchings; ascending id is a
/// topological order.
#[derive(Debug, Clone)]
pub struct RotationPoset {
    rotations: Vec<Rotation>,
    preds: Vec<Vec<usize>>,
    closure_masks: Vec<RotSet>,
    /// Per man: (rank of the pair woman, rotation id), ascending rank.
    man_chain: Vec<Vec<(u32, usize)>>,
    m0: Matching,
    mz: Matching,
}

/// Builds the precedence structure over a previously extracted rotation
/// set. Two edge rules are used: consecutive rotations moving the same
/// man, and, for every woman a rotation's man skips over while she still
/// accepts him, the rotation that first lifts her out of his reach.
pub fn build_poset(inst: &Instance, rotations: Vec<Rotation>) -> RotationPoset {
    let m0 = man_oriented_gs(inst);
    let mz = woman_oriented_gs(inst);
    let k = rotations.len();

    let mut man_chain: Vec<Vec<(u32, usize)>> = vec![Vec::new(); inst.n_men()];
    // Per woman: (rank of the man she moves to, rotation id); ranks
    // strictly decrease along her chain since she only trades up.
    let mut woman_seq: Vec<Vec<(u32, usize)>> = vec![Vec::new(); inst.n_women()];
    for (id, rot) in rotations.iter().enumerate() {
        let q = rot.len();
        for (i, &(mi, wi)) in rot.pairs().iter().enumerate() {
            man_chain[mi].push((inst.rank_of_woman(mi, wi).unwrap(), id));
            let target_man = rot.pairs()[(i + q - 1) % q].0;
            woman_seq[wi].push((inst.rank_of_man(wi, target_man).unwrap(), id));
        }
    }
    debug_assert!(man_chain.iter().all(|c| c.windows(2).all(|p| p[0].0 < p[1].0)));
    debug_assert!(woman_seq.iter().all(|c| c.windows(2).all(|p| p[0].0 > p[1].0)));

    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for chain in &man_chain {
        for pair in chain.windows(2) {
            preds[pair[1].1].push(pair[0].1);
        }
    }
    for (id, rot) in rotations.iter().enumerate() {
        let q = rot.len();
        for (i, &(mi, wi)) in rot.pairs().iter().enumerate() {
            let w_to = rot.pairs()[(i + 1) % q].1;
            let from = inst.index_in_man_list(mi, wi).unwrap();
            let to = inst.index_in_man_list(mi, w_to).unwrap();
            for &w in &inst.man_prefs(mi)[from + 1..to] {
                let rank_mi = inst.rank_of_man(w, mi).unwrap();
                let holder0 = m0.partner_of_woman(w).expect("reduced instance");
                if rank_mi < inst.rank_of_man(w, holder0).unwrap() {
                    // w accepts mi at M_0; the first rotation moving her to
                    // a man she prefers to mi must come first.
                    let seq = &woman_seq[w];
                    let idx = seq.partition_point(|&(r, _)| r > rank_mi);
                    debug_assert!(idx < seq.len(), "skipped woman never escapes: M_z unstable");
                    preds[id].push(seq[idx].1);
                }
            }
        }
    }
    for (id, p) in preds.iter_mut().enumerate() {
        p.sort_unstable();
        p.dedup();
        assert!(
            p.last().is_none_or(|&last| last < id),
            "discovery order must be a linear extension of the poset"
        );
    }

    let mut closure_masks: Vec<RotSet> = Vec::with_capacity(k);
    for (id, p) in preds.iter().enumerate() {
        let mut mask = RotSet::new(k);
        for &pr in p {
            let prior = closure_masks[pr].clone();
            mask.or_assign(&prior);
        }
        mask.insert(id);
        closure_masks.push(mask);
    }

    RotationPoset { rotations, preds, closure_masks, man_chain, m0, mz }
}

impl RotationPoset {
    /// Rotation extraction plus poset construction in one step.
    pub fn build(inst: &Instance) -> Self {
        build_poset(inst, all_rotations(inst))
    }

    pub fn len(&self) -> usize {
        self.rotations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rotations.is_empty()
    }

    pub fn rotations(&self) -> &[Rotation] {
        &self.rotations
    }

    pub fn rotation(&self, id: usize) -> &Rotation {
        &self.rotations[id]
    }

    /// Direct predecessors (rotations that must be eliminated first).
    pub fn predecessors(&self, id: usize) -> &[usize] {
        &self.preds[id]
    }

    /// The rotations moving `man`, in elimination order, as
    /// `(rank of the woman he leaves, rotation id)`.
    pub(crate) fn man_chain(&self, man: ManId) -> &[(u32, usize)] {
        &self.man_chain[man]
    }

    pub fn man_optimal(&self) -> &Matching {
        &self.m0
    }

    pub fn woman_optimal(&self) -> &Matching {
        &self.mz
    }

    /// `c(ρ)`: the rotation plus everything that precedes it.
    pub fn closure_mask(&self, id: usize) -> &RotSet {
        &self.closure_masks[id]
    }

    pub(crate) fn closure_of_mask(&self, set: &RotSet) -> RotSet {
        let mut out = RotSet::new(self.len());
        for id in set.iter() {
            out.or_assign(&self.closure_masks[id]);
        }
        out
    }

    /// Smallest closed superset of `ids`; the closure of the empty set is
    /// the empty set.
    pub fn closure(&self, ids: &[usize]) -> Vec<usize> {
        self.closure_of_mask(&RotSet::from_ids(self.len(), ids)).iter().collect()
    }

    pub fn is_closed(&self, ids: &[usize]) -> bool {
        let set = RotSet::from_ids(self.len(), ids);
        self.closure_of_mask(&set) == set
    }

    /// `R_j(M)`: rotations containing a pair of `M` whose woman ranks her
    /// partner at `j`, i.e. the rotations that move the rank-`j` women of
    /// `M` out of their current partnerships. Women whose pair belongs to
    /// `M_z` are not moved by any rotation and contribute nothing.
    pub fn rotations_with_woman_rank(
        &self,
        inst: &Instance,
        m: &Matching,
        j: u32,
    ) -> Vec<usize> {
        self.rotations_with_woman_rank_mask(inst, m, j).iter().collect()
    }

    pub(crate) fn rotations_with_woman_rank_mask(
        &self,
        inst: &Instance,
        m: &Matching,
        j: u32,
    ) -> RotSet {
        let mut out = RotSet::new(self.len());
        for w in 0..inst.n_women() {
            if let Some(holder) = m.partner_of_woman(w) {
                if inst.rank_of_man(w, holder) == Some(j) {
                    if let Some(id) = self.rotation_id_for_pair(inst, holder, w) {
                        out.insert(id);
                    }
                }
            }
        }
        out
    }

    /// `φ(m, w)`: the unique rotation containing the stable pair `(m, w)`,
    /// or `None` when the pair belongs to `M_z`. Pairs in no stable
    /// matching are an error.
    pub fn rotation_containing_pair(
        &self,
        inst: &Instance,
        m: ManId,
        w: WomanId,
    ) -> Result<Option<&Rotation>, RotationError> {
        if let Some(rank) = inst.rank_of_woman(m, w) {
            if let Ok(pos) = self.man_chain[m].binary_search_by_key(&rank, |&(r, _)| r) {
                return Ok(Some(&self.rotations[self.man_chain[m][pos].1]));
            }
            if self.mz.partner_of_man(m) == Some(w) {
                return Ok(None);
            }
        }
        Err(RotationError::NotAStablePair(m, w))
    }

    pub(crate) fn rotation_id_for_pair(&self, inst: &Instance, m: ManId, w: WomanId) -> Option<usize> {
        let rank = inst.rank_of_woman(m, w)?;
        self.man_chain[m]
            .binary_search_by_key(&rank, |&(r, _)| r)
            .ok()
            .map(|pos| self.man_chain[m][pos].1)
    }

    /// The stable matching reached by eliminating a closed subset from
    /// `M_0` in topological (ascending id) order.
    pub fn matching_from_closed_subset(&self, ids: &[usize]) -> Result<Matching, RotationError> {
        let set = RotSet::from_ids(self.len(), ids);
        self.matching_from_closed_mask(&set)
    }

    pub(crate) fn matching_from_closed_mask(&self, set: &RotSet) -> Result<Matching, RotationError> {
        if self.closure_of_mask(set) != *set {
            return Err(RotationError::NotClosed);
        }
        let mut m = self.m0.clone();
        for id in set.iter() {
            apply_rotation(&mut m, &self.rotations[id]);
        }
        Ok(m)
    }

    /// Visits every stable matching of the (reduced) instance exactly
    /// once, by depth-first search over closed subsets with in-place
    /// elimination and undo. The callback can stop the traversal early.
    pub fn for_each_stable_matching<F>(&self, f: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&Matching) -> ControlFlow<()>,
    {
        let mut m = self.m0.clone();
        let mut taken = RotSet::new(self.len());
        self.enumerate_rec(0, &mut m, &mut taken, f)
    }

    fn enumerate_rec<F>(
        &self,
        i: usize,
        m: &mut Matching,
        taken: &mut RotSet,
        f: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&Matching) -> ControlFlow<()>,
    {
        if i == self.len() {
            return f(m);
        }
        // Processing in topological order makes "all predecessors taken"
        // the exact closedness condition for including rotation i.
        if self.preds[i].iter().all(|&p| taken.contains(p)) {
            apply_rotation(m, &self.rotations[i]);
            taken.insert(i);
            let flow = self.enumerate_rec(i + 1, m, taken, f);
            taken.remove(i);
            undo_rotation(m, &self.rotations[i]);
            flow?;
        }
        self.enumerate_rec(i + 1, m, taken, f)
    }

    /// Precedence digraph in DOT format: `a -> b` means a must be
    /// eliminated before b.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph {\n");
        for id in 0..self.len() {
            out.push_str(&format!("  {};\n", id));
        }
        for (id, preds) in self.preds.iter().enumerate() {
            for &p in preds {
                out.push_str(&format!("  {} -> {};\n", p, id));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Streams every stable matching of an arbitrary instance exactly once.
/// Unmatched agents are removed up front (rural hospitals) and matchings
/// are reported in the original instance's id space.
pub fn for_each_stable_matching<F>(inst: &Instance, mut f: F) -> ControlFlow<()>
where
    F: FnMut(&Matching) -> ControlFlow<()>,
{
    let (reduced, report) = reduce_rural_hospitals(inst);
    let poset = RotationPoset::build(&reduced);
    if report.is_identity() {
        poset.for_each_stable_matching(&mut f)
    } else {
        poset.for_each_stable_matching(&mut |m: &Matching| {
            f(&report.to_original(m, inst.n_men(), inst.n_women()))
        })
    }
}

/// Materializes the full stable set. Prefer [`for_each_stable_matching`]
/// when a fold suffices.
pub fn stable_matchings(inst: &Instance) -> Vec<Matching> {
    let mut out = Vec::new();
    let _ = for_each_stable_matching(inst, |m| {
        out.push(m.clone());
        ControlFlow::Continue(())
    });
    out
}
