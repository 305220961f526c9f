//! Gale-Shapley in both orientations, the stability checker, and the
//! rural-hospitals reduction that lets the rest of the system assume
//! every agent is matched.

use thiserror::Error;

use crate::instance::{Instance, ManId, WomanId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MatchingError {
    #[error("man {0} appears in more than one pair")]
    ManReused(ManId),
    #[error("woman {0} appears in more than one pair")]
    WomanReused(WomanId),
    #[error("pair ({man}, {woman}) is not acceptable in this instance")]
    UnacceptablePair { man: ManId, woman: WomanId },
    #[error("id out of range: ({man}, {woman})")]
    IdOutOfRange { man: ManId, woman: WomanId },
    #[error("matching was built for a different instance shape")]
    ShapeMismatch,
}

/// A set of man-woman pairs with per-side partner lookup. No agent
/// appears in two pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Matching {
    man_to_woman: Vec<Option<WomanId>>,
    woman_to_man: Vec<Option<ManId>>,
}

impl Matching {
    pub fn empty(n_men: usize, n_women: usize) -> Self {
        Self { man_to_woman: vec![None; n_men], woman_to_man: vec![None; n_women] }
    }

    /// Validates capacity and acceptability of a raw pair list.
    pub fn from_pairs(inst: &Instance, pairs: &[(ManId, WomanId)]) -> Result<Self, MatchingError> {
        let mut matching = Self::empty(inst.n_men(), inst.n_women());
        for &(m, w) in pairs {
            if m >= inst.n_men() || w >= inst.n_women() {
                return Err(MatchingError::IdOutOfRange { man: m, woman: w });
            }
            if !inst.is_acceptable(m, w) {
                return Err(MatchingError::UnacceptablePair { man: m, woman: w });
            }
            if matching.man_to_woman[m].is_some() {
                return Err(MatchingError::ManReused(m));
            }
            if matching.woman_to_man[w].is_some() {
                return Err(MatchingError::WomanReused(w));
            }
            matching.man_to_woman[m] = Some(w);
            matching.woman_to_man[w] = Some(m);
        }
        Ok(matching)
    }

    pub fn partner_of_man(&self, m: ManId) -> Option<WomanId> {
        self.man_to_woman[m]
    }

    pub fn partner_of_woman(&self, w: WomanId) -> Option<ManId> {
        self.woman_to_man[w]
    }

    pub fn n_men(&self) -> usize {
        self.man_to_woman.len()
    }

    pub fn n_women(&self) -> usize {
        self.woman_to_man.len()
    }

    /// Number of pairs.
    pub fn len(&self) -> usize {
        self.man_to_woman.iter().flatten().count()
    }

    pub fn is_empty(&self) -> bool {
        self.man_to_woman.iter().all(Option::is_none)
    }

    /// Every man and woman matched.
    pub fn is_perfect(&self) -> bool {
        self.man_to_woman.iter().all(Option::is_some)
            && self.woman_to_man.iter().all(Option::is_some)
    }

    /// Pairs sorted by man id.
    pub fn pairs(&self) -> impl Iterator<Item = (ManId, WomanId)> + '_ {
        self.man_to_woman.iter().enumerate().filter_map(|(m, w)| w.map(|w| (m, w)))
    }

    pub(crate) fn set(&mut self, m: ManId, w: WomanId) {
        debug_assert!(self.man_to_woman[m].is_none() && self.woman_to_man[w].is_none());
        self.man_to_woman[m] = Some(w);
        self.woman_to_man[w] = Some(m);
    }

    pub(crate) fn unset(&mut self, m: ManId, w: WomanId) {
        debug_assert_eq!(self.man_to_woman[m], Some(w));
        self.man_to_woman[m] = None;
        self.woman_to_man[w] = None;
    }

    /// Text format: one `m_id w_id` pair per line (1-based), sorted by man id.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (m, w) in self.pairs() {
            out.push_str(&format!("{} {}\n", m + 1, w + 1));
        }
        out
    }

    /// Parses the pair-per-line text format back into a raw pair list.
    pub fn parse_pairs(text: &str) -> Result<Vec<(ManId, WomanId)>, String> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut toks = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize, String> {
                let tok = tok.ok_or_else(|| format!("line {}: expected two ids", i + 1))?;
                let id: usize =
                    tok.parse().map_err(|_| format!("line {}: invalid id {:?}", i + 1, tok))?;
                if id == 0 {
                    return Err(format!("line {}: ids are 1-based", i + 1));
                }
                Ok(id - 1)
            };
            let m = parse(toks.next())?;
            let w = parse(toks.next())?;
            if toks.next().is_some() {
                return Err(format!("line {}: expected two ids", i + 1));
            }
            pairs.push((m, w));
        }
        Ok(pairs)
    }
}

/// Deferred acceptance with a FIFO queue of free proposers. Returns the
/// proposer-optimal stable assignment for the given orientation.
fn oriented_gs<'a>(
    proposer_prefs: impl Fn(usize) -> &'a [usize],
    n_proposers: usize,
    n_responders: usize,
    responder_rank: impl Fn(usize, usize) -> u32,
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    let mut engaged_to: Vec<Option<usize>> = vec![None; n_proposers];
    let mut holds: Vec<Option<usize>> = vec![None; n_responders];
    let mut next: Vec<usize> = vec![0; n_proposers];
    let mut free: std::collections::VecDeque<usize> = (0..n_proposers).collect();

    while let Some(p) = free.pop_front() {
        let prefs = proposer_prefs(p);
        while next[p] < prefs.len() {
            let r = prefs[next[p]];
            next[p] += 1;
            match holds[r] {
                None => {
                    holds[r] = Some(p);
                    engaged_to[p] = Some(r);
                    break;
                }
                Some(cur) => {
                    if responder_rank(r, p) < responder_rank(r, cur) {
                        holds[r] = Some(p);
                        engaged_to[p] = Some(r);
                        engaged_to[cur] = None;
                        free.push_back(cur);
                        break;
                    }
                }
            }
        }
    }
    (engaged_to, holds)
}

/// Man-oriented Gale-Shapley: the man-optimal (woman-pessimal) stable
/// matching `M_0`.
pub fn man_oriented_gs(inst: &Instance) -> Matching {
    let (man_to_woman, woman_to_man) = oriented_gs(
        |m| inst.man_prefs(m),
        inst.n_men(),
        inst.n_women(),
        |w, m| inst.rank_of_man(w, m).expect("mutual acceptability"),
    );
    Matching { man_to_woman, woman_to_man }
}

/// Woman-oriented Gale-Shapley: the woman-optimal (man-pessimal) stable
/// matching `M_z`.
pub fn woman_oriented_gs(inst: &Instance) -> Matching {
    let (woman_to_man, man_to_woman) = oriented_gs(
        |w| inst.woman_prefs(w),
        inst.n_women(),
        inst.n_men(),
        |m, w| inst.rank_of_woman(m, w).expect("mutual acceptability"),
    );
    Matching { man_to_woman, woman_to_man }
}

/// Returns every blocking pair of `M`, sorted by man id and then by the
/// man's preference. Empty iff `M` is stable. Capacity violations cannot
/// be represented in [`Matching`]; pairs unacceptable in `inst` (a
/// matching built against a different instance) are an error, distinct
/// from instability.
pub fn is_stable(inst: &Instance, m: &Matching) -> Result<Vec<(ManId, WomanId)>, MatchingError> {
    if m.n_men() != inst.n_men() || m.n_women() != inst.n_women() {
        return Err(MatchingError::ShapeMismatch);
    }
    for (man, woman) in m.pairs() {
        if !inst.is_acceptable(man, woman) {
            return Err(MatchingError::UnacceptablePair { man, woman });
        }
    }
    let mut blocking = Vec::new();
    for man in 0..inst.n_men() {
        // Scan the strict prefix of the man's list above his partner
        // (his whole list when unmatched): exactly the women he prefers.
        for &w in inst.man_prefs(man) {
            if m.partner_of_man(man) == Some(w) {
                break;
            }
            let accepts = match m.partner_of_woman(w) {
                None => true,
                Some(cur) => inst.woman_prefers(w, man, cur),
            };
            if accepts {
                blocking.push((man, w));
            }
        }
    }
    Ok(blocking)
}

/// How a reduction renamed agents: `kept_men[new_id] = original_id`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionReport {
    pub removed_men: Vec<ManId>,
    pub removed_women: Vec<WomanId>,
    pub kept_men: Vec<ManId>,
    pub kept_women: Vec<WomanId>,
}

impl ReductionReport {
    pub fn is_identity(&self) -> bool {
        self.removed_men.is_empty() && self.removed_women.is_empty()
    }

    /// Translates a matching on the reduced instance back to the
    /// original instance's id space.
    pub fn to_original(&self, reduced: &Matching, n_men: usize, n_women: usize) -> Matching {
        let mut out = Matching::empty(n_men, n_women);
        for (m, w) in reduced.pairs() {
            out.set(self.kept_men[m], self.kept_women[w]);
        }
        out
    }
}

/// Removes every agent left unassigned by the man-oriented Gale-Shapley
/// algorithm; by the Rural Hospitals Theorem the same agents are
/// unassigned in every stable matching. An unmatched agent also caps how
/// far anyone listing them can sink: a man matched below an unmatched
/// woman on his list would be blocked by her. All pairs at or below an
/// agent's best unmatched counterpart are therefore pruned as well, which
/// keeps the stable set in exact correspondence (plain agent removal
/// would admit matchings that the removed agents block). Ranks are
/// rebuilt from the reduced lists: the reduced instance is the baseline
/// all scores refer to.
pub fn reduce_rural_hospitals(inst: &Instance) -> (Instance, ReductionReport) {
    let m0 = man_oriented_gs(inst);
    let kept_men: Vec<ManId> = (0..inst.n_men()).filter(|&m| m0.partner_of_man(m).is_some()).collect();
    let kept_women: Vec<WomanId> =
        (0..inst.n_women()).filter(|&w| m0.partner_of_woman(w).is_some()).collect();
    let report = ReductionReport {
        removed_men: (0..inst.n_men()).filter(|&m| m0.partner_of_man(m).is_none()).collect(),
        removed_women: (0..inst.n_women()).filter(|&w| m0.partner_of_woman(w).is_none()).collect(),
        kept_men,
        kept_women,
    };
    if report.is_identity() {
        return (inst.clone(), report);
    }

    // Rank of the best unmatched woman on each man's list (and dually):
    // no stable matching places the agent at or below this rank.
    let man_cut: Vec<u32> = (0..inst.n_men())
        .map(|m| {
            inst.man_prefs(m)
                .iter()
                .filter(|&&w| m0.partner_of_woman(w).is_none())
                .map(|&w| inst.rank_of_woman(m, w).unwrap())
                .min()
                .unwrap_or(u32::MAX)
        })
        .collect();
    let woman_cut: Vec<u32> = (0..inst.n_women())
        .map(|w| {
            inst.woman_prefs(w)
                .iter()
                .filter(|&&m| m0.partner_of_man(m).is_none())
                .map(|&m| inst.rank_of_man(w, m).unwrap())
                .min()
                .unwrap_or(u32::MAX)
        })
        .collect();
    let pruned = inst.retain_pairs(|m, w| {
        m0.partner_of_man(m).is_some()
            && m0.partner_of_woman(w).is_some()
            && inst.rank_of_woman(m, w).unwrap() < man_cut[m]
            && inst.rank_of_man(w, m).unwrap() < woman_cut[w]
    });

    let mut new_man_id = vec![usize::MAX; inst.n_men()];
    for (new, &old) in report.kept_men.iter().enumerate() {
        new_man_id[old] = new;
    }
    let mut new_woman_id = vec![usize::MAX; inst.n_women()];
    for (new, &old) in report.kept_women.iter().enumerate() {
        new_woman_id[old] = new;
    }
    let men_prefs: Vec<Vec<WomanId>> = report
        .kept_men
        .iter()
        .map(|&m| pruned.man_prefs(m).iter().map(|&w| new_woman_id[w]).collect())
        .collect();
    let women_prefs: Vec<Vec<ManId>> = report
        .kept_women
        .iter()
        .map(|&w| pruned.woman_prefs(w).iter().map(|&m| new_man_id[m]).collect())
        .collect();
    let reduced =
        Instance::from_prefs(men_prefs, women_prefs).expect("reduction preserves validity");
    debug_assert!(man_oriented_gs(&reduced).is_perfect());
    (reduced, report)
}
