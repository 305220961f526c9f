//! SMI instance model: construction, text format, random generation, and
//! the preference-list surgery (truncation, pair deletion) the solvers
//! build on.
//!
//! Agents are identified by 0-based indices internally; the text format
//! uses 1-based ids. Ranks are 1-based positions on preference lists and
//! are fixed at construction time: [`Instance::truncate_men`],
//! [`Instance::truncate_women`] and [`Instance::delete_pair`] keep the
//! ranks of surviving pairs unchanged, so costs and degrees computed on a
//! derived instance always refer to the instance it was carved from.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub type ManId = usize;
pub type WomanId = usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected a non-negative integer, found {found:?}")]
    BadHeader { line: usize, found: String },
    #[error("line {line}: invalid id {found:?}")]
    BadId { line: usize, found: String },
    #[error("line {line}: id {id} out of range 1..={max}")]
    IdOutOfRange { line: usize, id: u64, max: usize },
    #[error("line {line}: duplicate entry {id}")]
    DuplicateEntry { line: usize, id: usize },
    #[error("unexpected end of input: expected {expected} lines, found {found}")]
    MissingLines { expected: usize, found: usize },
    #[error("line {line}: unexpected trailing content")]
    TrailingContent { line: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("man {man}: preference entry {woman} out of range")]
    WomanOutOfRange { man: ManId, woman: WomanId },
    #[error("woman {woman}: preference entry {man} out of range")]
    ManOutOfRange { woman: WomanId, man: ManId },
    #[error("man {man}: duplicate preference entry {woman}")]
    DuplicateWoman { man: ManId, woman: WomanId },
    #[error("woman {woman}: duplicate preference entry {man}")]
    DuplicateMan { woman: WomanId, man: ManId },
    #[error("pair ({man}, {woman}) is not an acceptable pair of this instance")]
    MissingPair { man: ManId, woman: WomanId },
    #[error("agent with an empty preference list cannot be written in the text format")]
    EmptyListUnwritable,
}

/// A two-sided preference structure with O(1) rank lookup.
///
/// Immutable after construction; all surgery operations return new
/// instances. Mutual acceptability holds by construction: a pair appears
/// on one side iff it appears on the other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    men_prefs: Vec<Vec<WomanId>>,
    women_prefs: Vec<Vec<ManId>>,
    /// `rank_of_woman[m][w]` is the 1-based rank of `w` on `m`'s list,
    /// 0 when the pair is unacceptable.
    rank_of_woman: Vec<Vec<u32>>,
    rank_of_man: Vec<Vec<u32>>,
    total_pref_length: usize,
}

impl Instance {
    /// Builds a normalized instance from raw preference lists.
    ///
    /// Entries out of range or duplicated within a list are errors.
    /// One-sided entries (a woman listing a man who does not list her
    /// back, or vice versa) are silently dropped from both sides. Ranks
    /// are assigned from the positions in the normalized lists.
    pub fn from_prefs(
        men_prefs: Vec<Vec<WomanId>>,
        women_prefs: Vec<Vec<ManId>>,
    ) -> Result<Self, InstanceError> {
        let n_men = men_prefs.len();
        let n_women = women_prefs.len();

        let mut listed_by_man = vec![vec![false; n_women]; n_men];
        for (m, prefs) in men_prefs.iter().enumerate() {
            for &w in prefs {
                if w >= n_women {
                    return Err(InstanceError::WomanOutOfRange { man: m, woman: w });
                }
                if listed_by_man[m][w] {
                    return Err(InstanceError::DuplicateWoman { man: m, woman: w });
                }
                listed_by_man[m][w] = true;
            }
        }
        let mut listed_by_woman = vec![vec![false; n_men]; n_women];
        for (w, prefs) in women_prefs.iter().enumerate() {
            for &m in prefs {
                if m >= n_men {
                    return Err(InstanceError::ManOutOfRange { woman: w, man: m });
                }
                if listed_by_woman[w][m] {
                    return Err(InstanceError::DuplicateMan { woman: w, man: m });
                }
                listed_by_woman[w][m] = true;
            }
        }

        // Normalization: keep a pair only when both sides list it.
        let men_prefs: Vec<Vec<WomanId>> = men_prefs
            .into_iter()
            .enumerate()
            .map(|(m, prefs)| prefs.into_iter().filter(|&w| listed_by_woman[w][m]).collect())
            .collect();
        let women_prefs: Vec<Vec<ManId>> = women_prefs
            .into_iter()
            .enumerate()
            .map(|(w, prefs)| prefs.into_iter().filter(|&m| listed_by_man[m][w]).collect())
            .collect();

        Ok(Self::from_normalized(men_prefs, women_prefs))
    }

    /// Lists must already be mutually acceptable and duplicate-free.
    fn from_normalized(men_prefs: Vec<Vec<WomanId>>, women_prefs: Vec<Vec<ManId>>) -> Self {
        let n_men = men_prefs.len();
        let n_women = women_prefs.len();
        let mut rank_of_woman = vec![vec![0u32; n_women]; n_men];
        for (m, prefs) in men_prefs.iter().enumerate() {
            for (pos, &w) in prefs.iter().enumerate() {
                rank_of_woman[m][w] = pos as u32 + 1;
            }
        }
        let mut rank_of_man = vec![vec![0u32; n_men]; n_women];
        for (w, prefs) in women_prefs.iter().enumerate() {
            for (pos, &m) in prefs.iter().enumerate() {
                rank_of_man[w][m] = pos as u32 + 1;
            }
        }
        let total_pref_length = men_prefs.iter().map(Vec::len).sum::<usize>()
            + women_prefs.iter().map(Vec::len).sum::<usize>();
        Self { men_prefs, women_prefs, rank_of_woman, rank_of_man, total_pref_length }
    }

    pub fn n_men(&self) -> usize {
        self.men_prefs.len()
    }

    pub fn n_women(&self) -> usize {
        self.women_prefs.len()
    }

    /// Total length of all preference lists (the `m` in complexity bounds).
    pub fn total_pref_length(&self) -> usize {
        self.total_pref_length
    }

    pub fn man_prefs(&self, m: ManId) -> &[WomanId] {
        &self.men_prefs[m]
    }

    pub fn woman_prefs(&self, w: WomanId) -> &[ManId] {
        &self.women_prefs[w]
    }

    /// 1-based rank of `w` on `m`'s list; `None` if the pair is unacceptable.
    pub fn rank_of_woman(&self, m: ManId, w: WomanId) -> Option<u32> {
        match self.rank_of_woman[m][w] {
            0 => None,
            r => Some(r),
        }
    }

    /// 1-based rank of `m` on `w`'s list; `None` if the pair is unacceptable.
    pub fn rank_of_man(&self, w: WomanId, m: ManId) -> Option<u32> {
        match self.rank_of_man[w][m] {
            0 => None,
            r => Some(r),
        }
    }

    pub fn is_acceptable(&self, m: ManId, w: WomanId) -> bool {
        self.rank_of_woman[m][w] != 0
    }

    /// Does `m` strictly prefer `w1` to `w2`? Both pairs must be acceptable.
    pub fn man_prefers(&self, m: ManId, w1: WomanId, w2: WomanId) -> bool {
        let r1 = self.rank_of_woman[m][w1];
        let r2 = self.rank_of_woman[m][w2];
        debug_assert!(r1 != 0 && r2 != 0);
        r1 < r2
    }

    /// Does `w` strictly prefer `m1` to `m2`? Both pairs must be acceptable.
    pub fn woman_prefers(&self, w: WomanId, m1: ManId, m2: ManId) -> bool {
        let r1 = self.rank_of_man[w][m1];
        let r2 = self.rank_of_man[w][m2];
        debug_assert!(r1 != 0 && r2 != 0);
        r1 < r2
    }

    /// Position of `w` in `m`'s current list. Lists stay sorted by rank
    /// after surgery, so a binary search on the stored rank suffices.
    pub fn index_in_man_list(&self, m: ManId, w: WomanId) -> Option<usize> {
        let rank = self.rank_of_woman[m][w];
        if rank == 0 {
            return None;
        }
        self.men_prefs[m].binary_search_by_key(&rank, |&x| self.rank_of_woman[m][x]).ok()
    }

    pub fn index_in_woman_list(&self, w: WomanId, m: ManId) -> Option<usize> {
        let rank = self.rank_of_man[w][m];
        if rank == 0 {
            return None;
        }
        self.women_prefs[w].binary_search_by_key(&rank, |&x| self.rank_of_man[w][x]).ok()
    }

    /// Keeps exactly the acceptable pairs satisfying `keep`; surviving
    /// pairs retain their ranks and relative order.
    pub(crate) fn retain_pairs(&self, keep: impl Fn(ManId, WomanId) -> bool) -> Instance {
        let mut rank_of_woman = self.rank_of_woman.clone();
        let mut rank_of_man = self.rank_of_man.clone();
        let mut dropped = 0usize;
        let men_prefs: Vec<Vec<WomanId>> = self
            .men_prefs
            .iter()
            .enumerate()
            .map(|(m, prefs)| {
                prefs
                    .iter()
                    .copied()
                    .filter(|&w| {
                        let k = keep(m, w);
                        if !k {
                            rank_of_woman[m][w] = 0;
                            rank_of_man[w][m] = 0;
                            dropped += 1;
                        }
                        k
                    })
                    .collect()
            })
            .collect();
        let women_prefs: Vec<Vec<ManId>> = self
            .women_prefs
            .iter()
            .enumerate()
            .map(|(w, prefs)| prefs.iter().copied().filter(|&m| keep(m, w)).collect())
            .collect();
        let total_pref_length = self.total_pref_length - 2 * dropped;
        Instance { men_prefs, women_prefs, rank_of_woman, rank_of_man, total_pref_length }
    }

    /// Deletes every pair `(m, w)` whose rank on the man's list exceeds
    /// `a`. Ranks of surviving pairs are unchanged.
    pub fn truncate_men(&self, a: u32) -> Instance {
        self.retain_pairs(|m, w| self.rank_of_woman[m][w] <= a)
    }

    /// Deletes every pair `(m, w)` whose rank on the woman's list exceeds
    /// `b`. Ranks of surviving pairs are unchanged.
    pub fn truncate_women(&self, b: u32) -> Instance {
        self.retain_pairs(|m, w| self.rank_of_man[w][m] <= b)
    }

    /// Removes `(m, w)` from both preference lists.
    pub fn delete_pair(&self, m: ManId, w: WomanId) -> Result<Instance, InstanceError> {
        if !self.is_acceptable(m, w) {
            return Err(InstanceError::MissingPair { man: m, woman: w });
        }
        Ok(self.retain_pairs(|m2, w2| (m2, w2) != (m, w)))
    }

    /// Serializes to the text format. Instances containing an empty
    /// preference list cannot be represented (blank lines are ignored by
    /// the parser) and yield an error.
    pub fn to_text(&self) -> Result<String, InstanceError> {
        if self.men_prefs.iter().any(Vec::is_empty) || self.women_prefs.iter().any(Vec::is_empty) {
            return Err(InstanceError::EmptyListUnwritable);
        }
        let mut out = String::new();
        out.push_str(&format!("{}\n{}\n", self.n_men(), self.n_women()));
        for prefs in &self.men_prefs {
            let line: Vec<String> = prefs.iter().map(|&w| (w + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        for prefs in &self.women_prefs {
            let line: Vec<String> = prefs.iter().map(|&m| (m + 1).to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        Ok(out)
    }
}

/// Parses the instance text format.
///
/// Line 1 is the number of men, line 2 the number of women, followed by
/// one preference line per man (1-based woman ids, most-preferred first)
/// and then one per woman. Anything from `#` to end of line is a comment;
/// blank lines are ignored. One-sided entries are dropped as in
/// [`Instance::from_prefs`].
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    // (line number, content) for every line that survives comment/blank stripping.
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| (i + 1, raw.split('#').next().unwrap_or("").trim()))
        .filter(|(_, s)| !s.is_empty())
        .collect();

    let parse_count = |ln: usize, s: &str| -> Result<usize, ParseError> {
        s.parse::<usize>().map_err(|_| ParseError::BadHeader { line: ln, found: s.to_string() })
    };

    let mut it = lines.iter();
    let (ln1, s1) = it.next().ok_or(ParseError::MissingLines { expected: 2, found: 0 })?;
    let n_men = parse_count(*ln1, s1)?;
    let (ln2, s2) = it.next().ok_or(ParseError::MissingLines { expected: 2, found: 1 })?;
    let n_women = parse_count(*ln2, s2)?;

    let expected = 2 + n_men + n_women;
    if lines.len() < expected {
        return Err(ParseError::MissingLines { expected, found: lines.len() });
    }
    if lines.len() > expected {
        return Err(ParseError::TrailingContent { line: lines[expected].0 });
    }

    let parse_list = |ln: usize, s: &str, max: usize| -> Result<Vec<usize>, ParseError> {
        let mut seen = vec![false; max];
        let mut out = Vec::new();
        for tok in s.split_whitespace() {
            let id: u64 =
                tok.parse().map_err(|_| ParseError::BadId { line: ln, found: tok.to_string() })?;
            if id < 1 || id > max as u64 {
                return Err(ParseError::IdOutOfRange { line: ln, id, max });
            }
            let id = (id - 1) as usize;
            if seen[id] {
                return Err(ParseError::DuplicateEntry { line: ln, id: id + 1 });
            }
            seen[id] = true;
            out.push(id);
        }
        Ok(out)
    };

    let mut men_prefs = Vec::with_capacity(n_men);
    for _ in 0..n_men {
        let (ln, s) = it.next().unwrap();
        men_prefs.push(parse_list(*ln, s, n_women)?);
    }
    let mut women_prefs = Vec::with_capacity(n_women);
    for _ in 0..n_women {
        let (ln, s) = it.next().unwrap();
        women_prefs.push(parse_list(*ln, s, n_men)?);
    }

    // Range and duplicates were validated per line above.
    Ok(Instance::from_prefs(men_prefs, women_prefs).expect("lists validated during parse"))
}

/// Classic Fisher-Yates shuffle. Indices are drawn as `u32` so the
/// consumed random stream, and hence the result, is identical across
/// platforms.
fn fisher_yates<T>(items: &mut [T], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i as u32) as usize;
        items.swap(i, j);
    }
}

/// Generates a complete instance with `n` men and `n` women where every
/// preference list is an independent uniform random permutation.
/// Deterministic for a fixed seed (ChaCha8 + Fisher-Yates).
pub fn generate_random(n: usize, seed: u64) -> Instance {
    assert!(n >= 1, "instance size must be at least 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut side = |count: usize| -> Vec<Vec<usize>> {
        (0..count)
            .map(|_| {
                let mut prefs: Vec<usize> = (0..n).collect();
                fisher_yates(&mut prefs, &mut rng);
                prefs
            })
            .collect()
    };
    let men_prefs = side(n);
    let women_prefs = side(n);
    Instance::from_normalized(men_prefs, women_prefs)
}
