//! Fairness measures over stable matchings and the selection rule used
//! by the experiments: best on a primary measure, ties broken by a
//! secondary one. All arithmetic is exact integer arithmetic.

use thiserror::Error;

use crate::gs::Matching;
use crate::instance::{Instance, ManId, WomanId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScoreError {
    #[error("man {0} is unmatched; reduce the instance before scoring")]
    UnmatchedMan(ManId),
    #[error("woman {0} is unmatched; reduce the instance before scoring")]
    UnmatchedWoman(WomanId),
    #[error("no matchings to select from")]
    EmptySelection,
    #[error("invalid CSV row: {0}")]
    BadCsvRow(String),
}

/// The measures a matching can be ranked by. Smaller is always better.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Measure {
    ManCost,
    WomanCost,
    Cost,
    ManDegree,
    WomanDegree,
    Degree,
    Balanced,
    SexEqual,
    RegretEquality,
    RegretSum,
}

impl Measure {
    /// The six optimality criteria compared in the experiments, in table
    /// column order: balanced, sex-equal, egalitarian, minimum regret,
    /// regret-equal, min-regret sum.
    pub const CRITERIA: [Measure; 6] = [
        Measure::Balanced,
        Measure::SexEqual,
        Measure::Cost,
        Measure::Degree,
        Measure::RegretEquality,
        Measure::RegretSum,
    ];

    pub const ALL: [Measure; 10] = [
        Measure::ManCost,
        Measure::WomanCost,
        Measure::Cost,
        Measure::ManDegree,
        Measure::WomanDegree,
        Measure::Degree,
        Measure::Balanced,
        Measure::SexEqual,
        Measure::RegretEquality,
        Measure::RegretSum,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Measure::ManCost => "man_cost",
            Measure::WomanCost => "woman_cost",
            Measure::Cost => "cost",
            Measure::ManDegree => "man_degree",
            Measure::WomanDegree => "woman_degree",
            Measure::Degree => "degree",
            Measure::Balanced => "balanced",
            Measure::SexEqual => "sex_equal",
            Measure::RegretEquality => "regret_equality",
            Measure::RegretSum => "regret_sum",
        }
    }

    pub fn parse(s: &str) -> Option<Measure> {
        Measure::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// All eight fairness measures of a matching in one record (plus the four
/// side primitives they are built from).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScoreReport {
    /// `c_U(M)`: sum of men's partner ranks.
    pub man_cost: u64,
    /// `c_W(M)`: sum of women's partner ranks.
    pub woman_cost: u64,
    /// `c(M) = c_U + c_W`.
    pub cost: u64,
    /// `d_U(M)`: worst man's rank.
    pub man_degree: u64,
    /// `d_W(M)`: worst woman's rank.
    pub woman_degree: u64,
    /// `d(M) = max(d_U, d_W)`.
    pub degree: u64,
    /// `max(c_U, c_W)`.
    pub balanced: u64,
    /// `|c_U - c_W|`.
    pub sex_equal: u64,
    /// `r(M) = |d_U - d_W|`.
    pub regret_equality: u64,
    /// `d_U + d_W`.
    pub regret_sum: u64,
}

impl ScoreReport {
    pub fn get(&self, measure: Measure) -> u64 {
        match measure {
            Measure::ManCost => self.man_cost,
            Measure::WomanCost => self.woman_cost,
            Measure::Cost => self.cost,
            Measure::ManDegree => self.man_degree,
            Measure::WomanDegree => self.woman_degree,
            Measure::Degree => self.degree,
            Measure::Balanced => self.balanced,
            Measure::SexEqual => self.sex_equal,
            Measure::RegretEquality => self.regret_equality,
            Measure::RegretSum => self.regret_sum,
        }
    }

    pub const CSV_HEADER: &'static str =
        "man_cost,woman_cost,cost,man_degree,woman_degree,degree,balanced,sex_equal,regret_equality,regret_sum";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.man_cost,
            self.woman_cost,
            self.cost,
            self.man_degree,
            self.woman_degree,
            self.degree,
            self.balanced,
            self.sex_equal,
            self.regret_equality,
            self.regret_sum
        )
    }

    pub fn parse_csv_row(row: &str) -> Result<Self, ScoreError> {
        let fields: Vec<u64> = row
            .trim()
            .split(',')
            .map(|f| f.trim().parse::<u64>().map_err(|_| ScoreError::BadCsvRow(row.to_string())))
            .collect::<Result<_, _>>()?;
        if fields.len() != 10 {
            return Err(ScoreError::BadCsvRow(row.to_string()));
        }
        Ok(ScoreReport {
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
        })
    }
}

/// Scores a matching that is perfect on its (reduced) instance. Ranks are
/// the instance's stored ranks, so derived instances score against the
/// instance they were carved from.
pub fn score(inst: &Instance, m: &Matching) -> Result<ScoreReport, ScoreError> {
    let mut man_cost = 0u64;
    let mut man_degree = 0u64;
    for man in 0..inst.n_men() {
        let w = m.partner_of_man(man).ok_or(ScoreError::UnmatchedMan(man))?;
        let rank = inst.rank_of_woman(man, w).expect("matched pair must be acceptable") as u64;
        man_cost += rank;
        man_degree = man_degree.max(rank);
    }
    let mut woman_cost = 0u64;
    let mut woman_degree = 0u64;
    for woman in 0..inst.n_women() {
        let man = m.partner_of_woman(woman).ok_or(ScoreError::UnmatchedWoman(woman))?;
        let rank = inst.rank_of_man(woman, man).expect("matched pair must be acceptable") as u64;
        woman_cost += rank;
        woman_degree = woman_degree.max(rank);
    }
    Ok(ScoreReport {
        man_cost,
        woman_cost,
        cost: man_cost + woman_cost,
        man_degree,
        woman_degree,
        degree: man_degree.max(woman_degree),
        balanced: man_cost.max(woman_cost),
        sex_equal: man_cost.abs_diff(woman_cost),
        regret_equality: man_degree.abs_diff(woman_degree),
        regret_sum: man_degree + woman_degree,
    })
}

/// Streaming "best on `primary`, ties broken by `secondary`" accumulator.
/// The first matching achieving the best (primary, secondary) pair wins.
pub struct BestBy {
    primary: Measure,
    secondary: Measure,
    best: Option<(Matching, ScoreReport)>,
}

impl BestBy {
    pub fn new(primary: Measure, secondary: Measure) -> Self {
        Self { primary, secondary, best: None }
    }

    pub fn offer(&mut self, m: &Matching, report: ScoreReport) {
        let key = (report.get(self.primary), report.get(self.secondary));
        let better = match &self.best {
            None => true,
            Some((_, cur)) => key < (cur.get(self.primary), cur.get(self.secondary)),
        };
        if better {
            self.best = Some((m.clone(), report));
        }
    }

    pub fn into_best(self) -> Option<(Matching, ScoreReport)> {
        self.best
    }
}

/// Picks a matching minimizing `primary`, among those a matching with
/// minimal `secondary`; deterministic for a fixed stream order.
pub fn select_best<I>(
    inst: &Instance,
    matchings: I,
    primary: Measure,
    secondary: Measure,
) -> Result<(Matching, ScoreReport), ScoreError>
where
    I: IntoIterator<Item = Matching>,
{
    let mut best = BestBy::new(primary, secondary);
    for m in matchings {
        let report = score(inst, &m)?;
        best.offer(&m, report);
    }
    best.into_best().ok_or(ScoreError::EmptySelection)
}

/// Number of the six optimality criteria (in [`Measure::CRITERIA`] order)
/// at which `report` attains the given per-criterion optima.
pub fn count_criteria_satisfied(report: &ScoreReport, optima: &[u64; 6]) -> usize {
    Measure::CRITERIA
        .iter()
        .zip(optima)
        .filter(|(measure, &opt)| {
            let v = report.get(**measure);
            debug_assert!(v >= opt);
            v == opt
        })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gs::{man_oriented_gs, woman_oriented_gs, Matching};
    use crate::instance::{generate_random, parse_instance, Instance};
    use crate::rotations::stable_matchings;

    fn mutual_first_choice(n: usize) -> Instance {
        let prefs: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut p: Vec<usize> = (0..n).collect();
                p.rotate_left(i);
                p
            })
            .collect();
        Instance::from_prefs(prefs.clone(), prefs).unwrap()
    }

    #[test]
    fn two_by_two_hand_scores() {
        let inst = parse_instance("2\n2\n1 2\n1 2\n2 1\n1 2").unwrap();
        let m = Matching::from_pairs(&inst, &[(0, 1), (1, 0)]).unwrap();
        let r = score(&inst, &m).unwrap();
        assert_eq!(r.man_cost, 3);
        assert_eq!(r.woman_cost, 2);
        assert_eq!(r.cost, 5);
        assert_eq!(r.man_degree, 2);
        assert_eq!(r.woman_degree, 1);
        assert_eq!(r.degree, 2);
        assert_eq!(r.balanced, 3);
        assert_eq!(r.sex_equal, 1);
        assert_eq!(r.regret_equality, 1);
        assert_eq!(r.regret_sum, 3);
    }

    #[test]
    fn identity_matching_scores() {
        let n = 5;
        let inst = mutual_first_choice(n);
        let m = man_oriented_gs(&inst);
        let r = score(&inst, &m).unwrap();
        assert_eq!(r.man_cost, n as u64);
        assert_eq!(r.woman_cost, n as u64);
        assert_eq!(r.man_degree, 1);
        assert_eq!(r.sex_equal, 0);
        assert_eq!(r.regret_equality, 0);
    }

    #[test]
    fn unmatched_agent_is_an_error() {
        let inst = parse_instance("1\n1\n1\n1").unwrap();
        let empty = Matching::empty(1, 1);
        assert_eq!(score(&inst, &empty), Err(ScoreError::UnmatchedMan(0)));
    }

    #[test]
    fn optimality_directions_on_corpus() {
        for seed in 0..30 {
            let inst = generate_random(10, seed);
            let r0 = score(&inst, &man_oriented_gs(&inst)).unwrap();
            let rz = score(&inst, &woman_oriented_gs(&inst)).unwrap();
            assert!(r0.man_cost <= rz.man_cost);
            assert!(r0.woman_cost >= rz.woman_cost);
        }
    }

    #[test]
    fn arithmetic_identities() {
        for seed in 0..20 {
            let inst = generate_random(9, seed);
            for m in stable_matchings(&inst) {
                let r = score(&inst, &m).unwrap();
                assert_eq!(r.cost, r.man_cost + r.woman_cost);
                assert_eq!(r.degree, r.man_degree.max(r.woman_degree));
                assert_eq!(r.balanced, r.man_cost.max(r.woman_cost));
                assert!(r.regret_equality <= r.regret_sum);
                assert_eq!(r.regret_equality % 2, r.regret_sum % 2);
                assert!(2 * r.balanced >= r.cost);
                assert_eq!(r.sex_equal + 2 * r.man_cost.min(r.woman_cost), r.cost);
            }
        }
    }

    #[test]
    fn select_best_matches_two_pass_filter() {
        for seed in 0..25 {
            let inst = generate_random(8, seed);
            let all = stable_matchings(&inst);
            let (m, r) = select_best(
                &inst,
                all.iter().cloned(),
                Measure::SexEqual,
                Measure::RegretEquality,
            )
            .unwrap();
            // Brute-force two-pass oracle.
            let scores: Vec<ScoreReport> =
                all.iter().map(|m| score(&inst, m).unwrap()).collect();
            let best_primary = scores.iter().map(|s| s.sex_equal).min().unwrap();
            let best_secondary = scores
                .iter()
                .filter(|s| s.sex_equal == best_primary)
                .map(|s| s.regret_equality)
                .min()
                .unwrap();
            assert_eq!(r.sex_equal, best_primary);
            assert_eq!(r.regret_equality, best_secondary);
            // First winner kept on exact ties.
            let first = all
                .iter()
                .position(|m2| {
                    let s = score(&inst, m2).unwrap();
                    s.sex_equal == best_primary && s.regret_equality == best_secondary
                })
                .unwrap();
            assert_eq!(&m, &all[first]);
        }
    }

    #[test]
    fn select_best_degenerate_cases() {
        let inst = parse_instance("1\n1\n1\n1").unwrap();
        let only = man_oriented_gs(&inst);
        let (m, _) =
            select_best(&inst, [only.clone()], Measure::Cost, Measure::Cost).unwrap();
        assert_eq!(m, only);
        assert_eq!(
            select_best(&inst, std::iter::empty(), Measure::Cost, Measure::Cost),
            Err(ScoreError::EmptySelection)
        );
    }

    #[test]
    fn criteria_count_on_unique_matching() {
        let inst = parse_instance("2\n2\n1 2\n1 2\n2 1\n1 2").unwrap();
        let all = stable_matchings(&inst);
        assert_eq!(all.len(), 1);
        let r = score(&inst, &all[0]).unwrap();
        let optima: [u64; 6] =
            std::array::from_fn(|i| r.get(Measure::CRITERIA[i]));
        assert_eq!(count_criteria_satisfied(&r, &optima), 6);
    }

    #[test]
    fn csv_round_trip() {
        let inst = generate_random(7, 4);
        let r = score(&inst, &man_oriented_gs(&inst)).unwrap();
        let row = r.to_csv_row();
        assert_eq!(ScoreReport::parse_csv_row(&row).unwrap(), r);
        assert!(ScoreReport::parse_csv_row("1,2,3").is_err());
    }
}
