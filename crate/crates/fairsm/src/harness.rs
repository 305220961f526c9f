//! Experiment harness: generates instance batches, runs the regret-equal
//! solver against an enumeration fold over all six optimality criteria,
//! aggregates statistics, and emits one CSV table per comparison measure
//! plus instance information and optima-frequency tables.

use std::ops::ControlFlow;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fairness::{score, Measure, ScoreReport};
use crate::gs::reduce_rural_hospitals;
use crate::instance::generate_random;
use crate::rotations::RotationPoset;
use crate::solvers::redi;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("cannot summarize an empty sample")]
    EmptySample,
    #[error("experiment config invalid: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Instance sizes to test.
    pub sizes: Vec<usize>,
    /// Instances per size.
    pub instances_per_size: usize,
    /// Instance i of every size uses seed `base_seed + i`.
    pub base_seed: u64,
    /// Per instance-algorithm timeout.
    pub timeout_secs: f64,
    /// Worker threads; 0 picks the rayon default.
    pub parallelism: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sizes: vec![10, 20, 30],
            instances_per_size: 500,
            base_seed: 1,
            timeout_secs: 60.0,
            parallelism: 0,
        }
    }
}

impl ExperimentConfig {
    fn validate(&self) -> Result<(), HarnessError> {
        if self.sizes.is_empty() {
            return Err(HarnessError::BadConfig("sizes must be non-empty".into()));
        }
        if self.sizes.contains(&0) {
            return Err(HarnessError::BadConfig("sizes must be positive".into()));
        }
        if self.instances_per_size == 0 {
            return Err(HarnessError::BadConfig("instances_per_size must be >= 1".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// Mean, median and nearest-rank percentiles of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsSummary {
    pub mean: f64,
    pub median: f64,
    pub p5: f64,
    pub p95: f64,
    pub count: usize,
}

/// Nearest-rank percentile: the `ceil(p * N)`-th order statistic. The
/// median is the usual midpoint rule (average of the two middle values
/// for even N).
pub fn summarize(values: &[f64]) -> Result<StatsSummary, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::EmptySample);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("no NaN samples"));
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let nearest_rank = |p_num: usize| {
        // index of the ceil(p*N)-th order statistic, p = p_num / 100
        let rank = (p_num * n).div_ceil(100).max(1);
        sorted[rank - 1]
    };
    Ok(StatsSummary { mean, median, p5: nearest_rank(5), p95: nearest_rank(95), count: n })
}

/// Everything measured on one (size, instance-index) cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub n: usize,
    pub index: usize,
    pub seed: u64,
    pub redi_ms: f64,
    pub enum_ms: f64,
    pub redi_timed_out: bool,
    pub enum_timed_out: bool,
    pub redi_score: ScoreReport,
    pub stable_count: u64,
    pub rotation_count: u64,
    /// `best_by[a][b]`: best value of criterion-measure `b` among the
    /// matchings optimal on criterion `a` (indices in
    /// [`Measure::CRITERIA`] order). Diagonal entries are the optima.
    pub best_by: [[u64; 6]; 6],
    /// Stable matchings attaining each criterion's optimum.
    pub optima_counts: [u64; 6],
    /// Histogram over stable matchings of how many of the six criteria
    /// each one attains.
    pub criteria_histogram: [u64; 7],
}

/// Aggregates for one instance size.
#[derive(Debug, Clone)]
pub struct SizeSummary {
    pub n: usize,
    /// Cells that completed within the timeout.
    pub completed: usize,
    pub redi_ms: StatsSummary,
    pub enum_ms: StatsSummary,
    pub mean_stable_matchings: f64,
    pub mean_rotations: f64,
    /// `mean_best_by[a][b]`: mean over instances of `best_by[a][b]`.
    pub mean_best_by: [[f64; 6]; 6],
    /// Mean value of each criterion measure on the redi output.
    pub mean_redi: [f64; 6],
    pub mean_optima_counts: [f64; 6],
    pub mean_criteria_histogram: [f64; 7],
}

#[derive(Debug)]
pub struct ExperimentResults {
    pub config: ExperimentConfig,
    pub cells: Vec<CellResult>,
    pub per_size: Vec<SizeSummary>,
}

fn run_cell(n: usize, index: usize, base_seed: u64, timeout: Duration) -> CellResult {
    let seed = base_seed.wrapping_add(index as u64);
    let inst = generate_random(n, seed);

    let redi_start = Instant::now();
    let redi_matching = redi(&inst);
    let redi_ms = redi_start.elapsed().as_secs_f64() * 1e3;
    let redi_timed_out = redi_start.elapsed() > timeout;
    let redi_score = score(&inst, &redi_matching).expect("complete instance");

    // Enumeration fold: every stable matching is scored once; each
    // criterion keeps its optimum and per-measure tie-broken values.
    let enum_start = Instant::now();
    let deadline = enum_start + timeout;
    let (reduced, _) = reduce_rural_hospitals(&inst);
    let poset = RotationPoset::build(&reduced);
    let mut scores: Vec<ScoreReport> = Vec::new();
    let mut trackers = [[(u64::MAX, u64::MAX); 6]; 6];
    let mut enum_timed_out = false;
    let _ = poset.for_each_stable_matching(&mut |m| {
        let sc = score(&reduced, m).expect("perfect on reduced");
        for (a, crit) in Measure::CRITERIA.iter().enumerate() {
            let av = sc.get(*crit);
            for (b, meas) in Measure::CRITERIA.iter().enumerate() {
                let key = (av, sc.get(*meas));
                if key < trackers[a][b] {
                    trackers[a][b] = key;
                }
            }
        }
        scores.push(sc);
        if scores.len().is_multiple_of(64) && Instant::now() > deadline {
            enum_timed_out = true;
            return ControlFlow::Break(());
        }
        ControlFlow::Continue(())
    });
    let enum_ms = enum_start.elapsed().as_secs_f64() * 1e3;

    let best_by: [[u64; 6]; 6] =
        std::array::from_fn(|a| std::array::from_fn(|b| trackers[a][b].1));
    let optima: [u64; 6] = std::array::from_fn(|a| best_by[a][a]);

    let mut optima_counts = [0u64; 6];
    let mut criteria_histogram = [0u64; 7];
    for sc in &scores {
        let mut satisfied = 0;
        for (a, crit) in Measure::CRITERIA.iter().enumerate() {
            if sc.get(*crit) == optima[a] {
                optima_counts[a] += 1;
                satisfied += 1;
            }
        }
        criteria_histogram[satisfied] += 1;
    }

    if !enum_timed_out {
        // Per-instance agreement between the two regret-equality routes
        // is a hard invariant of the harness.
        assert_eq!(
            redi_score.regret_equality,
            optima[4],
            "redi disagrees with the enumeration optimum on seed {seed} (n = {n})"
        );
    }

    CellResult {
        n,
        index,
        seed,
        redi_ms,
        enum_ms,
        redi_timed_out,
        enum_timed_out,
        redi_score,
        stable_count: scores.len() as u64,
        rotation_count: poset.len() as u64,
        best_by,
        optima_counts,
        criteria_histogram,
    }
}

fn summarize_size(n: usize, cells: &[&CellResult]) -> SizeSummary {
    let done: Vec<&&CellResult> =
        cells.iter().filter(|c| !c.enum_timed_out && !c.redi_timed_out).collect();
    let completed = done.len();
    let collect = |f: &dyn Fn(&CellResult) -> f64| -> Vec<f64> {
        done.iter().map(|c| f(c)).collect()
    };
    let mean = |values: &[f64]| -> f64 {
        if values.is_empty() {
            f64::NAN
        } else {
            values.iter().sum::<f64>() / values.len() as f64
        }
    };
    let fallback =
        StatsSummary { mean: f64::NAN, median: f64::NAN, p5: f64::NAN, p95: f64::NAN, count: 0 };
    let redi_times: Vec<f64> =
        cells.iter().filter(|c| !c.redi_timed_out).map(|c| c.redi_ms).collect();
    let enum_times: Vec<f64> =
        cells.iter().filter(|c| !c.enum_timed_out).map(|c| c.enum_ms).collect();

    let mean_best_by: [[f64; 6]; 6] = std::array::from_fn(|a| {
        std::array::from_fn(|b| mean(&collect(&|c| c.best_by[a][b] as f64)))
    });
    let mean_redi: [f64; 6] =
        std::array::from_fn(|a| mean(&collect(&|c| c.redi_score.get(Measure::CRITERIA[a]) as f64)));
    SizeSummary {
        n,
        completed,
        redi_ms: summarize(&redi_times).unwrap_or(fallback),
        enum_ms: summarize(&enum_times).unwrap_or(fallback),
        mean_stable_matchings: mean(&collect(&|c| c.stable_count as f64)),
        mean_rotations: mean(&collect(&|c| c.rotation_count as f64)),
        mean_best_by,
        mean_redi,
        mean_optima_counts: std::array::from_fn(|a| {
            mean(&collect(&|c| c.optima_counts[a] as f64))
        }),
        mean_criteria_histogram: std::array::from_fn(|c_| {
            mean(&collect(&|c| c.criteria_histogram[c_] as f64))
        }),
    }
}

/// Runs the full experiment grid. Cells are independent and executed in
/// parallel; every cell is seeded as `base_seed + index`, so all
/// non-timing outputs are deterministic for a fixed config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResults, HarnessError> {
    use rayon::prelude::*;

    config.validate()?;
    let timeout = config.timeout();
    let grid: Vec<(usize, usize)> = config
        .sizes
        .iter()
        .flat_map(|&n| (0..config.instances_per_size).map(move |i| (n, i)))
        .collect();

    let work = || -> Vec<CellResult> {
        grid.par_iter().map(|&(n, i)| run_cell(n, i, config.base_seed, timeout)).collect()
    };
    let cells = if config.parallelism == 0 {
        work()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.parallelism)
            .build()
            .map_err(|e| HarnessError::BadConfig(e.to_string()))?
            .install(work)
    };

    let per_size = config
        .sizes
        .iter()
        .map(|&n| {
            let of_size: Vec<&CellResult> = cells.iter().filter(|c| c.n == n).collect();
            summarize_size(n, &of_size)
        })
        .collect();

    Ok(ExperimentResults { config: config.clone(), cells, per_size })
}

/// Per-instance optima frequencies: how many stable matchings attain each
/// criterion's optimum, and the histogram of criteria counts.
pub fn optimal_frequency_report(
    inst: &crate::instance::Instance,
) -> ([u64; 6], [u64; 7]) {
    let (reduced, _) = reduce_rural_hospitals(inst);
    let poset = RotationPoset::build(&reduced);
    let mut scores = Vec::new();
    let _ = poset.for_each_stable_matching(&mut |m| {
        scores.push(score(&reduced, m).expect("perfect on reduced"));
        ControlFlow::Continue(())
    });
    let optima: [u64; 6] = std::array::from_fn(|a| {
        scores.iter().map(|s| s.get(Measure::CRITERIA[a])).min().expect("non-empty stable set")
    });
    let mut counts = [0u64; 6];
    let mut histogram = [0u64; 7];
    for sc in &scores {
        let satisfied = crate::fairness::count_criteria_satisfied(sc, &optima);
        for (a, crit) in Measure::CRITERIA.iter().enumerate() {
            if sc.get(*crit) == optima[a] {
                counts[a] += 1;
            }
        }
        histogram[satisfied] += 1;
    }
    (counts, histogram)
}

const OPTIMA_COLUMNS: &str = "balanced,sex_equal,egalitarian,min_regret,regret_equal,min_regret_sum";

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::from("")
    } else {
        format!("{:.4}", v)
    }
}

/// Writes the per-table CSV files and a JSON run manifest into `dir`.
///
/// Files: `duration.csv`, one `<measure>.csv` per criterion measure
/// (columns: the six optima with that measure as tie-break, plus the redi
/// output), `instance_info.csv`, `optima_frequency.csv`, `manifest.json`.
pub fn write_tables(results: &ExperimentResults, dir: &Path) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;

    let mut duration = String::from(
        "case,n,count,redi_mean_ms,redi_median_ms,redi_p5_ms,redi_p95_ms,\
         enum_mean_ms,enum_median_ms,enum_p5_ms,enum_p95_ms\n",
    );
    for s in &results.per_size {
        duration.push_str(&format!(
            "S{},{},{},{},{},{},{},{},{},{},{}\n",
            s.n,
            s.n,
            s.completed,
            fmt(s.redi_ms.mean),
            fmt(s.redi_ms.median),
            fmt(s.redi_ms.p5),
            fmt(s.redi_ms.p95),
            fmt(s.enum_ms.mean),
            fmt(s.enum_ms.median),
            fmt(s.enum_ms.p5),
            fmt(s.enum_ms.p95),
        ));
    }
    std::fs::write(dir.join("duration.csv"), duration)?;

    for (b, measure) in Measure::CRITERIA.iter().enumerate() {
        let mut table = format!("case,n,count,{},redi\n", OPTIMA_COLUMNS);
        for s in &results.per_size {
            let cols: Vec<String> = (0..6).map(|a| fmt(s.mean_best_by[a][b])).collect();
            table.push_str(&format!(
                "S{},{},{},{},{}\n",
                s.n,
                s.n,
                s.completed,
                cols.join(","),
                fmt(s.mean_redi[b])
            ));
        }
        std::fs::write(dir.join(format!("{}.csv", measure.name())), table)?;
    }

    let mut info = String::from("case,n,count,mean_stable_matchings,mean_rotations\n");
    for s in &results.per_size {
        info.push_str(&format!(
            "S{},{},{},{},{}\n",
            s.n,
            s.n,
            s.completed,
            fmt(s.mean_stable_matchings),
            fmt(s.mean_rotations)
        ));
    }
    std::fs::write(dir.join("instance_info.csv"), info)?;

    let mut freq = format!(
        "case,n,count,{},{}\n",
        OPTIMA_COLUMNS
            .split(',')
            .map(|c| format!("opt_{}", c))
            .collect::<Vec<_>>()
            .join(","),
        (0..=6).map(|c| format!("crit_{}", c)).collect::<Vec<_>>().join(",")
    );
    for s in &results.per_size {
        let counts: Vec<String> = s.mean_optima_counts.iter().map(|&v| fmt(v)).collect();
        let hist: Vec<String> = s.mean_criteria_histogram.iter().map(|&v| fmt(v)).collect();
        freq.push_str(&format!(
            "S{},{},{},{},{}\n",
            s.n,
            s.n,
            s.completed,
            counts.join(","),
            hist.join(",")
        ));
    }
    std::fs::write(dir.join("optima_frequency.csv"), freq)?;

    let manifest = serde_json::json!({
        "config": results.config,
        "seeds": {
            "base": results.config.base_seed,
            "per_instance": "base_seed + instance_index, identical across sizes",
        },
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap())?;
    Ok(())
}
