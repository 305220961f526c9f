//! Command-line entry point: instance generation, solving, enumeration,
//! poset dumps, experiments, and stability checking.

use std::io::Write;
use std::ops::ControlFlow;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairsm::fairness::{score, Measure, ScoreReport};
use fairsm::gs::{is_stable, reduce_rural_hospitals, Matching};
use fairsm::harness::{run_experiment, write_tables, ExperimentConfig};
use fairsm::instance::{generate_random, parse_instance, Instance};
use fairsm::rotations::{for_each_stable_matching, RotationPoset};
use fairsm::solvers::{egalitarian, min_cost_regret_equal, mrs, optimal_by_enumeration, redi};

const EXIT_USAGE: u8 = 1;
const EXIT_MALFORMED: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_UNSTABLE: u8 = 4;

#[derive(Parser)]
#[command(name = "fairsm", about = "Fair stable matchings for SMI instances", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random complete instance.
    Gen(GenArgs),
    /// Run a solver on an instance and print the matching plus its scores.
    Solve(SolveArgs),
    /// Enumerate all stable matchings of an instance.
    Enumerate(EnumerateArgs),
    /// Dump the rotation poset as a DOT digraph.
    Poset(PosetArgs),
    /// Run the experiment harness and write CSV tables.
    Experiment(ExperimentArgs),
    /// Check an (instance, matching) pair for stability.
    Check(CheckArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Number of men and women.
    #[arg(long)]
    n: usize,
    /// PRNG seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// redi | mrs | egalitarian | min-cost-regret-equal | optimal:<measure>[:<tiebreak>]
    #[arg(long)]
    algorithm: String,
    /// Instance file.
    #[arg(long)]
    instance: PathBuf,
    /// Print the score report as a machine CSV row instead of a table.
    #[arg(long)]
    csv: bool,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Print only the number of stable matchings.
    #[arg(long)]
    count_only: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PosetArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Comma-separated instance sizes, e.g. 10,20,50.
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    /// Instances per size.
    #[arg(long, default_value_t = 500)]
    instances: usize,
    /// Base seed; instance i uses base + i.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Per instance-algorithm timeout in seconds.
    #[arg(long, default_value_t = 60.0)]
    timeout_secs: f64,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    parallelism: usize,
    /// Output directory for the CSV tables and manifest.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Matching file: one `man woman` pair per line, 1-based ids.
    #[arg(long)]
    matching: PathBuf,
}

struct CmdError {
    code: u8,
    message: String,
}

impl CmdError {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

type CmdResult = Result<(), CmdError>;

fn read_file(path: &PathBuf) -> Result<String, CmdError> {
    std::fs::read_to_string(path)
        .map_err(|e| CmdError::new(EXIT_USAGE, format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &PathBuf) -> Result<Instance, CmdError> {
    let text = read_file(path)?;
    parse_instance(&text)
        .map_err(|e| CmdError::new(EXIT_MALFORMED, format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, content: &str) -> CmdResult {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CmdError::new(EXIT_USAGE, format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{content}");
            std::io::stdout().flush().ok();
            Ok(())
        }
    }
}

fn score_block(report: &ScoreReport, csv: bool) -> String {
    if csv {
        format!("{}\n{}\n", ScoreReport::CSV_HEADER, report.to_csv_row())
    } else {
        let mut s = String::new();
        for m in Measure::ALL {
            s.push_str(&format!("{:16} {}\n", m.name(), report.get(m)));
        }
        s
    }
}

fn parse_algorithm(name: &str) -> Result<Algorithm, CmdError> {
    match name {
        "redi" => Ok(Algorithm::Redi),
        "mrs" => Ok(Algorithm::Mrs),
        "egalitarian" => Ok(Algorithm::Egalitarian),
        "min-cost-regret-equal" => Ok(Algorithm::MinCostRegretEqual),
        _ => {
            if let Some(rest) = name.strip_prefix("optimal:") {
                let mut parts = rest.splitn(2, ':');
                let measure = parts.next().unwrap_or("");
                let measure = Measure::parse(measure).ok_or_else(|| {
                    CmdError::new(EXIT_USAGE, format!("unknown measure {measure:?}"))
                })?;
                let tiebreak = match parts.next() {
                    None => measure,
                    Some(t) => Measure::parse(t).ok_or_else(|| {
                        CmdError::new(EXIT_USAGE, format!("unknown tie-break measure {t:?}"))
                    })?,
                };
                Ok(Algorithm::Optimal { measure, tiebreak })
            } else {
                Err(CmdError::new(EXIT_USAGE, format!("unknown algorithm {name:?}")))
            }
        }
    }
}

enum Algorithm {
    Redi,
    Mrs,
    Egalitarian,
    MinCostRegretEqual,
    Optimal { measure: Measure, tiebreak: Measure },
}

fn cmd_gen(args: &GenArgs) -> CmdResult {
    if args.n == 0 {
        return Err(CmdError::new(EXIT_USAGE, "--n must be at least 1"));
    }
    let inst = generate_random(args.n, args.seed);
    let text = inst.to_text().expect("complete instances always serialize");
    emit(&args.out, &text)
}

fn cmd_solve(args: &SolveArgs) -> CmdResult {
    let algorithm = parse_algorithm(&args.algorithm)?;
    let inst = load_instance(&args.instance)?;
    // Solvers assume every agent is matched; strip never-matched agents
    // and report pairs in the original ids.
    let (reduced, report) = reduce_rural_hospitals(&inst);
    if reduced.n_men() == 0 {
        return Err(CmdError::new(
            EXIT_INFEASIBLE,
            "no stable matching with at least one pair exists",
        ));
    }
    let solved = match algorithm {
        Algorithm::Redi => redi(&reduced),
        Algorithm::Mrs => mrs(&reduced),
        Algorithm::Egalitarian => egalitarian(&reduced),
        Algorithm::MinCostRegretEqual => min_cost_regret_equal(&reduced),
        Algorithm::Optimal { measure, tiebreak } => {
            optimal_by_enumeration(&reduced, measure, tiebreak).1
        }
    };
    let sc = score(&reduced, &solved).expect("solver outputs are perfect on the reduced instance");
    let in_original = report.to_original(&solved, inst.n_men(), inst.n_women());
    let mut outbuf = in_original.to_text();
    outbuf.push_str(&score_block(&sc, args.csv));
    emit(&args.out, &outbuf)
}

fn cmd_enumerate(args: &EnumerateArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let mut outbuf = String::new();
    let mut count: u64 = 0;
    let _ = for_each_stable_matching(&inst, |m| {
        count += 1;
        if !args.count_only {
            if count > 1 {
                outbuf.push('\n');
            }
            outbuf.push_str(&m.to_text());
        }
        ControlFlow::Continue(())
    });
    if args.count_only {
        outbuf = format!("{count}\n");
    }
    emit(&args.out, &outbuf)
}

fn cmd_poset(args: &PosetArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let (reduced, _) = reduce_rural_hospitals(&inst);
    let poset = RotationPoset::build(&reduced);
    emit(&args.out, &poset.to_dot())
}

fn cmd_experiment(args: &ExperimentArgs) -> CmdResult {
    let config = ExperimentConfig {
        sizes: args.sizes.clone(),
        instances_per_size: args.instances,
        base_seed: args.seed,
        timeout_secs: args.timeout_secs,
        parallelism: args.parallelism,
    };
    let results =
        run_experiment(&config).map_err(|e| CmdError::new(EXIT_USAGE, e.to_string()))?;
    write_tables(&results, &args.out_dir)
        .map_err(|e| CmdError::new(EXIT_USAGE, e.to_string()))?;
    println!("wrote tables for sizes {:?} to {}", config.sizes, args.out_dir.display());
    Ok(())
}

fn cmd_check(args: &CheckArgs) -> CmdResult {
    let inst = load_instance(&args.instance)?;
    let text = read_file(&args.matching)?;
    let pairs = Matching::parse_pairs(&text)
        .map_err(|e| CmdError::new(EXIT_MALFORMED, format!("{}: {e}", args.matching.display())))?;
    let matching = Matching::from_pairs(&inst, &pairs)
        .map_err(|e| CmdError::new(EXIT_INFEASIBLE, e.to_string()))?;
    let blocking = is_stable(&inst, &matching)
        .map_err(|e| CmdError::new(EXIT_INFEASIBLE, e.to_string()))?;
    if blocking.is_empty() {
        println!("stable");
        Ok(())
    } else {
        let mut msg = format!("{} blocking pair(s):\n", blocking.len());
        for (m, w) in blocking {
            msg.push_str(&format!("{} {}\n", m + 1, w + 1));
        }
        Err(CmdError::new(EXIT_UNSTABLE, msg.trim_end().to_string()))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Let clap print its own help/version output, but use exit
            // code 1 for genuine usage errors.
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            e.print().ok();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(EXIT_USAGE) };
        }
    };
    let result = match &cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Poset(args) => cmd_poset(args),
        Command::Experiment(args) => cmd_experiment(args),
        Command::Check(args) => cmd_check(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}
