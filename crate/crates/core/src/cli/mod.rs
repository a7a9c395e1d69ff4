//! Command-line entry point. Exit codes: 0 success, 1 domain failure
//! (unsolvable, invalid plan, unreadable or malformed input), 2 usage error.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub(crate) enum CliError {
    Usage(String),
    Failed(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Failed(e.into())
    }
}

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "stepforge",
    version,
    about = "Step-level reward datasets and first-error evaluation chains from classical planning problems",
    propagate_version = true
)]
struct Cli {
    /// More log output on stderr (repeat for debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Log errors only
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate solvable problem instances for built-in domains
    GenProblems(GenProblemsArgs),
    /// Walk optimal trajectories and write labelled candidate steps
    GenDataset(GenDatasetArgs),
    /// Assign problems to train/val/test splits, holding out one domain
    Split(SplitArgs),
    /// Per-domain problem, MOPL and step counts
    Stats(StatsArgs),
    /// Build first-error evaluation chains
    GenChains(GenChainsArgs),
    /// Score a judge on evaluation chains
    Eval(EvalArgs),
    /// Check a plan file against a domain and problem
    ValidatePlan(ValidatePlanArgs),
    /// Print an optimal plan for a problem
    Solve(SolveArgs),
}

#[derive(Debug, Args)]
struct LimitArgs {
    /// Planner node-expansion limit per search [default: 1000000]
    #[arg(long, value_name = "N")]
    max_expansions: Option<u64>,
    /// Planner wall-clock limit per search, in seconds [default: 60]
    #[arg(long, value_name = "SECS")]
    max_time: Option<f64>,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// JSON settings file; flags take precedence [env: STEPFORGE_CONFIG]
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenProblemsArgs {
    /// Domain id, or "all" for one subdirectory per domain
    #[arg(long)]
    domain: String,
    /// Problems per domain
    #[arg(long)]
    count: usize,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (must not exist or be empty)
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Size parameter, KEY=VALUE or DOMAIN.KEY=VALUE (repeatable)
    #[arg(long = "size", value_name = "KEY=VALUE")]
    sizes: Vec<String>,
    /// Smallest accepted optimal plan length [default: 2]
    #[arg(long)]
    mopl_min: Option<u32>,
    /// Largest accepted optimal plan length [default: 15]
    #[arg(long)]
    mopl_max: Option<u32>,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct GenDatasetArgs {
    /// Problem directory: domain.pddl plus problems, or one such subdirectory per domain
    #[arg(long, value_name = "DIR")]
    problems: PathBuf,
    /// Output JSON Lines file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Candidates sampled per trajectory state [default: 8]
    #[arg(long)]
    y: Option<usize>,
    /// Probability of drawing from the inapplicable pool [default: 0.25]
    #[arg(long, value_name = "P")]
    p_inapp: Option<f64>,
    /// Worker threads [default: available cores]
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
struct SplitArgs {
    /// Dataset JSON Lines file
    #[arg(long, value_name = "FILE")]
    records: PathBuf,
    /// Shuffle seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Domain whose problems all go to the holdout split
    #[arg(long, default_value = "rooms")]
    holdout: String,
    /// Train,val,test fractions
    #[arg(long, default_value = "0.85,0.05,0.10", value_name = "A,B,C")]
    ratios: String,
    /// Output JSON Lines file [default: <records>.split.jsonl]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    /// Dataset JSON Lines file
    #[arg(long, value_name = "FILE")]
    records: PathBuf,
    /// Also write the table as JSON
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenChainsArgs {
    /// Problem directory, as for gen-dataset
    #[arg(long, value_name = "DIR")]
    problems: PathBuf,
    /// Output JSON Lines file
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Split file from `split`; restricts problems to --splits
    #[arg(long, value_name = "FILE")]
    split: Option<PathBuf>,
    /// Splits to use with --split
    #[arg(long, default_value = "test,holdout", value_name = "LIST")]
    splits: String,
    /// Master seed [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Fraction of chains with an injected error
    #[arg(long, default_value_t = crate::eval::DEFAULT_ERROR_FRACTION, value_name = "F")]
    error_fraction: f64,
    /// Categories counted as errors
    #[arg(long, default_value = "NonExecutable,DeadEnd,Backtracking", value_name = "LIST")]
    error_categories: String,
    /// Chains built per problem
    #[arg(long, default_value_t = 1, value_name = "N")]
    chains_per_problem: usize,
    /// Worker threads [default: available cores]
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    limits: LimitArgs,
    #[command(flatten)]
    config: ConfigArg,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("judge_source").required(true).args(["judge", "scores", "builtin"])))]
struct EvalArgs {
    /// Chains JSON Lines file
    #[arg(long, value_name = "FILE")]
    chains: PathBuf,
    /// Judge command, run through `sh -c`, speaking JSON Lines on stdin/stdout
    #[arg(long, value_name = "CMD")]
    judge: Option<String>,
    /// Precomputed judge responses
    #[arg(long, value_name = "FILE")]
    scores: Option<PathBuf>,
    /// Built-in judge: oracle, const1, const0 or random
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
    /// Problem directory the chains came from (oracle judge)
    #[arg(long, value_name = "DIR")]
    problems: Option<PathBuf>,
    /// Scores below this mark an error
    #[arg(long, default_value_t = crate::eval::DEFAULT_TAU, value_name = "T")]
    tau: f64,
    /// Seed for the random judge [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// Report JSON file [default: <chains>.report.json]
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidatePlanArgs {
    /// Domain PDDL file
    #[arg(long, value_name = "FILE")]
    domain: PathBuf,
    /// Problem PDDL file
    #[arg(long, value_name = "FILE")]
    problem: PathBuf,
    /// Plan file, one ground action per line, e.g. (move d1 d2 peg3)
    #[arg(long, value_name = "FILE")]
    plan: PathBuf,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Domain PDDL file
    #[arg(long, value_name = "FILE")]
    domain: PathBuf,
    /// Problem PDDL file
    #[arg(long, value_name = "FILE")]
    problem: PathBuf,
    /// lmcut, hmax or blind
    #[arg(long, default_value = "lmcut")]
    heuristic: String,
    /// Write the plan here instead of stdout
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[command(flatten)]
    limits: LimitArgs,
}

fn init_logging(verbose: u8, quiet: bool) {
    let level = match (quiet, verbose) {
        (true, _) => log::LevelFilter::Error,
        (false, 0) => log::LevelFilter::Warn,
        (false, 1) => log::LevelFilter::Info,
        (false, _) => log::LevelFilter::Debug,
    };
    // repeated calls (tests) keep the first logger
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("STEPFORGE_LOG")
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    log::set_max_level(level);
}

/// Help for the tool and every subcommand, as printed by `--help`.
pub fn help_text() -> String {
    let mut cmd = Cli::command();
    cmd.build();
    let mut out = cmd.render_long_help().to_string();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        let sub = cmd.find_subcommand_mut(&name).expect("listed");
        out.push_str(&format!("\n===== {name} =====\n"));
        out.push_str(&sub.render_long_help().to_string());
    }
    out
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    init_logging(cli.verbose, cli.quiet);
    let argv: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let result = match cli.command {
        Command::GenProblems(a) => commands::gen_problems(a, &argv),
        Command::GenDataset(a) => commands::gen_dataset(a, &argv),
        Command::Split(a) => commands::split(a, &argv),
        Command::Stats(a) => commands::stats(a, &argv),
        Command::GenChains(a) => commands::gen_chains(a, &argv),
        Command::Eval(a) => commands::eval(a, &argv),
        Command::ValidatePlan(a) => commands::validate_plan(a),
        Command::Solve(a) => commands::solve(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("\nFor more information, try '--help'.");
            EXIT_USAGE
        }
        Err(CliError::Failed(e)) => {
            eprintln!("error: {e:#}");
            EXIT_FAILURE
        }
    }
}
