//! `ffsched`: run co-simulation scenarios, noise sweeps and the look-up table
//! compiler from the command line.
//!
//! Failures print `error[<category>]: <message>` on stderr and exit with a
//! code fixed per category; see [`Category`].

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use ffsched::feedback::{FeedbackError, SchedulerMode};
use ffsched::fuzzy::{compile_scheduler_table, FuzzyError, LookupTable};
use ffsched::harness::{
    assess_stability, emit_traces, parse_scenario, run_experiment, RunError, ScenarioConfig,
    ScenarioError, TraceError,
};

/// Noise magnitudes visited by `sweep --noise-sweep`.
const SWEEP_R: [f64; 4] = [0.0, 0.02, 0.05, 0.1];

#[derive(Parser)]
#[command(
    name = "ffsched",
    version,
    about = "Fuzzy feedback scheduling co-simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv and summary.txt.
    Run(RunArgs),
    /// Run a batch of scenarios over measurement-noise levels and seeds.
    Sweep(SweepArgs),
    /// Compile the fuzzy rule base into a look-up table.
    Table(TableArgs),
}

#[derive(Args)]
struct Overrides {
    /// Scenario file; built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Simulated time in seconds.
    #[arg(long)]
    horizon: Option<f64>,
    /// Desired CPU utilization.
    #[arg(long)]
    ur: Option<f64>,
    /// Scheduler period in seconds.
    #[arg(long)]
    tfs: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    overrides: Overrides,
    #[arg(long, value_parser = parse_mode)]
    mode: Option<SchedulerMode>,
    #[arg(long)]
    seed: Option<u64>,
    /// Standard deviation of the utilization measurement noise.
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Sweep r over 0, 0.02, 0.05 and 0.1.
    #[arg(long, required = true)]
    noise_sweep: bool,
    #[arg(long, value_parser = parse_mode, default_value = "fuzzy")]
    mode: SchedulerMode,
    /// Seeds 1..=N per noise level.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, required = true)]
    compile: bool,
    /// Compare against the shipped table.
    #[arg(long)]
    diff: bool,
    /// Directory for table_diff.txt; stdout only when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_mode(s: &str) -> Result<SchedulerMode, String> {
    s.parse::<SchedulerMode>().map_err(|e| e.to_string())
}

/// Machine-readable failure classes and their exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Category {
    ConfigSyntax,
    ConfigSemantic,
    InfeasibleLoad,
    Simulation,
    TableInvariant,
    Io,
    TraceFormat,
    Stability,
}

impl Category {
    fn name(self) -> &'static str {
        match self {
            Category::ConfigSyntax => "config-syntax",
            Category::ConfigSemantic => "config-semantic",
            Category::InfeasibleLoad => "infeasible-load",
            Category::Simulation => "simulation",
            Category::TableInvariant => "table-invariant",
            Category::Io => "io",
            Category::TraceFormat => "trace-format",
            Category::Stability => "unstable-run",
        }
    }

    /// 2 is left to clap for usage errors.
    fn exit_code(self) -> u8 {
        match self {
            Category::ConfigSyntax => 3,
            Category::ConfigSemantic => 4,
            Category::InfeasibleLoad => 5,
            Category::Simulation => 6,
            Category::TableInvariant => 7,
            Category::Io => 8,
            Category::TraceFormat => 9,
            Category::Stability => 10,
        }
    }
}

struct Failure {
    category: Category,
    message: String,
}

impl Failure {
    fn new(category: Category, message: impl Into<String>) -> Self {
        Self {
            category,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        let category = match e {
            ScenarioError::Syntax { .. } => Category::ConfigSyntax,
            ScenarioError::Semantic(_) => Category::ConfigSemantic,
        };
        Failure::new(category, e.to_string())
    }
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        match e {
            RunError::Scenario(e) => e.into(),
            RunError::Feedback(e @ FeedbackError::InfeasibleLoad { .. }) => {
                Failure::new(Category::InfeasibleLoad, e.to_string())
            }
            other => Failure::new(Category::Simulation, other.to_string()),
        }
    }
}

impl From<TraceError> for Failure {
    fn from(e: TraceError) -> Self {
        let category = match e {
            TraceError::Io { .. } => Category::Io,
            _ => Category::TraceFormat,
        };
        Failure::new(category, e.to_string())
    }
}

impl From<FuzzyError> for Failure {
    fn from(e: FuzzyError) -> Self {
        Failure::new(Category::TableInvariant, e.to_string())
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(Category::Io, format!("{}: {e}", path.display()))
}

fn load_config(o: &Overrides) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match &o.scenario {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
            parse_scenario(&text).map_err(|e| {
                let f = Failure::from(e);
                Failure::new(f.category, format!("{}: {}", path.display(), f.message))
            })?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(h) = o.horizon {
        cfg.horizon = h;
    }
    if let Some(u) = o.ur {
        cfg.scheduler.desired_utilization = u;
    }
    if let Some(t) = o.tfs {
        cfg.scheduler.period = t;
    }
    Ok(cfg)
}

fn cmd_run(args: RunArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&args.overrides)?;
    if let Some(mode) = args.mode {
        cfg.scheduler.mode = mode;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(r) = args.r {
        cfg.noise.measurement_std = r;
    }
    cfg.validate()?;
    let exp = run_experiment(&cfg)?;
    emit_traces(&exp.trace, &exp.summary, None, &args.out)?;
    print!(
        "mode = {}\nseed = {}\n{}",
        exp.mode,
        exp.seed,
        exp.summary.to_text()
    );
    Ok(())
}

struct SweepRow {
    r: f64,
    seed: u64,
    mean_error: f64,
    max_error: f64,
    u_final: Option<f64>,
    stable: bool,
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut base = load_config(&args.overrides)?;
    base.scheduler.mode = args.mode;
    base.validate()?;
    let points: Vec<(f64, u64)> = SWEEP_R
        .iter()
        .flat_map(|&r| (1..=args.seeds).map(move |s| (r, s)))
        .collect();
    let rows = points
        .par_iter()
        .map(|&(r, seed)| -> Result<SweepRow, Failure> {
            let mut cfg = base.clone();
            cfg.noise.measurement_std = r;
            cfg.seed = seed;
            let exp = run_experiment(&cfg)?;
            let dir = args.out.join(format!("r{r}_seed{seed}"));
            emit_traces(&exp.trace, &exp.summary, None, &dir)?;
            let stability = assess_stability(&exp.trace);
            Ok(SweepRow {
                r,
                seed,
                mean_error: exp.summary.mean_tracking_error,
                max_error: stability.max_error,
                u_final: exp.summary.mean_u_hat_final_second,
                stable: stability.is_stable(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = String::from(
        "r,seed,mean_tracking_error_m,max_tracking_error_m,mean_u_hat_final_second,stable\n",
    );
    for row in &rows {
        let u = row.u_final.map_or_else(String::new, |u| u.to_string());
        let _ = writeln!(
            table,
            "{},{},{},{},{u},{}",
            row.r, row.seed, row.mean_error, row.max_error, row.stable
        );
    }
    let path = args.out.join("sweep.csv");
    fs::write(&path, &table).map_err(|e| io_failure(&path, e))?;
    let unstable = rows.iter().filter(|r| !r.stable).count();
    println!(
        "{} runs, {unstable} unstable; results in {}",
        rows.len(),
        path.display()
    );
    if unstable > 0 {
        return Err(Failure::new(
            Category::Stability,
            format!("{unstable} runs were unstable"),
        ));
    }
    Ok(())
}

fn cmd_table(args: TableArgs) -> Result<(), Failure> {
    debug_assert!(args.compile);
    let compiled = compile_scheduler_table()?;
    let text = if args.diff {
        let golden = LookupTable::golden();
        compiled.diff(&golden).report(&compiled, &golden)
    } else {
        compiled.to_text()
    };
    print!("{text}");
    if let Some(dir) = &args.out {
        fs::create_dir_all(dir).map_err(|e| io_failure(dir, e))?;
        let name = if args.diff {
            "table_diff.txt"
        } else {
            "lookup_table.txt"
        };
        let path = dir.join(name);
        fs::write(&path, &text).map_err(|e| io_failure(&path, e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Table(a) => cmd_table(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.category.name(), f.message);
            ExitCode::from(f.category.exit_code())
        }
    }
}
