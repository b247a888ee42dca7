use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context as _, Result};
use clap::{Args, Parser, Subcommand};

use wmd_core::checker::{self, Limits, TraceStep};
use wmd_core::report::{self, Report, RunStatus};
use wmd_core::scenario::{Scenario, SchemeKind};
use wmd_core::{CThreshold, Counting, GlobalState, Payload, RadioConfig, SchemeVars, Tlo};

const EXIT_COVERED: u8 = 0;
const EXIT_ERROR: u8 = 1;
const EXIT_STARVATION: u8 = 2;
const EXIT_LIMIT: u8 = 3;

/// Model checker for warning-message dissemination schemes in vehicular networks.
#[derive(Parser, Debug)]
#[command(name = "wmdcheck", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Explore every interleaving of a scenario and check coverage.
    Check(CheckArgs),
    /// Run the counting scheme over a grid of ranges and thresholds.
    Sweep(SweepArgs),
    /// Re-execute the trace stored in a report and print each step.
    Replay {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Args, Debug)]
struct LimitArgs {
    #[arg(long, default_value_t = 5_000_000)]
    max_states: usize,
    #[arg(long, default_value_t = 600.0)]
    max_seconds: f64,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    /// Interleave every enabled event, including receives that commute.
    #[arg(long)]
    no_reduction: bool,
}

impl LimitArgs {
    fn limits(&self) -> Result<Limits> {
        if !self.max_seconds.is_finite() || self.max_seconds <= 0.0 {
            bail!("--max-seconds must be positive");
        }
        Ok(Limits {
            max_states: self.max_states,
            max_time: None,
            max_wall: Some(Duration::from_secs_f64(self.max_seconds)),
            reduce: !self.no_reduction,
        })
    }

    fn workers(&self) -> usize {
        self.workers
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    scheme: Option<SchemeKind>,
    #[arg(long)]
    range: Option<i64>,
    #[arg(long)]
    c_threshold: Option<CThreshold>,
    #[arg(long)]
    waiting: Option<u64>,
    #[command(flatten)]
    limits: LimitArgs,
    /// Where to write the JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated radio ranges.
    #[arg(long, value_delimiter = ',', required = true)]
    ranges: Vec<i64>,
    /// Comma-separated counter thresholds (`inf` allowed).
    #[arg(long, value_delimiter = ',', required = true)]
    thresholds: Vec<CThreshold>,
    #[arg(long)]
    csv: PathBuf,
    #[command(flatten)]
    limits: LimitArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_ERROR
            } else {
                EXIT_COVERED
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Check(args) => check(args),
        Command::Sweep(args) => sweep(args),
        Command::Replay { report } => replay(&report),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_ERROR)
        }
    }
}

fn load(path: &Path) -> Result<Scenario> {
    Scenario::load(path).with_context(|| format!("loading scenario {}", path.display()))
}

fn check(args: CheckArgs) -> Result<u8> {
    let mut scenario = load(&args.scenario)?;
    if let Some(scheme) = args.scheme {
        scenario.scheme = scheme;
    }
    if let Some(range) = args.range {
        scenario.radio = RadioConfig::new(range).context("--range must be positive")?;
    }
    if let Some(k) = args.c_threshold {
        scenario.params.c_threshold = Some(k);
    }
    if let Some(w) = args.waiting {
        scenario.params.threshold_waiting = w;
    }
    scenario.validate()?;

    let report = report::run_check(&scenario, &args.limits.limits()?, args.limits.workers());
    print_summary(&scenario, &report);
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_json())
            .with_context(|| format!("writing report {}", path.display()))?;
    }
    Ok(match (&report.status, &report.properties) {
        (RunStatus::Complete, Some(p)) if p.full_coverage_always => EXIT_COVERED,
        (RunStatus::Complete, _) => EXIT_STARVATION,
        (RunStatus::LimitExceeded { .. }, _) => EXIT_LIMIT,
        (RunStatus::Failed { .. }, _) => EXIT_ERROR,
    })
}

fn print_summary(scenario: &Scenario, report: &Report) {
    println!(
        "scenario: {} ({} vehicles, scheme {}, range {})",
        scenario.name,
        scenario.vehicles.len(),
        scenario.scheme,
        scenario.radio.range
    );
    println!(
        "states: {}  transitions: {}",
        report.stats.states, report.stats.transitions
    );
    match &report.status {
        RunStatus::Complete => {}
        RunStatus::LimitExceeded { limit } => println!("status: {limit} limit exceeded"),
        RunStatus::Failed { reason, trace } => {
            println!("status: failed after {} steps: {reason}", trace.len())
        }
    }
    if let Some(p) = &report.properties {
        println!(
            "full coverage in every terminal: {}",
            p.full_coverage_always
        );
        if let (Some(best), Some(worst)) = (p.hop_best, p.hop_worst) {
            println!("hops: best {best}, worst {worst}");
        }
        if let (Some(best), Some(worst)) = (p.time_best, p.time_worst) {
            println!("completion time: best {best}, worst {worst}");
        }
        if p.starvation_witness.is_some() {
            let starved: Vec<String> = p.starved.iter().map(|&id| scenario.label(id)).collect();
            println!(
                "starvation witness leaves uninformed: {}",
                starved.join(", ")
            );
        }
    }
}

fn sweep(args: SweepArgs) -> Result<u8> {
    let scenario = load(&args.scenario)?;
    let mut base = scenario
        .counting_params()
        .context("sweep requires a counting scenario with cThreshold")?;
    base.threshold_waiting = scenario.params.threshold_waiting;
    let grid: Vec<(i64, CThreshold)> = args
        .ranges
        .iter()
        .flat_map(|&r| args.thresholds.iter().map(move |&k| (r, k)))
        .collect();
    let rows = checker::sweep(
        &scenario.world(),
        base,
        &grid,
        &args.limits.limits()?,
        args.limits.workers(),
    );
    report::write_csv(&rows, &args.csv)?;
    print!("{}", report::csv_table(&rows));
    Ok(EXIT_COVERED)
}

fn replay(path: &Path) -> Result<u8> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading report {}", path.display()))?;
    let report =
        Report::from_json(&text).with_context(|| format!("parsing report {}", path.display()))?;
    let scenario = report.scenario;
    scenario.validate()?;
    let trace: &[TraceStep] = match (&report.status, &report.properties) {
        (RunStatus::Failed { trace, .. }, _) if !trace.is_empty() => trace,
        (_, Some(p)) if p.starvation_witness.is_some() => {
            p.starvation_witness.as_deref().unwrap_or_default()
        }
        _ => {
            println!("report holds no trace to replay");
            return Ok(EXIT_COVERED);
        }
    };
    let world = scenario.world();
    match scenario.scheme {
        SchemeKind::Counting => {
            let params = scenario
                .counting_params()
                .context("counting scenario without cThreshold")?;
            print_replay(
                &scenario,
                trace,
                checker::replay(&world, &Counting::new(params), trace),
            )
        }
        SchemeKind::Tlo => print_replay(
            &scenario,
            trace,
            checker::replay(&world, &Tlo::new(scenario.params.threshold_waiting), trace),
        ),
    }
}

fn print_replay<V: SchemeVars>(
    scenario: &Scenario,
    trace: &[TraceStep],
    result: Result<Vec<GlobalState<V>>, checker::ReplayError>,
) -> Result<u8> {
    let states = result?;
    for (i, step) in trace.iter().enumerate() {
        let detail = match step.payload {
            Payload::Warning { hop, origin } => format!(" hop {hop} from {origin}"),
            _ => String::new(),
        };
        let informed: Vec<String> = states[i + 1]
            .informed()
            .into_iter()
            .map(|id| scenario.label(id))
            .collect();
        println!(
            "{:>4}  t={:<4} {} <- {} (sent by {}){}  informed: {{{}}}",
            i + 1,
            step.time,
            scenario.label(step.actor),
            step.server,
            scenario.label(step.sender),
            detail,
            informed.join(",")
        );
    }
    let last = states.last().expect("initial state");
    let uninformed: Vec<String> = (0..scenario.vehicles.len() as u16)
        .map(wmd_core::ActorId)
        .filter(|id| !last.actors[id.index()].vars.is_aware())
        .map(|id| scenario.label(id))
        .collect();
    println!(
        "replayed {} steps; uninformed at end: {{{}}}",
        trace.len(),
        uninformed.join(",")
    );
    Ok(EXIT_COVERED)
}
