//! Command-line driver: simulate scenarios, run the schedulability
//! analyses, check the bundled reproduction cases, and draw ASCII
//! schedules.
//!
//! Exit codes: 0 on success with all deadlines/assertions met, 1 when a
//! deadline is missed or an assertion fails, 2 on input errors.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use suspsim::analysis::{
    scenario_rta, wcrt_bruteforce_special_case, wcrt_lock_bound, AnalysisError, LockBoundMode,
};
use suspsim::cli_io::{export_trace, load_scenario, render_gantt, scenario_to_json, IoError};
use suspsim::model::{Enforcement, LockSemantics, QueuePolicy, Ratio, Scenario};
use suspsim::repro::{all_builtins, builtin, fig6_with_epsilon, run_case, ReproCase};
use suspsim::sched::{simulate, SimulationError};

const EXIT_FAIL: u8 = 1;

#[derive(Parser)]
#[command(
    name = "suspsim",
    version,
    about = "Deterministic scheduling of segmented self-suspending tasks under period enforcement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and print (or write) its event trace.
    ///
    /// Exits 1 if any deadline is missed.
    Simulate {
        #[command(flatten)]
        input: ScenarioInput,
        #[command(flatten)]
        overrides: Overrides,
        /// Write the trace here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Schedulability analyses over a scenario's task set.
    Analyze {
        #[command(subcommand)]
        analysis: Analyze,
    },
    /// Run bundled reproduction cases and check their assertions.
    ///
    /// Exits 1 if any assertion fails.
    Repro {
        /// Run a single named case (default: all of them).
        #[arg(long, conflicts_with = "all")]
        name: Option<String>,
        /// Run every bundled case (the default when --name is absent).
        #[arg(long)]
        all: bool,
        /// List the bundled case names and exit.
        #[arg(long)]
        list: bool,
        /// Write each case's trace to `<name>.trace` under --out.
        #[arg(long)]
        emit_trace: bool,
        /// Write each case's scenario to `<name>.json` under --out.
        #[arg(long)]
        emit_scenario: bool,
        /// Output directory for emitted files (default: current directory).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Execution-time slack for the lock-parking case (default 1/100).
        #[arg(long)]
        epsilon: Option<Ratio>,
    },
    /// Render an ASCII schedule of a simulated scenario.
    ///
    /// Exits 1 if any deadline is missed (the schedule is still printed).
    Gantt {
        #[command(flatten)]
        input: ScenarioInput,
        #[command(flatten)]
        overrides: Overrides,
        /// Column width in time units (e.g. `1` or `1/100`).
        #[arg(long, default_value = "1")]
        cell: Ratio,
        /// Write the rendering here instead of stdout.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum Analyze {
    /// Jitter-aware response-time analysis on one processor.
    ///
    /// Plain task sets are analyzed directly. A set whose single suspending
    /// task has the lowest priority is first split segment-wise into
    /// deferrable tasks (using exact per-segment bounds from the search),
    /// then analyzed; the exact search result is reported alongside so the
    /// transform's pessimism is visible.
    Rta {
        #[command(flatten)]
        input: ScenarioInput,
        /// Report only this task (and its split pieces).
        #[arg(long)]
        task: Option<String>,
    },
    /// Exact worst-case response time by exhaustive search.
    ///
    /// Restricted setting: exactly one suspending task, lowest priority,
    /// one processor, zero jitter, no shared resources.
    Bruteforce {
        #[command(flatten)]
        input: ScenarioInput,
    },
    /// Coarse response-time bound for a task that uses shared resources.
    LockBound {
        #[command(flatten)]
        input: ScenarioInput,
        /// Task to bound.
        #[arg(long)]
        task: String,
        /// Accounting mode (default: derived from the scenario's lock
        /// semantics).
        #[arg(long, value_enum)]
        mode: Option<LockBoundMode>,
    },
}

/// Where the scenario comes from: a JSON file or a bundled case.
#[derive(Args)]
struct ScenarioInput {
    /// Scenario JSON file.
    #[arg(long, value_name = "FILE", required_unless_present = "builtin", conflicts_with = "builtin")]
    scenario: Option<PathBuf>,
    /// Use a bundled reproduction scenario (see `repro --list`).
    #[arg(long, value_name = "NAME")]
    builtin: Option<String>,
}

impl ScenarioInput {
    fn load(&self) -> Result<Scenario, CliError> {
        match (&self.scenario, &self.builtin) {
            (Some(path), None) => Ok(load_scenario(path)?),
            (None, Some(name)) => builtin(name)
                .map(|case| case.scenario)
                .ok_or_else(|| CliError(format!("unknown builtin `{name}`; see `suspsim repro --list`"))),
            _ => unreachable!("clap guarantees exactly one source"),
        }
    }
}

/// Configuration overrides applied after loading.
#[derive(Args)]
struct Overrides {
    /// Override the period-enforcement mode.
    #[arg(long = "enforcer", value_enum)]
    enforcer: Option<Enforcement>,
    /// Override the lock semantics.
    #[arg(long, value_enum)]
    lock_semantics: Option<LockSemantics>,
    /// Override the resource queue policy.
    #[arg(long = "queue", value_enum)]
    queue: Option<QueuePolicy>,
    /// Override the simulation horizon (e.g. `20` or `55/2`).
    #[arg(long)]
    horizon: Option<Ratio>,
}

impl Overrides {
    fn apply(&self, scenario: &mut Scenario) {
        if let Some(e) = self.enforcer {
            scenario.config.enforcement = e;
        }
        if let Some(l) = self.lock_semantics {
            scenario.config.lock_semantics = l;
        }
        if let Some(q) = self.queue {
            scenario.config.lock_queue = q;
        }
        if let Some(h) = self.horizon {
            scenario.config.horizon = h;
        }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct CliError(String);

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError(e.to_string())
    }
}
impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        CliError(e.to_string())
    }
}
impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError(e.to_string())
    }
}
impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError(e.to_string())
    }
}

fn main() -> ExitCode {
    // Die quietly when the reader of a pipe goes away (`suspsim ... | head`),
    // like other line-oriented tools.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Simulate { input, overrides, out } => {
            let mut scenario = input.load()?;
            overrides.apply(&mut scenario);
            let trace = simulate(&scenario)?;
            write_or_print(out.as_deref(), &export_trace(&trace))?;
            let misses = trace.misses();
            for (task, job, at) in &misses {
                eprintln!("deadline miss: {task} job {job} at {at}");
            }
            if misses.is_empty() {
                eprintln!("no deadline misses");
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_FAIL))
            }
        }
        Command::Analyze { analysis } => match analysis {
            Analyze::Rta { input, task } => analyze_rta(&input.load()?, task.as_deref()),
            Analyze::Bruteforce { input } => {
                let scenario = input.load()?;
                let result = wcrt_bruteforce_special_case(&scenario.tasks)?;
                print_json(&result);
                Ok(ExitCode::SUCCESS)
            }
            Analyze::LockBound { input, task, mode } => {
                let scenario = input.load()?;
                let mode = mode.unwrap_or(match scenario.config.lock_semantics {
                    LockSemantics::Distributed => LockBoundMode::Distributed,
                    _ => LockBoundMode::SharedMemory,
                });
                let bound = wcrt_lock_bound(&task, &scenario.tasks, mode)?;
                let deadline = scenario.tasks.iter().find(|t| t.id == task).map(|t| t.deadline);
                print_json(&serde_json::json!({
                    "task": task,
                    "mode": mode,
                    "bound": bound,
                    "schedulable": deadline.map(|d| bound <= d),
                }));
                Ok(ExitCode::SUCCESS)
            }
        },
        Command::Repro { name, all: _, list, emit_trace, emit_scenario, out, epsilon } => {
            run_repro(name.as_deref(), list, emit_trace, emit_scenario, out.as_deref(), epsilon)
        }
        Command::Gantt { input, overrides, cell, out } => {
            let mut scenario = input.load()?;
            overrides.apply(&mut scenario);
            let trace = simulate(&scenario)?;
            write_or_print(out.as_deref(), &render_gantt(&trace, cell)?)?;
            if trace.misses().is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(EXIT_FAIL))
            }
        }
    }
}

fn analyze_rta(scenario: &Scenario, only: Option<&str>) -> Result<ExitCode, CliError> {
    let mut report = scenario_rta(scenario)?;
    if let Some(id) = only {
        let piece_prefix = format!("{id}#");
        report.rta.per_task.retain(|t| t.id == id || t.id.starts_with(&piece_prefix));
        if report.rta.per_task.is_empty() {
            return Err(CliError(format!("unknown task `{id}`")));
        }
        report.rta.schedulable = report.rta.per_task.iter().all(|t| t.schedulable);
    }
    print_json(&report);
    Ok(ExitCode::SUCCESS)
}

fn run_repro(
    name: Option<&str>,
    list: bool,
    emit_trace: bool,
    emit_scenario: bool,
    out: Option<&std::path::Path>,
    epsilon: Option<Ratio>,
) -> Result<ExitCode, CliError> {
    if list {
        for case in all_builtins() {
            println!("{:<26} {}", case.name, case.summary);
        }
        return Ok(ExitCode::SUCCESS);
    }
    let with_epsilon = |case: ReproCase| match epsilon {
        Some(e) if case.name == "fig6_lock_immediate" => fig6_with_epsilon(e),
        _ => case,
    };
    let cases: Vec<ReproCase> = match name {
        Some(n) => {
            let case = builtin(n).ok_or_else(|| CliError(format!("unknown case `{n}`; try --list")))?;
            if epsilon.is_some() && case.name != "fig6_lock_immediate" {
                return Err(CliError("--epsilon only applies to fig6_lock_immediate".into()));
            }
            vec![with_epsilon(case)]
        }
        None => all_builtins().into_iter().map(with_epsilon).collect(),
    };

    let out_dir = out.unwrap_or_else(|| std::path::Path::new("."));
    if emit_trace || emit_scenario {
        std::fs::create_dir_all(out_dir)?;
    }
    let mut failures = 0;
    for case in &cases {
        if emit_scenario {
            std::fs::write(out_dir.join(format!("{}.json", case.name)), scenario_to_json(&case.scenario))?;
        }
        let (trace, report) = run_case(case)?;
        if emit_trace {
            std::fs::write(out_dir.join(format!("{}.trace", case.name)), export_trace(&trace))?;
        }
        let passed = report.outcomes.iter().filter(|o| o.passed).count();
        let status = if report.passed() { "PASS" } else { "FAIL" };
        println!("{status} {:<26} {passed}/{} checks", case.name, report.outcomes.len());
        for outcome in report.outcomes.iter().filter(|o| !o.passed) {
            println!("       expected {}; {}", outcome.assertion, outcome.detail);
        }
        if !report.passed() {
            failures += 1;
        }
    }
    if cases.len() > 1 {
        println!("{}/{} cases passed", cases.len() - failures, cases.len());
    }
    Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAIL) })
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports always serialize"));
}

fn write_or_print(out: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}
