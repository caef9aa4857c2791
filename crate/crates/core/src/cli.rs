//! `tcpn` command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage and validation errors (bad flags,
//! unreadable or invalid workloads), 2 for internal invariant violations,
//! which includes any engine/oracle divergence.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::gen::{seeded_workload, WorkloadShape};
use crate::kernel::{trace_to_json, EngineState, FiringEvent, DEFAULT_STEP_LIMIT};
use crate::metrics::{
    compute_metrics, extract_gantt, gantt_csv, schedule_from_finished, Aggregates, ScheduleResult,
};
use crate::oracle::{diff_results, oracle_schedule, DiffReport};
use crate::sched::{build_net, ProcList, SchedError};
use crate::workload::{
    builtin_table_workload, parse_workload, Format, Policy, PriorityPair, Time, Workload,
    BUILTIN_WORKLOAD_NAME,
};

/// Environment variable overriding the kernel step guard.
pub const STEP_LIMIT_ENV: &str = "TCPN_STEP_LIMIT";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

impl From<SchedError> for CliError {
    fn from(e: SchedError) -> Self {
        match e {
            SchedError::InvalidWorkload(_) => CliError::Validation(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(format!("write failed: {e}"))
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "tcpn",
    version,
    about = "Timed colored Petri net scheduler simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Schedule a workload and print metrics.
    Run(RunArgs),
    /// Run the Petri net engine and the reference scheduler and diff them.
    Compare(CompareArgs),
    /// Compare engine and reference on seeded random workloads.
    Fuzz(FuzzArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SourceArgs {
    /// Workload file (.json or .csv), or `paper-table1` for the builtin case study.
    #[arg(long)]
    pub workload: String,
    /// Workload file format; guessed from the extension when omitted.
    #[arg(long, value_parser = parse_format)]
    pub input_format: Option<Format>,
    /// Kernel step guard; overrides TCPN_STEP_LIMIT.
    #[arg(long)]
    pub step_limit: Option<u64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// fcfs, sjf, pr or hrrn (case-insensitive).
    #[arg(long, value_parser = parse_policy)]
    pub policy: Policy,
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = Engine::Cpn)]
    pub engine: Engine,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
    /// Also print the firing trace (CPN engine only).
    #[arg(long)]
    pub trace: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Policy to compare; all four when omitted.
    #[arg(long, value_parser = parse_policy)]
    pub policy: Option<Policy>,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Accepted for symmetry with `run`; both engines always run.
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    /// Test fixture: shift the start of this process by one tick in the engine result.
    #[arg(long, hide = true)]
    pub inject_fault: Option<i64>,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub count: u64,
    #[arg(long)]
    pub step_limit: Option<u64>,
    /// Test fixture: shift the first finished process of every engine result.
    #[arg(long, hide = true)]
    pub inject_fault: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Engine {
    Cpn,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Table,
    GanttCsv,
}

fn parse_policy(s: &str) -> Result<Policy, String> {
    s.parse()
        .map_err(|e: crate::workload::UnknownPolicy| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WorkloadSource {
    Builtin,
    File { path: PathBuf, format: Format },
}

/// Fully resolved settings for `run` and `compare`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub policy: Policy,
    pub source: WorkloadSource,
    pub engine: Engine,
    pub format: OutputFormat,
    pub trace: bool,
    pub step_limit: u64,
}

fn resolve_step_limit(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(limit) = flag {
        return Ok(limit);
    }
    match std::env::var(STEP_LIMIT_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::Validation(format!(
                "{STEP_LIMIT_ENV}={v:?} is not a non-negative integer"
            ))
        }),
        Err(_) => Ok(DEFAULT_STEP_LIMIT),
    }
}

fn resolve_source(args: &SourceArgs) -> Result<WorkloadSource, CliError> {
    if args.workload == BUILTIN_WORKLOAD_NAME {
        return Ok(WorkloadSource::Builtin);
    }
    let path = PathBuf::from(&args.workload);
    let format = args
        .input_format
        .or_else(|| Format::from_path(&path))
        .ok_or_else(|| {
            CliError::Validation(format!(
                "cannot tell the format of {}; pass --input-format json|csv",
                path.display()
            ))
        })?;
    Ok(WorkloadSource::File { path, format })
}

pub fn load_workload(source: &WorkloadSource) -> Result<Workload, CliError> {
    match source {
        WorkloadSource::Builtin => Ok(builtin_table_workload()),
        WorkloadSource::File { path, format } => {
            let file = File::open(path).map_err(|e| {
                CliError::Validation(format!("cannot read {}: {e}", path.display()))
            })?;
            let name = path.file_stem().map_or_else(
                || "workload".to_owned(),
                |s| s.to_string_lossy().into_owned(),
            );
            parse_workload(BufReader::new(file), *format, name)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
        }
    }
}

/// Runs the scheduler net and derives its metrics.
pub fn run_engine(
    w: &Workload,
    policy: Policy,
    step_limit: u64,
) -> Result<(ScheduleResult, EngineState<ProcList>), CliError> {
    let net = build_net(w, policy)?;
    let end = net.run(step_limit)?;
    let result = compute_metrics(&end, w, policy).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok((result, end))
}

/// Runs the reference scheduler and derives the same metrics.
pub fn run_oracle(w: &Workload, policy: Policy) -> Result<ScheduleResult, CliError> {
    let schedule = oracle_schedule(w, policy)
        .map_err(|r| CliError::Validation(format!("invalid workload: {r}")))?;
    schedule_from_finished(policy, schedule.finished(w), w)
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Engine-vs-oracle comparison, optionally perturbing the engine result.
pub fn compare_one(
    w: &Workload,
    policy: Policy,
    step_limit: u64,
    fault: Option<i64>,
) -> Result<DiffReport, CliError> {
    let (mut engine, _) = run_engine(w, policy, step_limit)?;
    if let Some(pi) = fault {
        let p = engine
            .finished
            .iter_mut()
            .find(|p| p.pi == pi)
            .ok_or_else(|| CliError::Validation(format!("cannot inject fault: no process {pi}")))?;
        p.es += 1;
    }
    let oracle = oracle_schedule(w, policy)
        .map_err(|r| CliError::Validation(format!("invalid workload: {r}")))?;
    Ok(diff_results(&engine, &oracle))
}

#[derive(Serialize)]
struct JsonProcess {
    pi: i64,
    it: Time,
    st: Time,
    wt: Time,
    es: Time,
    finish: Time,
    turnaround: Time,
    pr: PriorityPair,
}

#[derive(Serialize)]
struct JsonReport<'a> {
    policy: Policy,
    makespan: Time,
    lead_in: Time,
    total_idle: Time,
    idle: Vec<[Time; 2]>,
    processes: Vec<JsonProcess>,
    aggregates: Option<Aggregates>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a [FiringEvent]>,
}

/// Stable single-line JSON rendering of a result.
pub fn result_json(result: &ScheduleResult, trace: Option<&[FiringEvent]>) -> String {
    let report = JsonReport {
        policy: result.policy,
        makespan: result.makespan,
        lead_in: result.lead_in,
        total_idle: result.total_idle(),
        idle: result
            .idle_intervals
            .iter()
            .map(|i| [i.start, i.end])
            .collect(),
        processes: result
            .finished
            .iter()
            .map(|p| JsonProcess {
                pi: p.pi,
                it: p.it,
                st: p.st,
                wt: p.wt,
                es: p.es,
                finish: p.es + p.st,
                turnaround: p.wt + p.st,
                pr: p.pr,
            })
            .collect(),
        aggregates: result.aggregates,
        trace,
    };
    serde_json::to_string(&report).expect("report serializes")
}

fn result_table(result: &ScheduleResult) -> String {
    let mut out = format!(
        "policy {}  makespan {}  lead-in {}  idle {}\n",
        result.policy,
        result.makespan,
        result.lead_in,
        result.total_idle()
    );
    out.push_str(&format!(
        "{:>5} {:>5} {:>5} {:>5} {:>5} {:>7} {:>10}  {}\n",
        "pi", "it", "st", "wt", "es", "finish", "turnaround", "pr"
    ));
    for p in &result.finished {
        out.push_str(&format!(
            "{:>5} {:>5} {:>5} {:>5} {:>5} {:>7} {:>10}  {}\n",
            p.pi,
            p.it,
            p.st,
            p.wt,
            p.es,
            p.es + p.st,
            p.wt + p.st,
            p.pr
        ));
    }
    for i in &result.idle_intervals {
        out.push_str(&format!("idle [{}, {})\n", i.start, i.end));
    }
    if let Some(a) = &result.aggregates {
        out.push_str(&format!(
            "avg waiting {:.3}  avg turnaround {:.3}  utilization {:.3}\n",
            a.avg_waiting, a.avg_turnaround, a.utilization
        ));
    }
    out
}

pub fn cmd_run(cfg: &RunConfig, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    if cfg.trace && cfg.engine == Engine::Oracle {
        return Err(CliError::Validation(
            "--trace needs the cpn engine; the oracle has no firing trace".into(),
        ));
    }
    let w = load_workload(&cfg.source)?;
    let (result, trace) = match cfg.engine {
        Engine::Cpn => {
            let (result, end) = run_engine(&w, cfg.policy, cfg.step_limit)?;
            (result, cfg.trace.then_some(end.trace))
        }
        Engine::Oracle => (run_oracle(&w, cfg.policy)?, None),
    };
    match cfg.format {
        OutputFormat::Json => writeln!(out, "{}", result_json(&result, trace.as_deref()))?,
        OutputFormat::Table => {
            out.write_all(result_table(&result).as_bytes())?;
            if let Some(trace) = &trace {
                writeln!(out, "trace:")?;
                for ev in trace {
                    writeln!(out, "  t={:<6} {:<9} {}", ev.time, ev.transition, ev.detail)?;
                }
            }
        }
        OutputFormat::GanttCsv => {
            out.write_all(gantt_csv(&extract_gantt(&result)).as_bytes())?;
            if let Some(trace) = &trace {
                writeln!(err, "{}", trace_to_json(trace))?;
            }
        }
    }
    Ok(())
}

pub fn cmd_compare(
    cfg: &RunConfig,
    policies: &[Policy],
    fault: Option<i64>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let w = load_workload(&cfg.source)?;
    let mut first_failure = None;
    for &policy in policies {
        let report = compare_one(&w, policy, cfg.step_limit, fault)?;
        writeln!(out, "{policy}: {report}")?;
        if !report.is_clean() && first_failure.is_none() {
            first_failure = Some(format!("{policy}: {report}"));
        }
    }
    match first_failure {
        None => Ok(()),
        Some(msg) => Err(CliError::Internal(msg)),
    }
}

pub fn cmd_fuzz(args: &FuzzArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let step_limit = resolve_step_limit(args.step_limit)?;
    let shape = WorkloadShape::default();
    let mut passed = 0u64;
    let mut total = 0u64;
    for i in 0..args.count {
        let seed = args.seed.wrapping_add(i);
        let w = seeded_workload(seed, &shape);
        let fault = args.inject_fault.then(|| w.processes[0].pi);
        for policy in Policy::ALL {
            total += 1;
            match compare_one(&w, policy, step_limit, fault) {
                Ok(report) if report.is_clean() => passed += 1,
                Ok(report) => writeln!(out, "FAIL seed={seed} policy={policy}: {report}")?,
                Err(e) => writeln!(out, "FAIL seed={seed} policy={policy}: {e}")?,
            }
        }
    }
    writeln!(out, "{passed}/{total} comparisons passed")?;
    if passed == total {
        Ok(())
    } else {
        Err(CliError::Internal(format!(
            "{} comparisons failed",
            total - passed
        )))
    }
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let cfg = RunConfig {
                policy: args.policy,
                source: resolve_source(&args.source)?,
                engine: args.engine,
                format: args.format,
                trace: args.trace,
                step_limit: resolve_step_limit(args.source.step_limit)?,
            };
            cmd_run(&cfg, out, err)
        }
        Command::Compare(args) => {
            let policies = args
                .policy
                .map_or_else(|| Policy::ALL.to_vec(), |p| vec![p]);
            let cfg = RunConfig {
                policy: policies[0],
                source: resolve_source(&args.source)?,
                engine: args.engine.unwrap_or(Engine::Cpn),
                format: OutputFormat::Table,
                trace: false,
                step_limit: resolve_step_limit(args.source.step_limit)?,
            };
            cmd_compare(&cfg, &policies, args.inject_fault, out)
        }
        Command::Fuzz(args) => cmd_fuzz(&args, out),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}
