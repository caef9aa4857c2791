//! Process and policy data model, workload file formats and validation.
//!
//! A workload is an ordered list of [`Process`] records. List order is kept
//! everywhere because it decides the order in which simultaneous arrivals
//! enter the ready queue.

use std::collections::HashSet;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Integer simulation time in abstract ticks.
pub type Time = i64;

/// Policy-computed priority: a major field and a tie-breaking minor field.
///
/// Fractions are stored pre-scaled (HRRN ratios are multiplied by 100), so
/// both fields stay integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct PriorityPair {
    pub major: i64,
    pub minor: i64,
}

impl PriorityPair {
    pub const fn new(major: i64, minor: i64) -> Self {
        Self { major, minor }
    }
}

impl fmt::Display for PriorityPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.major, self.minor)
    }
}

impl Serialize for PriorityPair {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.major, self.minor].serialize(s)
    }
}

impl<'de> Deserialize<'de> for PriorityPair {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [major, minor] = <[i64; 2]>::deserialize(d)?;
        Ok(Self { major, minor })
    }
}

/// One job record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Process {
    /// Process index, unique within a workload.
    pub pi: i64,
    /// Arrival ("input") time.
    pub it: Time,
    /// Service time.
    pub st: Time,
    /// Waiting time, set when the process is dispatched.
    pub wt: Time,
    /// Execution start time.
    pub es: Time,
    pub pr: PriorityPair,
}

impl Process {
    /// A fresh process: no wait, no start, static priority in the major field.
    pub const fn new(pi: i64, it: Time, st: Time, priority: i64) -> Self {
        Self {
            pi,
            it,
            st,
            wt: 0,
            es: 0,
            pr: PriorityPair::new(priority, 0),
        }
    }
}

/// Scheduling method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Policy {
    Fcfs,
    Sjf,
    Pr,
    Hrrn,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::Fcfs, Policy::Sjf, Policy::Pr, Policy::Hrrn];

    pub const fn name(self) -> &'static str {
        match self {
            Policy::Fcfs => "FCFS",
            Policy::Sjf => "SJF",
            Policy::Pr => "PR",
            Policy::Hrrn => "HRRN",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown policy `{0}` (valid policies: fcfs, sjf, pr, hrrn)")]
pub struct UnknownPolicy(pub String);

impl FromStr for Policy {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "fcfs" => Ok(Policy::Fcfs),
            "sjf" => Ok(Policy::Sjf),
            "pr" => Ok(Policy::Pr),
            "hrrn" => Ok(Policy::Hrrn),
            _ => Err(UnknownPolicy(s.to_owned())),
        }
    }
}

/// An ordered, named list of processes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Workload {
    pub name: String,
    pub processes: Vec<Process>,
}

impl Workload {
    pub fn new(name: impl Into<String>, processes: Vec<Process>) -> Self {
        Self {
            name: name.into(),
            processes,
        }
    }

    pub fn len(&self) -> usize {
        self.processes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.processes.is_empty()
    }

    /// Earliest arrival time, `None` for an empty workload.
    pub fn first_arrival(&self) -> Option<Time> {
        self.processes.iter().map(|p| p.it).min()
    }
}

/// Name under which the builtin workload is addressed on the command line.
pub const BUILTIN_WORKLOAD_NAME: &str = "paper-table1";

/// The six-process case-study workload, in its original list order.
pub fn builtin_table_workload() -> Workload {
    Workload::new(
        BUILTIN_WORKLOAD_NAME,
        vec![
            Process::new(1, 6, 4, 2),
            Process::new(2, 7, 3, 1),
            Process::new(3, 8, 2, 2),
            Process::new(4, 5, 2, 3),
            Process::new(5, 9, 3, 1),
            Process::new(6, 1, 3, 4),
        ],
    )
}

/// A single invariant violation found by [`validate_workload`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonPositiveIndex { pi: i64 },
    DuplicateIndex { pi: i64 },
    NegativeArrival { pi: i64, it: Time },
    ServiceTooShort { pi: i64, st: Time },
    NonZeroWait { pi: i64, wt: Time },
    NonZeroStart { pi: i64, es: Time },
    NonZeroMinor { pi: i64, minor: i64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveIndex { pi } => write!(f, "index {pi} must be >= 1"),
            Violation::DuplicateIndex { pi } => write!(f, "duplicate index {pi}"),
            Violation::NegativeArrival { pi, it } => {
                write!(f, "negative arrival {it} for process {pi}")
            }
            Violation::ServiceTooShort { pi, st } => {
                write!(f, "service time must be >= 1 (process {pi} has {st})")
            }
            Violation::NonZeroWait { pi, wt } => {
                write!(f, "fresh process {pi} has nonzero waiting time {wt}")
            }
            Violation::NonZeroStart { pi, es } => {
                write!(f, "fresh process {pi} has nonzero execution start {es}")
            }
            Violation::NonZeroMinor { pi, minor } => {
                write!(f, "fresh process {pi} has nonzero minor priority {minor}")
            }
        }
    }
}

/// Outcome of [`validate_workload`]: empty means valid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<(), WorkloadError> {
        if self.is_ok() {
            Ok(())
        } else {
            Err(WorkloadError::Invalid(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every process invariant and collects all violations.
pub fn validate_workload(w: &Workload) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = HashSet::with_capacity(w.processes.len());
    let mut reported_dup = HashSet::new();
    for p in &w.processes {
        if p.pi < 1 {
            violations.push(Violation::NonPositiveIndex { pi: p.pi });
        }
        if !seen.insert(p.pi) && reported_dup.insert(p.pi) {
            violations.push(Violation::DuplicateIndex { pi: p.pi });
        }
        if p.it < 0 {
            violations.push(Violation::NegativeArrival { pi: p.pi, it: p.it });
        }
        if p.st < 1 {
            violations.push(Violation::ServiceTooShort { pi: p.pi, st: p.st });
        }
        if p.wt != 0 {
            violations.push(Violation::NonZeroWait { pi: p.pi, wt: p.wt });
        }
        if p.es != 0 {
            violations.push(Violation::NonZeroStart { pi: p.pi, es: p.es });
        }
        if p.pr.minor != 0 {
            violations.push(Violation::NonZeroMinor {
                pi: p.pi,
                minor: p.pr.minor,
            });
        }
    }
    ValidationReport { violations }
}

/// On-disk workload encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// Guesses the format from a file extension.
    pub fn from_path(path: &std::path::Path) -> Option<Format> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "json" => Some(Format::Json),
            "csv" => Some(Format::Csv),
            _ => None,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!(
                "unknown workload format `{other}` (expected json or csv)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum WorkloadError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON syntax error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("CSV error{}: {message}", .line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Csv { line: Option<u64>, message: String },
    #[error("invalid workload: {0}")]
    Invalid(ValidationReport),
}

/// One input row: the fields a workload file may carry.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProcessRecord {
    pi: i64,
    it: i64,
    st: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    priority: Option<i64>,
}

impl From<ProcessRecord> for Process {
    fn from(r: ProcessRecord) -> Self {
        Process::new(r.pi, r.it, r.st, r.priority.unwrap_or(0))
    }
}

impl From<&Process> for ProcessRecord {
    fn from(p: &Process) -> Self {
        ProcessRecord {
            pi: p.pi,
            it: p.it,
            st: p.st,
            priority: Some(p.pr.major),
        }
    }
}

/// Parses and validates a workload. `wt`/`es` always start at 0 and a
/// missing priority defaults to 0; out-of-range values are rejected.
pub fn parse_workload(
    mut source: impl Read,
    format: Format,
    name: impl Into<String>,
) -> Result<Workload, WorkloadError> {
    let records: Vec<ProcessRecord> = match format {
        Format::Json => {
            let mut buf = Vec::new();
            source.read_to_end(&mut buf)?;
            serde_json::from_slice(&buf).map_err(|e| WorkloadError::Json {
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?
        }
        Format::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(source);
            check_csv_header(&mut reader)?;
            reader
                .deserialize()
                .collect::<Result<_, _>>()
                .map_err(csv_error)?
        }
    };
    let w = Workload::new(name, records.into_iter().map(Process::from).collect());
    validate_workload(&w).into_result()?;
    Ok(w)
}

fn check_csv_header<R: Read>(reader: &mut csv::Reader<R>) -> Result<(), WorkloadError> {
    const KNOWN: [&str; 4] = ["pi", "it", "st", "priority"];
    let headers = reader.headers().map_err(csv_error)?;
    if let Some(unknown) = headers.iter().find(|h| !KNOWN.contains(h)) {
        return Err(WorkloadError::Csv {
            line: Some(1),
            message: format!("unknown field `{unknown}` (expected pi,it,st,priority)"),
        });
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> WorkloadError {
    WorkloadError::Csv {
        line: e.position().map(|p| p.line()),
        message: e.to_string(),
    }
}

/// Writes the workload in the given format; [`parse_workload`] reads it back unchanged.
pub fn serialize_workload(w: &Workload, format: Format) -> String {
    let records: Vec<ProcessRecord> = w.processes.iter().map(ProcessRecord::from).collect();
    match format {
        Format::Json => serde_json::to_string(&records).expect("records serialize"),
        Format::Csv => {
            let mut out = String::from("pi,it,st,priority\n");
            for r in &records {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    r.pi,
                    r.it,
                    r.st,
                    r.priority.unwrap_or(0)
                ));
            }
            out
        }
    }
}
