//! Direct event-driven reference scheduler.
//!
//! Shares nothing with the Petri net path except the input records: it keeps
//! its own pending list and clock, and ranks candidates with a lexicographic
//! "smaller is better" key rather than the pairwise comparison used by the net.

use std::fmt;

use crate::metrics::ScheduleResult;
use crate::workload::{
    validate_workload, Policy, PriorityPair, Process, Time, ValidationReport, Workload,
};

/// One dispatch decision of the reference scheduler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleEvent {
    pub pi: i64,
    pub dispatch: Time,
    pub finish: Time,
    pub waiting: Time,
    /// Priority pair as the policy records it at dispatch time.
    pub pr: PriorityPair,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleSchedule {
    pub policy: Policy,
    /// Events in dispatch order.
    pub events: Vec<OracleEvent>,
}

impl OracleSchedule {
    /// Processes as they would sit in the `Finished` place.
    pub fn finished(&self, w: &Workload) -> Vec<Process> {
        self.events
            .iter()
            .map(|e| {
                let src = w
                    .processes
                    .iter()
                    .find(|p| p.pi == e.pi)
                    .expect("oracle only schedules workload processes");
                Process {
                    wt: e.waiting,
                    es: e.dispatch,
                    pr: e.pr,
                    ..*src
                }
            })
            .collect()
    }
}

/// Sort key of a candidate at time `now`: lowest key runs next.
fn rank_key(p: &Process, policy: Policy, now: Time) -> (i64, i64, i64) {
    match policy {
        Policy::Fcfs => (p.it, 0, p.pi),
        Policy::Sjf => (p.st, p.it, p.pi),
        Policy::Pr => (-p.pr.major, p.it, p.pi),
        Policy::Hrrn => (-hrrn_percent(p, now), 0, p.pi),
    }
}

fn hrrn_percent(p: &Process, now: Time) -> i64 {
    let waited = now - p.it;
    // Truncating division of non-negative values.
    (100 * (p.st + waited)) / p.st
}

fn recorded_priority(p: &Process, policy: Policy, now: Time) -> PriorityPair {
    match policy {
        Policy::Fcfs => PriorityPair::new(p.it, 0),
        Policy::Sjf => PriorityPair::new(p.st, p.it),
        Policy::Pr => PriorityPair::new(p.pr.major, p.it),
        Policy::Hrrn => PriorityPair::new(hrrn_percent(p, now), 0),
    }
}

/// Simulates non-preemptive scheduling of `w` under `policy`.
pub fn oracle_schedule(w: &Workload, policy: Policy) -> Result<OracleSchedule, ValidationReport> {
    let report = validate_workload(w);
    if !report.is_ok() {
        return Err(report);
    }
    let mut pending: Vec<Process> = w.processes.clone();
    let mut events = Vec::with_capacity(pending.len());
    let mut t: Time = 0;
    while !pending.is_empty() {
        let best = pending
            .iter()
            .enumerate()
            .filter(|(_, p)| p.it <= t)
            .min_by_key(|(_, p)| rank_key(p, policy, t))
            .map(|(i, _)| i);
        let Some(i) = best else {
            t = pending
                .iter()
                .map(|p| p.it)
                .min()
                .expect("pending is nonempty");
            continue;
        };
        let p = pending.swap_remove(i);
        events.push(OracleEvent {
            pi: p.pi,
            dispatch: t,
            finish: t + p.st,
            waiting: t - p.it,
            pr: recorded_priority(&p, policy, t),
        });
        t += p.st;
    }
    Ok(OracleSchedule { policy, events })
}

/// First disagreement between the engine and the oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Divergence {
    PolicyMismatch {
        engine: Policy,
        oracle: Policy,
    },
    Length {
        engine: usize,
        oracle: usize,
    },
    Field {
        position: usize,
        pi: i64,
        field: &'static str,
        engine: String,
        oracle: String,
    },
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::PolicyMismatch { engine, oracle } => {
                write!(
                    f,
                    "policy mismatch: engine ran {engine}, oracle ran {oracle}"
                )
            }
            Divergence::Length { engine, oracle } => {
                write!(f, "engine finished {engine} processes, oracle {oracle}")
            }
            Divergence::Field {
                position,
                pi,
                field,
                engine,
                oracle,
            } => write!(
                f,
                "dispatch #{position} (pi {pi}): {field} engine={engine} oracle={oracle}"
            ),
        }
    }
}

/// Comparison outcome; clean when `divergence` is `None`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffReport {
    pub divergence: Option<Divergence>,
}

impl DiffReport {
    pub fn is_clean(&self) -> bool {
        self.divergence.is_none()
    }
}

impl fmt::Display for DiffReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.divergence {
            None => f.write_str("no divergence"),
            Some(d) => write!(f, "first divergence: {d}"),
        }
    }
}

/// Compares dispatch order, dispatch and finish times, waits and recorded priorities.
pub fn diff_results(engine: &ScheduleResult, oracle: &OracleSchedule) -> DiffReport {
    DiffReport {
        divergence: first_divergence(engine, oracle),
    }
}

fn first_divergence(engine: &ScheduleResult, oracle: &OracleSchedule) -> Option<Divergence> {
    if engine.policy != oracle.policy {
        return Some(Divergence::PolicyMismatch {
            engine: engine.policy,
            oracle: oracle.policy,
        });
    }
    for (position, (p, e)) in engine.finished.iter().zip(&oracle.events).enumerate() {
        let field = |field: &'static str, a: String, b: String| {
            (a != b).then_some(Divergence::Field {
                position,
                pi: p.pi,
                field,
                engine: a,
                oracle: b,
            })
        };
        let found = field("pi", p.pi.to_string(), e.pi.to_string())
            .or_else(|| field("dispatch", p.es.to_string(), e.dispatch.to_string()))
            .or_else(|| field("finish", (p.es + p.st).to_string(), e.finish.to_string()))
            .or_else(|| field("waiting", p.wt.to_string(), e.waiting.to_string()))
            .or_else(|| field("pr", p.pr.to_string(), e.pr.to_string()));
        if found.is_some() {
            return found;
        }
    }
    (engine.finished.len() != oracle.events.len()).then_some(Divergence::Length {
        engine: engine.finished.len(),
        oracle: oracle.events.len(),
    })
}
