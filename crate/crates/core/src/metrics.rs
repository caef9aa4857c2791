//! Schedule metrics and Gantt data derived from a finished run.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::kernel::EngineState;
use crate::sched::{place_token, ProcList, SchedPlace};
use crate::workload::{Policy, Process, Time, Workload};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ProcessMetrics {
    pub start: Time,
    pub finish: Time,
    pub waiting: Time,
    pub turnaround: Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aggregates {
    pub avg_waiting: f64,
    pub avg_turnaround: f64,
    pub total_idle: Time,
    pub utilization: f64,
}

/// Half-open `[start, end)` span of processor idleness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Interval {
    pub start: Time,
    pub end: Time,
}

impl Interval {
    pub fn len(&self) -> Time {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleResult {
    pub policy: Policy,
    /// Completion order.
    pub finished: Vec<Process>,
    pub makespan: Time,
    /// Time before the first arrival; not counted as idle.
    pub lead_in: Time,
    pub idle_intervals: Vec<Interval>,
    pub per_process: BTreeMap<i64, ProcessMetrics>,
    /// `None` for an empty workload.
    pub aggregates: Option<Aggregates>,
}

impl ScheduleResult {
    pub fn total_idle(&self) -> Time {
        self.idle_intervals.iter().map(Interval::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("place Finished does not hold exactly one token")]
    NoFinishedToken,
    #[error("process {0} is missing from Finished")]
    Missing(i64),
    #[error("process {0} is not part of the workload or finished twice")]
    Unexpected(i64),
    #[error("process {pi} does not match its workload record")]
    Altered { pi: i64 },
    #[error("process {pi} starts at {start}, before the processor is free at {free}")]
    Overlap { pi: i64, start: Time, free: Time },
    #[error("process {pi} starts at {start}, before its arrival {it}")]
    EarlyStart { pi: i64, start: Time, it: Time },
    #[error("Finished token is ready at {token_time} but the last process ends at {makespan}")]
    MakespanMismatch { token_time: Time, makespan: Time },
}

/// Metrics from the final marking of a scheduler-net run.
pub fn compute_metrics(
    final_state: &EngineState<ProcList>,
    w: &Workload,
    policy: Policy,
) -> Result<ScheduleResult, MetricsError> {
    let token =
        place_token(final_state, SchedPlace::Finished).ok_or(MetricsError::NoFinishedToken)?;
    let result = schedule_from_finished(policy, token.value.clone(), w)?;
    if token.ready_time != result.makespan {
        return Err(MetricsError::MakespanMismatch {
            token_time: token.ready_time,
            makespan: result.makespan,
        });
    }
    Ok(result)
}

/// Metrics from a completion-ordered list of finished processes.
pub fn schedule_from_finished(
    policy: Policy,
    finished: Vec<Process>,
    w: &Workload,
) -> Result<ScheduleResult, MetricsError> {
    let mut expected: HashMap<i64, &Process> = w.processes.iter().map(|p| (p.pi, p)).collect();
    for p in &finished {
        let src = expected
            .remove(&p.pi)
            .ok_or(MetricsError::Unexpected(p.pi))?;
        if (src.it, src.st) != (p.it, p.st) {
            return Err(MetricsError::Altered { pi: p.pi });
        }
        if p.es < p.it {
            return Err(MetricsError::EarlyStart {
                pi: p.pi,
                start: p.es,
                it: p.it,
            });
        }
    }
    if let Some(pi) = w
        .processes
        .iter()
        .map(|p| p.pi)
        .find(|pi| expected.contains_key(pi))
    {
        return Err(MetricsError::Missing(pi));
    }

    let lead_in = w.first_arrival().unwrap_or(0);
    let mut by_start: Vec<&Process> = finished.iter().collect();
    by_start.sort_by_key(|p| p.es);
    let mut idle_intervals = Vec::new();
    let mut free = lead_in;
    for p in &by_start {
        if p.es < free {
            return Err(MetricsError::Overlap {
                pi: p.pi,
                start: p.es,
                free,
            });
        }
        if p.es > free {
            idle_intervals.push(Interval {
                start: free,
                end: p.es,
            });
        }
        free = p.es + p.st;
    }
    let makespan = by_start.last().map_or(0, |p| p.es + p.st);

    let per_process: BTreeMap<_, _> = finished
        .iter()
        .map(|p| {
            (
                p.pi,
                ProcessMetrics {
                    start: p.es,
                    finish: p.es + p.st,
                    waiting: p.wt,
                    turnaround: p.wt + p.st,
                },
            )
        })
        .collect();

    let aggregates = (!finished.is_empty()).then(|| {
        let n = finished.len() as f64;
        let busy: Time = finished.iter().map(|p| p.st).sum();
        Aggregates {
            avg_waiting: finished.iter().map(|p| p.wt).sum::<Time>() as f64 / n,
            avg_turnaround: finished.iter().map(|p| p.wt + p.st).sum::<Time>() as f64 / n,
            total_idle: idle_intervals.iter().map(Interval::len).sum(),
            utilization: busy as f64 / (makespan - lead_in) as f64,
        }
    });

    Ok(ScheduleResult {
        policy,
        finished,
        makespan,
        lead_in,
        idle_intervals,
        per_process,
        aggregates,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GanttSegment {
    Run { pi: i64, start: Time, finish: Time },
    Idle { start: Time, finish: Time },
}

impl GanttSegment {
    pub fn start(&self) -> Time {
        match *self {
            GanttSegment::Run { start, .. } | GanttSegment::Idle { start, .. } => start,
        }
    }

    pub fn finish(&self) -> Time {
        match *self {
            GanttSegment::Run { finish, .. } | GanttSegment::Idle { finish, .. } => finish,
        }
    }
}

/// Run and idle segments sorted by start time.
pub fn extract_gantt(result: &ScheduleResult) -> Vec<GanttSegment> {
    let mut segments: Vec<GanttSegment> = result
        .finished
        .iter()
        .map(|p| GanttSegment::Run {
            pi: p.pi,
            start: p.es,
            finish: p.es + p.st,
        })
        .chain(result.idle_intervals.iter().map(|i| GanttSegment::Idle {
            start: i.start,
            finish: i.end,
        }))
        .collect();
    segments.sort_by_key(GanttSegment::start);
    segments
}

/// `kind,pi,start,finish` rows; idle rows leave `pi` empty.
pub fn gantt_csv(segments: &[GanttSegment]) -> String {
    let mut out = String::from("kind,pi,start,finish\n");
    for s in segments {
        match *s {
            GanttSegment::Run { pi, start, finish } => {
                out.push_str(&format!("run,{pi},{start},{finish}\n"))
            }
            GanttSegment::Idle { start, finish } => {
                out.push_str(&format!("idle,,{start},{finish}\n"))
            }
        }
    }
    out
}
