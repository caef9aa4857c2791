//! The single-processor non-preemptive scheduler net.
//!
//! Four places, each holding exactly one token whose color is a process list:
//!
//! * `NewTasks`: processes that have not arrived yet,
//! * `ReadyQueue`: arrived processes waiting for the processor,
//! * `Running`: at most one dispatched process,
//! * `Finished`: completed processes in completion order.
//!
//! Four transitions move processes between them. `Activate` admits arrivals,
//! `Dispatch` picks the highest-priority ready process under the net's
//! [`Policy`], `Execute` runs it to completion by delaying the `Running` and
//! `Finished` tokens by its service time, and `Idle` delays `NewTasks` by one
//! tick while the processor has nothing to do.
//!
//! The list helpers below are the building blocks of guards and actions and
//! are exposed for direct testing.

use std::cmp::Ordering;

use serde_json::json;
use thiserror::Error;

use crate::kernel::{
    self, ActionInput, EngineState, Firing, GuardInput, KernelError, ModelError, Net, Output,
    PlaceId, TimedToken, Transition,
};
use crate::workload::{
    validate_workload, Policy, PriorityPair, Process, Time, ValidationReport, Workload,
};

/// Color of every token in the scheduler net.
pub type ProcList = Vec<Process>;

/// Fixed-point scale applied to HRRN response ratios.
pub const HRRN_SCALE: i64 = 100;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SchedError {
    #[error("process {pi}: service time {st} must be >= 1")]
    NonPositiveService { pi: i64, st: Time },
    #[error("process {pi}: clock {now} is before its arrival {it}")]
    NotArrived { pi: i64, it: Time, now: Time },
    #[error("cannot elect from an empty ready list")]
    EmptyList,
    #[error("invalid workload: {0}")]
    InvalidWorkload(ValidationReport),
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

impl From<SchedError> for ModelError {
    fn from(e: SchedError) -> Self {
        ModelError(e.to_string())
    }
}

pub fn on_time(p: &Process, now: Time) -> bool {
    p.it <= now
}

/// Arrived processes, in list order.
pub fn select_arrived(l: &[Process], now: Time) -> ProcList {
    l.iter().filter(|p| on_time(p, now)).copied().collect()
}

/// Not-yet-arrived processes, in list order.
pub fn remove_arrived(l: &[Process], now: Time) -> ProcList {
    l.iter().filter(|p| !on_time(p, now)).copied().collect()
}

pub fn exists_arrived(l: &[Process], now: Time) -> bool {
    l.iter().any(|p| on_time(p, now))
}

/// HRRN response ratio `(st + wt) / st` in fixed point, truncating.
pub fn response_ratio(st: Time, wt: Time, scale: i64) -> i64 {
    ((st + wt) * scale).div_euclid(st)
}

/// Recomputes the priority pair of `p` for `policy`.
///
/// * FCFS: `(it, 0)`
/// * SJF: `(st, it)`
/// * PR: `(static priority, it)`
/// * HRRN: `(response ratio × 100, 0)`
pub fn update_priority(policy: Policy, p: &Process) -> Result<Process, SchedError> {
    update_priority_scaled(policy, p, HRRN_SCALE)
}

/// [`update_priority`] with an explicit HRRN fixed-point scale.
pub fn update_priority_scaled(
    policy: Policy,
    p: &Process,
    scale: i64,
) -> Result<Process, SchedError> {
    if p.st < 1 {
        return Err(SchedError::NonPositiveService { pi: p.pi, st: p.st });
    }
    let pr = match policy {
        Policy::Fcfs => PriorityPair::new(p.it, 0),
        Policy::Sjf => PriorityPair::new(p.st, p.it),
        Policy::Pr => PriorityPair::new(p.pr.major, p.it),
        Policy::Hrrn => PriorityPair::new(response_ratio(p.st, p.wt, scale), 0),
    };
    Ok(Process { pr, ..*p })
}

pub fn update_proc_wait(p: &Process, now: Time) -> Result<Process, SchedError> {
    if now < p.it {
        return Err(SchedError::NotArrived {
            pi: p.pi,
            it: p.it,
            now,
        });
    }
    Ok(Process {
        wt: now - p.it,
        ..*p
    })
}

/// Refreshes waiting times, then priorities, of every listed process.
pub fn update_all(l: &[Process], policy: Policy, now: Time) -> Result<ProcList, SchedError> {
    update_all_scaled(l, policy, now, HRRN_SCALE)
}

pub fn update_all_scaled(
    l: &[Process],
    policy: Policy,
    now: Time,
    scale: i64,
) -> Result<ProcList, SchedError> {
    l.iter()
        .map(|p| update_proc_wait(p, now).and_then(|p| update_priority_scaled(policy, &p, scale)))
        .collect()
}

/// Compares two priority values in the policy's direction.
///
/// `Greater` means `a` is the higher priority. FCFS and SJF prefer the lower
/// value; PR and HRRN prefer the greater one.
pub fn cmp_scalar(a: i64, b: i64, policy: Policy) -> Ordering {
    match policy {
        Policy::Fcfs | Policy::Sjf => b.cmp(&a),
        Policy::Pr | Policy::Hrrn => a.cmp(&b),
    }
}

/// Strict priority order between two processes with computed priorities.
///
/// Major field first in the policy direction, then the minor field (a lower
/// minor always wins: for PR it is the arrival time), then the lower index.
/// Returns `Greater` when `p1` has the higher priority; never `Equal`.
///
/// # Panics
///
/// If both processes share an index.
pub fn compare_process(p1: &Process, p2: &Process, policy: Policy) -> Ordering {
    assert_ne!(
        p1.pi, p2.pi,
        "compare_process called on one process index twice"
    );
    cmp_scalar(p1.pr.major, p2.pr.major, policy)
        .then_with(|| p2.pr.minor.cmp(&p1.pr.minor))
        .then_with(|| p2.pi.cmp(&p1.pi))
}

/// Zero-based index of the highest-priority process.
///
/// Left fold over the list: the current best is kept while it compares
/// higher, otherwise the challenger takes over.
pub fn elect(l: &[Process], policy: Policy) -> Result<usize, SchedError> {
    let (first, rest) = l.split_first().ok_or(SchedError::EmptyList)?;
    let mut best = 0;
    let mut best_p = first;
    for (c, p) in rest.iter().enumerate() {
        if compare_process(best_p, p, policy) != Ordering::Greater {
            best = c + 1;
            best_p = p;
        }
    }
    Ok(best)
}

pub fn choose(l: &[Process], policy: Policy) -> Result<Process, SchedError> {
    Ok(l[elect(l, policy)?])
}

/// `l` without the elected process, order otherwise preserved.
pub fn remaining(l: &[Process], policy: Policy) -> Result<ProcList, SchedError> {
    let mx = elect(l, policy)?;
    Ok(l[..mx].iter().chain(&l[mx + 1..]).copied().collect())
}

pub fn set_execution_start(p: &Process, now: Time) -> Process {
    Process { es: now, ..*p }
}

/// True when nothing runs, nothing is ready and the next arrival is still ahead.
pub fn is_idle(ready: &[Process], new: &[Process], run: &[Process], now: Time) -> bool {
    run.is_empty() && ready.is_empty() && !new.is_empty() && !exists_arrived(new, now)
}

/// Places of the scheduler net, in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchedPlace {
    NewTasks,
    ReadyQueue,
    Running,
    Finished,
}

impl SchedPlace {
    pub const ALL: [SchedPlace; 4] = [
        SchedPlace::NewTasks,
        SchedPlace::ReadyQueue,
        SchedPlace::Running,
        SchedPlace::Finished,
    ];

    pub const fn id(self) -> PlaceId {
        PlaceId(self as usize)
    }

    pub const fn name(self) -> &'static str {
        match self {
            SchedPlace::NewTasks => "NewTasks",
            SchedPlace::ReadyQueue => "ReadyQueue",
            SchedPlace::Running => "Running",
            SchedPlace::Finished => "Finished",
        }
    }
}

pub const ACTIVATE: &str = "Activate";
pub const EXECUTE: &str = "Execute";
pub const DISPATCH: &str = "Dispatch";
pub const IDLE: &str = "Idle";

const NEW: PlaceId = SchedPlace::NewTasks.id();
const READY: PlaceId = SchedPlace::ReadyQueue.id();
const RUNNING: PlaceId = SchedPlace::Running.id();
const FINISHED: PlaceId = SchedPlace::Finished.id();

fn pis(l: &[Process]) -> Vec<i64> {
    l.iter().map(|p| p.pi).collect()
}

fn running_slot(run: &[Process]) -> Result<Option<&Process>, ModelError> {
    match run {
        [] => Ok(None),
        [p] => Ok(Some(p)),
        _ => Err(ModelError::new(format!(
            "Running holds {} processes on a single processor",
            run.len()
        ))),
    }
}

/// A scheduler net for one policy, with the workload it was built for.
#[derive(Debug)]
pub struct SchedulerNet {
    pub policy: Policy,
    pub net: Net<ProcList>,
    workload: Workload,
}

impl SchedulerNet {
    pub fn workload(&self) -> &Workload {
        &self.workload
    }

    /// NewTasks holds the workload, every other place an empty list; all ready at 0.
    pub fn initial_state(&self) -> EngineState<ProcList> {
        let mut m = self.net.empty_marking();
        m.put(NEW, TimedToken::new(self.workload.processes.clone(), 0));
        for place in [READY, RUNNING, FINISHED] {
            m.put(place, TimedToken::new(Vec::new(), 0));
        }
        EngineState::new(m)
    }

    pub fn run(&self, step_limit: u64) -> Result<EngineState<ProcList>, SchedError> {
        Ok(kernel::run(&self.net, self.initial_state(), step_limit)?)
    }
}

/// The single token of a scheduler place.
pub fn place_token(
    state: &EngineState<ProcList>,
    place: SchedPlace,
) -> Option<&TimedToken<ProcList>> {
    state.marking.sole_token(place.id())
}

/// Builds the scheduler net for a validated workload.
pub fn build_net(w: &Workload, policy: Policy) -> Result<SchedulerNet, SchedError> {
    let report = validate_workload(w);
    if !report.is_ok() {
        return Err(SchedError::InvalidWorkload(report));
    }

    let mut b = Net::builder();
    for place in SchedPlace::ALL {
        let id = b.place(place.name());
        debug_assert_eq!(id, place.id());
    }

    b.transition(Transition::new(
        ACTIVATE,
        0,
        vec![NEW, READY],
        vec![],
        |inp: &GuardInput<'_, ProcList>, now| Ok(exists_arrived(inp.consumed[0], now)),
        |inp: ActionInput<'_, ProcList>, now| {
            let mut consumed = inp.consumed.into_iter();
            let mut new = consumed.next().expect("NewTasks bound");
            let mut ready = consumed.next().expect("ReadyQueue bound");
            let before = ready.len();
            // Partitions NewTasks in place; both halves keep their list order.
            new.retain(|p| {
                if on_time(p, now) {
                    ready.push(*p);
                    false
                } else {
                    true
                }
            });
            let detail = json!({ "arrived": pis(&ready[before..]) });
            Ok(Firing {
                outputs: vec![
                    Output {
                        place: NEW,
                        value: new,
                        ready_time: now,
                    },
                    Output {
                        place: READY,
                        value: ready,
                        ready_time: now,
                    },
                ],
                detail,
            })
        },
    ));

    b.transition(Transition::new(
        EXECUTE,
        1,
        vec![RUNNING, FINISHED],
        vec![],
        |inp: &GuardInput<'_, ProcList>, _| Ok(running_slot(inp.consumed[0])?.is_some()),
        |inp: ActionInput<'_, ProcList>, now| {
            let mut consumed = inp.consumed.into_iter();
            let run = consumed.next().expect("Running bound");
            let mut finished = consumed.next().expect("Finished bound");
            let p = set_execution_start(
                running_slot(&run)?
                    .ok_or_else(|| ModelError::new("Execute with nothing running"))?,
                now,
            );
            let done = now + p.st;
            finished.push(p);
            Ok(Firing {
                outputs: vec![
                    Output {
                        place: FINISHED,
                        value: finished,
                        ready_time: done,
                    },
                    Output {
                        place: RUNNING,
                        value: Vec::new(),
                        ready_time: done,
                    },
                ],
                detail: json!({ "pi": p.pi, "start": now, "finish": done }),
            })
        },
    ));

    b.transition(Transition::new(
        DISPATCH,
        2,
        vec![READY, RUNNING],
        vec![NEW],
        |inp: &GuardInput<'_, ProcList>, now| {
            Ok(running_slot(inp.consumed[1])?.is_none()
                && !inp.consumed[0].is_empty()
                && !exists_arrived(inp.read[0], now))
        },
        move |inp: ActionInput<'_, ProcList>, now| {
            let updated = update_all(&inp.consumed[0], policy, now)?;
            let idx = elect(&updated, policy)?;
            let mut rest = updated;
            let chosen = rest.remove(idx);
            Ok(Firing {
                outputs: vec![
                    Output {
                        place: RUNNING,
                        value: vec![chosen],
                        ready_time: now,
                    },
                    Output {
                        place: READY,
                        value: rest,
                        ready_time: now,
                    },
                ],
                detail: json!({
                    "pi": chosen.pi,
                    "wt": chosen.wt,
                    "pr": [chosen.pr.major, chosen.pr.minor],
                }),
            })
        },
    ));

    b.transition(Transition::new(
        IDLE,
        3,
        vec![NEW],
        vec![READY, RUNNING],
        |inp: &GuardInput<'_, ProcList>, now| {
            running_slot(inp.read[1])?;
            Ok(is_idle(inp.read[0], inp.consumed[0], inp.read[1], now))
        },
        |inp: ActionInput<'_, ProcList>, now| {
            let new = inp.consumed.into_iter().next().expect("NewTasks bound");
            Ok(Firing {
                outputs: vec![Output {
                    place: NEW,
                    value: new,
                    ready_time: now + 1,
                }],
                detail: json!({ "tick": now }),
            })
        },
    ));

    Ok(SchedulerNet {
        policy,
        net: b.build()?,
        workload: w.clone(),
    })
}
