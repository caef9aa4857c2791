#![allow(dead_code)]

use std::collections::BTreeMap;

use proptest::prelude::*;
use tcpn_sched::kernel::{self, Step, DEFAULT_STEP_LIMIT};
use tcpn_sched::metrics::{compute_metrics, ScheduleResult};
use tcpn_sched::sched::{build_net, exists_arrived, place_token, SchedPlace, DISPATCH, IDLE};
use tcpn_sched::{Policy, PriorityPair, Process, Time, Workload};

/// Workloads with shuffled distinct indices; other fields drawn from the given ranges.
pub fn workload_strategy(
    n: std::ops::RangeInclusive<usize>,
    max_it: Time,
    max_st: Time,
) -> impl Strategy<Value = Workload> {
    prop::collection::vec((0..=max_it, 1..=max_st, 0..=9i64), n).prop_flat_map(|rows| {
        let pis: Vec<i64> = (1..=rows.len() as i64).collect();
        (Just(rows), Just(pis).prop_shuffle()).prop_map(|(rows, pis)| {
            let processes = rows
                .into_iter()
                .zip(pis)
                .map(|((it, st, prio), pi)| Process::new(pi, it, st, prio))
                .collect();
            Workload::new("prop", processes)
        })
    })
}

pub fn default_workloads() -> impl Strategy<Value = Workload> {
    workload_strategy(0..=30, 60, 12)
}

fn pi_multiset<'a>(lists: impl Iterator<Item = &'a Vec<Process>>) -> BTreeMap<i64, usize> {
    let mut m = BTreeMap::new();
    for l in lists {
        for p in l {
            *m.entry(p.pi).or_default() += 1;
        }
    }
    m
}

/// What a fully observed run looked like.
pub struct ObservedRun {
    pub result: ScheduleResult,
    pub trace: Vec<kernel::FiringEvent>,
    pub firings: usize,
    pub idle_firings: usize,
}

/// Steps the scheduler net one firing at a time and checks marking-level
/// invariants after every step: one token per place, at most one running
/// process, pi conservation, monotone clock, and no Dispatch while an
/// arrived process is still in NewTasks.
pub fn observe(w: &Workload, policy: Policy) -> Result<ObservedRun, String> {
    let net = build_net(w, policy).map_err(|e| e.to_string())?;
    let mut state = net.initial_state();
    let expected = pi_multiset(std::iter::once(&w.processes));
    let dispatch = net.net.transition_id(DISPATCH).unwrap();
    let idle = net.net.transition_id(IDLE).unwrap();
    let mut firings = 0usize;
    let mut idle_firings = 0usize;
    loop {
        let before = state.clock;
        let step = kernel::step(&net.net, &mut state).map_err(|e| e.to_string())?;
        if state.clock < before {
            return Err(format!("clock went back from {before} to {}", state.clock));
        }
        for place in state.marking.places() {
            if place.tokens.len() != 1 {
                return Err(format!(
                    "{} holds {} tokens",
                    place.name,
                    place.tokens.len()
                ));
            }
        }
        let lists = SchedPlace::ALL.map(|p| &place_token(&state, p).unwrap().value);
        if lists[2].len() > 1 {
            return Err("more than one running process".into());
        }
        if pi_multiset(lists.into_iter()) != expected {
            return Err(format!("pi multiset not conserved at t={}", state.clock));
        }
        match step {
            Step::Fired(id) => {
                firings += 1;
                if id == dispatch && exists_arrived(lists[0], state.clock) {
                    return Err(format!(
                        "Dispatch fired with arrivals pending at t={}",
                        state.clock
                    ));
                }
                if id == idle {
                    idle_firings += 1;
                }
                if firings as u64 > DEFAULT_STEP_LIMIT {
                    return Err("step guard exceeded".into());
                }
            }
            Step::Advanced(_) => {}
            Step::Halted => break,
        }
    }
    let times: Vec<_> = state.trace.iter().map(|e| e.time).collect();
    if times.windows(2).any(|t| t[0] > t[1]) {
        return Err("trace times decrease".into());
    }
    let result = compute_metrics(&state, w, policy).map_err(|e| e.to_string())?;
    Ok(ObservedRun {
        result,
        trace: state.trace,
        firings,
        idle_firings,
    })
}

/// Schedule-level invariants of a finished run.
pub fn check_schedule(w: &Workload, run: &ObservedRun) -> Result<(), String> {
    let r = &run.result;
    let mut spans: Vec<(Time, Time, i64)> = r
        .finished
        .iter()
        .map(|p| (p.es, p.es + p.st, p.pi))
        .collect();
    spans.sort();
    for pair in spans.windows(2) {
        if pair[0].1 > pair[1].0 {
            return Err(format!(
                "executions of {} and {} overlap",
                pair[0].2, pair[1].2
            ));
        }
    }
    for p in &r.finished {
        if p.wt != p.es - p.it {
            return Err(format!("process {}: wt {} != es - it", p.pi, p.wt));
        }
    }
    for gap in &r.idle_intervals {
        if let Some(p) = w
            .processes
            .iter()
            .find(|p| p.it <= gap.start && r.per_process[&p.pi].finish > gap.start)
        {
            return Err(format!(
                "idle at {} while process {} was waiting",
                gap.start, p.pi
            ));
        }
    }
    let busy: Time = w.processes.iter().map(|p| p.st).sum();
    if !w.is_empty() && r.total_idle() + busy != r.makespan - r.lead_in {
        return Err("idle + busy does not cover [first arrival, makespan]".into());
    }
    let n = w.len();
    if run.idle_firings as Time != r.lead_in + r.total_idle() {
        return Err(format!(
            "{} idle ticks fired, expected {}",
            run.idle_firings,
            r.lead_in + r.total_idle()
        ));
    }
    if run.firings > 4 * n + run.idle_firings {
        return Err(format!("{} firings exceed 4n + idle ticks", run.firings));
    }
    Ok(())
}

pub fn hrrn_ratio_recorded(r: &ScheduleResult) -> Result<(), String> {
    for p in &r.finished {
        let expected = ((p.st + p.wt) * 100).div_euclid(p.st);
        if p.pr.major != expected || p.pr.minor != 0 {
            return Err(format!(
                "process {}: recorded {} expected ({expected},0)",
                p.pi, p.pr
            ));
        }
    }
    Ok(())
}

pub fn avg_waiting(r: &ScheduleResult) -> f64 {
    r.aggregates.map_or(0.0, |a| a.avg_waiting)
}

pub fn policy() -> impl Strategy<Value = Policy> {
    prop::sample::select(Policy::ALL.to_vec())
}

/// Distinct-index processes with arbitrary (tie-prone) priority pairs.
pub fn ranked_list(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Process>> {
    prop::collection::vec((0..4i64, 0..3i64), len).prop_flat_map(|prs| {
        let pis: Vec<i64> = (1..=prs.len() as i64).collect();
        (Just(prs), Just(pis).prop_shuffle()).prop_map(|(prs, pis)| {
            prs.into_iter()
                .zip(pis)
                .map(|((major, minor), pi)| Process {
                    pr: PriorityPair::new(major, minor),
                    ..Process::new(pi, 0, 1, 0)
                })
                .collect()
        })
    })
}
