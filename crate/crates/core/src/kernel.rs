//! A small timed colored Petri net engine.
//!
//! Places hold timed tokens carrying an arbitrary color value `V`. A token is
//! *available* once its ready-time is at or before the global clock. Each
//! transition declares consumed and read-only input places; it is enabled
//! when every input place offers an available token and its guard holds.
//!
//! The engine always fires the lowest-rank enabled transition at the current
//! clock. When nothing is enabled the clock jumps to the earliest token
//! ready-time in the future, and the run halts when no such token exists.
//!
//! Binding is positional: an input arc binds the first available token of its
//! place in insertion order. There is no search over variable bindings.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workload::Time;

/// Firing guard used by [`run`] when no explicit limit is given.
pub const DEFAULT_STEP_LIMIT: u64 = 1_000_000;

/// Index of a place within its net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PlaceId(pub usize);

/// Index of a transition within its net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TransitionId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimedToken<V> {
    pub value: V,
    pub ready_time: Time,
}

impl<V> TimedToken<V> {
    pub fn new(value: V, ready_time: Time) -> Self {
        Self { value, ready_time }
    }

    pub fn is_available(&self, clock: Time) -> bool {
        self.ready_time <= clock
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Place<V> {
    pub name: String,
    pub tokens: Vec<TimedToken<V>>,
}

impl<V> Place<V> {
    fn first_available(&self, clock: Time) -> Option<usize> {
        self.tokens.iter().position(|t| t.is_available(clock))
    }
}

/// Token contents of every place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marking<V> {
    places: Vec<Place<V>>,
}

impl<V> Marking<V> {
    pub fn place(&self, id: PlaceId) -> &Place<V> {
        &self.places[id.0]
    }

    pub fn places(&self) -> &[Place<V>] {
        &self.places
    }

    /// The single token of `id`, if the place holds exactly one.
    pub fn sole_token(&self, id: PlaceId) -> Option<&TimedToken<V>> {
        match self.places.get(id.0)?.tokens.as_slice() {
            [t] => Some(t),
            _ => None,
        }
    }

    /// Adds a token. Intended for building initial markings.
    pub fn put(&mut self, id: PlaceId, token: TimedToken<V>) {
        self.places[id.0].tokens.push(token);
    }

    fn tokens(&self) -> impl Iterator<Item = &TimedToken<V>> {
        self.places.iter().flat_map(|p| p.tokens.iter())
    }
}

/// One entry of the firing trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiringEvent {
    #[serde(rename = "t")]
    pub time: Time,
    pub transition: String,
    pub detail: serde_json::Value,
}

/// Serializes a trace as a JSON array of `{"t","transition","detail"}` objects.
pub fn trace_to_json(trace: &[FiringEvent]) -> String {
    serde_json::to_string(trace).expect("trace serializes")
}

/// Failure raised by a guard or an action, usually a malformed token value.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ModelError(pub String);

impl ModelError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KernelError {
    #[error("invalid net: {0}")]
    InvalidNet(String),
    #[error("marking has {found} places but the net declares {expected}")]
    MarkingShape { expected: usize, found: usize },
    #[error("transition `{0}` is not enabled")]
    NotEnabled(String),
    #[error("cannot advance the clock while `{0}` is enabled")]
    StillEnabled(String),
    #[error("model error in `{transition}` at t={time}: {error}")]
    Model {
        transition: String,
        time: Time,
        error: ModelError,
    },
    #[error("`{transition}` produced a token for place `{place}` ready at {ready_time}, before the clock {clock}")]
    TokenInPast {
        transition: String,
        place: String,
        ready_time: Time,
        clock: Time,
    },
    #[error("step limit of {0} firings exceeded")]
    StepLimit(u64),
}

/// Values bound to a transition's input arcs, in declaration order.
pub struct GuardInput<'a, V> {
    pub consumed: Vec<&'a V>,
    pub read: Vec<&'a V>,
}

/// Values handed to an action: consumed tokens by value, read tokens by reference.
pub struct ActionInput<'a, V> {
    pub consumed: Vec<V>,
    pub read: Vec<&'a V>,
}

/// A token produced by an action.
pub struct Output<V> {
    pub place: PlaceId,
    pub value: V,
    pub ready_time: Time,
}

/// Result of an action: produced tokens plus a trace summary.
pub struct Firing<V> {
    pub outputs: Vec<Output<V>>,
    pub detail: serde_json::Value,
}

pub type Guard<V> = Box<dyn Fn(&GuardInput<'_, V>, Time) -> Result<bool, ModelError> + Send + Sync>;
pub type Action<V> =
    Box<dyn Fn(ActionInput<'_, V>, Time) -> Result<Firing<V>, ModelError> + Send + Sync>;

pub struct Transition<V> {
    pub name: String,
    pub consumed: Vec<PlaceId>,
    pub read: Vec<PlaceId>,
    /// Lower rank fires first when several transitions are enabled.
    pub rank: u32,
    guard: Guard<V>,
    action: Action<V>,
}

impl<V> Transition<V> {
    pub fn new(
        name: impl Into<String>,
        rank: u32,
        consumed: Vec<PlaceId>,
        read: Vec<PlaceId>,
        guard: impl Fn(&GuardInput<'_, V>, Time) -> Result<bool, ModelError> + Send + Sync + 'static,
        action: impl Fn(ActionInput<'_, V>, Time) -> Result<Firing<V>, ModelError>
            + Send
            + Sync
            + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            consumed,
            read,
            rank,
            guard: Box::new(guard),
            action: Box::new(action),
        }
    }
}

impl<V> fmt::Debug for Transition<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Transition")
            .field("name", &self.name)
            .field("rank", &self.rank)
            .field("consumed", &self.consumed)
            .field("read", &self.read)
            .finish_non_exhaustive()
    }
}

/// Net structure. Transitions are kept sorted by rank (stable in declaration order).
#[derive(Debug)]
pub struct Net<V> {
    place_names: Vec<String>,
    transitions: Vec<Transition<V>>,
}

impl<V> Net<V> {
    pub fn builder() -> NetBuilder<V> {
        NetBuilder {
            place_names: Vec::new(),
            transitions: Vec::new(),
        }
    }

    pub fn place_names(&self) -> &[String] {
        &self.place_names
    }

    pub fn place_id(&self, name: &str) -> Option<PlaceId> {
        self.place_names.iter().position(|n| n == name).map(PlaceId)
    }

    pub fn transitions(&self) -> &[Transition<V>] {
        &self.transitions
    }

    pub fn transition(&self, id: TransitionId) -> &Transition<V> {
        &self.transitions[id.0]
    }

    pub fn transition_id(&self, name: &str) -> Option<TransitionId> {
        self.transitions
            .iter()
            .position(|t| t.name == name)
            .map(TransitionId)
    }

    /// A marking with every place empty.
    pub fn empty_marking(&self) -> Marking<V> {
        Marking {
            places: self
                .place_names
                .iter()
                .map(|name| Place {
                    name: name.clone(),
                    tokens: Vec::new(),
                })
                .collect(),
        }
    }
}

pub struct NetBuilder<V> {
    place_names: Vec<String>,
    transitions: Vec<Transition<V>>,
}

impl<V> NetBuilder<V> {
    pub fn place(&mut self, name: impl Into<String>) -> PlaceId {
        self.place_names.push(name.into());
        PlaceId(self.place_names.len() - 1)
    }

    pub fn transition(&mut self, t: Transition<V>) -> &mut Self {
        self.transitions.push(t);
        self
    }

    pub fn build(self) -> Result<Net<V>, KernelError> {
        let n = self.place_names.len();
        for (i, name) in self.place_names.iter().enumerate() {
            if self.place_names[..i].contains(name) {
                return Err(KernelError::InvalidNet(format!("duplicate place `{name}`")));
            }
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if self.transitions[..i].iter().any(|o| o.name == t.name) {
                return Err(KernelError::InvalidNet(format!(
                    "duplicate transition `{}`",
                    t.name
                )));
            }
            let arcs: Vec<_> = t.consumed.iter().chain(&t.read).collect();
            for (j, p) in arcs.iter().enumerate() {
                if p.0 >= n {
                    return Err(KernelError::InvalidNet(format!(
                        "`{}` refers to undeclared place #{}",
                        t.name, p.0
                    )));
                }
                if arcs[..j].contains(p) {
                    return Err(KernelError::InvalidNet(format!(
                        "`{}` has two input arcs from `{}`",
                        t.name, self.place_names[p.0]
                    )));
                }
            }
        }
        let mut transitions = self.transitions;
        transitions.sort_by_key(|t| t.rank);
        Ok(Net {
            place_names: self.place_names,
            transitions,
        })
    }
}

/// Marking, clock and trace of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineState<V> {
    pub marking: Marking<V>,
    pub clock: Time,
    pub trace: Vec<FiringEvent>,
}

impl<V> EngineState<V> {
    pub fn new(marking: Marking<V>) -> Self {
        Self {
            marking,
            clock: 0,
            trace: Vec::new(),
        }
    }
}

/// What a single [`step`] did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Fired(TransitionId),
    Advanced(Time),
    Halted,
}

fn check_shape<V>(net: &Net<V>, state: &EngineState<V>) -> Result<(), KernelError> {
    let found = state.marking.places.len();
    let expected = net.place_names.len();
    if found != expected {
        return Err(KernelError::MarkingShape { expected, found });
    }
    Ok(())
}

fn is_enabled<V>(state: &EngineState<V>, t: &Transition<V>) -> Result<bool, KernelError> {
    let clock = state.clock;
    let bind = |ids: &[PlaceId]| -> Option<Vec<&V>> {
        ids.iter()
            .map(|id| {
                let place = state.marking.place(*id);
                place.first_available(clock).map(|i| &place.tokens[i].value)
            })
            .collect()
    };
    let (Some(consumed), Some(read)) = (bind(&t.consumed), bind(&t.read)) else {
        return Ok(false);
    };
    (t.guard)(&GuardInput { consumed, read }, clock).map_err(|error| KernelError::Model {
        transition: t.name.clone(),
        time: clock,
        error,
    })
}

/// Enabled transitions at the current clock, lowest rank first.
pub fn enabled<V>(net: &Net<V>, state: &EngineState<V>) -> Result<Vec<TransitionId>, KernelError> {
    check_shape(net, state)?;
    let mut out = Vec::new();
    for (i, t) in net.transitions.iter().enumerate() {
        if is_enabled(state, t)? {
            out.push(TransitionId(i));
        }
    }
    Ok(out)
}

fn first_enabled<V>(
    net: &Net<V>,
    state: &EngineState<V>,
) -> Result<Option<TransitionId>, KernelError> {
    for (i, t) in net.transitions.iter().enumerate() {
        if is_enabled(state, t)? {
            return Ok(Some(TransitionId(i)));
        }
    }
    Ok(None)
}

/// Fires `id`, rejecting it if it is not enabled. The clock does not move.
pub fn fire<V>(
    net: &Net<V>,
    state: &mut EngineState<V>,
    id: TransitionId,
) -> Result<(), KernelError> {
    check_shape(net, state)?;
    let t = net
        .transitions
        .get(id.0)
        .ok_or_else(|| KernelError::NotEnabled(format!("#{}", id.0)))?;
    if !is_enabled(state, t)? {
        return Err(KernelError::NotEnabled(t.name.clone()));
    }
    fire_enabled(net, state, t)
}

fn fire_enabled<V>(
    net: &Net<V>,
    state: &mut EngineState<V>,
    t: &Transition<V>,
) -> Result<(), KernelError> {
    let clock = state.clock;
    let mut consumed = Vec::with_capacity(t.consumed.len());
    for id in &t.consumed {
        let place = &mut state.marking.places[id.0];
        let idx = place
            .first_available(clock)
            .expect("enabled transition has available inputs");
        consumed.push(place.tokens.remove(idx).value);
    }
    let read = t
        .read
        .iter()
        .map(|id| {
            let place = state.marking.place(*id);
            let idx = place
                .first_available(clock)
                .expect("enabled transition has available inputs");
            &place.tokens[idx].value
        })
        .collect();
    let firing =
        (t.action)(ActionInput { consumed, read }, clock).map_err(|error| KernelError::Model {
            transition: t.name.clone(),
            time: clock,
            error,
        })?;
    for out in firing.outputs {
        if out.place.0 >= net.place_names.len() {
            return Err(KernelError::InvalidNet(format!(
                "`{}` produced a token for undeclared place #{}",
                t.name, out.place.0
            )));
        }
        if out.ready_time < clock {
            return Err(KernelError::TokenInPast {
                transition: t.name.clone(),
                place: net.place_names[out.place.0].clone(),
                ready_time: out.ready_time,
                clock,
            });
        }
        state
            .marking
            .put(out.place, TimedToken::new(out.value, out.ready_time));
    }
    state.trace.push(FiringEvent {
        time: clock,
        transition: t.name.clone(),
        detail: firing.detail,
    });
    Ok(())
}

fn next_ready_time<V>(state: &EngineState<V>) -> Option<Time> {
    state
        .marking
        .tokens()
        .map(|t| t.ready_time)
        .filter(|&r| r > state.clock)
        .min()
}

/// Moves the clock to the earliest future token ready-time.
///
/// Returns `None` (halt) when no token becomes ready after the current clock.
/// Fails if a transition is still enabled at the current clock.
pub fn advance_clock<V>(
    net: &Net<V>,
    state: &mut EngineState<V>,
) -> Result<Option<Time>, KernelError> {
    check_shape(net, state)?;
    if let Some(id) = first_enabled(net, state)? {
        return Err(KernelError::StillEnabled(net.transition(id).name.clone()));
    }
    Ok(advance_unchecked(state))
}

fn advance_unchecked<V>(state: &mut EngineState<V>) -> Option<Time> {
    let next = next_ready_time(state)?;
    state.clock = next;
    Some(next)
}

/// Fires the lowest-rank enabled transition, or advances the clock when none is enabled.
pub fn step<V>(net: &Net<V>, state: &mut EngineState<V>) -> Result<Step, KernelError> {
    check_shape(net, state)?;
    match first_enabled(net, state)? {
        Some(id) => {
            fire_enabled(net, state, net.transition(id))?;
            Ok(Step::Fired(id))
        }
        None => Ok(advance_unchecked(state).map_or(Step::Halted, Step::Advanced)),
    }
}

/// Runs the net to completion, failing after `step_limit` firings.
pub fn run<V>(
    net: &Net<V>,
    mut state: EngineState<V>,
    step_limit: u64,
) -> Result<EngineState<V>, KernelError> {
    let mut firings = 0u64;
    loop {
        match step(net, &mut state)? {
            Step::Fired(_) => {
                firings += 1;
                if firings > step_limit {
                    return Err(KernelError::StepLimit(step_limit));
                }
            }
            Step::Advanced(_) => {}
            Step::Halted => return Ok(state),
        }
    }
}
