//! Feeding-cycle automaton over states `X0..X10` and signals `u1..u11`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeedingState {
    /// Waiting for a start command.
    X0,
    /// Looking for food on the table.
    X1,
    /// Centring on the food before the grasp.
    X2,
    X3,
    /// Looking for the user's face.
    X4,
    /// Servoing to and approaching the face.
    X5,
    X6,
    /// Repeat requested; passes straight through to face search.
    X7,
    X8,
    /// Waiting for the user to confirm.
    X9,
    /// Nothing found.
    X10,
}

impl FeedingState {
    pub const ALL: [FeedingState; 11] = [
        Self::X0,
        Self::X1,
        Self::X2,
        Self::X3,
        Self::X4,
        Self::X5,
        Self::X6,
        Self::X7,
        Self::X8,
        Self::X9,
        Self::X10,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::X0 => "X0",
            Self::X1 => "X1",
            Self::X2 => "X2",
            Self::X3 => "X3",
            Self::X4 => "X4",
            Self::X5 => "X5",
            Self::X6 => "X6",
            Self::X7 => "X7",
            Self::X8 => "X8",
            Self::X9 => "X9",
            Self::X10 => "X10",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::X0 => "waiting",
            Self::X1 => "product search",
            Self::X2 => "product positioning",
            Self::X3 => "grasp",
            Self::X4 => "face search",
            Self::X5 => "move to face",
            Self::X6 => "feeding",
            Self::X7 => "repeat",
            Self::X8 => "emergency stop",
            Self::X9 => "await confirmation",
            Self::X10 => "no objects",
        }
    }
}

impl fmt::Display for FeedingState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

impl FromStr for FeedingState {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Signal {
    /// Start.
    #[serde(rename = "u1")]
    U1,
    /// Positioning done.
    #[serde(rename = "u2")]
    U2,
    /// Grasp confirmed.
    #[serde(rename = "u3")]
    U3,
    /// Face acquired.
    #[serde(rename = "u4")]
    U4,
    /// Feeding pose reached.
    #[serde(rename = "u5")]
    U5,
    /// Feeding done.
    #[serde(rename = "u6")]
    U6,
    /// Repeat request.
    #[serde(rename = "u7")]
    U7,
    /// Emergency stop.
    #[serde(rename = "u8")]
    U8,
    /// Confirmation received, leave the wait.
    #[serde(rename = "u9")]
    U9,
    /// Pause / stop.
    #[serde(rename = "u10")]
    U10,
    /// Search or planning failed.
    #[serde(rename = "u11")]
    U11,
    /// Product acquired (internal, raised by the vision layer).
    #[serde(rename = "p_found")]
    ProductFound,
}

impl Signal {
    pub const ALL: [Signal; 12] = [
        Self::U1,
        Self::U2,
        Self::U3,
        Self::U4,
        Self::U5,
        Self::U6,
        Self::U7,
        Self::U8,
        Self::U9,
        Self::U10,
        Self::U11,
        Self::ProductFound,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::U1 => "u1",
            Self::U2 => "u2",
            Self::U3 => "u3",
            Self::U4 => "u4",
            Self::U5 => "u5",
            Self::U6 => "u6",
            Self::U7 => "u7",
            Self::U8 => "u8",
            Self::U9 => "u9",
            Self::U10 => "u10",
            Self::U11 => "u11",
            Self::ProductFound => "p_found",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Self::U1 => "start",
            Self::U2 => "positioning done",
            Self::U3 => "grasp confirmed",
            Self::U4 => "face acquired",
            Self::U5 => "feeding pose reached",
            Self::U6 => "feeding done",
            Self::U7 => "repeat request",
            Self::U8 => "emergency stop",
            Self::U9 => "confirmation",
            Self::U10 => "pause / stop",
            Self::U11 => "search failed",
            Self::ProductFound => "product acquired",
        }
    }
}

impl fmt::Display for Signal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Signal {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| UnknownName(s.to_string()))
    }
}

/// Transition table. Unlisted pairs keep the state.
pub fn step(state: FeedingState, signal: Signal) -> FeedingState {
    use FeedingState::*;
    use Signal::*;
    match (state, signal) {
        (_, U8) => X8,
        (X8, U1) => X0,
        (X8, _) => X8,
        (_, U10) => X0,
        (X0, U1) => X1,
        (X1, ProductFound) => X2,
        (X1, U11) => X10,
        (X2, U2) => X3,
        (X3, U3) => X4,
        (X4, U4) => X5,
        (X4, U11) => X10,
        (X5, U5) => X6,
        (X6, U6) => X9,
        (X9, U7) => X7,
        (X9, U9) => X0,
        (X10, U1) => X1,
        (s, _) => s,
    }
}

/// Completion of a transient state: X7 hands over to face search.
pub fn settle(state: FeedingState) -> Option<FeedingState> {
    (state == FeedingState::X7).then_some(FeedingState::X4)
}

/// What moved the automaton in one trace row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    Signal(Signal),
    /// Internal completion of a transient state.
    Immediate,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Signal(s) => s.fmt(f),
            Self::Immediate => f.write_str("immediate"),
        }
    }
}

impl Serialize for TraceEvent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Signal(sig) => sig.serialize(s),
            Self::Immediate => s.serialize_str("immediate"),
        }
    }
}

impl<'de> Deserialize<'de> for TraceEvent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        if name == "immediate" {
            return Ok(Self::Immediate);
        }
        name.parse().map(Self::Signal).map_err(serde::de::Error::custom)
    }
}

/// One row of the supervisor trace, `{"t","state","signal","next"}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub state: FeedingState,
    pub signal: TraceEvent,
    pub next: FeedingState,
}

/// Applies `signal` and any transient completion it triggers, appending
/// one row per transition taken (self-loops included for the signal).
pub fn apply(state: FeedingState, signal: Signal, t: f64, trace: &mut Vec<TraceRow>) -> FeedingState {
    let next = step(state, signal);
    trace.push(TraceRow {
        t,
        state,
        signal: TraceEvent::Signal(signal),
        next,
    });
    let mut current = next;
    while let Some(after) = settle(current) {
        trace.push(TraceRow {
            t,
            state: current,
            signal: TraceEvent::Immediate,
            next: after,
        });
        current = after;
    }
    current
}

/// Folds [`apply`] over `signals` with row times `0, 1, 2, …`.
pub fn run_sequence(start: FeedingState, signals: &[Signal]) -> (FeedingState, Vec<TraceRow>) {
    let mut trace = Vec::new();
    let mut state = start;
    for (i, s) in signals.iter().enumerate() {
        state = apply(state, *s, i as f64, &mut trace);
    }
    (state, trace)
}

/// States reachable from `start` using only `alphabet`. A transient state
/// entered by a signal also contributes the state it settles into.
pub fn reachable_with(start: FeedingState, alphabet: &[Signal]) -> BTreeSet<FeedingState> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        for sig in alphabet {
            let mut n = step(s, *sig);
            loop {
                if seen.insert(n) {
                    queue.push_back(n);
                }
                match settle(n) {
                    Some(after) => n = after,
                    None => break,
                }
            }
        }
    }
    seen
}

pub fn reachable_states(start: FeedingState) -> BTreeSet<FeedingState> {
    reachable_with(start, &Signal::ALL)
}
