use std::collections::BTreeSet;

use feeder_core::supervisor::FeedingState::{self, *};
use feeder_core::supervisor::Signal::{self, *};
use feeder_core::supervisor::*;
use proptest::prelude::*;

/// Independent statement of the transition table as an edge list.
const EDGES: &[(FeedingState, Signal, FeedingState)] = &[
    (X0, U1, X1),
    (X1, ProductFound, X2),
    (X1, U11, X10),
    (X2, U2, X3),
    (X3, U3, X4),
    (X4, U4, X5),
    (X4, U11, X10),
    (X5, U5, X6),
    (X6, U6, X9),
    (X9, U7, X7),
    (X9, U9, X0),
    (X10, U1, X1),
    (X10, U10, X0),
    (X8, U1, X0),
];

fn expected(s: FeedingState, u: Signal) -> FeedingState {
    if u == U8 {
        return X8;
    }
    if u == U10 && s != X8 {
        return X0;
    }
    EDGES
        .iter()
        .find(|(a, b, _)| *a == s && *b == u)
        .map_or(s, |(_, _, n)| *n)
}

#[test]
fn full_table() {
    for s in FeedingState::ALL {
        for u in Signal::ALL {
            assert_eq!(step(s, u), expected(s, u), "{s} + {u}");
        }
    }
}

#[test]
fn every_state_can_return_to_waiting() {
    for s in FeedingState::ALL {
        assert!(reachable_states(s).contains(&X0), "{s}");
    }
    assert_eq!(reachable_states(X0), FeedingState::ALL.into_iter().collect::<BTreeSet<_>>());
}

#[test]
fn nominal_cycle_is_realised() {
    let (end, trace) = run_sequence(X0, &[U1, ProductFound, U2, U3, U4, U5, U6, U9]);
    let path: Vec<FeedingState> = std::iter::once(X0).chain(trace.iter().map(|r| r.next)).collect();
    assert_eq!(path, [X0, X1, X2, X3, X4, X5, X6, X9, X0]);
    assert_eq!(end, X0);
}

#[test]
fn repeat_settles_into_face_search() {
    let mut trace = Vec::new();
    let s = apply(X9, U7, 4.5, &mut trace);
    assert_eq!(s, X4);
    assert_eq!(trace.len(), 2);
    assert_eq!(trace[1].signal, TraceEvent::Immediate);
    assert_eq!((trace[1].state, trace[1].next, trace[1].t), (X7, X4, 4.5));
}

#[test]
fn trace_rows_serialise_with_plain_names() {
    let row = TraceRow {
        t: 1.5,
        state: X7,
        signal: TraceEvent::Immediate,
        next: X4,
    };
    let y = serde_yaml::to_string(&row).unwrap();
    assert!(y.contains("signal: immediate") && y.contains("state: X7"));
    assert_eq!(serde_yaml::from_str::<TraceRow>(&y).unwrap(), row);
}

fn signal() -> impl Strategy<Value = Signal> {
    proptest::sample::select(Signal::ALL.to_vec())
}

fn state() -> impl Strategy<Value = FeedingState> {
    proptest::sample::select(FeedingState::ALL.to_vec())
}

proptest! {
    #[test]
    fn estop_dominates_any_history(start in state(), seq in proptest::collection::vec(signal(), 0..30)) {
        let (s, _) = run_sequence(start, &seq);
        prop_assert_eq!(step(s, U8), X8);
    }

    #[test]
    fn only_reset_leaves_estop(seq in proptest::collection::vec(signal(), 0..30)) {
        let mut s = X8;
        for u in seq {
            let n = step(s, u);
            if s == X8 && u != U1 {
                prop_assert_eq!(n, X8);
            }
            s = n;
        }
    }

    #[test]
    fn trace_is_a_chain(start in state().prop_filter("X7 never rests", |s| *s != X7), seq in proptest::collection::vec(signal(), 1..40)) {
        let (end, trace) = run_sequence(start, &seq);
        prop_assert_eq!(trace[0].state, start);
        prop_assert!(trace.windows(2).all(|w| w[0].next == w[1].state));
        prop_assert_eq!(trace.last().unwrap().next, end);
        prop_assert!(trace.iter().all(|r| r.next != X7 || r.signal == TraceEvent::Signal(U7)));
        prop_assert!(end != X7);
    }
}
