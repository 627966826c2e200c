//! Headless runs and their JSON-lines log.
//!
//! Each line is one [`WorldState`] serialised with `serde_json`: `tick`,
//! `t` (s), `state`, `q` (rad), `steps`, `target_steps`, `motor_steps`,
//! `motor_rates` (steps/s), `detection`, `servo_error` (px or null),
//! `trace` (supervisor rows taken this tick) and `events` (tagged by
//! `kind`).

use std::io::{self, Write};

use feeder_core::dynamics::{max_payload_dynamic, max_payload_static, TorqueReport};
use feeder_core::supervisor::FeedingState;
use serde::{Deserialize, Serialize};

use crate::scenario::Scenario;
use crate::world::{Simulation, WorldState};

/// Destination for per-tick snapshots.
pub trait LogSink {
    fn record(&mut self, state: &WorldState) -> io::Result<()>;
}

/// Writes one JSON object per line.
pub struct JsonlSink<W: Write> {
    out: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(out: W) -> Self {
        Self { out }
    }

    pub fn into_inner(self) -> W {
        self.out
    }
}

impl<W: Write> LogSink for JsonlSink<W> {
    fn record(&mut self, state: &WorldState) -> io::Result<()> {
        serde_json::to_writer(&mut self.out, state)?;
        self.out.write_all(b"\n")
    }
}

/// Keeps every snapshot in memory.
#[derive(Default)]
pub struct MemorySink {
    pub states: Vec<WorldState>,
}

impl LogSink for MemorySink {
    fn record(&mut self, state: &WorldState) -> io::Result<()> {
        self.states.push(state.clone());
        Ok(())
    }
}

/// Discards everything.
pub struct NullSink;

impl LogSink for NullSink {
    fn record(&mut self, _: &WorldState) -> io::Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub ticks: u64,
    pub duration: f64,
    pub final_state: FeedingState,
    /// Time each state was first entered (s).
    pub first_entered: Vec<(FeedingState, f64)>,
    pub min_servo_error: Option<f64>,
    pub warnings: usize,
    pub payload_static: TorqueReport<f64>,
    pub payload_dynamic: TorqueReport<f64>,
}

impl RunSummary {
    pub fn entered(&self, state: FeedingState) -> Option<f64> {
        self.first_entered.iter().find(|(s, _)| *s == state).map(|(_, t)| *t)
    }
}

/// Number of ticks covering `duration`.
pub fn tick_count(duration: f64, dt: f64) -> u64 {
    (duration / dt - 1e-9).ceil().max(0.0) as u64
}

/// Runs `scenario` for `duration` seconds of simulated time, sending one
/// snapshot per tick to `sink`.
pub fn run_headless(scenario: &Scenario, duration: f64, sink: &mut dyn LogSink) -> io::Result<RunSummary> {
    if !(duration > 0.0) {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "duration must be > 0"));
    }
    let mut sim = Simulation::new(scenario.clone());
    let ticks = tick_count(duration, scenario.dt);
    let mut first_entered = vec![(FeedingState::X0, 0.0)];
    let mut min_err: Option<f64> = None;
    let mut warnings = 0;
    for _ in 0..ticks {
        let w = sim.tick();
        for row in &w.trace {
            if !first_entered.iter().any(|(s, _)| *s == row.next) {
                first_entered.push((row.next, row.t));
            }
        }
        if let Some(e) = w.servo_error {
            min_err = Some(min_err.map_or(e, |m: f64| m.min(e)));
        }
        warnings += w
            .events
            .iter()
            .filter(|e| matches!(e, crate::world::Event::PayloadWarning { .. }))
            .count();
        sink.record(&w)?;
    }
    Ok(RunSummary {
        scenario: scenario.name.clone(),
        ticks,
        duration: sim.time(),
        final_state: sim.state(),
        first_entered,
        min_servo_error: min_err,
        warnings,
        payload_static: max_payload_static(&scenario.links),
        payload_dynamic: max_payload_dynamic(&scenario.links),
    })
}
