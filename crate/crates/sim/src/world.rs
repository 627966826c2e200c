//! The discrete-time world: supervisor, vision decisions, stepper motion.

use std::collections::VecDeque;
use std::f64::consts::TAU;

use feeder_core::dynamics::max_payload_dynamic;
use feeder_core::kinematics::{DhTable, JointVector};
use feeder_core::motor::{
    angle_to_steps, apply_coupling, stepper_advance, stepper_stop_target, StepperState,
};
use feeder_core::scalar::{add3, scale3, Vec3};
use feeder_core::supervisor::{self, FeedingState, Signal, TraceRow};
use feeder_core::vision::{
    camera_pose_world, detect_target_sim, ibvs_error, ibvs_step, pbvs_target, search_sweep, CameraMount,
    NoseDetection, StabilityTracker,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::scenario::{Scenario, ScheduledSignal};

/// Something worth noting in the run log besides state transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    PayloadWarning { payload_n: f64, limit_n: f64 },
    SearchMiss { attempt: u32 },
    TargetLost,
    PlanFailed { attempt: u32, reason: String },
    PlanAccepted { attempt: u32, q: [f64; 4] },
    GraspFailed,
    Jog { joint: usize, steps: i64 },
    JogRejected { joint: usize, reason: String },
    Halted { motor_targets: [i64; 4] },
}

/// Operator input, applied at the start of the next tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Command {
    Signal { u: Signal },
    Jog { joint: usize, delta_rad: f64 },
}

/// Published state after one tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub tick: u64,
    pub t: f64,
    pub state: FeedingState,
    /// Joint angles implied by the motor positions (rad).
    pub q: [f64; 4],
    /// Joint positions in steps (`q` rounded to whole steps).
    pub steps: [i64; 4],
    /// Commanded joint positions in steps.
    pub target_steps: [i64; 4],
    /// Motor positions after coupling compensation.
    pub motor_steps: [i64; 4],
    pub motor_rates: [f64; 4],
    pub detection: NoseDetection<f64>,
    /// `√(x² + y²)` of the current detection (px).
    pub servo_error: Option<f64>,
    /// Supervisor transitions taken during this tick.
    pub trace: Vec<TraceRow>,
    pub events: Vec<Event>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Phase {
    Idle,
    /// Looking around for the state's target.
    Search { attempt: u32 },
    /// Image-based centring, then a position-based plan.
    Servo,
    /// Moving to a planned pose; completion raises the state's signal.
    Approach,
    Dwell { until: f64 },
    /// Waiting for the supervisor to react to a raised signal.
    Wait,
    Halted,
}

pub struct Simulation {
    scenario: Scenario,
    schedule: Vec<ScheduledSignal>,
    next_scheduled: usize,
    table: DhTable<f64>,
    mount: CameraMount<f64>,
    rng: ChaCha8Rng,
    tick: u64,
    servo_ticks: u64,
    state: FeedingState,
    phase: Phase,
    motors: [StepperState<f64>; 4],
    motor_target: [i64; 4],
    joint_target: [i64; 4],
    tracker: StabilityTracker<f64>,
    detection: NoseDetection<f64>,
    /// Signals raised by the world, consumed on the next tick.
    raised: VecDeque<Signal>,
    commands: VecDeque<Command>,
    pending_events: Vec<Event>,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Self {
        let plan = scenario.stepper;
        let joint_target: [i64; 4] =
            std::array::from_fn(|j| angle_to_steps(scenario.initial_q[j], j, &plan).expect("joint index < 4"));
        // motor 3 carries joint 2's drag from the zero pose
        let motor_target = apply_coupling(joint_target, &plan);
        let mut pending_events = Vec::new();
        let limit = max_payload_dynamic(&scenario.links).w_l;
        if scenario.payload_n > limit {
            pending_events.push(Event::PayloadWarning {
                payload_n: scenario.payload_n,
                limit_n: limit,
            });
        }
        let servo_ticks = ((scenario.servo_period / scenario.dt).round() as u64).max(1);
        let mut sim = Self {
            schedule: scenario.schedule(),
            next_scheduled: 0,
            table: DhTable::robot(),
            mount: CameraMount::default(),
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            tick: 0,
            servo_ticks,
            state: FeedingState::X0,
            phase: Phase::Idle,
            motors: motor_target.map(StepperState::at),
            motor_target,
            joint_target,
            tracker: StabilityTracker::default(),
            detection: NoseDetection::not_found(),
            raised: VecDeque::new(),
            commands: VecDeque::new(),
            pending_events,
            scenario,
        };
        sim.detection = sim.detect();
        sim
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 * self.scenario.dt
    }

    pub fn state(&self) -> FeedingState {
        self.state
    }

    pub fn enqueue(&mut self, cmd: Command) {
        self.commands.push_back(cmd);
    }

    /// Joint steps implied by motor positions: joint 3 loses the drag of
    /// joint 2 through the shared belt.
    fn joint_steps_exact(&self) -> [f64; 4] {
        let m = self.motors.map(|s| s.exact);
        [m[0], m[1], m[2] - self.scenario.stepper.coupling_2_to_3 * m[1], m[3]]
    }

    fn joint_angles(&self) -> [f64; 4] {
        let s = self.joint_steps_exact();
        let spr = self.scenario.stepper.steps_per_rev;
        std::array::from_fn(|j| TAU * s[j] / f64::from(spr[j]))
    }

    fn at_rest(&self) -> bool {
        self.motors
            .iter()
            .zip(self.motor_target)
            .all(|(m, target)| m.is_at_rest() && m.position == target)
    }

    fn target_world(&self) -> Vec3<f64> {
        match self.state {
            FeedingState::X1 | FeedingState::X2 | FeedingState::X3 => self.scenario.food_world,
            _ => add3(self.scenario.nose_world, scale3(self.scenario.nose_drift, self.time())),
        }
    }

    fn detect(&mut self) -> NoseDetection<f64> {
        let pose = camera_pose_world(&self.table, &JointVector(self.joint_angles()), &self.mount);
        let target = self.target_world();
        detect_target_sim(&self.scenario.camera, &pose, target, self.scenario.noise_px, &mut self.rng)
    }

    /// Sends new joint targets (rad) through the coupling to the motors.
    fn command_joints(&mut self, q: [f64; 4]) {
        if self.state == FeedingState::X8 {
            return;
        }
        let q = self.table.clamp(&JointVector(q)).0;
        let plan = self.scenario.stepper;
        let next: [i64; 4] = std::array::from_fn(|j| angle_to_steps(q[j], j, &plan).expect("joint index < 4"));
        let delta: [i64; 4] = std::array::from_fn(|j| next[j] - self.joint_target[j]);
        let motor_delta = apply_coupling(delta, &plan);
        for (t, d) in self.motor_target.iter_mut().zip(motor_delta) {
            *t += d;
        }
        self.joint_target = next;
    }

    fn commanded_angles(&self) -> [f64; 4] {
        let spr = self.scenario.stepper.steps_per_rev;
        std::array::from_fn(|j| TAU * self.joint_target[j] as f64 / f64::from(spr[j]))
    }

    /// Brings every motor to rest as fast as its acceleration allows.
    fn halt(&mut self, events: &mut Vec<Event>) {
        let dt = self.scenario.dt;
        for j in 0..4 {
            self.motor_target[j] = stepper_stop_target(&self.motors[j], &self.scenario.stepper_limits[j], dt);
        }
        let m = self.motor_target;
        let c = self.scenario.stepper.coupling_2_to_3;
        self.joint_target = [m[0], m[1], (m[2] as f64 - c * m[1] as f64).round() as i64, m[3]];
        events.push(Event::Halted { motor_targets: m });
    }

    fn enter(&mut self, state: FeedingState, events: &mut Vec<Event>) {
        use FeedingState::*;
        self.tracker.reset();
        self.phase = match state {
            X0 => {
                self.halt(events);
                Phase::Idle
            }
            X8 => {
                self.halt(events);
                Phase::Halted
            }
            X1 => {
                self.command_joints(self.scenario.food_search_q);
                Phase::Search { attempt: 0 }
            }
            X4 => {
                self.command_joints(self.scenario.face_search_q);
                Phase::Search { attempt: 0 }
            }
            X2 | X5 => Phase::Servo,
            X3 => Phase::Dwell {
                until: self.time() + self.scenario.grasp_time,
            },
            X6 => Phase::Dwell {
                until: self.time() + self.scenario.feed_time,
            },
            X7 | X9 | X10 => Phase::Idle,
        };
    }

    fn consume(&mut self, signal: Signal, trace: &mut Vec<TraceRow>, events: &mut Vec<Event>) {
        let before = self.state;
        let mark = trace.len();
        let after = supervisor::apply(before, signal, self.time(), trace);
        self.state = after;
        // re-enter on every real transition, including ones that pass
        // through a transient state back to where they started
        if trace[mark..].iter().any(|r| r.state != r.next) {
            self.enter(after, events);
        }
    }

    fn jog(&mut self, joint: usize, delta_rad: f64, events: &mut Vec<Event>) {
        use FeedingState::*;
        if !matches!(self.state, X0 | X9 | X10) {
            events.push(Event::JogRejected {
                joint,
                reason: format!("not idle ({})", self.state),
            });
            return;
        }
        let steps = match angle_to_steps(delta_rad, joint, &self.scenario.stepper) {
            Ok(s) => s,
            Err(e) => {
                events.push(Event::JogRejected {
                    joint,
                    reason: e.to_string(),
                });
                return;
            }
        };
        let mut delta = [0; 4];
        delta[joint] = steps;
        let motor_delta = apply_coupling(delta, &self.scenario.stepper);
        self.joint_target[joint] += steps;
        for (t, d) in self.motor_target.iter_mut().zip(motor_delta) {
            *t += d;
        }
        events.push(Event::Jog { joint, steps });
    }

    fn raise(&mut self, signal: Signal) {
        self.raised.push_back(signal);
        self.phase = Phase::Wait;
    }

    fn search_signal(&self) -> Signal {
        if self.state == FeedingState::X1 {
            Signal::ProductFound
        } else {
            Signal::U4
        }
    }

    fn look_around(&mut self, attempt: u32, events: &mut Vec<Event>) {
        if attempt >= self.scenario.max_search_attempts {
            self.raise(Signal::U11);
            return;
        }
        events.push(Event::SearchMiss { attempt });
        let mut q = self.commanded_angles();
        q[0] += search_sweep(attempt, &self.scenario.servo);
        self.command_joints(q);
        self.phase = Phase::Search { attempt: attempt + 1 };
    }

    /// Plans the approach from a centred detection, shrinking the depth on
    /// each failed plan.
    fn plan_approach(&mut self, events: &mut Vec<Event>) {
        let cfg = self.scenario.servo;
        let pitch = if self.state == FeedingState::X2 {
            self.scenario.grasp_pitch
        } else {
            self.scenario.feed_pitch
        };
        let pose = camera_pose_world(&self.table, &JointVector(self.joint_angles()), &self.mount);
        for attempt in 0..cfg.max_plan_attempts {
            let planned = pbvs_target(&self.detection, &cfg, attempt)
                .map_err(|e| e.to_string())
                .and_then(|p_cam| {
                    let w = scale3(pose.apply(p_cam), 1000.0);
                    self.table.inverse_kinematics(w, pitch).map_err(|e| e.to_string())
                })
                .and_then(|q| {
                    if self.table.in_limits(&q) {
                        Ok(q)
                    } else {
                        Err("outside joint limits".to_string())
                    }
                });
            match planned {
                Ok(q) => {
                    events.push(Event::PlanAccepted { attempt, q: q.0 });
                    self.command_joints(q.0);
                    self.phase = Phase::Approach;
                    return;
                }
                Err(reason) => events.push(Event::PlanFailed { attempt, reason }),
            }
        }
        self.tracker.reset();
        self.raise(Signal::U11);
        // X2/X5 ignore u11; keep servoing so the operator can intervene
        self.phase = Phase::Servo;
    }

    fn decide(&mut self, events: &mut Vec<Event>) {
        let now = self.time();
        match self.phase {
            Phase::Idle | Phase::Wait | Phase::Halted => {}
            Phase::Search { attempt } => {
                if !self.at_rest() {
                    return;
                }
                if self.detection.found {
                    let s = self.search_signal();
                    self.raise(s);
                } else {
                    self.look_around(attempt, events);
                }
            }
            Phase::Servo => {
                let Ok(s) = ibvs_error(&self.detection) else {
                    if self.at_rest() {
                        events.push(Event::TargetLost);
                        self.tracker.reset();
                        self.phase = Phase::Search { attempt: 0 };
                    }
                    return;
                };
                if self.tracker.update(now, s, &self.scenario.servo) {
                    self.plan_approach(events);
                } else if self.at_rest() {
                    let q = JointVector(self.commanded_angles());
                    if let Ok(next) = ibvs_step(&q, &self.detection, &self.scenario.servo, &self.table) {
                        self.command_joints(next.0);
                    }
                }
            }
            Phase::Approach => {
                if self.at_rest() {
                    let done = if self.state == FeedingState::X2 {
                        Signal::U2
                    } else {
                        Signal::U5
                    };
                    self.raise(done);
                }
            }
            Phase::Dwell { until } => {
                if now + 1e-12 >= until {
                    match self.state {
                        FeedingState::X3 if !self.scenario.grasp_success => {
                            events.push(Event::GraspFailed);
                            self.phase = Phase::Wait;
                        }
                        FeedingState::X3 => self.raise(Signal::U3),
                        _ => self.raise(Signal::U6),
                    }
                }
            }
        }
    }

    /// Advances one `dt`.
    pub fn tick(&mut self) -> WorldState {
        let mut trace = Vec::new();
        let mut events = std::mem::take(&mut self.pending_events);
        let now = self.time();

        // (1) supervisor input: scripted, world-raised, operator
        while let Some(s) = self.schedule.get(self.next_scheduled).filter(|s| s.t <= now + 1e-9).copied() {
            self.next_scheduled += 1;
            self.consume(s.u, &mut trace, &mut events);
        }
        while let Some(s) = self.raised.pop_front() {
            self.consume(s, &mut trace, &mut events);
        }
        while let Some(cmd) = self.commands.pop_front() {
            match cmd {
                Command::Signal { u } => self.consume(u, &mut trace, &mut events),
                Command::Jog { joint, delta_rad } => self.jog(joint, delta_rad, &mut events),
            }
        }

        // (2) vision decisions at the servo rate
        if self.tick % self.servo_ticks == 0 {
            self.decide(&mut events);
        }

        // (3) motion
        let dt = self.scenario.dt;
        for j in 0..4 {
            self.motors[j] = stepper_advance(&self.motors[j], self.motor_target[j], &self.scenario.stepper_limits[j], dt);
        }
        self.tick += 1;

        // (4) what the camera sees from the new pose
        self.detection = self.detect();
        self.snapshot(trace, events)
    }

    fn snapshot(&self, trace: Vec<TraceRow>, events: Vec<Event>) -> WorldState {
        let spr = self.scenario.stepper.steps_per_rev;
        let q = self.joint_angles();
        WorldState {
            tick: self.tick,
            t: self.time(),
            state: self.state,
            q,
            steps: std::array::from_fn(|j| (q[j] * f64::from(spr[j]) / TAU).round() as i64),
            target_steps: self.joint_target,
            motor_steps: self.motors.map(|m| m.position),
            motor_rates: self.motors.map(|m| m.rate),
            detection: self.detection,
            servo_error: ibvs_error(&self.detection).ok(),
            trace,
            events,
        }
    }

    /// State at the current time without advancing.
    pub fn peek(&self) -> WorldState {
        self.snapshot(Vec::new(), Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use feeder_core::motor::StepperPlan;

    fn quiet() -> Scenario {
        Scenario {
            dt: 0.001,
            ..Scenario::default()
        }
    }

    #[test]
    fn idle_tick_only_advances_time() {
        let mut sim = Simulation::new(quiet());
        let before = sim.peek();
        let after = sim.tick();
        assert_eq!(after.state, FeedingState::X0);
        assert_eq!(after.q, before.q);
        assert!((after.t - 0.001).abs() < 1e-15);
        assert!(after.trace.is_empty());
    }

    #[test]
    fn start_pose_matches_initial_q() {
        let sc = quiet();
        let sim = Simulation::new(sc.clone());
        let w = sim.peek();
        for j in 0..4 {
            let step = TAU / f64::from(sc.stepper.steps_per_rev[j]);
            assert!((w.q[j] - sc.initial_q[j]).abs() <= step, "joint {j}");
        }
    }

    #[test]
    fn jog_moves_joint_one_by_76_steps() {
        let mut sim = Simulation::new(quiet());
        let start = sim.peek().target_steps;
        sim.enqueue(Command::Jog { joint: 0, delta_rad: 0.1 });
        let w = sim.tick();
        assert_eq!(w.target_steps[0] - start[0], 76);
        assert_eq!(w.events, vec![Event::Jog { joint: 0, steps: 76 }]);
        for _ in 0..2000 {
            sim.tick();
        }
        assert_eq!(sim.peek().steps[0] - start[0], 76);
    }

    #[test]
    fn joint_two_jog_drags_motor_three() {
        let mut sim = Simulation::new(quiet());
        let before = sim.peek();
        sim.enqueue(Command::Jog { joint: 1, delta_rad: 0.5 });
        for _ in 0..3000 {
            sim.tick();
        }
        let w = sim.peek();
        let d2 = angle_to_steps(0.5, 1, &StepperPlan::default()).unwrap();
        assert_eq!(w.motor_steps[1] - before.motor_steps[1], d2);
        assert_eq!(w.motor_steps[2] - before.motor_steps[2], (0.2 * d2 as f64).round() as i64);
        assert!((w.q[2] - before.q[2]).abs() < 2.0 * TAU / 4000.0);
    }

    #[test]
    fn jog_outside_idle_is_rejected() {
        let mut sim = Simulation::new(quiet());
        sim.enqueue(Command::Signal { u: Signal::U1 });
        sim.tick();
        sim.enqueue(Command::Jog { joint: 0, delta_rad: 0.1 });
        let w = sim.tick();
        assert!(matches!(w.events[0], Event::JogRejected { .. }));
    }

    #[test]
    fn commands_parse_from_api_bodies() {
        let s: Command = serde_json::from_str(r#"{"u":"u8"}"#).unwrap();
        assert_eq!(s, Command::Signal { u: Signal::U8 });
        let j: Command = serde_json::from_str(r#"{"joint":0,"delta_rad":0.1}"#).unwrap();
        assert_eq!(j, Command::Jog { joint: 0, delta_rad: 0.1 });
    }

    #[test]
    fn heavy_payload_is_flagged() {
        let mut sim = Simulation::new(Scenario {
            payload_n: 5.0,
            ..quiet()
        });
        let w = sim.tick();
        assert!(matches!(w.events[0], Event::PayloadWarning { payload_n, .. } if payload_n == 5.0));
        let mut ok = Simulation::new(quiet());
        assert!(ok.tick().events.is_empty());
    }
}
