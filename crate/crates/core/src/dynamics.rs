//! Payload statics, inertial torques, trapezoidal joint profiles and a
//! simplified (decoupled, gravity + rotor-inertia) joint dynamics model.
//!
//! Joint numbering in reports is 1-based (joint 1 is the base yaw), matching
//! the torque names `T1g..T4g`. Array indices are 0-based.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::format_sig;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("bad profile timing: duration {duration} s, dt {dt} s (need duration > 0, 0 < dt <= duration/4)")]
    BadTiming { duration: f64, dt: f64 },
    #[error("invalid link parameter `{field}`: {reason}")]
    InvalidParams { field: &'static str, reason: &'static str },
}

/// Link geometry, weights and drive capacities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct LinkParams<T> {
    /// Link lengths `L0..L4` (m).
    pub lengths: [T; 5],
    /// Link weights `W2, W3, W4` (N).
    pub w2: T,
    pub w3: T,
    pub w4: T,
    /// Joint (actuator) weights carried at joints 3 and 4 (N).
    pub wj3: T,
    pub wj4: T,
    /// Link masses (kg).
    pub m2: T,
    pub m3: T,
    /// Drive torque capacities `T1..T4` (N·m).
    pub drive_torque: [T; 4],
    /// Belt drive efficiency.
    pub eta_belt: T,
    /// Peak angular acceleration of the drives (rad/s²).
    pub alpha_max: T,
    /// Lumped inertia for joint 1 (kg·m²). `None` uses `I2`.
    pub i1: Option<T>,
    /// Lumped inertia for joint 4 (kg·m²).
    pub i4: T,
}

impl<T: Real> Default for LinkParams<T> {
    fn default() -> Self {
        let l = T::lit;
        Self {
            lengths: [l(0.0695), l(0.0875), l(0.1440), l(0.1200), l(0.0553)],
            w2: l(2.73),
            w3: l(1.25),
            w4: l(0.0123),
            wj3: l(1.67),
            wj4: l(0.40),
            m2: l(0.273),
            m3: l(0.125),
            drive_torque: [l(2.40), l(1.40), l(2.75), l(0.04)],
            eta_belt: l(0.9),
            alpha_max: l(9.8125),
            i1: None,
            i4: l(1e-5),
        }
    }
}

impl<T: Real> LinkParams<T> {
    pub fn l2(&self) -> T {
        self.lengths[2]
    }

    pub fn l3(&self) -> T {
        self.lengths[3]
    }

    pub fn l4(&self) -> T {
        self.lengths[4]
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.lengths.iter().any(|v| !(*v > T::zero())) {
            return Err(DynamicsError::InvalidParams {
                field: "lengths",
                reason: "all lengths must be > 0",
            });
        }
        if !(self.eta_belt > T::zero() && self.eta_belt <= T::one()) {
            return Err(DynamicsError::InvalidParams {
                field: "eta_belt",
                reason: "must lie in (0, 1]",
            });
        }
        if self.alpha_max < T::zero() {
            return Err(DynamicsError::InvalidParams {
                field: "alpha_max",
                reason: "must be >= 0",
            });
        }
        Ok(())
    }

    /// Per-joint inertias used by the dynamics model: `[I1, I2, I3, I4]`.
    pub fn joint_inertias(&self) -> [T; 4] {
        let (i2, i3) = inertia_moments(self);
        [self.i1.unwrap_or(i2), i2, i3, self.i4]
    }
}

/// Rod-about-end moments `I = m·L²/3` for links 2 and 3 (kg·m²).
pub fn inertia_moments<T: Real>(p: &LinkParams<T>) -> (T, T) {
    let third = T::one() / T::lit(3.0);
    (
        third * p.m2 * p.l2() * p.l2(),
        third * p.m3 * p.l3() * p.l3(),
    )
}

/// Joint torques plus the payload they were evaluated for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorqueReport<T> {
    /// `T1g..T4g` (N·m). For the payload solvers these are the totals at the
    /// returned payload, inertial terms included.
    pub torques: [T; 4],
    /// Payload weight `W_L` (N).
    pub w_l: T,
    /// 1-based joint whose limit fixes `w_l`, if a solver produced the report.
    pub binding_joint: Option<u8>,
    /// Largest payload each joint could carry on its own (N); `None` where
    /// the joint is unconstrained in the chosen formula variant.
    pub joint_bounds: [Option<T>; 4],
}

/// Link elevation cosines `(cos θ2, cos(θ2+θ3), cos(θ2+θ3+θ4))`.
fn elevation_cosines<T: Real>(q: &[T; 4]) -> [T; 3] {
    [q[1].cos(), (q[1] + q[2]).cos(), (q[1] + q[2] + q[3]).cos()]
}

/// Gravity moments with each segment's horizontal lever arm scaled by the
/// cosine of its link's elevation. `c = [1, 1, 1]` is the stretched arm.
fn gravity_terms<T: Real>(p: &LinkParams<T>, w_l: T, include_joint4: bool, c: [T; 3]) -> [T; 4] {
    let h = T::half();
    let (l2, l3, l4) = (p.l2() * c[0], p.l3() * c[1], p.l4() * c[2]);
    if include_joint4 {
        let t2 = p.w2 * (l2 * h)
            + p.wj3 * l2
            + p.w3 * (l2 + l3 * h)
            + p.wj4 * (l2 + l3)
            + p.w4 * (l2 + l3 + l4 * h)
            + w_l * (l2 + l3 + l4);
        let t3 = p.w3 * (l3 * h) + p.wj4 * l3 + p.w4 * (l3 + l4 * h) + w_l * (l3 + l4);
        let t4 = p.w4 * l4 * h + w_l * l4;
        [T::zero(), t2, t3, t4]
    } else {
        let t2 = p.w2 * (l2 * h) + p.wj3 * l2 + p.w3 * (l2 + l3 * h) + p.wj4 * (l2 + l3) + w_l * (l2 + l3);
        let t3 = p.w3 * (l3 * h) + p.wj4 * l3 + w_l * l3;
        [T::zero(), t2, t3, T::zero()]
    }
}

/// Holding torques for the horizontally stretched arm.
///
/// With `include_joint4 = false` the end link is dropped and the payload
/// hangs at the end of link 3 (the variant used for swappable end tools).
pub fn gravity_torques<T: Real>(p: &LinkParams<T>, w_l: T, include_joint4: bool) -> TorqueReport<T> {
    TorqueReport {
        torques: gravity_terms(p, w_l, include_joint4, [T::one(); 3]),
        w_l,
        binding_joint: None,
        joint_bounds: [None; 4],
    }
}

/// Pose-dependent holding torques (N·m) for joint angles `q`.
pub fn gravity_at<T: Real>(p: &LinkParams<T>, w_l: T, q: &[T; 4]) -> [T; 4] {
    gravity_terms(p, w_l, true, elevation_cosines(q))
}

/// Largest payload satisfying every joint's limit for the stretched arm with
/// the inertial torque `I·alpha` added to joints 2 and 3.
///
/// Joints 2 and 3 are limited to `T·η`; joint 4 (direct drive) to `T4`.
pub fn payload_limit<T: Real>(p: &LinkParams<T>, include_joint4: bool, alpha: T) -> TorqueReport<T> {
    let (i2, i3) = inertia_moments(p);
    let inertial = [T::zero(), i2 * alpha, i3 * alpha, T::zero()];
    let base = gravity_terms(p, T::zero(), include_joint4, [T::one(); 3]);
    let unit = gravity_terms(p, T::one(), include_joint4, [T::one(); 3]);
    let capacity = [
        p.drive_torque[0] * p.eta_belt,
        p.drive_torque[1] * p.eta_belt,
        p.drive_torque[2] * p.eta_belt,
        p.drive_torque[3],
    ];

    let mut bounds = [None; 4];
    let mut best: Option<(T, u8)> = None;
    for j in 1..4 {
        let slope = unit[j] - base[j];
        if slope <= T::zero() {
            continue;
        }
        let w = ((capacity[j] - base[j] - inertial[j]) / slope).max(T::zero());
        bounds[j] = Some(w);
        if best.is_none_or(|(b, _)| w < b) {
            best = Some((w, j as u8 + 1));
        }
    }
    let (w_l, joint) = best.unwrap_or((T::infinity(), 0));
    let mut torques = gravity_terms(p, w_l, include_joint4, [T::one(); 3]);
    for (t, extra) in torques.iter_mut().zip(inertial) {
        *t += extra;
    }
    TorqueReport {
        torques,
        w_l,
        binding_joint: (joint > 0).then_some(joint),
        joint_bounds: bounds,
    }
}

/// Static payload limit with the end link included.
pub fn max_payload_static<T: Real>(p: &LinkParams<T>) -> TorqueReport<T> {
    payload_limit(p, true, T::zero())
}

/// Payload limit under peak acceleration, using the reduced (no end link)
/// gravity sums: `T2 = 0.81616 + 0.264·W_L`, `T3 = 0.12889 + 0.12·W_L` for
/// the default parameters.
pub fn max_payload_dynamic<T: Real>(p: &LinkParams<T>) -> TorqueReport<T> {
    payload_limit(p, false, p.alpha_max)
}

/// One sample of a joint-space trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSample<T> {
    pub t: T,
    pub q: [T; 4],
    pub qd: [T; 4],
    pub qdd: [T; 4],
}

/// Position, velocity and acceleration of a single-joint symmetric
/// trapezoid (1/3 accelerate, 1/3 cruise, 1/3 decelerate) at time `t`.
pub fn trapezoid_at<T: Real>(q0: T, qf: T, duration: T, t: T) -> (T, T, T) {
    let delta = qf - q0;
    let ta = duration / T::lit(3.0);
    let v = T::lit(1.5) * delta / duration;
    let a = v / ta;
    let h = T::half();
    if t <= T::zero() {
        (q0, T::zero(), if duration > T::zero() { a } else { T::zero() })
    } else if t < ta {
        (q0 + h * a * t * t, a * t, a)
    } else if t < duration - ta {
        (q0 + h * a * ta * ta + v * (t - ta), v, T::zero())
    } else if t < duration {
        let r = duration - t;
        (qf - h * a * r * r, a * r, -a)
    } else {
        (qf, T::zero(), T::zero())
    }
}

/// Samples every joint's trapezoid at `t = 0, dt, 2·dt, …` and at exactly
/// `duration`.
pub fn trapezoidal_profile<T: Real>(
    q0: [T; 4],
    qf: [T; 4],
    duration: T,
    dt: T,
) -> Result<Vec<ProfileSample<T>>, DynamicsError> {
    if !(duration > T::zero() && dt > T::zero() && dt <= duration / T::lit(4.0)) {
        return Err(DynamicsError::BadTiming {
            duration: duration.to_f64_lossy(),
            dt: dt.to_f64_lossy(),
        });
    }
    let steps = (duration / dt).to_f64_lossy();
    // absorb float noise when duration is an integer multiple of dt
    let mut n = steps.floor() as usize;
    if steps - (n as f64) > 1.0 - 1e-9 {
        n += 1;
    }
    let mut out = Vec::with_capacity(n + 2);
    for k in 0..=n {
        let mut t = dt * T::lit(k as f64);
        if t >= duration || (duration - t) < dt * T::lit(1e-9) {
            t = duration;
        }
        out.push(sample_at(&q0, &qf, duration, t));
        if t == duration {
            break;
        }
    }
    if out.last().map(|s| s.t) != Some(duration) {
        out.push(sample_at(&q0, &qf, duration, duration));
    }
    Ok(out)
}

fn sample_at<T: Real>(q0: &[T; 4], qf: &[T; 4], duration: T, t: T) -> ProfileSample<T> {
    let mut s = ProfileSample {
        t,
        q: [T::zero(); 4],
        qd: [T::zero(); 4],
        qdd: [T::zero(); 4],
    };
    for j in 0..4 {
        let (q, qd, qdd) = trapezoid_at(q0[j], qf[j], duration, t);
        s.q[j] = q;
        s.qd[j] = qd;
        s.qdd[j] = if q0[j] == qf[j] { T::zero() } else { qdd };
    }
    s
}

/// Trajectory CSV: `t,q1..q4,qd1..qd4,qdd1..qdd4`.
pub fn write_trajectory_csv<T: Real, W: Write>(samples: &[ProfileSample<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "t,q1,q2,q3,q4,qd1,qd2,qd3,qd4,qdd1,qdd2,qdd3,qdd4")?;
    for s in samples {
        let mut row = vec![format_sig(s.t.to_f64_lossy(), 6)];
        for set in [&s.q, &s.qd, &s.qdd] {
            row.extend(set.iter().map(|v| format_sig(v.to_f64_lossy(), 6)));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Joint torques (N·m) needed to follow `sample` with payload `w_l`:
/// pose-dependent gravity plus `I·qdd` per joint.
pub fn inverse_dynamics<T: Real>(p: &LinkParams<T>, w_l: T, sample: &ProfileSample<T>) -> [T; 4] {
    let g = gravity_at(p, w_l, &sample.q);
    let inertia = p.joint_inertias();
    std::array::from_fn(|j| g[j] + inertia[j] * sample.qdd[j])
}

/// Joint positions and velocities.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct JointState<T> {
    pub q: [T; 4],
    pub qd: [T; 4],
}

/// Semi-implicit Euler step of `I·qdd = τ − g(q)`.
pub fn forward_dynamics_step<T: Real>(
    p: &LinkParams<T>,
    w_l: T,
    state: &JointState<T>,
    torque: &[T; 4],
    dt: T,
) -> JointState<T> {
    let g = gravity_at(p, w_l, &state.q);
    let inertia = p.joint_inertias();
    let mut next = *state;
    for j in 0..4 {
        let qdd = (torque[j] - g[j]) / inertia[j];
        next.qd[j] += dt * qdd;
        next.q[j] += dt * next.qd[j];
    }
    next
}

/// Outcome of replaying a profile through inverse then forward dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundTrip<T> {
    pub final_state: JointState<T>,
    /// Largest `|q_sim − q_profile|` over all samples and joints (rad).
    pub max_error: T,
    /// `|q_sim − qf|` at the end, worst joint (rad).
    pub final_error: T,
}

/// Drives the forward model with torques from the inverse model.
///
/// Gravity is an unstable equilibrium for a raised link, so the torque for
/// each step is computed at the integrated state (computed-torque
/// feed-forward); the inertial part uses the profile's mean acceleration
/// over the step, `(qd[k+1] − qd[k]) / dt`.
pub fn dynamics_round_trip<T: Real>(p: &LinkParams<T>, w_l: T, profile: &[ProfileSample<T>]) -> RoundTrip<T> {
    let Some(first) = profile.first() else {
        return RoundTrip {
            final_state: JointState::default(),
            max_error: T::zero(),
            final_error: T::zero(),
        };
    };
    let mut state = JointState {
        q: first.q,
        qd: first.qd,
    };
    let mut max_error = T::zero();
    for pair in profile.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let dt = b.t - a.t;
        let mut drive = *a;
        drive.q = state.q;
        for j in 0..4 {
            drive.qdd[j] = (b.qd[j] - a.qd[j]) / dt;
        }
        let torque = inverse_dynamics(p, w_l, &drive);
        state = forward_dynamics_step(p, w_l, &state, &torque, dt);
        for j in 0..4 {
            max_error = max_error.max((state.q[j] - b.q[j]).abs());
        }
    }
    let last = profile[profile.len() - 1];
    let final_error = (0..4).fold(T::zero(), |m, j| m.max((state.q[j] - last.q[j]).abs()));
    RoundTrip {
        final_state: state,
        max_error,
        final_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> LinkParams<f64> {
        LinkParams::default()
    }

    #[test]
    fn stretched_arm_torques() {
        // hand sums of the holding-moment terms
        let (l2, l3, l4) = (0.144, 0.12, 0.0553);
        let wl = 0.699;
        let t2 = 2.73 * l2 / 2.0 + 1.67 * l2 + 1.25 * (l2 + l3 / 2.0) + 0.40 * (l2 + l3) + 0.0123 * (l2 + l3 + l4 / 2.0) + wl * (l2 + l3 + l4);
        let t3 = 1.25 * l3 / 2.0 + 0.40 * l3 + 0.0123 * (l3 + l4 / 2.0) + wl * (l3 + l4);
        let r = gravity_torques(&defaults(), wl, true);
        assert_eq!(r.torques[0], 0.0);
        assert!((r.torques[1] - t2).abs() < 1e-12);
        assert!((r.torques[2] - t3).abs() < 1e-12);
        assert!((r.torques[1] - 1.0246).abs() < 1e-3);
        assert!((r.torques[2] - 0.247).abs() < 1e-3);
    }

    #[test]
    fn end_link_alone() {
        let r = gravity_torques(&defaults(), 0.0, true);
        assert!((r.torques[3] - 0.0123 * 0.0553 / 2.0).abs() < 1e-15);
        assert!((r.torques[3] - 3.40e-4).abs() < 1e-6);
    }

    #[test]
    fn weightless_arm_has_no_torque() {
        let p = LinkParams {
            w2: 0.0,
            w3: 0.0,
            w4: 0.0,
            wj3: 0.0,
            wj4: 0.0,
            ..defaults()
        };
        for inc in [true, false] {
            assert_eq!(gravity_torques(&p, 0.0, inc).torques, [0.0; 4]);
        }
    }

    #[test]
    fn inertia_values() {
        let (i2, i3) = inertia_moments(&defaults());
        assert!((i2 - 0.273 * 0.144 * 0.144 / 3.0).abs() < 1e-18);
        assert!((i3 - 6.0e-4).abs() < 1e-12);
        let zero = LinkParams { m2: 0.0, m3: 0.0, ..defaults() };
        assert_eq!(inertia_moments(&zero), (0.0, 0.0));
    }

    #[test]
    fn static_payload_binds_on_end_joint() {
        let r = max_payload_static(&defaults());
        let expect = (0.04 - 0.0123 * 0.0553 / 2.0) / 0.0553;
        assert_eq!(r.binding_joint, Some(4));
        assert!((r.w_l - expect).abs() < 1e-12);
        assert!((r.w_l - 0.717).abs() < 1e-3);
        assert!(r.torques[1] <= 1.26 && r.torques[2] <= 2.475);
    }

    #[test]
    fn static_payload_without_headroom_is_zero() {
        let mut p = defaults();
        p.drive_torque[3] = p.w4 * p.l4() / 2.0;
        let r = max_payload_static(&p);
        assert_eq!(r.binding_joint, Some(4));
        assert!(r.w_l.abs() < 1e-15);
    }

    #[test]
    fn dynamic_payload_reduced_constants() {
        let p = defaults();
        let (i2, i3) = inertia_moments(&p);
        let base2 = gravity_torques(&p, 0.0, false).torques[1] + i2 * p.alpha_max;
        let base3 = gravity_torques(&p, 0.0, false).torques[2] + i3 * p.alpha_max;
        assert!((base2 - 0.81616).abs() < 1e-5, "{base2}");
        assert!((base3 - 0.12889).abs() < 1e-5, "{base3}");

        let r = max_payload_dynamic(&p);
        assert_eq!(r.binding_joint, Some(2));
        assert!((r.w_l - 1.6812).abs() / 1.6812 < 5e-3);
        let j3 = r.joint_bounds[2].unwrap();
        assert!((j3 - 19.55).abs() / 19.55 < 5e-3);
        assert!(r.joint_bounds[3].is_none());
    }

    #[test]
    fn inertia_only_reduces_payload() {
        let p = LinkParams { alpha_max: 0.0, ..defaults() };
        assert!(max_payload_dynamic(&p).w_l > max_payload_dynamic(&defaults()).w_l);
    }

    #[test]
    fn profile_peak_and_symmetry() {
        let s = trapezoidal_profile([0.0; 4], [1.0, 0.0, 0.0, 0.0], 3.0, 0.001).unwrap();
        let peak = s.iter().map(|x| x.qd[0]).fold(0.0, f64::max);
        assert!((peak - 0.5).abs() < 1e-12);
        let (q, _, _) = trapezoid_at(0.0_f64, 1.0, 3.0, 1.5);
        assert!((q - 0.5).abs() < 1e-12);
        assert_eq!(s[0].t, 0.0);
        assert_eq!(s.last().unwrap().t, 3.0);
        assert_eq!(s.last().unwrap().q[0], 1.0);
        assert_eq!(s.last().unwrap().qd[0], 0.0);
        assert!(s.windows(2).all(|w| w[1].t > w[0].t));
    }

    #[test]
    fn null_move_is_still() {
        let q = [0.3, -0.2, 0.1, 0.0];
        let s = trapezoidal_profile(q, q, 2.0, 0.01).unwrap();
        assert!(s.iter().all(|x| x.qd == [0.0; 4] && x.qdd == [0.0; 4]));
    }

    #[test]
    fn profile_rejects_coarse_dt() {
        assert!(matches!(
            trapezoidal_profile([0.0; 4], [1.0; 4], 1.0, 0.3),
            Err(DynamicsError::BadTiming { .. })
        ));
        assert!(trapezoidal_profile([0.0; 4], [1.0; 4], 0.0, 0.001).is_err());
        assert!(trapezoidal_profile([0.0; 4], [1.0; 4], 1.0, 0.25).is_ok());
    }

    #[test]
    fn profile_velocity_integrates_to_displacement() {
        let s = trapezoidal_profile([0.0; 4], [1.0, -0.5, 0.25, 2.0], 2.0, 0.001).unwrap();
        for j in 0..4 {
            let area: f64 = s.windows(2).map(|w| 0.5 * (w[0].qd[j] + w[1].qd[j]) * (w[1].t - w[0].t)).sum();
            let delta = s.last().unwrap().q[j] - s[0].q[j];
            assert!((area - delta).abs() < 1e-6, "joint {j}: {area} vs {delta}");
        }
    }

    #[test]
    fn horizontal_and_vertical_gravity() {
        let p = defaults();
        let g = gravity_at(&p, 0.699, &[0.0; 4]);
        assert!((g[1] - 1.0246).abs() < 1e-3);
        let up = std::f64::consts::FRAC_PI_2;
        let g = gravity_at(&p, 0.699, &[0.0, up, 0.0, 0.0]);
        for t in &g[1..] {
            assert!(t.abs() < 1e-12);
        }
    }

    #[test]
    fn inverse_dynamics_adds_inertial_torque() {
        let p = defaults();
        let still = ProfileSample { t: 0.0, q: [0.0; 4], qd: [0.0; 4], qdd: [0.0; 4] };
        let accel = ProfileSample { qdd: [0.0, 9.8125, 0.0, 0.0], ..still };
        let d = inverse_dynamics(&p, 0.699, &accel)[1] - inverse_dynamics(&p, 0.699, &still)[1];
        assert!((d - 0.01852).abs() < 1e-4);
    }

    #[test]
    fn forward_dynamics_rest_and_constant_torque() {
        let p = LinkParams { w2: 0.0, w3: 0.0, w4: 0.0, wj3: 0.0, wj4: 0.0, ..defaults() };
        let s0 = JointState::default();
        assert_eq!(forward_dynamics_step(&p, 0.0, &s0, &[0.0; 4], 0.001), s0);

        let tau = 0.01;
        let mut s = s0;
        for _ in 0..1000 {
            s = forward_dynamics_step(&p, 0.0, &s, &[tau, tau, tau, 0.0], 0.001);
        }
        let inertia = p.joint_inertias();
        for j in 0..3 {
            let expect = tau * 1.0 / inertia[j];
            assert!((s.qd[j] - expect).abs() / expect < 0.01);
        }
    }

    #[test]
    fn round_trip_closes() {
        let p = defaults();
        let profile = trapezoidal_profile([0.0, 0.2, -0.3, 0.1], [1.2, 0.9, 0.4, -0.6], 2.0, 0.001).unwrap();
        let rt = dynamics_round_trip(&p, 0.5, &profile);
        assert!(rt.final_error < 1e-3, "{}", rt.final_error);
    }

    #[test]
    fn trajectory_csv_header() {
        let s = trapezoidal_profile([0.0; 4], [1.0; 4], 1.0, 0.25).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,q1,q2,q3,q4,qd1,qd2,qd3,qd4,qdd1,qdd2,qdd3,qdd4");
        assert_eq!(lines.count(), s.len());
    }

    #[test]
    fn params_validation() {
        assert!(defaults().validate().is_ok());
        let bad = LinkParams { eta_belt: 1.5, ..defaults() };
        assert!(bad.validate().is_err());
        let mut bad = defaults();
        bad.lengths[2] = 0.0;
        assert!(bad.validate().is_err());
    }
}
