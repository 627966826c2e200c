use serde::{Deserialize, Serialize};

use super::MotorError;
use crate::scalar::Real;

/// Joint-angle to motor-step conversion constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepperPlan {
    /// Motor steps per joint revolution (microstepping and belt reduction
    /// folded in).
    pub steps_per_rev: [u32; 4],
    /// Joint-3 steps added per joint-2 step: joint 3's belt runs through
    /// joint 2, so moving joint 2 alone drags joint 3 along.
    pub coupling_2_to_3: f64,
}

impl Default for StepperPlan {
    fn default() -> Self {
        Self {
            steps_per_rev: [4800, 4000, 4000, 2048],
            coupling_2_to_3: 0.2,
        }
    }
}

impl StepperPlan {
    pub fn validate(&self) -> Result<(), MotorError> {
        if self.steps_per_rev.contains(&0) {
            return Err(MotorError::InvalidParam {
                field: "steps_per_rev",
                reason: "all entries must be > 0",
            });
        }
        Ok(())
    }

    /// Joint angle of one motor step (rad).
    pub fn step_angle<T: Real>(&self, joint: usize) -> T {
        T::TAU() / T::lit(f64::from(self.steps_per_rev[joint]))
    }
}

/// `round(angle · steps_per_rev / 2π)`, halves away from zero.
pub fn angle_to_steps<T: Real>(angle: T, joint: usize, plan: &StepperPlan) -> Result<i64, MotorError> {
    let spr = plan.steps_per_rev.get(joint).ok_or(MotorError::InvalidJoint(joint))?;
    let exact = angle * T::lit(f64::from(*spr)) / T::TAU();
    Ok(exact.round().to_i64().unwrap_or(0))
}

pub fn steps_to_angle<T: Real>(steps: i64, joint: usize, plan: &StepperPlan) -> Result<T, MotorError> {
    let spr = plan.steps_per_rev.get(joint).ok_or(MotorError::InvalidJoint(joint))?;
    Ok(T::lit(steps as f64) * T::TAU() / T::lit(f64::from(*spr)))
}

/// Converts joint step deltas into motor step deltas:
/// joint 3 gets `round(0.2 · Δjoint2)` added.
pub fn apply_coupling(delta_steps: [i64; 4], plan: &StepperPlan) -> [i64; 4] {
    let mut out = delta_steps;
    out[2] += (plan.coupling_2_to_3 * delta_steps[1] as f64).round() as i64;
    out
}

/// Rate and acceleration limits of one stepper.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepperLimits<T> {
    /// steps/s
    pub max_rate: T,
    /// steps/s²
    pub accel: T,
}

impl<T: Real> StepperLimits<T> {
    /// Per-joint defaults: 800 steps/s (380 for the small wrist motor),
    /// 1000 steps/s².
    pub fn defaults() -> [Self; 4] {
        let l = |r: f64| Self {
            max_rate: T::lit(r),
            accel: T::lit(1000.0),
        };
        [l(800.0), l(800.0), l(800.0), l(380.0)]
    }
}

/// Open-loop stepper state. `position` is the whole-step count actually
/// issued; `exact` carries the sub-step remainder of the rate integration.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepperState<T> {
    pub position: i64,
    pub exact: T,
    /// Signed step rate (steps/s).
    pub rate: T,
}

impl<T: Real> StepperState<T> {
    pub fn at(position: i64) -> Self {
        Self {
            position,
            exact: T::lit(position as f64),
            rate: T::zero(),
        }
    }

    pub fn is_at_rest(&self) -> bool {
        self.rate == T::zero()
    }
}

/// Fastest rate (along the direction of travel) from which the discrete
/// ramp can still stop within `dist` steps, decelerating `h` per tick.
///
/// Braking from `h·m` covers `h·dt·m(m+1)/2` steps.
fn braking_rate<T: Real>(dist: T, h: T, dt: T) -> T {
    if dist <= T::zero() {
        return T::zero();
    }
    let m = (-T::one() + (T::one() + T::lit(8.0) * dist / (h * dt)).sqrt()) / T::two();
    h * m
}

/// One tick of a trapezoidal step-rate ramp toward `target`.
///
/// The rate never exceeds `max_rate` and changes by at most `accel·dt` per
/// tick. When the final creeping tick would cross the target it lands on
/// the target exactly and stops on the following tick.
pub fn stepper_advance<T: Real>(state: &StepperState<T>, target: i64, limits: &StepperLimits<T>, dt: T) -> StepperState<T> {
    let goal = T::lit(target as f64);
    let err = goal - state.exact;
    let h = limits.accel * dt;
    if err == T::zero() && state.rate.abs() <= h {
        return StepperState::at(target);
    }
    let dir = if err > T::zero() {
        T::one()
    } else if err < T::zero() {
        -T::one()
    } else {
        -state.rate.signum()
    };
    // velocity along the direction to the goal (negative: moving away)
    let v = state.rate * dir;
    let allow = braking_rate(err.abs(), h, dt).min(limits.max_rate);
    let v_next = (v + h).min(allow).max(v - h).min(limits.max_rate.max(v - h));
    let rate = v_next * dir;

    let exact = state.exact + rate * dt;
    let crossed = (goal - exact) * err <= T::zero() && rate * err > T::zero();
    if crossed && rate.abs() <= h * T::lit(1.0 + 1e-9) {
        // land on the target this tick, come to rest on the next
        return StepperState {
            position: target,
            exact: goal,
            rate,
        };
    }
    StepperState {
        position: exact.round().to_i64().unwrap_or(state.position),
        exact,
        rate,
    }
}

/// Whole-step position where the ramp comes to rest if it starts braking
/// now at the full deceleration.
pub fn stepper_stop_target<T: Real>(state: &StepperState<T>, limits: &StepperLimits<T>, dt: T) -> i64 {
    let h = limits.accel * dt;
    let mut v = state.rate.abs();
    let mut dist = T::zero();
    while v > T::zero() {
        v = (v - h).max(T::zero());
        dist += v * dt;
    }
    let end = state.exact + dist * state.rate.signum();
    // round outward so the ramp never has to brake harder than `accel`
    let rounded = if state.rate > T::zero() { end.ceil() } else { end.floor() };
    rounded.to_i64().unwrap_or(state.position)
}
