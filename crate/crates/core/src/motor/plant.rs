use serde::{Deserialize, Serialize};

use super::MotorError;
use crate::scalar::Real;

/// First-order velocity plant `G(s) = K / (J·s + b)` with an integrating
/// angle output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotorPlant<T> {
    pub j: T,
    pub b: T,
    pub k: T,
    /// Angular velocity (rad/s).
    pub velocity: T,
    /// Angle (rad).
    pub angle: T,
}

impl<T: Real> Default for MotorPlant<T> {
    fn default() -> Self {
        Self {
            j: T::lit(0.05),
            b: T::lit(0.75),
            k: T::one(),
            velocity: T::zero(),
            angle: T::zero(),
        }
    }
}

impl<T: Real> MotorPlant<T> {
    pub fn new(j: T, b: T, k: T) -> Result<Self, MotorError> {
        if !(j > T::zero()) {
            return Err(MotorError::InvalidParam { field: "j", reason: "must be > 0" });
        }
        if b < T::zero() {
            return Err(MotorError::InvalidParam { field: "b", reason: "must be >= 0" });
        }
        Ok(Self {
            j,
            b,
            k,
            velocity: T::zero(),
            angle: T::zero(),
        })
    }

    /// Velocity reached under a constant command, `K·u / b`.
    pub fn steady_state_velocity(&self, command: T) -> T {
        self.k * command / self.b
    }

    /// `J / b` (s).
    pub fn time_constant(&self) -> T {
        self.j / self.b
    }

    pub fn step(&self, command: T, dt: T) -> Self {
        let mut next = *self;
        next.velocity += dt * (self.k * command - self.b * self.velocity) / self.j;
        next.angle += dt * next.velocity;
        next
    }
}

/// Semi-implicit Euler step: velocity first, then angle from the new velocity.
pub fn plant_step<T: Real>(plant: &MotorPlant<T>, command: T, dt: T) -> MotorPlant<T> {
    plant.step(command, dt)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_step_steady_state_and_time_constant() {
        let dt = 1e-4;
        let mut p = MotorPlant::<f64>::default();
        let target = p.steady_state_velocity(1.0);
        assert!((target - 4.0 / 3.0).abs() < 1e-12);
        let mut t63 = None;
        for k in 1..=50_000 {
            p = p.step(1.0, dt);
            if t63.is_none() && p.velocity >= (1.0 - (-1.0f64).exp()) * target {
                t63 = Some(k as f64 * dt);
            }
        }
        assert!((p.velocity - target).abs() / target < 1e-3);
        let t63 = t63.unwrap();
        assert!((t63 - 0.05 / 0.75).abs() < 2e-3, "{t63}");
    }

    #[test]
    fn rest_is_fixed_point() {
        let p = MotorPlant::<f64>::default();
        assert_eq!(plant_step(&p, 0.0, 0.001), p);
    }

    #[test]
    fn rejects_nonpositive_inertia() {
        assert!(MotorPlant::new(0.0, 0.75, 1.0).is_err());
        assert!(MotorPlant::new(0.05, -1.0, 1.0).is_err());
    }
}
