use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::plant::MotorPlant;
use crate::export::format_sig;
use crate::scalar::Real;

/// Position-loop PID and velocity-loop PI gains.
///
/// The gains are discrete, per control period: the integral term is
/// `Ki·Σe` and the derivative term `Kd·Δx` over one period
/// ([`CascadeConfig::sample_period`]), as in a fixed-rate firmware loop.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CascadeGains<T> {
    pub kp1: T,
    pub ki1: T,
    pub kd1: T,
    pub kp2: T,
    pub ki2: T,
}

impl<T: Real> Default for CascadeGains<T> {
    fn default() -> Self {
        Self {
            kp1: T::lit(120.0),
            ki1: T::lit(10.0),
            kd1: T::lit(500.0),
            kp2: T::lit(20.0),
            ki2: T::lit(30.0),
        }
    }
}

impl<T: Real> CascadeGains<T> {
    /// `ω_n = √Kp2` (rad/s).
    pub fn natural_frequency(&self) -> T {
        self.kp2.sqrt()
    }

    /// `ζ = Ki2 / (2·√Kp2)`. A rule of thumb read off the velocity-loop gains,
    /// not the damping of the simulated closed loop.
    pub fn damping_ratio(&self) -> T {
        self.ki2 / (T::two() * self.kp2.sqrt())
    }

    pub fn all_nonnegative(&self) -> bool {
        [self.kp1, self.ki1, self.kd1, self.kp2, self.ki2]
            .iter()
            .all(|g| *g >= T::zero())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CascadeConfig<T> {
    pub gains: CascadeGains<T>,
    /// Control period the gains are tuned for (s).
    pub sample_period: T,
    /// Actuator command range; each integrator contribution is clamped to
    /// ±10× this.
    pub command_range: T,
}

impl<T: Real> Default for CascadeConfig<T> {
    fn default() -> Self {
        Self {
            gains: CascadeGains::default(),
            sample_period: T::lit(1e-3),
            command_range: T::lit(1000.0),
        }
    }
}

impl<T: Real> CascadeConfig<T> {
    fn integrator_limit(&self) -> T {
        T::lit(10.0) * self.command_range
    }
}

/// Controller memory carried between calls.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CascadeState<T> {
    /// Accumulated position error, in sample-period units.
    pub pos_integral: T,
    /// Accumulated velocity error, in sample-period units.
    pub vel_integral: T,
    pub prev_pos: Option<T>,
    /// Velocity reference produced by the outer loop on the last call.
    pub vel_ref: T,
}

fn clamp_integral<T: Real>(sum: T, gain: T, limit: T) -> T {
    if gain > T::zero() {
        let bound = limit / gain;
        sum.max(-bound).min(bound)
    } else {
        sum
    }
}

/// One controller update. Returns the plant command and the new state.
///
/// Outer loop: `v_ref = Kp1·e + Ki1·Σe − Kd1·Δpos` (derivative on
/// measurement). Inner loop: `u = Kp2·e_v + Ki2·Σe_v`.
pub fn cascade_step<T: Real>(
    cfg: &CascadeConfig<T>,
    ref_pos: T,
    meas_pos: T,
    meas_vel: T,
    dt: T,
    state: &CascadeState<T>,
) -> (T, CascadeState<T>) {
    let g = &cfg.gains;
    let scale = dt / cfg.sample_period;
    let limit = cfg.integrator_limit();
    let mut next = *state;

    let e = ref_pos - meas_pos;
    next.pos_integral = clamp_integral(state.pos_integral + e * scale, g.ki1, limit);
    let dpos = state.prev_pos.map_or(T::zero(), |p| (meas_pos - p) / scale);
    let vel_ref = g.kp1 * e + g.ki1 * next.pos_integral - g.kd1 * dpos;

    let ev = vel_ref - meas_vel;
    next.vel_integral = clamp_integral(state.vel_integral + ev * scale, g.ki2, limit);
    let command = g.kp2 * ev + g.ki2 * next.vel_integral;

    next.prev_pos = Some(meas_pos);
    next.vel_ref = vel_ref;
    (command, next)
}

/// One row of a control trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlSample<T> {
    pub t: T,
    pub reference: T,
    pub pos: T,
    pub vel: T,
    pub command: T,
}

/// Closes the cascade around `plant` for `steps` periods of `dt`, with the
/// reference given per sample time.
pub fn simulate_cascade<T: Real>(
    cfg: &CascadeConfig<T>,
    plant: MotorPlant<T>,
    reference: impl Fn(T) -> T,
    dt: T,
    steps: usize,
) -> Vec<ControlSample<T>> {
    let mut plant = plant;
    let mut ctl = CascadeState::default();
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let t = dt * T::lit(k as f64);
        let r = reference(t);
        let (u, next) = cascade_step(cfg, r, plant.angle, plant.velocity, dt, &ctl);
        ctl = next;
        out.push(ControlSample {
            t,
            reference: r,
            pos: plant.angle,
            vel: plant.velocity,
            command: u,
        });
        plant = plant.step(u, dt);
    }
    out
}

/// Control trace CSV: `t,ref,pos,vel,command`.
pub fn write_control_csv<T: Real, W: Write>(samples: &[ControlSample<T>], mut out: W) -> io::Result<()> {
    writeln!(out, "t,ref,pos,vel,command")?;
    for s in samples {
        writeln!(
            out,
            "{},{},{},{},{}",
            format_sig(s.t.to_f64_lossy(), 6),
            format_sig(s.reference.to_f64_lossy(), 6),
            format_sig(s.pos.to_f64_lossy(), 6),
            format_sig(s.vel.to_f64_lossy(), 6),
            format_sig(s.command.to_f64_lossy(), 6)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_error_gives_zero_command() {
        let cfg = CascadeConfig::<f64>::default();
        let (u, _) = cascade_step(&cfg, 0.4, 0.4, 0.0, 1e-3, &CascadeState::default());
        assert_eq!(u, 0.0);
    }

    #[test]
    fn derived_characteristics() {
        let g = CascadeGains::<f64>::default();
        assert!((g.natural_frequency() - 20f64.sqrt()).abs() < 1e-12);
        assert!((g.natural_frequency() - 4.47).abs() < 5e-3);
        assert!((g.damping_ratio() - 30.0 / (2.0 * 20f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn unit_step_settles() {
        let cfg = CascadeConfig::<f64>::default();
        let trace = simulate_cascade(&cfg, MotorPlant::default(), |_| 1.0, 1e-3, 5000);
        let peak = trace.iter().map(|s| s.pos).fold(f64::MIN, f64::max);
        let last = trace.last().unwrap();
        assert!((last.pos - 1.0).abs() < 0.01, "final {}", last.pos);
        assert!(peak - 1.0 < 0.30, "overshoot {}", peak - 1.0);
    }

    #[test]
    fn derivative_acts_on_measurement() {
        // a reference jump with the plant at rest must not produce a kick
        // beyond the proportional terms
        let cfg = CascadeConfig::<f64>::default();
        let s0 = CascadeState {
            prev_pos: Some(0.0),
            ..Default::default()
        };
        let (u, st) = cascade_step(&cfg, 1.0, 0.0, 0.0, 1e-3, &s0);
        assert!((st.vel_ref - (120.0 + 10.0)).abs() < 1e-12);
        assert!((u - (20.0 * 130.0 + 30.0 * 130.0)).abs() < 1e-9);
    }

    #[test]
    fn integrators_clamp() {
        let cfg = CascadeConfig {
            command_range: 1.0,
            ..CascadeConfig::<f64>::default()
        };
        let mut st = CascadeState::default();
        for _ in 0..10_000 {
            st = cascade_step(&cfg, 100.0, 0.0, 0.0, 1e-3, &st).1;
        }
        assert!(cfg.gains.ki1 * st.pos_integral <= 10.0 + 1e-9);
        assert!(cfg.gains.ki2 * st.vel_integral <= 10.0 + 1e-9);
    }

    #[test]
    fn control_csv_header() {
        let cfg = CascadeConfig::<f64>::default();
        let trace = simulate_cascade(&cfg, MotorPlant::default(), |_| 1.0, 1e-3, 3);
        let mut buf = Vec::new();
        write_control_csv(&trace, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,ref,pos,vel,command\n0,1.00000,0,0,"));
        assert_eq!(text.lines().count(), 4);
    }
}
