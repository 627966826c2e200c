//! Motor-level models: first-order velocity plant with a cascade PID, a
//! quadrature encoder decoder, and open-loop stepper planning.

mod cascade;
mod encoder;
mod plant;
mod stepper;

use thiserror::Error;

pub use cascade::{
    cascade_step, simulate_cascade, write_control_csv, CascadeConfig, CascadeGains, CascadeState, ControlSample,
};
pub use encoder::{encoder_decode, encoder_speed, EncoderModel};
pub use plant::{plant_step, MotorPlant};
pub use stepper::{
    angle_to_steps, apply_coupling, stepper_advance, stepper_stop_target, steps_to_angle, StepperLimits,
    StepperPlan, StepperState,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotorError {
    #[error("time interval must be > 0")]
    ZeroInterval,
    #[error("joint index {0} out of range 0..=3")]
    InvalidJoint(usize),
    #[error("invalid motor parameter `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: &'static str },
}
