//! Control stack for a 4-DOF assistive feeding arm: kinematics, payload
//! dynamics, motor control, visual servoing and the feeding supervisor.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below are what the simulator uses.

pub mod dynamics;
pub mod export;
pub mod kinematics;
pub mod motor;
pub mod scalar;
pub mod supervisor;
pub mod transform;
pub mod vision;

pub use scalar::{Real, Vec3};
pub use transform::Transform;

pub type Transform64 = transform::Transform<f64>;
pub type DhTable64 = kinematics::DhTable<f64>;
pub type JointVector64 = kinematics::JointVector<f64>;
pub type LinkParams64 = dynamics::LinkParams<f64>;
pub type CameraModel64 = vision::CameraModel<f64>;
pub type ServoConfig64 = vision::ServoConfig<f64>;
