//! Eye-in-hand vision: camera model and calibration data, simulated nose
//! detection, the image-based servo law with its search sweep and stability
//! gate, and the camera mounting chain.

mod camera;
mod detection;
mod mount;
mod servo;
mod trial;

use thiserror::Error;

pub use camera::{CalibrationFile, CameraModel, MatrixData};
pub use detection::{detect_target_sim, estimate_distance, ibvs_error, NoseDetection};
pub use mount::{camera_pose_world, hand_eye_compose, CameraMount, HandEyeChain};
pub use servo::{ibvs_step, pbvs_target, search_sweep, stability_gate, ServoConfig, StabilityTracker};
pub use trial::{ServoOutcome, ServoRig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VisionError {
    #[error("point is behind the camera (z = {z})")]
    BehindCamera { z: f64 },
    #[error("detection box has zero area")]
    EmptyBox,
    #[error("no target detected")]
    NotFound,
    #[error("calibration file: {0}")]
    Calibration(String),
}
