use serde::{Deserialize, Serialize};

use crate::kinematics::{DhTable, JointVector};
use crate::scalar::Real;
use crate::transform::Transform;

/// The three calibration transforms whose product gives the camera pose
/// relative to the hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandEyeChain<T> {
    pub cam_from_calib: Transform<T>,
    pub calib_from_base: Transform<T>,
    pub base_from_hand: Transform<T>,
}

/// `cam_from_calib · calib_from_base · base_from_hand`.
pub fn hand_eye_compose<T: Real>(chain: &HandEyeChain<T>) -> Transform<T> {
    chain.cam_from_calib * chain.calib_from_base * chain.base_from_hand
}

/// Fixed pose of the optical camera frame (x right, y down, z forward, m)
/// in DH frame 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraMount<T> {
    pub frame3_from_camera: Transform<T>,
}

impl<T: Real> Default for CameraMount<T> {
    /// Bracket on the forearm, 4.4 cm off the link axis and 5.6 cm to the
    /// side, tilted 1.2° from the link normal.
    ///
    /// The CAD frame of link 3 has its origin at the elbow with x along
    /// −z₃, y along y₃ and z along the link (x₃); the bracket sits at
    /// (0.0555, −0.044098, 0.11559) m in that frame, rolled 1.5498 rad.
    fn default() -> Self {
        let l = T::lit;
        let a3 = l(0.120);
        let cad = [l(0.0555), l(-0.044098), l(0.11559)];
        let translation = [cad[2] - a3, cad[1], -cad[0]];

        // Optical axes in frame 3 for the nominal quarter-turn roll.
        let (o, z) = (T::one(), T::zero());
        let upright = Transform::from_axes([z, z, o], [-o, z, z], [z, -o, z], translation);
        let residual = Transform::rot_x(T::FRAC_PI_2() - l(1.5498));
        Self {
            frame3_from_camera: upright * residual,
        }
    }
}

/// World (base) pose of the optical camera frame for joint angles `q`, in
/// metres.
pub fn camera_pose_world<T: Real>(table: &DhTable<T>, q: &JointVector<T>, mount: &CameraMount<T>) -> Transform<T> {
    let frame3 = table.link_frames(q)[3].scale_translation(T::lit(1e-3));
    frame3 * mount.frame3_from_camera
}
