use rand::Rng;
use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use super::detection::{detect_target_sim, ibvs_error};
use super::mount::{camera_pose_world, CameraMount};
use super::servo::{ibvs_step, ServoConfig, StabilityTracker};
use crate::kinematics::{DhTable, JointVector};
use crate::scalar::{Real, Vec3};

/// Result of a kinematic servo run (joints assumed to reach each commanded
/// pose within one servo period).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServoOutcome<T> {
    /// Simulated time at which the stability gate opened.
    pub stable_at: Option<T>,
    pub iterations: usize,
    pub initial_error: T,
    pub final_error: T,
    pub final_q: JointVector<T>,
    /// The target left the image at some point.
    pub lost: bool,
}

/// Everything a closed servo loop needs besides its start pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ServoRig<T> {
    pub table: DhTable<T>,
    pub camera: CameraModel<T>,
    pub mount: CameraMount<T>,
    pub config: ServoConfig<T>,
    /// Simulated time per detect→correct iteration (s).
    pub period: T,
}

impl<T: Real> Default for ServoRig<T> {
    fn default() -> Self {
        Self {
            table: DhTable::robot(),
            camera: CameraModel::default(),
            mount: CameraMount::default(),
            config: ServoConfig::default(),
            period: T::lit(0.1),
        }
    }
}

impl<T: Real> ServoRig<T> {
    /// detect → [`ibvs_step`] → move, until the stability gate opens or
    /// `max_time` of simulated time passes.
    pub fn run<R: Rng + ?Sized>(
        &self,
        q0: JointVector<T>,
        target_world: Vec3<T>,
        noise_px: T,
        max_time: T,
        rng: &mut R,
    ) -> ServoOutcome<T> {
        let mut q = q0;
        let mut tracker = StabilityTracker::default();
        let mut t = T::zero();
        let mut outcome = ServoOutcome {
            stable_at: None,
            iterations: 0,
            initial_error: T::nan(),
            final_error: T::nan(),
            final_q: q0,
            lost: false,
        };
        while t <= max_time {
            let pose = camera_pose_world(&self.table, &q, &self.mount);
            let d = detect_target_sim(&self.camera, &pose, target_world, noise_px, rng);
            let Ok(s) = ibvs_error(&d) else {
                outcome.lost = true;
                break;
            };
            if outcome.iterations == 0 {
                outcome.initial_error = s;
            }
            outcome.final_error = s;
            outcome.iterations += 1;
            if tracker.update(t, s, &self.config) {
                outcome.stable_at = Some(t);
                break;
            }
            q = ibvs_step(&q, &d, &self.config, &self.table).expect("detection was found");
            t += self.period;
        }
        outcome.final_q = q;
        outcome
    }
}
