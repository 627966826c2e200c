use serde::{Deserialize, Serialize};

use super::detection::NoseDetection;
use super::VisionError;
use crate::kinematics::{DhTable, JointVector};
use crate::scalar::{Real, Vec3};

/// Visual servo tuning.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct ServoConfig<T> {
    /// Joint-1 correction per pixel of horizontal offset (rad/px).
    pub x_sensitivity: T,
    /// Joint-2 correction per pixel of vertical offset (rad/px).
    pub y_sensitivity: T,
    /// Sign applied to the joint-1 correction. Joint 1 turns
    /// counter-clockwise seen from above while image x grows to the right,
    /// so −1 turns toward the target.
    pub pan_direction: T,
    /// Radius of the "centred" disc (px).
    pub radius_threshold: T,
    /// Time the error must stay inside the disc (s).
    pub stable_duration: T,
    pub rotation_factor_init_deg: T,
    pub rotation_increment_deg: T,
    /// Direction of the first search turn (−1 or +1).
    pub initial_direction: T,
    /// Metres per pixel when lifting image offsets to a 3D target.
    pub xy_scale: T,
    /// Vertical pixel bias added before scaling.
    pub y_bias_px: T,
    /// Metres of depth per estimated centimetre.
    pub depth_scale: T,
    /// Fraction of the initial depth dropped after each failed plan.
    pub depth_shrink: T,
    pub max_plan_attempts: u32,
}

impl<T: Real> Default for ServoConfig<T> {
    fn default() -> Self {
        let l = T::lit;
        Self {
            x_sensitivity: l(0.001),
            y_sensitivity: l(0.001),
            pan_direction: l(-1.0),
            radius_threshold: l(20.0),
            stable_duration: l(3.0),
            rotation_factor_init_deg: l(5.0),
            rotation_increment_deg: l(10.0),
            initial_direction: l(-1.0),
            xy_scale: l(0.005),
            y_bias_px: l(10.0),
            depth_scale: l(0.008),
            depth_shrink: l(0.1),
            max_plan_attempts: 10,
        }
    }
}

/// Proportional image-based correction of joints 1 and 2, clamped to the
/// joint limits. Joints 3 and 4 are left alone.
pub fn ibvs_step<T: Real>(
    q: &JointVector<T>,
    d: &NoseDetection<T>,
    cfg: &ServoConfig<T>,
    table: &DhTable<T>,
) -> Result<JointVector<T>, VisionError> {
    if !d.found {
        return Err(VisionError::NotFound);
    }
    let mut next = *q;
    next.0[0] += cfg.pan_direction * d.x_offset * cfg.x_sensitivity;
    next.0[1] += d.y_offset * cfg.y_sensitivity;
    Ok(table.clamp(&next))
}

/// Joint-1 turn (rad) for search attempt `attempt`: magnitudes 5°, 15°,
/// 25°, … with alternating direction starting from `initial_direction`.
pub fn search_sweep<T: Real>(attempt: u32, cfg: &ServoConfig<T>) -> T {
    let k = T::lit(f64::from(attempt));
    let deg = cfg.rotation_factor_init_deg + cfg.rotation_increment_deg * k;
    let dir = if attempt % 2 == 0 {
        cfg.initial_direction
    } else {
        -cfg.initial_direction
    };
    dir * T::deg_to_rad(deg)
}

/// True when the samples `(t, s)` up to `now` end in an unbroken run with
/// `s ≤ radius_threshold` that spans at least `stable_duration`.
pub fn stability_gate<T: Real>(history: &[(T, T)], cfg: &ServoConfig<T>, now: T) -> bool {
    let mut tracker = StabilityTracker::default();
    let mut stable = false;
    for &(t, s) in history.iter().take_while(|(t, _)| *t <= now) {
        stable = tracker.update(t, s, cfg);
    }
    stable
}

/// Streaming form of [`stability_gate`].
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StabilityTracker<T> {
    /// Time of the first sample of the current in-threshold run.
    pub since: Option<T>,
}

impl<T: Real> StabilityTracker<T> {
    pub fn update(&mut self, t: T, s: T, cfg: &ServoConfig<T>) -> bool {
        if s <= cfg.radius_threshold {
            let start = *self.since.get_or_insert(t);
            t - start >= cfg.stable_duration
        } else {
            self.since = None;
            false
        }
    }

    pub fn reset(&mut self) {
        self.since = None;
    }
}

/// Lifts a centred detection to a 3D point in the optical camera frame
/// (m) for position-based approach. `attempt` counts failed plans; each one
/// pulls the depth in by `depth_shrink` of the initial value.
pub fn pbvs_target<T: Real>(d: &NoseDetection<T>, cfg: &ServoConfig<T>, attempt: u32) -> Result<Vec3<T>, VisionError> {
    if !d.found {
        return Err(VisionError::NotFound);
    }
    let shrink = (T::one() - cfg.depth_shrink * T::lit(f64::from(attempt))).max(T::zero());
    Ok([
        d.x_offset * cfg.xy_scale,
        -(d.y_offset + cfg.y_bias_px) * cfg.xy_scale,
        cfg.depth_scale * d.distance * shrink,
    ])
}
