use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::camera::CameraModel;
use super::VisionError;
use crate::scalar::{norm3, Real, Vec3};
use crate::transform::Transform;

/// Numerator of the box-area distance estimate (cm·px²).
const AREA_DISTANCE: f64 = 250_000.0;

/// Target observation in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoseDetection<T> {
    /// Pixels right of the image center.
    pub x_offset: T,
    /// Pixels above the image center.
    pub y_offset: T,
    /// Estimated range (cm).
    pub distance: T,
    pub box_w: T,
    pub box_h: T,
    pub found: bool,
}

impl<T: Real> NoseDetection<T> {
    pub fn not_found() -> Self {
        Self {
            x_offset: T::zero(),
            y_offset: T::zero(),
            distance: T::zero(),
            box_w: T::zero(),
            box_h: T::zero(),
            found: false,
        }
    }
}

/// Range (cm) from the detection box area: `250000 / (w·h)`.
pub fn estimate_distance<T: Real>(box_w: T, box_h: T) -> Result<T, VisionError> {
    if !(box_w > T::zero() && box_h > T::zero()) {
        return Err(VisionError::EmptyBox);
    }
    Ok(T::lit(AREA_DISTANCE) / (box_w * box_h))
}

/// Image-plane servo error `s = √(x² + y²)` (px).
pub fn ibvs_error<T: Real>(d: &NoseDetection<T>) -> Result<T, VisionError> {
    if !d.found {
        return Err(VisionError::NotFound);
    }
    Ok(d.x_offset.hypot(d.y_offset))
}

/// Geometric stand-in for the face detector.
///
/// `cam_pose_world` maps camera-frame points (optical: x right, y down,
/// z forward, metres) into the world. The target is found when it is in
/// front of the lens and its distorted projection lands inside the image.
/// Pixel noise is zero-mean Gaussian with standard deviation `noise_px`;
/// the RNG is only drawn from when `noise_px > 0`. The square box side is
/// chosen so that [`estimate_distance`] returns the true range.
pub fn detect_target_sim<T: Real, R: Rng + ?Sized>(
    cam: &CameraModel<T>,
    cam_pose_world: &Transform<T>,
    target_world: Vec3<T>,
    noise_px: T,
    rng: &mut R,
) -> NoseDetection<T> {
    let p = cam_pose_world.inverse().apply(target_world);
    let Ok(uv) = cam.project(p) else {
        return NoseDetection::not_found();
    };
    if !cam.contains_pixel(uv) {
        return NoseDetection::not_found();
    }
    let [cu, cv] = cam.image_center();
    let (mut x, mut y) = (uv[0] - cu, cv - uv[1]);
    if noise_px > T::zero() {
        let normal = Normal::new(0.0, noise_px.to_f64_lossy()).expect("finite noise level");
        x += T::lit(normal.sample(rng));
        y += T::lit(normal.sample(rng));
    }
    let range_cm = norm3(p) * T::lit(100.0);
    let side = (T::lit(AREA_DISTANCE) / range_cm).sqrt();
    NoseDetection {
        x_offset: x,
        y_offset: y,
        distance: range_cm,
        box_w: side,
        box_h: side,
        found: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distance_from_box() {
        assert_eq!(estimate_distance(50.0, 50.0).unwrap(), 100.0);
        assert_eq!(estimate_distance(500.0, 500.0).unwrap(), 1.0);
        let a: f64 = estimate_distance(40.0, 30.0).unwrap();
        let b = estimate_distance(80.0, 60.0).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
        assert_eq!(estimate_distance(0.0, 10.0), Err(VisionError::EmptyBox));
    }

    #[test]
    fn servo_error() {
        let mut d = NoseDetection::<f64> {
            x_offset: 3.0,
            y_offset: 4.0,
            found: true,
            ..Default::default()
        };
        assert_eq!(ibvs_error(&d).unwrap(), 5.0);
        d.x_offset = -20.0;
        d.y_offset = 0.0;
        assert_eq!(ibvs_error(&d).unwrap(), 20.0);
        assert_eq!(ibvs_error(&NoseDetection::<f64>::not_found()), Err(VisionError::NotFound));
    }

    #[test]
    fn on_axis_target_offsets() {
        let cam = CameraModel::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = detect_target_sim(&cam, &Transform::identity(), [0.0, 0.0, 0.4], 0.0, &mut rng);
        assert!(d.found);
        assert!((d.x_offset - (153.16333 - 320.0)).abs() < 1e-9);
        assert!((d.y_offset - (240.0 - 312.17826)).abs() < 1e-9);
        let est = estimate_distance(d.box_w, d.box_h).unwrap();
        assert!((est - 40.0).abs() / 40.0 < 0.05);
    }

    #[test]
    fn behind_or_outside_is_not_found() {
        let cam = CameraModel::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let behind = detect_target_sim(&cam, &Transform::identity(), [0.0, 0.0, -0.4], 0.0, &mut rng);
        assert_eq!(behind, NoseDetection::not_found());
        let wide = detect_target_sim(&cam, &Transform::identity(), [1.0, 0.0, 0.4], 0.0, &mut rng);
        assert!(!wide.found);
    }

    #[test]
    fn noise_free_is_repeatable() {
        let cam = CameraModel::<f64>::default();
        let pose = Transform::from_xyz_rpy([0.01, 0.02, -0.1], [0.05, -0.03, 0.02]);
        let mut r1 = ChaCha8Rng::seed_from_u64(1);
        let mut r2 = ChaCha8Rng::seed_from_u64(99);
        let a = detect_target_sim(&cam, &pose, [0.0, 0.0, 0.5], 0.0, &mut r1);
        let b = detect_target_sim(&cam, &pose, [0.0, 0.0, 0.5], 0.0, &mut r2);
        assert_eq!(a, b);
    }

    #[test]
    fn noise_has_requested_spread() {
        let cam = CameraModel::<f64>::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let clean = detect_target_sim(&cam, &Transform::identity(), [0.0, 0.0, 0.5], 0.0, &mut rng);
        let n = 4000;
        let var: f64 = (0..n)
            .map(|_| {
                let d = detect_target_sim(&cam, &Transform::identity(), [0.0, 0.0, 0.5], 2.0, &mut rng);
                (d.x_offset - clean.x_offset).powi(2)
            })
            .sum::<f64>()
            / f64::from(n);
        assert!((var.sqrt() - 2.0).abs() < 0.1);
    }
}
