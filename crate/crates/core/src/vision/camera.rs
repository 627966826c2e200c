use serde::{Deserialize, Serialize};

use super::VisionError;
use crate::scalar::{Real, Vec3};

const UNDISTORT_ITERATIONS: usize = 20;
const UNDISTORT_TOL_PX: f64 = 1e-6;

/// Pinhole intrinsics with plumb-bob distortion `(k1, k2, p1, p2, k3)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "T: Real + Deserialize<'de>"))]
pub struct CameraModel<T> {
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub dist: [T; 5],
    pub width: u32,
    pub height: u32,
}

impl<T: Real> Default for CameraModel<T> {
    /// The calibrated 640×480 USB camera.
    fn default() -> Self {
        let l = T::lit;
        Self {
            fx: l(1410.98768),
            fy: l(1411.54333),
            cx: l(153.16333),
            cy: l(312.17826),
            dist: [l(-0.091805), l(0.008574), l(0.002489), l(-0.030940), l(0.0)],
            width: 640,
            height: 480,
        }
    }
}

impl<T: Real> CameraModel<T> {
    pub fn without_distortion(&self) -> Self {
        Self {
            dist: [T::zero(); 5],
            ..*self
        }
    }

    /// Applies lens distortion to normalized image coordinates.
    pub fn distort_normalized(&self, x: T, y: T) -> (T, T) {
        let [k1, k2, p1, p2, k3] = self.dist;
        let two = T::two();
        let r2 = x * x + y * y;
        let radial = T::one() + r2 * (k1 + r2 * (k2 + r2 * k3));
        (
            x * radial + two * p1 * x * y + p2 * (r2 + two * x * x),
            y * radial + p1 * (r2 + two * y * y) + two * p2 * x * y,
        )
    }

    /// Inverts [`distort_normalized`](Self::distort_normalized) by Newton
    /// iteration.
    pub fn undistort_normalized(&self, xd: T, yd: T) -> (T, T) {
        let [k1, k2, p1, p2, k3] = self.dist;
        let (two, three, six) = (T::two(), T::lit(3.0), T::lit(6.0));
        let tol = T::lit(UNDISTORT_TOL_PX) / self.fx.max(self.fy);
        let (mut x, mut y) = (xd, yd);
        for _ in 0..UNDISTORT_ITERATIONS {
            let (fx, fy) = self.distort_normalized(x, y);
            let (ex, ey) = (fx - xd, fy - yd);
            if ex.abs() < tol && ey.abs() < tol {
                break;
            }
            let r2 = x * x + y * y;
            let radial = T::one() + r2 * (k1 + r2 * (k2 + r2 * k3));
            let dr = two * (k1 + two * k2 * r2 + three * k3 * r2 * r2);
            let (drx, dry) = (dr * x, dr * y);
            let j11 = radial + x * drx + two * p1 * y + six * p2 * x;
            let j12 = x * dry + two * p1 * x + two * p2 * y;
            let j21 = y * drx + two * p1 * x + two * p2 * y;
            let j22 = radial + y * dry + six * p1 * y + two * p2 * x;
            let det = j11 * j22 - j12 * j21;
            if det.abs() < T::epsilon() {
                break;
            }
            x -= (j22 * ex - j12 * ey) / det;
            y -= (j11 * ey - j21 * ex) / det;
        }
        (x, y)
    }

    /// Camera-frame point (m, z forward) to distorted pixel `(u, v)`.
    pub fn project(&self, p: Vec3<T>) -> Result<[T; 2], VisionError> {
        if !(p[2] > T::lit(1e-6)) {
            return Err(VisionError::BehindCamera { z: p[2].to_f64_lossy() });
        }
        let (xd, yd) = self.distort_normalized(p[0] / p[2], p[1] / p[2]);
        Ok([self.fx * xd + self.cx, self.fy * yd + self.cy])
    }

    /// Distorted pixel to the pixel an ideal pinhole camera would see.
    pub fn undistort_pixel(&self, uv: [T; 2]) -> [T; 2] {
        let (x, y) = self.undistort_normalized((uv[0] - self.cx) / self.fx, (uv[1] - self.cy) / self.fy);
        [self.fx * x + self.cx, self.fy * y + self.cy]
    }

    /// Pinhole pixel to the distorted pixel the lens produces.
    pub fn distort_pixel(&self, uv: [T; 2]) -> [T; 2] {
        let (x, y) = self.distort_normalized((uv[0] - self.cx) / self.fx, (uv[1] - self.cy) / self.fy);
        [self.fx * x + self.cx, self.fy * y + self.cy]
    }

    pub fn contains_pixel(&self, uv: [T; 2]) -> bool {
        uv[0] >= T::zero()
            && uv[1] >= T::zero()
            && uv[0] < T::lit(f64::from(self.width))
            && uv[1] < T::lit(f64::from(self.height))
    }

    pub fn image_center(&self) -> [T; 2] {
        [
            T::lit(f64::from(self.width)) * T::half(),
            T::lit(f64::from(self.height)) * T::half(),
        ]
    }
}

/// `data:` block of a calibration matrix. `rows`/`cols` are optional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixData {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub data: Vec<f64>,
}

impl MatrixData {
    fn check(&self, name: &str, rows: usize, cols: usize) -> Result<(), VisionError> {
        let shape_ok = self.rows.is_none_or(|r| r == rows) && self.cols.is_none_or(|c| c == cols);
        if !shape_ok || self.data.len() != rows * cols {
            return Err(VisionError::Calibration(format!(
                "{name} must be {rows}x{cols} ({} values given)",
                self.data.len()
            )));
        }
        Ok(())
    }

    fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        Self {
            rows: Some(rows),
            cols: Some(cols),
            data,
        }
    }
}

/// Camera calibration file as written by the ROS camera calibrator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationFile {
    pub image_width: u32,
    pub image_height: u32,
    #[serde(default)]
    pub camera_name: Option<String>,
    pub camera_matrix: MatrixData,
    #[serde(default)]
    pub distortion_model: Option<String>,
    pub distortion_coefficients: MatrixData,
    #[serde(default)]
    pub rectification_matrix: Option<MatrixData>,
    #[serde(default)]
    pub projection_matrix: Option<MatrixData>,
}

impl CalibrationFile {
    pub fn parse(text: &str) -> Result<Self, VisionError> {
        let file: Self = serde_yaml::from_str(text).map_err(|e| VisionError::Calibration(e.to_string()))?;
        file.camera_matrix.check("camera_matrix", 3, 3)?;
        file.distortion_coefficients.check("distortion_coefficients", 1, 5)?;
        if let Some(m) = &file.rectification_matrix {
            m.check("rectification_matrix", 3, 3)?;
        }
        if let Some(m) = &file.projection_matrix {
            m.check("projection_matrix", 3, 4)?;
        }
        if let Some(model) = &file.distortion_model {
            if model != "plumb_bob" {
                return Err(VisionError::Calibration(format!("unsupported distortion model `{model}`")));
            }
        }
        Ok(file)
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("calibration data serializes")
    }

    pub fn camera<T: Real>(&self) -> CameraModel<T> {
        let k = &self.camera_matrix.data;
        let d = &self.distortion_coefficients.data;
        CameraModel {
            fx: T::lit(k[0]),
            fy: T::lit(k[4]),
            cx: T::lit(k[2]),
            cy: T::lit(k[5]),
            dist: std::array::from_fn(|i| T::lit(d[i])),
            width: self.image_width,
            height: self.image_height,
        }
    }

    pub fn from_camera<T: Real>(cam: &CameraModel<T>) -> Self {
        let f = |v: T| v.to_f64_lossy();
        Self {
            image_width: cam.width,
            image_height: cam.height,
            camera_name: None,
            camera_matrix: MatrixData::dense(
                3,
                3,
                vec![f(cam.fx), 0.0, f(cam.cx), 0.0, f(cam.fy), f(cam.cy), 0.0, 0.0, 1.0],
            ),
            distortion_model: Some("plumb_bob".into()),
            distortion_coefficients: MatrixData::dense(1, 5, cam.dist.iter().map(|v| f(*v)).collect()),
            rectification_matrix: None,
            projection_matrix: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CALIBRATION: &str = "
image_width: 640
image_height: 480
camera_name: narrow_stereo
camera_matrix:
  rows: 3
  cols: 3
  data: [1410.98768, 0. , 153.16333,
         0. , 1411.54333, 312.17826,
         0. , 0. , 1. ]
distortion_model: plumb_bob
distortion_coefficients:
  rows: 1
  cols: 5
  data: [-0.091805, 0.008574, 0.002489, -0.030940, 0.000000]
rectification_matrix:
  rows: 3
  cols: 3
  data: [1., 0., 0.,
         0., 1., 0.,
         0., 0., 1.]
projection_matrix:
  rows: 3
  cols: 4
  data: [1364.97693, 0. , 145.62117, 0. ,
         0. , 1410.63196, 312.19188, 0. ,
         0. , 0. , 1. , 0. ]
";

    #[test]
    fn on_axis_hits_principal_point() {
        let cam = CameraModel::<f64>::default();
        for z in [0.1, 1.0, 7.5] {
            let [u, v] = cam.project([0.0, 0.0, z]).unwrap();
            assert!((u - 153.16333).abs() < 1e-9 && (v - 312.17826).abs() < 1e-9);
        }
    }

    #[test]
    fn pinhole_offset() {
        let cam = CameraModel::<f64>::default().without_distortion();
        let [u, _] = cam.project([0.01, 0.0, 1.0]).unwrap();
        assert!((u - (153.16333 + 14.1098768)).abs() < 1e-9);
        assert!((u - 167.27).abs() < 0.01);
    }

    #[test]
    fn barrel_pulls_inward() {
        // radial terms only; the tangential p2 term is large enough to push
        // some points outward on its own
        let mut cam = CameraModel::<f64>::default();
        cam.dist[2] = 0.0;
        cam.dist[3] = 0.0;
        let ideal = cam.without_distortion();
        for p in [[0.1, 0.05, 1.0], [-0.2, 0.1, 1.0], [0.15, -0.12, 1.0]] {
            let d = cam.project(p).unwrap();
            let i = ideal.project(p).unwrap();
            let rd = (d[0] - cam.cx).hypot(d[1] - cam.cy);
            let ri = (i[0] - cam.cx).hypot(i[1] - cam.cy);
            assert!(rd < ri);
        }
    }

    #[test]
    fn behind_camera() {
        let cam = CameraModel::<f64>::default();
        assert!(matches!(cam.project([0.0, 0.0, -1.0]), Err(VisionError::BehindCamera { .. })));
        assert!(cam.project([0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn undistort_recovers_pinhole_pixel() {
        let cam = CameraModel::<f64>::default();
        for u in (0..640).step_by(40) {
            for v in (0..480).step_by(40) {
                let p = [f64::from(u), f64::from(v)];
                let back = cam.undistort_pixel(cam.distort_pixel(p));
                assert!((back[0] - p[0]).abs() < 1e-3 && (back[1] - p[1]).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn parses_calibration_file() {
        let file = CalibrationFile::parse(CALIBRATION).unwrap();
        let cam: CameraModel<f64> = file.camera();
        assert_eq!(cam, CameraModel::default());
        assert_eq!(file.projection_matrix.as_ref().unwrap().data.len(), 12);
        let again = CalibrationFile::parse(&file.to_yaml()).unwrap();
        assert_eq!(again, file);
    }

    #[test]
    fn rejects_malformed_calibration() {
        let short = CALIBRATION.replace("-0.091805, ", "");
        assert!(CalibrationFile::parse(&short).is_err());
        let other = CALIBRATION.replace("plumb_bob", "equidistant");
        assert!(CalibrationFile::parse(&other).is_err());
        assert!(CalibrationFile::parse("image_width: [").is_err());
    }

    #[test]
    fn camera_round_trips_through_file() {
        let cam = CameraModel::<f64>::default();
        let file = CalibrationFile::from_camera(&cam);
        assert_eq!(CalibrationFile::parse(&file.to_yaml()).unwrap().camera::<f64>(), cam);
    }
}
