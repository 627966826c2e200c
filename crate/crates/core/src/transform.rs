//! Rigid-body transforms (rotation + translation).

use std::ops::Mul;

use serde::{Deserialize, Serialize};

use crate::scalar::{add3, Real, Vec3};

/// Homogeneous rigid transform `[R | p; 0 0 0 1]`.
///
/// `rotation` is stored row-major. Translation units are whatever the caller
/// works in (millimetres for the arm model, metres for the camera chain).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transform<T> {
    pub rotation: [[T; 3]; 3],
    pub translation: Vec3<T>,
}

impl<T: Real> Default for Transform<T> {
    fn default() -> Self {
        Self::identity()
    }
}

impl<T: Real> Transform<T> {
    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Self {
            rotation: [[o, z, z], [z, o, z], [z, z, o]],
            translation: [z, z, z],
        }
    }

    pub fn new(rotation: [[T; 3]; 3], translation: Vec3<T>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3<T>) -> Self {
        Self {
            translation,
            ..Self::identity()
        }
    }

    pub fn rot_x(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self::new([[o, z, z], [z, c, -s], [z, s, c]], [z, z, z])
    }

    pub fn rot_y(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self::new([[c, z, s], [z, o, z], [-s, z, c]], [z, z, z])
    }

    pub fn rot_z(angle: T) -> Self {
        let (s, c) = angle.sin_cos();
        let (o, z) = (T::one(), T::zero());
        Self::new([[c, -s, z], [s, c, z], [z, z, o]], [z, z, z])
    }

    /// URDF-style origin: translation then fixed-axis roll/pitch/yaw
    /// (`R = Rz(yaw) * Ry(pitch) * Rx(roll)`).
    pub fn from_xyz_rpy(xyz: Vec3<T>, rpy: Vec3<T>) -> Self {
        let r = Self::rot_z(rpy[2]) * Self::rot_y(rpy[1]) * Self::rot_x(rpy[0]);
        Self::new(r.rotation, xyz)
    }

    /// Builds a transform whose rotation has the given columns (the child
    /// frame's axes expressed in the parent frame).
    pub fn from_axes(x: Vec3<T>, y: Vec3<T>, z: Vec3<T>, translation: Vec3<T>) -> Self {
        Self::new(
            [[x[0], y[0], z[0]], [x[1], y[1], z[1]], [x[2], y[2], z[2]]],
            translation,
        )
    }

    pub fn column(&self, c: usize) -> Vec3<T> {
        [self.rotation[0][c], self.rotation[1][c], self.rotation[2][c]]
    }

    pub fn rotate(&self, v: Vec3<T>) -> Vec3<T> {
        let r = &self.rotation;
        [
            r[0][0] * v[0] + r[0][1] * v[1] + r[0][2] * v[2],
            r[1][0] * v[0] + r[1][1] * v[1] + r[1][2] * v[2],
            r[2][0] * v[0] + r[2][1] * v[1] + r[2][2] * v[2],
        ]
    }

    /// Maps a point from the child frame into the parent frame.
    pub fn apply(&self, p: Vec3<T>) -> Vec3<T> {
        add3(self.rotate(p), self.translation)
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        let a = &self.rotation;
        let b = &rhs.rotation;
        let mut r = [[T::zero(); 3]; 3];
        for (i, row) in r.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
            }
        }
        Self::new(r, self.apply(rhs.translation))
    }

    pub fn inverse(&self) -> Self {
        let r = &self.rotation;
        let rt = [
            [r[0][0], r[1][0], r[2][0]],
            [r[0][1], r[1][1], r[2][1]],
            [r[0][2], r[1][2], r[2][2]],
        ];
        let t = self.translation;
        let inv = Self::new(rt, [T::zero(); 3]);
        let p = inv.rotate(t);
        Self::new(rt, [-p[0], -p[1], -p[2]])
    }

    pub fn determinant(&self) -> T {
        let r = &self.rotation;
        r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
    }

    /// Largest deviation of `RᵀR` from identity.
    pub fn orthonormality_error(&self) -> T {
        let r = &self.rotation;
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                let dot = r[0][i] * r[0][j] + r[1][i] * r[1][j] + r[2][i] * r[2][j];
                let expect = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - expect).abs());
            }
        }
        worst
    }

    /// Orthonormal with `det = +1`, both within `tol`.
    pub fn is_rigid(&self, tol: T) -> bool {
        self.orthonormality_error() <= tol && (self.determinant() - T::one()).abs() <= tol
    }

    /// Element-wise distance to another transform (rotation and translation).
    pub fn max_abs_diff(&self, other: &Self) -> T {
        let mut worst = T::zero();
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.rotation[i][j] - other.rotation[i][j]).abs());
            }
            worst = worst.max((self.translation[i] - other.translation[i]).abs());
        }
        worst
    }

    pub fn scale_translation(&self, k: T) -> Self {
        let t = self.translation;
        Self::new(self.rotation, [t[0] * k, t[1] * k, t[2] * k])
    }

    pub fn cast<U: Real>(&self) -> Transform<U> {
        let c = |v: T| U::lit(v.to_f64_lossy());
        let r = &self.rotation;
        Transform {
            rotation: [
                [c(r[0][0]), c(r[0][1]), c(r[0][2])],
                [c(r[1][0]), c(r[1][1]), c(r[1][2])],
                [c(r[2][0]), c(r[2][1]), c(r[2][2])],
            ],
            translation: self.translation.map(c),
        }
    }
}

impl<T: Real> Mul for Transform<T> {
    type Output = Transform<T>;

    fn mul(self, rhs: Self) -> Self::Output {
        self.compose(&rhs)
    }
}

impl<T: Real> Mul<&Transform<T>> for &Transform<T> {
    type Output = Transform<T>;

    fn mul(self, rhs: &Transform<T>) -> Self::Output {
        self.compose(rhs)
    }
}
