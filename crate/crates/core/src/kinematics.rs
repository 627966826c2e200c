//! Denavit–Hartenberg model of the 4-DOF arm.
//!
//! Two position models live here:
//!
//! * the product of the four per-row DH matrices, which is the ground-truth
//!   pose (it includes the small lateral `d₂ + d₃ + d₄` offset), and
//! * a simplified planar closed form (`d₂ = d₃ = d₄ = 0`, tool length `a₄`)
//!   which the analytic inverse kinematics and the Jacobian are built on.
//!
//! Positive `θ₂`, `θ₃`, `θ₄` raise the arm in both models. Lengths are in
//! millimetres, angles in radians.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::export::format_sig;
use crate::scalar::{Real, Vec3};
use crate::transform::Transform;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("target unreachable (cos θ3 = {cos_theta3:.6})")]
    Unreachable { cos_theta3: f64 },
    #[error("target lies on the base axis, joint 1 is undefined")]
    SingularBase,
    #[error("joint limits must satisfy lo < hi (got {lo} .. {hi})")]
    InvalidLimits { lo: f64, hi: f64 },
}

/// One row of the DH table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhRow<T> {
    pub theta_offset: T,
    /// Offset along the previous z axis (mm).
    pub d: T,
    /// Common-normal length (mm).
    pub a: T,
    /// Twist about the common normal (rad).
    pub alpha: T,
    pub limit_lo: T,
    pub limit_hi: T,
}

impl<T: Real> DhRow<T> {
    pub fn new(d: T, a: T, alpha: T, limit_lo: T, limit_hi: T) -> Result<Self, KinematicsError> {
        if limit_lo >= limit_hi {
            return Err(KinematicsError::InvalidLimits {
                lo: limit_lo.to_f64_lossy(),
                hi: limit_hi.to_f64_lossy(),
            });
        }
        Ok(Self {
            theta_offset: T::zero(),
            d,
            a,
            alpha,
            limit_lo,
            limit_hi,
        })
    }

    pub fn contains(&self, angle: T) -> bool {
        angle >= self.limit_lo && angle <= self.limit_hi
    }
}

/// Joint angles `q₁..q₄` (rad).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector<T>(pub [T; 4]);

impl<T: Real> JointVector<T> {
    pub fn zeros() -> Self {
        Self([T::zero(); 4])
    }

    /// `q₂ + q₃ + q₄`, the pitch of the last link.
    pub fn theta_234(&self) -> T {
        self.0[1] + self.0[2] + self.0[3]
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.0
            .iter()
            .zip(other.0.iter())
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }
}

impl<T> From<[T; 4]> for JointVector<T> {
    fn from(q: [T; 4]) -> Self {
        Self(q)
    }
}

/// Forward-kinematics result: the pose plus a limit flag (limits are advisory
/// at this layer).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardPose<T> {
    pub pose: Transform<T>,
    pub in_limits: bool,
}

/// Standard DH link matrix for `row` at joint angle `theta`.
pub fn dh_transform<T: Real>(row: &DhRow<T>, theta: T) -> Transform<T> {
    let (st, ct) = (theta + row.theta_offset).sin_cos();
    let (sa, ca) = row.alpha.sin_cos();
    Transform::new(
        [
            [ct, -st * ca, st * sa],
            [st, ct * ca, -ct * sa],
            [T::zero(), sa, ca],
        ],
        [row.a * ct, row.a * st, row.d],
    )
}

/// The arm's four-row DH table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DhTable<T> {
    pub rows: [DhRow<T>; 4],
}

impl<T: Real> Default for DhTable<T> {
    fn default() -> Self {
        Self::robot()
    }
}

impl<T: Real> DhTable<T> {
    /// The physical arm: d = (155.5, 74, −67.7, −6) mm, a = (0, 144, 120, 63) mm,
    /// α = (π/2, 0, 0, 0), limits ±180°, ±144°, ±155°, ±180°.
    pub fn robot() -> Self {
        let deg = |v: f64| T::deg_to_rad(T::lit(v));
        let row = |d: f64, a: f64, alpha: T, lim: f64| DhRow {
            theta_offset: T::zero(),
            d: T::lit(d),
            a: T::lit(a),
            alpha,
            limit_lo: -deg(lim),
            limit_hi: deg(lim),
        };
        Self {
            rows: [
                row(155.5, 0.0, T::FRAC_PI_2(), 180.0),
                row(74.0, 144.0, T::zero(), 144.0),
                row(-67.7, 120.0, T::zero(), 155.0),
                row(-6.0, 63.0, T::zero(), 180.0),
            ],
        }
    }

    pub fn d1(&self) -> T {
        self.rows[0].d
    }

    pub fn a2(&self) -> T {
        self.rows[1].a
    }

    pub fn a3(&self) -> T {
        self.rows[2].a
    }

    pub fn a4(&self) -> T {
        self.rows[3].a
    }

    /// Full planar reach `a₂ + a₃ + a₄` (327 mm for the default table).
    pub fn reach(&self) -> T {
        self.a2() + self.a3() + self.a4()
    }

    pub fn in_limits(&self, q: &JointVector<T>) -> bool {
        self.rows.iter().zip(q.0.iter()).all(|(r, a)| r.contains(*a))
    }

    pub fn clamp(&self, q: &JointVector<T>) -> JointVector<T> {
        let mut out = *q;
        for (v, r) in out.0.iter_mut().zip(self.rows.iter()) {
            *v = v.max(r.limit_lo).min(r.limit_hi);
        }
        out
    }

    /// Base frame plus the frame after each joint: `[I, ⁰T₁, ⁰T₂, ⁰T₃, ⁰T₄]`.
    pub fn link_frames(&self, q: &JointVector<T>) -> [Transform<T>; 5] {
        let mut frames = [Transform::identity(); 5];
        for i in 0..4 {
            frames[i + 1] = frames[i] * dh_transform(&self.rows[i], q.0[i]);
        }
        frames
    }

    /// `⁰T₄ = ⁰T₁ · ¹T₂ · ²T₃ · ³T₄`.
    pub fn forward_kinematics(&self, q: &JointVector<T>) -> ForwardPose<T> {
        ForwardPose {
            pose: self.link_frames(q)[4],
            in_limits: self.in_limits(q),
        }
    }

    /// Simplified position model:
    ///
    /// `pₓ = c₁·ρ`, `p_y = s₁·ρ`, `p_z = d₁ + a₂s₂ + a₃s₂₃ + a₄s₂₃₄`
    /// with `ρ = a₂c₂ + a₃c₂₃ + a₄c₂₃₄`.
    pub fn closed_form_position(&self, q: &JointVector<T>) -> Vec3<T> {
        let [t1, t2, t3, t4] = q.0;
        let (s1, c1) = t1.sin_cos();
        let (s2, c2) = t2.sin_cos();
        let (s23, c23) = (t2 + t3).sin_cos();
        let (s234, c234) = (t2 + t3 + t4).sin_cos();
        let rho = self.a2() * c2 + self.a3() * c23 + self.a4() * c234;
        let z = self.d1() + self.a2() * s2 + self.a3() * s23 + self.a4() * s234;
        [c1 * rho, s1 * rho, z]
    }

    /// Analytic inverse of [`closed_form_position`](Self::closed_form_position)
    /// for a given last-link pitch `θ₂₃₄`.
    ///
    /// The wrist point is found by stepping back `a₄` along the last link, so
    /// `r = √(pₓ² + p_y²) − a₄cos θ₂₃₄` (reducing to `… − a₄` for a level tool).
    /// Only the `sin θ₃ ≥ 0` elbow branch is returned.
    pub fn inverse_kinematics(
        &self,
        target: Vec3<T>,
        theta_234: T,
    ) -> Result<JointVector<T>, KinematicsError> {
        let [px, py, pz] = target;
        let planar = px.hypot(py);
        if planar <= T::lit(1e-9) {
            return Err(KinematicsError::SingularBase);
        }
        let theta1 = py.atan2(px);

        let (a2, a3, a4) = (self.a2(), self.a3(), self.a4());
        let (s234, c234) = theta_234.sin_cos();
        let r = planar - a4 * c234;
        let h = pz - self.d1() - a4 * s234;

        let mut cos3 = (r * r + h * h - a2 * a2 - a3 * a3) / (T::two() * a2 * a3);
        if cos3.abs() > T::one() + T::lit(1e-12) {
            return Err(KinematicsError::Unreachable {
                cos_theta3: cos3.to_f64_lossy(),
            });
        }
        cos3 = cos3.max(-T::one()).min(T::one());
        let sin3 = (T::one() - cos3 * cos3).max(T::zero()).sqrt();
        let theta3 = sin3.atan2(cos3);
        let theta2 = h.atan2(r) - (a3 * sin3).atan2(a2 + a3 * cos3);
        let theta4 = theta_234 - theta2 - theta3;
        Ok(JointVector([theta1, theta2, theta3, theta4]))
    }

    /// `∂p/∂θ` of the closed-form position (3×4, mm/rad).
    pub fn jacobian(&self, q: &JointVector<T>) -> [[T; 4]; 3] {
        let [t1, t2, t3, t4] = q.0;
        let (a2, a3, a4) = (self.a2(), self.a3(), self.a4());
        let (s1, c1) = t1.sin_cos();
        let (s2, c2) = t2.sin_cos();
        let (s23, c23) = (t2 + t3).sin_cos();
        let (s234, c234) = (t2 + t3 + t4).sin_cos();

        let rho = a2 * c2 + a3 * c23 + a4 * c234;
        // ∂ρ/∂θⱼ and ∂z/∂θⱼ for j = 2, 3, 4
        let d_rho = [
            -(a2 * s2 + a3 * s23 + a4 * s234),
            -(a3 * s23 + a4 * s234),
            -(a4 * s234),
        ];
        let d_z = [a2 * c2 + a3 * c23 + a4 * c234, a3 * c23 + a4 * c234, a4 * c234];

        let z = T::zero();
        [
            [-s1 * rho, c1 * d_rho[0], c1 * d_rho[1], c1 * d_rho[2]],
            [c1 * rho, s1 * d_rho[0], s1 * d_rho[1], s1 * d_rho[2]],
            [z, d_z[0], d_z[1], d_z[2]],
        ]
    }

    /// Monte-Carlo workspace: `count` joint vectors drawn uniformly inside the
    /// limits, mapped through the full DH product.
    pub fn sample_workspace(&self, count: usize, seed: u64) -> WorkspaceCloud<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = (0..count)
            .map(|_| {
                let mut q = JointVector::<T>::zeros();
                for (v, row) in q.0.iter_mut().zip(self.rows.iter()) {
                    let lo = row.limit_lo.to_f64_lossy();
                    let hi = row.limit_hi.to_f64_lossy();
                    *v = T::lit(rng.random_range(lo..=hi));
                }
                self.forward_kinematics(&q).pose.translation
            })
            .collect();
        WorkspaceCloud {
            points,
            seed,
            count,
        }
    }
}

/// Somov–Malyshev mobility of a spatial chain: `W = 6n − 5p₅`.
pub fn mobility_degree(n_links: u32, pairs_class5: u32) -> i64 {
    6 * i64::from(n_links) - 5 * i64::from(pairs_class5)
}

/// End-effector positions (mm) from [`DhTable::sample_workspace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceCloud<T> {
    pub points: Vec<Vec3<T>>,
    pub seed: u64,
    pub count: usize,
}

impl<T: Real> WorkspaceCloud<T> {
    /// CSV with header `x_mm,y_mm,z_mm`, six significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x_mm,y_mm,z_mm")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{}",
                format_sig(p[0].to_f64_lossy(), 6),
                format_sig(p[1].to_f64_lossy(), 6),
                format_sig(p[2].to_f64_lossy(), 6)
            )?;
        }
        Ok(())
    }
}
