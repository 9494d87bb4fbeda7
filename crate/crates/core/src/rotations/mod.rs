//! Geometry of SO(3): rotation representations, the bi-invariant metric,
//! point-set statistics, sampling and Haar-measure quadrature.
//!
//! Rotations are stored as unit quaternions `[w, x, y, z]`. The rotation matrix,
//! z-x-z Euler angles and axis-angle forms are conversions. The metric is
//! `dist(x, y) = ω(y⁻¹x)`, the rotation angle of the relative rotation, which for
//! unit quaternions is `2·atan2(‖v‖, |w|)` of `q_y* q_x`.

mod index;
mod pointset;
mod quadrature;
mod sampling;

pub(crate) use index::SpatialIndex;
pub use pointset::{point_set_stats, PointSet, DEFAULT_PROBES_PER_POINT};
pub use quadrature::{gauss_legendre, haar_quadrature, QuadratureRule};
pub use sampling::{random_rotation, sample_points, SamplingMode};

use crate::error::{Error, Result};
use std::f64::consts::{PI, TAU};
use std::ops::Mul;

/// Tolerance for accepting an externally supplied axis as unit length.
pub const AXIS_TOLERANCE: f64 = 1e-9;

/// Quaternions whose squared norm is within this of one are kept bit-for-bit.
const RENORMALIZE_SLACK: f64 = 1e-14;

/// An element of SO(3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    q: [f64; 4],
}

/// z-x-z Euler angles: `x = s_z[φ1]·s_x[θ]·s_z[φ2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub phi1: f64,
    pub theta: f64,
    pub phi2: f64,
}

/// Rotation axis and angle. The angle lies in `[0, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    pub axis: [f64; 3],
    pub angle: f64,
}

impl EulerAngles {
    pub fn new(phi1: f64, theta: f64, phi2: f64) -> Self {
        Self { phi1, theta, phi2 }
    }

    /// The canonical triple describing the same rotation, with angles in
    /// `[0, 2π) × [0, π] × [0, 2π)`.
    pub fn reduced(&self) -> Self {
        Rotation::from_euler(*self).to_euler()
    }
}

impl AxisAngle {
    pub fn new(axis: [f64; 3], angle: f64) -> Self {
        Self { axis, angle }
    }
}

fn reduce_angle(t: f64) -> f64 {
    let r = t.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

impl Rotation {
    pub const IDENTITY: Rotation = Rotation {
        q: [1.0, 0.0, 0.0, 0.0],
    };

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    /// Builds a rotation from a quaternion `[w, x, y, z]`, which must be unit
    /// length within `tol`. Nearly-unit inputs are renormalized.
    pub fn from_quaternion(q: [f64; 4], tol: f64) -> Result<Self> {
        let n2: f64 = q.iter().map(|c| c * c).sum();
        if !n2.is_finite() || (n2.sqrt() - 1.0).abs() > tol {
            return Err(Error::InvalidArgument(format!(
                "quaternion norm {} differs from 1 by more than {tol:e}",
                n2.sqrt()
            )));
        }
        Ok(Self::from_quaternion_normalized(q))
    }

    /// Normalizes an arbitrary nonzero quaternion.
    pub fn from_quaternion_normalized(q: [f64; 4]) -> Self {
        let n2: f64 = q.iter().map(|c| c * c).sum();
        if (n2 - 1.0).abs() <= RENORMALIZE_SLACK {
            return Self { q };
        }
        let n = n2.sqrt();
        Self {
            q: [q[0] / n, q[1] / n, q[2] / n, q[3] / n],
        }
    }

    pub fn quaternion(&self) -> [f64; 4] {
        self.q
    }

    /// Builds a rotation from a 3×3 matrix that must satisfy `RᵀR = I` and
    /// `det R = 1` within `tol` (max-abs entry-wise).
    pub fn from_matrix(m: [[f64; 3]; 3], tol: f64) -> Result<Self> {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        if !(worst <= tol) || !((det - 1.0).abs() <= tol) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not a proper rotation (orthogonality defect {worst:.3e}, det {det})"
            )));
        }
        // Shepperd: pivot on the largest of the four diagonal combinations.
        let tr = m[0][0] + m[1][1] + m[2][2];
        let cands = [tr, m[0][0], m[1][1], m[2][2]];
        let (piv, _) = cands
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let q = match piv {
            0 => {
                let s = (1.0 + tr).sqrt() * 2.0;
                [
                    0.25 * s,
                    (m[2][1] - m[1][2]) / s,
                    (m[0][2] - m[2][0]) / s,
                    (m[1][0] - m[0][1]) / s,
                ]
            }
            1 => {
                let s = (1.0 + m[0][0] - m[1][1] - m[2][2]).sqrt() * 2.0;
                [
                    (m[2][1] - m[1][2]) / s,
                    0.25 * s,
                    (m[0][1] + m[1][0]) / s,
                    (m[0][2] + m[2][0]) / s,
                ]
            }
            2 => {
                let s = (1.0 + m[1][1] - m[0][0] - m[2][2]).sqrt() * 2.0;
                [
                    (m[0][2] - m[2][0]) / s,
                    (m[0][1] + m[1][0]) / s,
                    0.25 * s,
                    (m[1][2] + m[2][1]) / s,
                ]
            }
            _ => {
                let s = (1.0 + m[2][2] - m[0][0] - m[1][1]).sqrt() * 2.0;
                [
                    (m[1][0] - m[0][1]) / s,
                    (m[0][2] + m[2][0]) / s,
                    (m[1][2] + m[2][1]) / s,
                    0.25 * s,
                ]
            }
        };
        Ok(Self::from_quaternion_normalized(q))
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let [w, x, y, z] = self.q;
        [
            [
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
            ],
            [
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
            ],
            [
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ],
        ]
    }

    /// `s_z[φ1]·s_x[θ]·s_z[φ2]`. Any real angles are accepted.
    pub fn from_euler(e: EulerAngles) -> Self {
        let (st, ct) = (0.5 * e.theta).sin_cos();
        let a = 0.5 * (e.phi1 + e.phi2);
        let b = 0.5 * (e.phi1 - e.phi2);
        let (sa, ca) = a.sin_cos();
        let (sb, cb) = b.sin_cos();
        Self::from_quaternion_normalized([ct * ca, st * cb, st * sb, ct * sa])
    }

    /// Inverse of [`Rotation::from_euler`]. At the gimbal degeneracy
    /// (θ = 0 or θ = π) the twist is folded into φ1 and φ2 = 0 is reported.
    pub fn to_euler(&self) -> EulerAngles {
        const GIMBAL: f64 = 1e-15;
        let [w, x, y, z] = self.q;
        let s = x.hypot(y);
        let c = w.hypot(z);
        if s <= GIMBAL {
            EulerAngles::new(reduce_angle(2.0 * z.atan2(w)), 0.0, 0.0)
        } else if c <= GIMBAL {
            EulerAngles::new(reduce_angle(2.0 * y.atan2(x)), PI, 0.0)
        } else {
            let theta = 2.0 * s.atan2(c);
            let a = z.atan2(w);
            let b = y.atan2(x);
            EulerAngles::new(reduce_angle(a + b), theta, reduce_angle(a - b))
        }
    }

    /// Rotation about `axis` by `angle`. The axis must be unit length within
    /// [`AXIS_TOLERANCE`].
    pub fn from_axis_angle(aa: AxisAngle) -> Result<Self> {
        let n = aa.axis.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !n.is_finite() || (n - 1.0).abs() > AXIS_TOLERANCE {
            return Err(Error::InvalidArgument(format!(
                "rotation axis has norm {n}, expected 1"
            )));
        }
        let (s, c) = (0.5 * aa.angle).sin_cos();
        let [ax, ay, az] = aa.axis.map(|v| v / n);
        Ok(Self::from_quaternion_normalized([c, s * ax, s * ay, s * az]))
    }

    /// Axis and angle with the angle in `[0, π]`. The identity reports the z-axis.
    pub fn to_axis_angle(&self) -> AxisAngle {
        let [w, x, y, z] = self.q;
        let sgn = if w < 0.0 { -1.0 } else { 1.0 };
        let vn = (x * x + y * y + z * z).sqrt();
        if vn == 0.0 {
            return AxisAngle::new([0.0, 0.0, 1.0], 0.0);
        }
        AxisAngle::new(
            [sgn * x / vn, sgn * y / vn, sgn * z / vn],
            2.0 * vn.atan2(w.abs()),
        )
    }

    pub fn inverse(&self) -> Self {
        let [w, x, y, z] = self.q;
        Self { q: [w, -x, -y, -z] }
    }

    /// Rotation angle `ω(x) ∈ [0, π]`, equal to `arccos((Tr x − 1)/2)`.
    pub fn rotation_angle(&self) -> f64 {
        let [w, x, y, z] = self.q;
        2.0 * (x * x + y * y + z * z).sqrt().atan2(w.abs())
    }

    /// `cos(ω/2)` and `sin(ω/2)` for this rotation.
    pub fn half_angle_cos_sin(&self) -> (f64, f64) {
        let [w, x, y, z] = self.q;
        (w.abs(), (x * x + y * y + z * z).sqrt())
    }

    /// `‖RᵀR − I‖_max` and `|det R − 1|` of the matrix form.
    pub fn orthogonality_defect(&self) -> (f64, f64) {
        let m = self.matrix();
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = (0..3).map(|k| m[k][i] * m[k][j]).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        (worst, (det - 1.0).abs())
    }

    /// Max-abs entry-wise difference of the matrix forms.
    pub fn matrix_distance(&self, other: &Rotation) -> f64 {
        let (a, b) = (self.matrix(), other.matrix());
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[i][j] - b[i][j]).abs());
            }
        }
        worst
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        let [a1, b1, c1, d1] = self.q;
        let [a2, b2, c2, d2] = rhs.q;
        Rotation::from_quaternion_normalized([
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ])
    }
}

impl Mul for &Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        *self * *rhs
    }
}

/// `(cos(d/2), sin(d/2))` for `d = dist(x, y)`, both computed without
/// cancellation from the quaternion product `q_y* q_x`.
#[inline]
pub fn half_distance_cos_sin(x: &Rotation, y: &Rotation) -> (f64, f64) {
    let [wx, xx, yx, zx] = x.q;
    let [wy, xy, yy, zy] = y.q;
    let w = wy * wx + xy * xx + yy * yx + zy * zx;
    // vector part of (wy, -vy)(wx, vx) = wy vx - wx vy - vy × vx
    let cx = yy * zx - zy * yx;
    let cy = zy * xx - xy * zx;
    let cz = xy * yx - yy * xx;
    let vx = wy * xx - wx * xy - cx;
    let vy = wy * yx - wx * yy - cy;
    let vz = wy * zx - wx * zy - cz;
    (w.abs(), (vx * vx + vy * vy + vz * vz).sqrt())
}

/// The bi-invariant metric `dist(x, y) = ω(y⁻¹x)` in radians, in `[0, π]`.
#[inline]
pub fn distance(x: &Rotation, y: &Rotation) -> f64 {
    let (c, s) = half_distance_cos_sin(x, y);
    2.0 * s.atan2(c)
}

/// `cos(dist/2)` written directly in the Euler angles of both rotations.
pub fn cos_half_distance_euler(a: &EulerAngles, b: &EulerAngles) -> f64 {
    let d1 = 0.5 * (a.phi1 - b.phi1);
    let d2 = 0.5 * (a.phi2 - b.phi2);
    let dm = 0.5 * (a.theta - b.theta);
    let sp = 0.5 * (a.theta + b.theta);
    (d1.cos() * d2.cos() * dm.cos() - d1.sin() * d2.sin() * sp.cos()).abs()
}

/// Distance computed through [`cos_half_distance_euler`].
pub fn distance_euler(a: &EulerAngles, b: &EulerAngles) -> f64 {
    2.0 * cos_half_distance_euler(a, b).clamp(-1.0, 1.0).acos()
}

/// Lower and upper constants `b1 ρ³ ≤ μ(B(α, ρ)) ≤ b2 ρ³` for `0 < ρ < π`.
pub const BALL_VOLUME_LOWER: f64 = 2.0 / (3.0 * PI * PI * PI);
pub const BALL_VOLUME_UPPER: f64 = 1.0 / (6.0 * PI);

/// Exact Haar volume of a ball of radius `ρ ≤ π`: `(ρ − sin ρ)/π`.
pub fn ball_volume(rho: f64) -> f64 {
    let r = rho.clamp(0.0, PI);
    (r - r.sin()) / PI
}
