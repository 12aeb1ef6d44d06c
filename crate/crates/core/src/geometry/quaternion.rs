// SPDX-License-Identifier: Apache-2.0

use std::ops::Mul;

use nalgebra::Matrix3;

use super::Vec3;

/// Unit quaternion `w + xi + yj + zk`.
///
/// Constructors return the canonical sign (`w ≥ 0`, with lexicographic
/// tie-breaking on the vector part when `w == 0`), so equal rotations
/// serialize identically. Raw sign-aligned values used inside interpolation
/// tracks are built with [`UnitQuaternion::new_unchecked`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    pub const IDENTITY: Self = Self {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Normalizes and canonicalizes. Returns `None` for a zero or non-finite input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Option<Self> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n == 0.0 {
            return None;
        }
        Some(Self::new_unchecked(w / n, x / n, y / n, z / n).canonical())
    }

    pub const fn new_unchecked(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_axis_angle(axis: Vec3, angle: f64) -> Self {
        let n = axis.norm();
        if n == 0.0 {
            return Self::IDENTITY;
        }
        let (s, c) = (angle / 2.0).sin_cos();
        let a = axis / n;
        Self::new_unchecked(c, a.x * s, a.y * s, a.z * s).canonical()
    }

    /// Intrinsic x-y-z Euler angles: `R = Rx(θx) · Ry(θy) · Rz(θz)`.
    pub fn from_euler_xyz(e: Vec3) -> Self {
        let (sx, cx) = (e.x / 2.0).sin_cos();
        let (sy, cy) = (e.y / 2.0).sin_cos();
        let (sz, cz) = (e.z / 2.0).sin_cos();
        let qx = Self::new_unchecked(cx, sx, 0.0, 0.0);
        let qy = Self::new_unchecked(cy, 0.0, sy, 0.0);
        let qz = Self::new_unchecked(cz, 0.0, 0.0, sz);
        (qx * qy * qz).normalized().canonical()
    }

    /// Inverse of [`from_euler_xyz`](Self::from_euler_xyz). Near gimbal lock
    /// (`|cos θy| < 1e-9`) the z angle is pinned to zero.
    /// Quaternion of a proper rotation matrix, canonical sign.
    pub fn from_rotation_matrix(m: &Matrix3<f64>) -> Self {
        let q = nalgebra::UnitQuaternion::from_rotation_matrix(
            &nalgebra::Rotation3::from_matrix_unchecked(*m),
        );
        Self::new_unchecked(q.w, q.i, q.j, q.k).canonical()
    }

    pub fn to_euler_xyz(&self) -> Vec3 {
        let r = self.to_rotation_matrix();
        let cy = r[(0, 0)].hypot(r[(0, 1)]);
        let ey = r[(0, 2)].atan2(cy);
        if cy > 1e-9 {
            let ex = (-r[(1, 2)]).atan2(r[(2, 2)]);
            let ez = (-r[(0, 1)]).atan2(r[(0, 0)]);
            Vec3::new(ex, ey, ez)
        } else {
            let ex = r[(2, 1)].atan2(r[(1, 1)]);
            Vec3::new(ex, ey, 0.0)
        }
    }

    pub fn to_rotation_matrix(&self) -> Matrix3<f64> {
        let Self { w, x, y, z } = *self;
        Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }

    pub fn rotate(&self, v: Vec3) -> Vec3 {
        self.to_rotation_matrix() * v
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn neg(&self) -> Self {
        Self::new_unchecked(-self.w, -self.x, -self.y, -self.z)
    }

    pub fn conjugate(&self) -> Self {
        Self::new_unchecked(self.w, -self.x, -self.y, -self.z)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        Self::new_unchecked(self.w / n, self.x / n, self.y / n, self.z / n)
    }

    pub fn canonical(&self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            self.neg()
        } else {
            *self
        }
    }

    /// Geodesic rotation angle between two orientations, in `[0, π]`.
    pub fn angle_to(&self, other: &Self) -> f64 {
        let d = self.dot(other).abs().min(1.0);
        // 2·atan2(|vec(q⁻¹p)|, |w|) stays accurate for tiny angles where acos does not
        let rel = self.conjugate() * *other;
        let v = (rel.x * rel.x + rel.y * rel.y + rel.z * rel.z).sqrt();
        let a = 2.0 * v.atan2(d);
        a.min(std::f64::consts::PI)
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    fn mul(self, r: UnitQuaternion) -> UnitQuaternion {
        let l = self;
        UnitQuaternion::new_unchecked(
            l.w * r.w - l.x * r.x - l.y * r.y - l.z * r.z,
            l.w * r.x + l.x * r.w + l.y * r.z - l.z * r.y,
            l.w * r.y - l.x * r.z + l.y * r.w + l.z * r.x,
            l.w * r.z + l.x * r.y - l.y * r.x + l.z * r.w,
        )
    }
}

pub fn euler_to_quaternion(e: Vec3) -> UnitQuaternion {
    UnitQuaternion::from_euler_xyz(e)
}

pub fn quaternion_to_euler(q: &UnitQuaternion) -> Vec3 {
    q.to_euler_xyz()
}
