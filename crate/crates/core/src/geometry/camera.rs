// SPDX-License-Identifier: Apache-2.0

use nalgebra::{Matrix3, Matrix4, Vector4};

use super::{Pose, UnitQuaternion, Vec3};
use crate::error::{Error, Result};

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Pinhole camera: intrinsics `K` plus the camera-to-world rigid transform.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    intrinsics: Matrix3<f64>,
    intrinsics_inv: Matrix3<f64>,
    extrinsics_c2w: Matrix4<f64>,
    width: u32,
    height: u32,
}

impl CameraModel {
    pub fn new(
        intrinsics: Matrix3<f64>,
        extrinsics_c2w: Matrix4<f64>,
        width: u32,
        height: u32,
    ) -> Result<Self> {
        if intrinsics
            .iter()
            .chain(extrinsics_c2w.iter())
            .any(|v| !v.is_finite())
        {
            return Err(Error::InvalidCamera("non-finite matrix entry".into()));
        }
        if intrinsics[(1, 0)] != 0.0 || intrinsics[(2, 0)] != 0.0 || intrinsics[(2, 1)] != 0.0 {
            return Err(Error::InvalidCamera(
                "intrinsics must be upper-triangular".into(),
            ));
        }
        if intrinsics[(2, 2)] != 1.0 {
            return Err(Error::InvalidCamera("intrinsics K[2][2] must be 1".into()));
        }
        let intrinsics_inv = intrinsics
            .try_inverse()
            .filter(|_| intrinsics[(0, 0)] != 0.0 && intrinsics[(1, 1)] != 0.0)
            .ok_or_else(|| Error::InvalidCamera("intrinsics are singular".into()))?;

        let bottom = extrinsics_c2w.fixed_view::<1, 4>(3, 0);
        if bottom[0] != 0.0 || bottom[1] != 0.0 || bottom[2] != 0.0 || bottom[3] != 1.0 {
            return Err(Error::InvalidCamera(
                "extrinsics bottom row must be [0, 0, 0, 1]".into(),
            ));
        }
        let rot: Matrix3<f64> = extrinsics_c2w.fixed_view::<3, 3>(0, 0).into();
        let gram_err = (rot.transpose() * rot - Matrix3::identity()).abs().max();
        if gram_err > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(format!(
                "extrinsics rotation is not orthonormal (error {gram_err:e})"
            )));
        }
        if (rot.determinant() - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(
                "extrinsics rotation must have determinant +1".into(),
            ));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidCamera("image size must be non-zero".into()));
        }
        Ok(Self {
            intrinsics,
            intrinsics_inv,
            extrinsics_c2w,
            width,
            height,
        })
    }

    /// Camera with identity extrinsics (camera frame = world frame).
    pub fn with_intrinsics(intrinsics: Matrix3<f64>, width: u32, height: u32) -> Result<Self> {
        Self::new(intrinsics, Matrix4::identity(), width, height)
    }

    pub fn from_focal(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        Self::with_intrinsics(
            Matrix3::new(fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0),
            width,
            height,
        )
    }

    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    pub fn intrinsics_inv(&self) -> &Matrix3<f64> {
        &self.intrinsics_inv
    }

    pub fn extrinsics_c2w(&self) -> &Matrix4<f64> {
        &self.extrinsics_c2w
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn mean_focal_length(&self) -> f64 {
        0.5 * (self.intrinsics[(0, 0)] + self.intrinsics[(1, 1)])
    }

    pub fn rotation_c2w(&self) -> Matrix3<f64> {
        self.extrinsics_c2w.fixed_view::<3, 3>(0, 0).into()
    }

    pub fn translation_c2w(&self) -> Vec3 {
        self.extrinsics_c2w.fixed_view::<3, 1>(0, 3).into()
    }
}

/// `d · K⁻¹ · [u, v, 1]ᵀ` in the camera frame.
pub fn back_project(u: f64, v: f64, d: f64, cam: &CameraModel) -> Result<Vec3> {
    if !(d > 0.0) {
        return Err(Error::domain(format!("depth must be positive, got {d}")));
    }
    Ok(cam.intrinsics_inv * Vec3::new(u, v, 1.0) * d)
}

/// Pixel coordinates and depth of a camera-frame point.
pub fn project(p_cam: &Vec3, cam: &CameraModel) -> Result<(f64, f64, f64)> {
    if !(p_cam.z > 0.0) {
        return Err(Error::BehindCamera { z: p_cam.z });
    }
    let h = cam.intrinsics * p_cam;
    Ok((h.x / h.z, h.y / h.z, p_cam.z))
}

pub fn camera_to_world(p_cam: &Vec3, cam: &CameraModel) -> Vec3 {
    let h = cam.extrinsics_c2w * Vector4::new(p_cam.x, p_cam.y, p_cam.z, 1.0);
    Vec3::new(h.x, h.y, h.z)
}

pub fn world_to_camera(p_world: &Vec3, cam: &CameraModel) -> Vec3 {
    cam.rotation_c2w().transpose() * (p_world - cam.translation_c2w())
}

/// Pose with position and orientation taken from the camera to the world frame.
pub fn pose_camera_to_world(pose: &Pose, cam: &CameraModel) -> Pose {
    let r = cam.rotation_c2w() * pose.orientation().to_rotation_matrix();
    Pose::new(
        camera_to_world(&pose.position, cam),
        UnitQuaternion::from_rotation_matrix(&r).to_euler_xyz(),
    )
}

pub fn pose_world_to_camera(pose: &Pose, cam: &CameraModel) -> Pose {
    let r = cam.rotation_c2w().transpose() * pose.orientation().to_rotation_matrix();
    Pose::new(
        world_to_camera(&pose.position, cam),
        UnitQuaternion::from_rotation_matrix(&r).to_euler_xyz(),
    )
}
