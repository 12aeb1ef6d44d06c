// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use nalgebra::{Matrix3, Matrix4};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{check_version, from_json, read_text, to_json, write_atomic, Units, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::geometry::{CameraModel, DenseTrajectory, Frame, Pose, TimedSample, Vec3};
use crate::keyframe::SparseTrajectory;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct CameraFile {
    intrinsics: [f64; 9],
    extrinsics_c2w: [f64; 16],
    width: u32,
    height: u32,
}

impl CameraFile {
    fn from_model(cam: &CameraModel) -> Self {
        let k = cam.intrinsics();
        let e = cam.extrinsics_c2w();
        Self {
            intrinsics: std::array::from_fn(|i| k[(i / 3, i % 3)]),
            extrinsics_c2w: std::array::from_fn(|i| e[(i / 4, i % 4)]),
            width: cam.width(),
            height: cam.height(),
        }
    }

    fn to_model(&self) -> Result<CameraModel> {
        CameraModel::new(
            Matrix3::from_row_slice(&self.intrinsics),
            Matrix4::from_row_slice(&self.extrinsics_c2w),
            self.width,
            self.height,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct SampleFile {
    t: f64,
    pos: [f64; 3],
    euler_xyz: [f64; 3],
    gripper: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    keyframe: Option<bool>,
}

impl SampleFile {
    pub(crate) fn from_sample(s: &TimedSample, keyframe: Option<bool>) -> Self {
        let (p, e) = (s.pose.position, s.pose.euler_xyz);
        Self {
            t: s.t,
            pos: [p.x, p.y, p.z],
            euler_xyz: [e.x, e.y, e.z],
            gripper: s.gripper,
            keyframe,
        }
    }

    pub(crate) fn to_sample(&self) -> TimedSample {
        TimedSample::new(
            self.t,
            Pose::new(Vec3::from(self.pos), Vec3::from(self.euler_xyz)),
            self.gripper,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct BundleFile {
    version: u32,
    frame: Frame,
    units: Units,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    camera: Option<CameraFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    meta: Option<Value>,
    samples: Vec<SampleFile>,
}

/// A trajectory file: samples in one frame, optional camera and opaque metadata.
/// Keyframe flags are present on sparse trajectories only.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub trajectory: DenseTrajectory,
    pub camera: Option<CameraModel>,
    pub meta: Option<Value>,
    pub keyframe_flags: Option<Vec<bool>>,
}

impl Bundle {
    pub fn from_dense(trajectory: DenseTrajectory, camera: Option<CameraModel>) -> Self {
        Self {
            trajectory,
            camera,
            meta: None,
            keyframe_flags: None,
        }
    }

    pub fn from_sparse(sparse: &SparseTrajectory, camera: Option<CameraModel>) -> Self {
        Self {
            trajectory: sparse.to_dense(),
            camera,
            meta: None,
            keyframe_flags: Some(sparse.keyframe_flags().to_vec()),
        }
    }

    /// Sparse view; without stored flags every sample counts as a keyframe.
    pub fn to_sparse(&self) -> Result<SparseTrajectory> {
        let flags = self
            .keyframe_flags
            .clone()
            .unwrap_or_else(|| vec![true; self.trajectory.len()]);
        SparseTrajectory::new(
            self.trajectory.samples().to_vec(),
            flags,
            self.trajectory.frame(),
        )
    }

    fn validate(&self) -> Result<()> {
        if self.trajectory.frame() == Frame::Camera && self.camera.is_none() {
            return Err(Error::validation("a camera-frame bundle needs a camera"));
        }
        if let Some(flags) = &self.keyframe_flags {
            if flags.len() != self.trajectory.len() {
                return Err(Error::validation("one keyframe flag per sample"));
            }
        }
        Ok(())
    }

    pub(crate) fn to_file(&self) -> BundleFile {
        let samples = self
            .trajectory
            .samples()
            .iter()
            .enumerate()
            .map(|(i, s)| SampleFile::from_sample(s, self.keyframe_flags.as_ref().map(|f| f[i])))
            .collect();
        BundleFile {
            version: FORMAT_VERSION,
            frame: self.trajectory.frame(),
            units: Units::si(),
            camera: self.camera.as_ref().map(CameraFile::from_model),
            meta: self.meta.clone(),
            samples,
        }
    }

    pub(crate) fn from_file(file: BundleFile) -> Result<Self> {
        check_version(file.version)?;
        file.units.check()?;
        let flagged = file.samples.iter().filter(|s| s.keyframe.is_some()).count();
        if flagged != 0 && flagged != file.samples.len() {
            return Err(Error::validation(
                "keyframe flags must be given for all samples or none",
            ));
        }
        let keyframe_flags = (flagged > 0).then(|| {
            file.samples
                .iter()
                .map(|s| s.keyframe == Some(true))
                .collect()
        });
        let samples = file.samples.iter().map(SampleFile::to_sample).collect();
        let trajectory = DenseTrajectory::new(samples, file.frame).map_err(as_validation)?;
        let camera = file.camera.as_ref().map(CameraFile::to_model).transpose()?;
        let bundle = Self {
            trajectory,
            camera,
            meta: file.meta,
            keyframe_flags,
        };
        bundle.validate()?;
        Ok(bundle)
    }
}

fn as_validation(e: Error) -> Error {
    match e {
        Error::Validation(_) => e,
        other => Error::Validation(other.to_string()),
    }
}

pub fn parse_bundle(text: &str, source: &str) -> Result<Bundle> {
    Bundle::from_file(from_json(text, source)?)
}

pub fn bundle_to_json(bundle: &Bundle) -> Result<String> {
    bundle.validate()?;
    Ok(to_json(&bundle.to_file()))
}

pub fn load_bundle(path: &Path) -> Result<Bundle> {
    parse_bundle(&read_text(path)?, &path.display().to_string())
}

pub fn save_bundle(bundle: &Bundle, path: &Path) -> Result<()> {
    write_atomic(path, bundle_to_json(bundle)?.as_bytes())
}
