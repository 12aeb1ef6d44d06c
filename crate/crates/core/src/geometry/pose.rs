// SPDX-License-Identifier: Apache-2.0

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{UnitQuaternion, Vec3};
use crate::error::{Error, Result};

/// Wraps an angle into `[-π, π]`. `π` itself is kept as `π`.
pub fn normalize_angle(a: f64) -> f64 {
    if (-PI..=PI).contains(&a) {
        return a;
    }
    let wrapped = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can land exactly on 2π for inputs a hair below a multiple of 2π
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Wraps an angle into the half-open interval `[-π, π)`.
pub fn wrap_angle_half_open(a: f64) -> f64 {
    let w = normalize_angle(a);
    if w >= PI {
        -PI
    } else {
        w
    }
}

/// End-effector pose: position in meters plus intrinsic x-y-z Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub position: Vec3,
    pub euler_xyz: Vec3,
}

impl Pose {
    pub fn new(position: Vec3, euler_xyz: Vec3) -> Self {
        Self {
            position,
            euler_xyz,
        }
    }

    pub fn from_position(position: Vec3) -> Self {
        Self::new(position, Vec3::zeros())
    }

    /// Same pose with each Euler component wrapped into `[-π, π]`.
    pub fn normalized(&self) -> Self {
        Self {
            position: self.position,
            euler_xyz: self.euler_xyz.map(normalize_angle),
        }
    }

    pub fn orientation(&self) -> UnitQuaternion {
        UnitQuaternion::from_euler_xyz(self.euler_xyz)
    }

    /// The six pose components `[x, y, z, θx, θy, θz]`.
    pub fn components(&self) -> [f64; 6] {
        let p = &self.position;
        let e = &self.euler_xyz;
        [p.x, p.y, p.z, e.x, e.y, e.z]
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|c| c.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    pub t: f64,
    pub pose: Pose,
    /// Binary gripper state, `0` or `1`.
    pub gripper: u8,
}

impl TimedSample {
    pub fn new(t: f64, pose: Pose, gripper: u8) -> Self {
        Self { t, pose, gripper }
    }

    pub(crate) fn check(&self, index: usize) -> Result<()> {
        if !self.t.is_finite() {
            return Err(Error::validation(format!(
                "sample {index}: non-finite time"
            )));
        }
        if !self.pose.is_finite() {
            return Err(Error::validation(format!(
                "sample {index}: non-finite pose"
            )));
        }
        if self.gripper > 1 {
            return Err(Error::validation(format!(
                "sample {index}: gripper must be 0 or 1, got {}",
                self.gripper
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    Camera,
    World,
}

/// Timestamped pose and gripper log, strictly increasing in time.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTrajectory {
    samples: Vec<TimedSample>,
    frame: Frame,
}

impl DenseTrajectory {
    pub fn new(samples: Vec<TimedSample>, frame: Frame) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a dense trajectory needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        for (i, s) in samples.iter().enumerate() {
            s.check(i)?;
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].t <= w[0].t) {
            return Err(Error::validation(format!(
                "timestamps must be strictly increasing (sample {} at t = {} follows t = {})",
                i + 1,
                samples[i + 1].t,
                samples[i].t
            )));
        }
        Ok(Self { samples, frame })
    }

    pub fn samples(&self) -> &[TimedSample] {
        &self.samples
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].t
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].t
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.samples.iter().map(|s| s.pose.position)
    }

    pub fn into_samples(self) -> Vec<TimedSample> {
        self.samples
    }

    /// Index of the sample closest in time to `t`; ties go to the earlier sample.
    pub fn nearest_index(&self, t: f64) -> usize {
        let idx = self.samples.partition_point(|s| s.t < t);
        if idx == 0 {
            return 0;
        }
        if idx == self.samples.len() {
            return idx - 1;
        }
        let before = t - self.samples[idx - 1].t;
        let after = self.samples[idx].t - t;
        if after < before {
            idx
        } else {
            idx - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(t: f64) -> TimedSample {
        TimedSample::new(t, Pose::from_position(Vec3::new(t, 0.0, 0.0)), 0)
    }

    #[test]
    fn normalize_angle_wraps_into_closed_interval() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), -PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((normalize_angle(-5.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((normalize_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
        assert_eq!(wrap_angle_half_open(PI), -PI);
    }

    #[test]
    fn rejects_non_monotone_times() {
        let err = DenseTrajectory::new(vec![sample(0.0), sample(0.0)], Frame::World).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = DenseTrajectory::new(vec![sample(0.0)], Frame::World).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn rejects_non_binary_gripper() {
        let mut s = sample(1.0);
        s.gripper = 2;
        assert!(DenseTrajectory::new(vec![sample(0.0), s], Frame::World).is_err());
    }

    #[test]
    fn nearest_index_prefers_earlier_on_tie() {
        let traj =
            DenseTrajectory::new((0..5).map(|i| sample(i as f64)).collect(), Frame::World).unwrap();
        assert_eq!(traj.nearest_index(1.5), 1);
        assert_eq!(traj.nearest_index(1.6), 2);
        assert_eq!(traj.nearest_index(-3.0), 0);
        assert_eq!(traj.nearest_index(9.0), 4);
        assert_eq!(traj.nearest_index(3.0), 3);
    }
}
