// SPDX-License-Identifier: Apache-2.0

//! Poses, rotations, the pinhole camera and finite-difference kinematics.

mod camera;
mod kinematics;
mod pose;
mod quaternion;

pub use camera::{
    back_project, camera_to_world, pose_camera_to_world, pose_world_to_camera, project,
    world_to_camera, CameraModel,
};
pub use kinematics::{finite_difference_accel, AccelSample, ComponentWeights};
pub use pose::{normalize_angle, wrap_angle_half_open, DenseTrajectory, Frame, Pose, TimedSample};
pub use quaternion::{euler_to_quaternion, quaternion_to_euler, UnitQuaternion};

pub type Vec3 = nalgebra::Vector3<f64>;
