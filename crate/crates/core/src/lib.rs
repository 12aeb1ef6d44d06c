// SPDX-License-Identifier: Apache-2.0

//! End-effector trajectory processing: kinematic keyframe sparsification,
//! anchor-conditioned waypoint tokens, spline detokenization, closed-loop
//! replan merging and trajectory similarity metrics.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod closed_loop;
pub mod error;
pub mod geometry;
pub mod io;
pub mod keyframe;
pub mod metrics;
pub mod sim;
pub mod spline;
pub mod token;

pub use error::{Error, Result};
pub use geometry::{
    back_project, camera_to_world, project, CameraModel, ComponentWeights, DenseTrajectory, Frame,
    Pose, TimedSample, UnitQuaternion, Vec3,
};
pub use keyframe::{KeyframeReason, KeyframeSet, SparseTrajectory};
pub use metrics::{MetricConfig, MetricReport, Polyline};
pub use spline::{ContinuousTrajectory, OrientationTrack, PositionSpline};
pub use token::{Anchor, QuantizationSpec, TokenBlock, TokenSequence};
