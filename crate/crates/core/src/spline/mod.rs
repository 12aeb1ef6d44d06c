// SPDX-License-Identifier: Apache-2.0

//! Spline detokenizer: cubic position splines, SLERP orientation tracks and
//! the continuous trajectory that combines them with a gripper schedule.

mod cubic;
mod orientation;
mod reconstruction;
mod trajectory;

pub(crate) use cubic::hermite_coeffs;
pub use cubic::{taylor_shift, CubicCoeffs, PositionSpline};
pub use orientation::{slerp, OrientationTrack};
pub use reconstruction::{reconstruction_error, KeyframeConfig, ReconstructionError};
pub use trajectory::{
    fit, fit_with, resample, ContinuousTrajectory, GripperSchedule, KnotTiming, TrajectoryPoint,
};
