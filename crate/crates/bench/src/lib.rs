// SPDX-License-Identifier: Apache-2.0

//! Deterministic fixtures for the criterion benches.

use std::f64::consts::PI;

use trajkit_core::sim::{Perturbation, Scenario};
use trajkit_core::{
    CameraModel, DenseTrajectory, Frame, Polyline, Pose, SparseTrajectory, TimedSample, Vec3,
};

pub fn camera() -> CameraModel {
    CameraModel::from_focal(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap()
}

/// A wavy reach in front of the camera, `n` samples at 100 Hz, with two gripper toggles.
pub fn wavy_dense(n: usize, frame: Frame) -> DenseTrajectory {
    let samples = (0..n)
        .map(|k| {
            let t = k as f64 / 100.0;
            let u = k as f64 / n as f64;
            let p = Vec3::new(
                -0.2 + 0.4 * u + 0.02 * (7.0 * t).sin(),
                0.1 * (2.0 * PI * u).sin(),
                0.9 + 0.1 * (3.0 * t).cos(),
            );
            let e = Vec3::new(3.0, 0.2 * (t).sin(), -PI + 2.0 * PI * u);
            TimedSample::new(t, Pose::new(p, e), u8::from((0.3..0.7).contains(&u)))
        })
        .collect();
    DenseTrajectory::new(samples, frame).unwrap()
}

/// Two distinct polylines of `n` points each.
pub fn polyline_pair(n: usize) -> (Polyline, Polyline) {
    let line = |phase: f64| {
        let pts = (0..n)
            .map(|k| {
                let s = k as f64 / n as f64;
                Vec3::new(s, 0.1 * (9.0 * s + phase).sin(), 0.05 * (4.0 * s).cos())
            })
            .collect();
        Polyline::new(pts).unwrap()
    };
    (line(0.0), line(0.7))
}

/// Eight waypoints over 7 s in the world frame.
pub fn plan() -> SparseTrajectory {
    let w = (0..8)
        .map(|i| {
            let t = i as f64;
            let p = Vec3::new(0.3 + 0.05 * t, 0.1 * (0.5 * t).sin(), 0.4 - 0.03 * t);
            TimedSample::new(
                t,
                Pose::new(p, Vec3::new(PI, 0.0, 0.1 * t)),
                u8::from(i == 7),
            )
        })
        .collect();
    SparseTrajectory::all_keyframes(w, Frame::World).unwrap()
}

/// The plan above with a 2 cm target shift at 2.3 s and 0.5 s replans at 100 Hz.
pub fn scenario() -> Scenario {
    let mut s = Scenario::new(plan(), 0.5, 100.0, 8.0).unwrap();
    s.perturbations.push(Perturbation {
        time: 2.3,
        target_offset: Vec3::new(0.02, 0.0, 0.0),
    });
    s
}
