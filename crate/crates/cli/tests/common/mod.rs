// SPDX-License-Identifier: Apache-2.0

//! Fixtures shared by the CLI integration tests and the acceptance suite.

#![allow(dead_code)]

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::process::{Command, Output};

use rand::Rng;
use trajkit_core::io::{save_bundle, Bundle};
use trajkit_core::{CameraModel, DenseTrajectory, Frame, Pose, TimedSample, Vec3};

pub fn trajkit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trajkit"))
        .args(args)
        .output()
        .expect("spawn trajkit")
}

pub fn trajkit_ok(args: &[&str]) -> Output {
    let out = trajkit(args);
    assert!(
        out.status.success(),
        "trajkit {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

pub fn camera() -> CameraModel {
    CameraModel::from_focal(600.0, 600.0, 320.0, 240.0, 640, 480).unwrap()
}

/// Straight line at constant speed, constant orientation and gripper, sampled at `rate`.
pub fn linear_dense(rate: f64, seconds: f64) -> DenseTrajectory {
    let n = (seconds * rate).round() as usize;
    let samples = (0..=n)
        .map(|k| {
            let t = k as f64 / rate;
            let p = Vec3::new(0.1 + 0.2 * t, -0.05 + 0.1 * t, 0.4 - 0.05 * t);
            TimedSample::new(t, Pose::new(p, Vec3::new(0.1, -0.2, 0.3)), 1)
        })
        .collect();
    DenseTrajectory::new(samples, Frame::World).unwrap()
}

/// Quarter turn of a helix (radius 0.1 m, rise 0.2 m) over 4 s, starting and
/// ending at rest: the path parameter follows `10u³ − 15u⁴ + 6u⁵`.
pub fn rest_to_rest_helix(intervals: usize) -> DenseTrajectory {
    let duration = 4.0;
    let samples = (0..=intervals)
        .map(|k| {
            let u = k as f64 / intervals as f64;
            let s = u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
            let th = FRAC_PI_2 * s;
            let p = Vec3::new(0.1 * th.cos(), 0.1 * th.sin(), 0.2 * s);
            TimedSample::new(duration * u, Pose::new(p, Vec3::new(0.0, 0.0, th)), 0)
        })
        .collect();
    DenseTrajectory::new(samples, Frame::World).unwrap()
}

/// Piecewise-linear motion with velocity kinks, single-sample bumps and gripper
/// toggles at random segment boundaries. One angle may drift across ±π.
pub fn synthetic_dense(rng: &mut impl Rng) -> DenseTrajectory {
    let dt = rng.gen_range(0.005..0.05);
    let segments = rng.gen_range(2..8);
    let mut samples = Vec::new();
    let mut pos = Vec3::new(rng.gen(), rng.gen(), rng.gen());
    let mut ang = Vec3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(2.8..3.1),
    );
    let mut grip = rng.gen_range(0..2u8);
    let mut t = 0.0;
    for _ in 0..segments {
        let vel = Vec3::new(
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
            rng.gen_range(-0.5..0.5),
        );
        let ang_vel = Vec3::new(rng.gen_range(-0.3..0.3), 0.0, rng.gen_range(0.0..1.0));
        if rng.gen_bool(0.4) {
            grip = 1 - grip;
        }
        let len = rng.gen_range(5..40);
        let bump = rng.gen_bool(0.3).then(|| rng.gen_range(1..len));
        for j in 0..len {
            let mut p = pos;
            if bump == Some(j) {
                p.y += rng.gen_range(0.001..0.02);
            }
            let e = Vec3::new(ang.x, ang.y, wrap(ang.z));
            samples.push(TimedSample::new(t, Pose::new(p, e), grip));
            t += dt;
            pos += vel * dt;
            ang += ang_vel * dt;
        }
    }
    DenseTrajectory::new(samples, Frame::World).unwrap()
}

fn wrap(a: f64) -> f64 {
    let mut a = a;
    while a > PI {
        a -= 2.0 * PI;
    }
    while a < -PI {
        a += 2.0 * PI;
    }
    a
}

pub fn write_bundle(
    dir: &Path,
    name: &str,
    traj: DenseTrajectory,
    camera: Option<CameraModel>,
) -> std::path::PathBuf {
    let path = dir.join(name);
    save_bundle(&Bundle::from_dense(traj, camera), &path).unwrap();
    path
}
