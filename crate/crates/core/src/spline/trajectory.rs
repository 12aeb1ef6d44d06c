// SPDX-License-Identifier: Apache-2.0

use super::{OrientationTrack, PositionSpline};
use crate::error::{Error, Result};
use crate::geometry::{DenseTrajectory, Frame, Pose, TimedSample, UnitQuaternion, Vec3};
use crate::keyframe::SparseTrajectory;

/// Zero-order hold of the gripper state; changes happen only at knot times.
#[derive(Debug, Clone, PartialEq)]
pub struct GripperSchedule {
    knot_times: Vec<f64>,
    states: Vec<u8>,
}

impl GripperSchedule {
    pub fn new(knot_times: Vec<f64>, states: Vec<u8>) -> Result<Self> {
        if knot_times.is_empty() || knot_times.len() != states.len() {
            return Err(Error::domain("gripper schedule needs one state per knot"));
        }
        if states.iter().any(|&g| g > 1) {
            return Err(Error::domain("gripper states must be 0 or 1"));
        }
        Ok(Self { knot_times, states })
    }

    pub fn knot_times(&self) -> &[f64] {
        &self.knot_times
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }

    pub fn eval(&self, t: f64) -> u8 {
        let i = self
            .knot_times
            .partition_point(|&k| k <= t)
            .saturating_sub(1);
        self.states[i]
    }

    pub fn shifted_in_time(&self, dt: f64) -> Self {
        Self {
            knot_times: self.knot_times.iter().map(|k| k + dt).collect(),
            states: self.states.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub position: Vec3,
    pub orientation: UnitQuaternion,
    pub gripper: u8,
}

/// Position spline, orientation track and gripper schedule over a shared
/// time domain. Immutable once built and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousTrajectory {
    position: PositionSpline,
    orientation: OrientationTrack,
    gripper: GripperSchedule,
    frame: Frame,
}

impl ContinuousTrajectory {
    pub fn new(
        position: PositionSpline,
        orientation: OrientationTrack,
        gripper: GripperSchedule,
        frame: Frame,
    ) -> Result<Self> {
        let same = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        if !same(position.start_time(), orientation.start_time())
            || !same(position.end_time(), orientation.end_time())
            || !same(position.start_time(), gripper.knot_times()[0])
        {
            return Err(Error::domain(
                "position, orientation and gripper domains differ",
            ));
        }
        Ok(Self {
            position,
            orientation,
            gripper,
            frame,
        })
    }

    pub fn position(&self) -> &PositionSpline {
        &self.position
    }

    pub fn orientation(&self) -> &OrientationTrack {
        &self.orientation
    }

    pub fn gripper(&self) -> &GripperSchedule {
        &self.gripper
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn start_time(&self) -> f64 {
        self.position.start_time()
    }

    pub fn end_time(&self) -> f64 {
        self.position.end_time()
    }

    /// Pose and gripper at `t`, clamped to the domain.
    pub fn eval(&self, t: f64) -> TrajectoryPoint {
        let t = t.clamp(self.start_time(), self.end_time());
        TrajectoryPoint {
            position: self.position.eval(t),
            orientation: self.orientation.eval(t),
            gripper: self.gripper.eval(t),
        }
    }

    pub fn velocity(&self, t: f64) -> Vec3 {
        self.position.velocity(t)
    }

    pub fn acceleration(&self, t: f64) -> Vec3 {
        self.position.acceleration(t)
    }

    pub fn shifted_in_time(&self, dt: f64) -> Self {
        Self {
            position: self.position.shifted_in_time(dt),
            orientation: self.orientation.shifted_in_time(dt),
            gripper: self.gripper.shifted_in_time(dt),
            frame: self.frame,
        }
    }
}

/// How knot times are assigned to waypoints before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KnotTiming {
    /// Use the waypoint timestamps as they are.
    #[default]
    Recorded,
    /// Equal spacing of `segment_duration` seconds, starting at the first timestamp.
    Uniform { segment_duration: f64 },
    /// Spacing proportional to the distance between waypoints, over the recorded span.
    Chord,
    /// Spacing proportional to the square root of that distance, over the recorded span.
    Centripetal,
}

impl KnotTiming {
    fn knot_times(&self, sparse: &SparseTrajectory) -> Result<Vec<f64>> {
        let w = sparse.waypoints();
        let t0 = w[0].t;
        let exponent = match *self {
            KnotTiming::Recorded => return Ok(w.iter().map(|s| s.t).collect()),
            KnotTiming::Uniform { segment_duration } => {
                if !(segment_duration > 0.0) || !segment_duration.is_finite() {
                    return Err(Error::domain("segment duration must be positive"));
                }
                return Ok((0..w.len())
                    .map(|i| t0 + i as f64 * segment_duration)
                    .collect());
            }
            KnotTiming::Chord => 1.0,
            KnotTiming::Centripetal => 0.5,
        };
        let steps: Vec<f64> = w
            .windows(2)
            .map(|p| {
                (p[1].pose.position - p[0].pose.position)
                    .norm()
                    .powf(exponent)
            })
            .collect();
        if steps.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::domain(
                "distance-based timing needs distinct consecutive waypoint positions",
            ));
        }
        let total: f64 = steps.iter().sum();
        let span = w[w.len() - 1].t - t0;
        let mut times = Vec::with_capacity(w.len());
        let mut acc = 0.0;
        times.push(t0);
        for s in &steps[..steps.len() - 1] {
            acc += s;
            times.push(t0 + span * acc / total);
        }
        times.push(t0 + span);
        Ok(times)
    }
}

/// Natural cubic spline through the waypoint positions, SLERP between the
/// waypoint orientations and a zero-order hold on the gripper.
pub fn fit(sparse: &SparseTrajectory) -> Result<ContinuousTrajectory> {
    fit_with(sparse, KnotTiming::Recorded)
}

pub fn fit_with(sparse: &SparseTrajectory, timing: KnotTiming) -> Result<ContinuousTrajectory> {
    let times = timing.knot_times(sparse)?;
    let w = sparse.waypoints();
    let points: Vec<Vec3> = w.iter().map(|s| s.pose.position).collect();
    let quats: Vec<UnitQuaternion> = w.iter().map(|s| s.pose.orientation()).collect();
    let grip: Vec<u8> = w.iter().map(|s| s.gripper).collect();
    ContinuousTrajectory::new(
        PositionSpline::natural(&times, &points)?,
        OrientationTrack::new(times.clone(), quats)?,
        GripperSchedule::new(times, grip)?,
        sparse.frame(),
    )
}

/// Samples at `t₀ + k/rate`, always ending with a sample at `t_N`.
pub fn resample(traj: &ContinuousTrajectory, rate: f64) -> Result<DenseTrajectory> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::domain(format!("rate must be positive, got {rate}")));
    }
    let (t0, t1) = (traj.start_time(), traj.end_time());
    let span = t1 - t0;
    let tol = 1e-9 * span.max(1.0);
    let last_k = (span * rate + 1e-9).floor() as u64;
    let mut times: Vec<f64> = (0..=last_k).map(|k| t0 + k as f64 / rate).collect();
    match times.last_mut() {
        Some(last) if (t1 - *last).abs() <= tol => *last = t1,
        _ => times.push(t1),
    }
    if times.len() >= 2 && times[times.len() - 2] >= times[times.len() - 1] {
        times.remove(times.len() - 2);
    }
    let samples = times
        .into_iter()
        .map(|t| {
            let p = traj.eval(t);
            TimedSample::new(
                t,
                Pose::new(p.position, p.orientation.to_euler_xyz()),
                p.gripper,
            )
        })
        .collect();
    DenseTrajectory::new(samples, traj.frame())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sparse_from(ts: &[f64], f: impl Fn(f64) -> (Vec3, Vec3, u8)) -> SparseTrajectory {
        let w = ts
            .iter()
            .map(|&t| {
                let (p, e, g) = f(t);
                TimedSample::new(t, Pose::new(p, e), g)
            })
            .collect();
        SparseTrajectory::all_keyframes(w, Frame::World).unwrap()
    }

    #[test]
    fn two_waypoints_straight_segment() {
        let sp = sparse_from(&[0.0, 1.0], |t| {
            (Vec3::new(t, 2.0 * t, 0.0), Vec3::zeros(), 0)
        });
        let tr = fit(&sp).unwrap();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert!((tr.eval(t).position - Vec3::new(t, 2.0 * t, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn collinear_equal_spacing_stays_on_line() {
        let ts: Vec<f64> = (0..7).map(|i| i as f64 * 0.5).collect();
        let dir = Vec3::new(1.0, -2.0, 0.5).normalize();
        let sp = sparse_from(&ts, |t| {
            (Vec3::new(0.1, 0.2, 0.3) + dir * t, Vec3::zeros(), 0)
        });
        let tr = fit(&sp).unwrap();
        for k in 0..=300 {
            let t = k as f64 * 0.01;
            let p = tr.eval(t).position - Vec3::new(0.1, 0.2, 0.3);
            let off_line = p - dir * p.dot(&dir);
            assert!(off_line.norm() < 1e-9);
        }
    }

    #[test]
    fn error_shrinks_with_spacing() {
        let curve = |t: f64| Vec3::new(t.sin(), t.cos(), t);
        let max_err = |n: usize| {
            let ts: Vec<f64> = (0..=n).map(|i| 4.0 * i as f64 / n as f64).collect();
            let tr = fit(&sparse_from(&ts, |t| (curve(t), Vec3::zeros(), 0))).unwrap();
            // interior only: the natural end condition dominates near the boundary
            (0..=400)
                .map(|k| 1.0 + 2.0 * k as f64 / 400.0)
                .map(|t| (tr.eval(t).position - curve(t)).norm())
                .fold(0.0, f64::max)
        };
        let (e8, e16, e32) = (max_err(8), max_err(16), max_err(32));
        assert!(e16 < e8 && e32 < e16, "{e8} {e16} {e32}");
    }

    #[test]
    fn knots_are_reproduced_and_clamped() {
        let ts = [0.0, 0.4, 1.1, 1.5];
        let sp = sparse_from(&ts, |t| {
            (
                Vec3::new(t, t * t, -t),
                Vec3::new(0.2 * t, -0.1, t),
                u8::from(t > 1.0),
            )
        });
        let tr = fit(&sp).unwrap();
        for w in sp.waypoints() {
            let p = tr.eval(w.t);
            assert!((p.position - w.pose.position).norm() < 1e-9);
            assert!(p.orientation.angle_to(&w.pose.orientation()) < 1e-9);
            assert_eq!(p.gripper, w.gripper);
        }
        let last = sp.waypoints()[3];
        let beyond = tr.eval(10.0);
        assert!((beyond.position - last.pose.position).norm() < 1e-12);
        assert_eq!(tr.eval(1.2).gripper, 1);
        assert_eq!(tr.eval(1.0).gripper, 0);
    }

    #[test]
    fn resample_fenceposts() {
        let sp = sparse_from(&[0.0, 0.5, 1.0], |t| {
            (Vec3::new(t, 0.0, 0.0), Vec3::zeros(), 0)
        });
        let tr = fit(&sp).unwrap();
        let d = resample(&tr, 100.0).unwrap();
        assert_eq!(d.len(), 101);
        assert_eq!(d.end_time(), 1.0);
        let d = resample(&tr, 3.0).unwrap();
        // 0, 1/3, 2/3, then the endpoint
        assert_eq!(d.len(), 4);
        assert_eq!(d.end_time(), 1.0);
        assert!(resample(&tr, 0.0).is_err());
    }

    #[test]
    fn resample_hits_knots() {
        let ts = [0.0, 0.25, 0.5, 1.0];
        let sp = sparse_from(&ts, |t| {
            (Vec3::new(t.cos(), t.sin(), t), Vec3::new(0.0, 0.0, t), 0)
        });
        let tr = fit(&sp).unwrap();
        let d = resample(&tr, 4.0).unwrap();
        assert_eq!(d.len(), 5);
        for w in sp.waypoints() {
            let s = d.samples()[d.nearest_index(w.t)];
            assert!((s.pose.position - w.pose.position).norm() < 1e-9);
            assert!(s.pose.orientation().angle_to(&w.pose.orientation()) < 1e-9);
        }
    }

    #[test]
    fn double_interpolation_recovers_knots() {
        let ts = [0.0, 0.3, 0.9, 1.4, 2.0];
        let sp = sparse_from(&ts, |t| {
            (Vec3::new((2.0 * t).sin(), t * t, 0.1), Vec3::zeros(), 0)
        });
        let tr = fit(&sp).unwrap();
        let dense = resample(&tr, 200.0).unwrap();
        let refit =
            fit(&SparseTrajectory::all_keyframes(dense.samples().to_vec(), Frame::World).unwrap())
                .unwrap();
        for w in sp.waypoints() {
            assert!((refit.eval(w.t).position - w.pose.position).norm() < 1e-6);
        }
    }

    #[test]
    fn alternative_timings() {
        let ts = [0.0, 1.0, 2.0, 3.0];
        let sp = sparse_from(&ts, |t| (Vec3::new(t * t, 0.0, 0.0), Vec3::zeros(), 0));
        let uni = fit_with(
            &sp,
            KnotTiming::Uniform {
                segment_duration: 0.5,
            },
        )
        .unwrap();
        assert_eq!(uni.end_time(), 1.5);
        let chord = fit_with(&sp, KnotTiming::Chord).unwrap();
        assert_eq!(chord.position().knots(), &[0.0, 1.0 / 3.0, 4.0 / 3.0, 3.0]);
        let cen = fit_with(&sp, KnotTiming::Centripetal).unwrap();
        let k = cen.position().knots();
        let total = 1.0 + 3f64.sqrt() + 5f64.sqrt();
        assert!((k[1] - 3.0 / total).abs() < 1e-12);
        assert_eq!(k[3], 3.0);

        let dup = sparse_from(&ts, |_| (Vec3::zeros(), Vec3::zeros(), 0));
        assert!(fit_with(&dup, KnotTiming::Chord).is_err());
    }
}
