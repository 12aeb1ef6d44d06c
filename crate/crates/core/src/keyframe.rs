// SPDX-License-Identifier: Apache-2.0

//! Kinematic keyframe selection and uniform sub-keyframe insertion.
//!
//! A sample is a keyframe when the weighted pose acceleration exceeds a
//! threshold or the gripper state changes. Contiguous runs of
//! above-threshold samples collapse to the run's acceleration peak, so a
//! single impulse yields a single keyframe. Both endpoints are always kept.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    finite_difference_accel, pose_camera_to_world, pose_world_to_camera, CameraModel,
    ComponentWeights, DenseTrajectory, Frame, TimedSample,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyframeReason {
    AccelThreshold,
    GripperChange,
    ForcedEndpoint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Keyframe {
    pub index: usize,
    /// Sorted, without duplicates.
    pub reasons: Vec<KeyframeReason>,
}

impl Keyframe {
    pub fn has(&self, reason: KeyframeReason) -> bool {
        self.reasons.contains(&reason)
    }
}

/// Keyframes of one dense trajectory, in increasing index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyframeSet {
    keyframes: Vec<Keyframe>,
}

impl KeyframeSet {
    /// Checks ordering and endpoint invariants against a trajectory of `len` samples.
    pub fn new(keyframes: Vec<Keyframe>, len: usize) -> Result<Self> {
        if keyframes.len() < 2 {
            return Err(Error::validation("a keyframe set needs both endpoints"));
        }
        if keyframes[0].index != 0 || keyframes[keyframes.len() - 1].index + 1 != len {
            return Err(Error::validation(
                "first and last keyframes must be the trajectory endpoints",
            ));
        }
        if keyframes.windows(2).any(|w| w[1].index <= w[0].index) {
            return Err(Error::validation(
                "keyframe indices must be strictly increasing",
            ));
        }
        Ok(Self { keyframes })
    }

    pub fn keyframes(&self) -> &[Keyframe] {
        &self.keyframes
    }

    pub fn indices(&self) -> Vec<usize> {
        self.keyframes.iter().map(|k| k.index).collect()
    }

    pub fn len(&self) -> usize {
        self.keyframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyframes.is_empty()
    }

    pub fn with_reason(&self, reason: KeyframeReason) -> Vec<usize> {
        self.keyframes
            .iter()
            .filter(|k| k.has(reason))
            .map(|k| k.index)
            .collect()
    }
}

/// All `k` with `gripper[k-1] != gripper[k]`, i.e. the later sample of each changing pair.
pub fn gripper_change_indices(traj: &DenseTrajectory) -> Vec<usize> {
    traj.samples()
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0].gripper != w[1].gripper)
        .map(|(i, _)| i + 1)
        .collect()
}

pub fn select_keyframes(
    traj: &DenseTrajectory,
    alpha: f64,
    weights: &ComponentWeights,
) -> Result<KeyframeSet> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::domain(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    let accel = finite_difference_accel(traj, weights)?;
    let mut reasons: BTreeMap<usize, Vec<KeyframeReason>> = BTreeMap::new();
    let mut add = |idx: usize, r: KeyframeReason| reasons.entry(idx).or_default().push(r);

    // peak of each maximal above-threshold run; ties keep the earliest index
    let mut peak: Option<(usize, f64)> = None;
    for a in &accel {
        if a.magnitude > alpha {
            match peak {
                Some((_, m)) if m >= a.magnitude => {}
                _ => peak = Some((a.index, a.magnitude)),
            }
        } else if let Some((idx, _)) = peak.take() {
            add(idx, KeyframeReason::AccelThreshold);
        }
    }
    if let Some((idx, _)) = peak {
        add(idx, KeyframeReason::AccelThreshold);
    }

    for idx in gripper_change_indices(traj) {
        add(idx, KeyframeReason::GripperChange);
    }
    add(0, KeyframeReason::ForcedEndpoint);
    add(traj.len() - 1, KeyframeReason::ForcedEndpoint);

    let keyframes = reasons
        .into_iter()
        .map(|(index, mut reasons)| {
            reasons.sort();
            reasons.dedup();
            Keyframe { index, reasons }
        })
        .collect();
    KeyframeSet::new(keyframes, traj.len())
}

/// Ordered waypoints, each flagged as keyframe or sub-keyframe.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseTrajectory {
    waypoints: Vec<TimedSample>,
    keyframe_flags: Vec<bool>,
    frame: Frame,
}

impl SparseTrajectory {
    pub fn new(
        waypoints: Vec<TimedSample>,
        keyframe_flags: Vec<bool>,
        frame: Frame,
    ) -> Result<Self> {
        if keyframe_flags.len() != waypoints.len() {
            return Err(Error::validation(
                "one keyframe flag per waypoint is required",
            ));
        }
        // reuse the dense validation rules: ≥ 2 samples, finite, strictly increasing
        let dense = DenseTrajectory::new(waypoints, frame)?;
        Ok(Self {
            waypoints: dense.into_samples(),
            keyframe_flags,
            frame,
        })
    }

    /// Every waypoint flagged as a keyframe.
    pub fn all_keyframes(waypoints: Vec<TimedSample>, frame: Frame) -> Result<Self> {
        let flags = vec![true; waypoints.len()];
        Self::new(waypoints, flags, frame)
    }

    pub fn waypoints(&self) -> &[TimedSample] {
        &self.waypoints
    }

    pub fn keyframe_flags(&self) -> &[bool] {
        &self.keyframe_flags
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    pub fn to_dense(&self) -> DenseTrajectory {
        DenseTrajectory::new(self.waypoints.clone(), self.frame).expect("validated on construction")
    }

    /// Expresses the waypoints in `frame` using the camera extrinsics.
    pub fn to_frame(&self, frame: Frame, cam: &CameraModel) -> Result<Self> {
        match (self.frame, frame) {
            (a, b) if a == b => Ok(self.clone()),
            (Frame::Camera, Frame::World) => self.map_waypoints(frame, |w| {
                TimedSample::new(w.t, pose_camera_to_world(&w.pose, cam), w.gripper)
            }),
            _ => self.map_waypoints(frame, |w| {
                TimedSample::new(w.t, pose_world_to_camera(&w.pose, cam), w.gripper)
            }),
        }
    }

    /// Applies `f` to every waypoint, keeping flags; the result is revalidated.
    pub fn map_waypoints(
        &self,
        frame: Frame,
        f: impl FnMut(&TimedSample) -> TimedSample,
    ) -> Result<Self> {
        Self::new(
            self.waypoints.iter().map(f).collect(),
            self.keyframe_flags.clone(),
            frame,
        )
    }
}

/// Splits every keyframe interval into `n − 1` equal time steps (`n` samples
/// counting both keyframes) and takes the dense sample nearest to each
/// interior time (ties to the earlier one), timestamp included, so every
/// waypoint is an observed sample. Shared keyframes appear once. An interval
/// with fewer than `n` dense samples contributes each of its samples once.
pub fn insert_sub_keyframes(
    traj: &DenseTrajectory,
    keys: &KeyframeSet,
    n: usize,
) -> Result<SparseTrajectory> {
    if n < 2 {
        return Err(Error::domain(format!(
            "sub-keyframe count must be at least 2, got {n}"
        )));
    }
    let samples = traj.samples();
    let idx = keys.indices();
    if idx.first() != Some(&0) || idx.last() != Some(&(samples.len() - 1)) {
        return Err(Error::validation(
            "keyframe set does not match the trajectory",
        ));
    }

    let mut waypoints = Vec::with_capacity((idx.len() - 1) * (n - 1) + 1);
    let mut flags = Vec::with_capacity(waypoints.capacity());
    waypoints.push(samples[0]);
    flags.push(true);
    let steps = (n - 1) as f64;
    for pair in idx.windows(2) {
        let (a, b) = (&samples[pair[0]], &samples[pair[1]]);
        let mut last_used = pair[0];
        for j in 1..n - 1 {
            let t = a.t + (b.t - a.t) * (j as f64 / steps);
            let i = traj.nearest_index(t);
            if i <= last_used || i >= pair[1] {
                continue;
            }
            last_used = i;
            waypoints.push(samples[i]);
            flags.push(false);
        }
        waypoints.push(*b);
        flags.push(true);
    }
    SparseTrajectory::new(waypoints, flags, traj.frame())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Pose, Vec3};

    fn line(n: usize, dt: f64) -> DenseTrajectory {
        let samples = (0..n)
            .map(|i| {
                let t = i as f64 * dt;
                TimedSample::new(t, Pose::from_position(Vec3::new(t, 0.5 * t, 0.0)), 0)
            })
            .collect();
        DenseTrajectory::new(samples, Frame::World).unwrap()
    }

    fn with_gripper(traj: &DenseTrajectory, g: &[u8]) -> DenseTrajectory {
        let samples = traj
            .samples()
            .iter()
            .zip(g)
            .map(|(s, &g)| TimedSample { gripper: g, ..*s })
            .collect();
        DenseTrajectory::new(samples, Frame::World).unwrap()
    }

    #[test]
    fn constant_velocity_only_endpoints() {
        let traj = line(100, 0.01);
        let keys = select_keyframes(&traj, 0.1, &ComponentWeights::default()).unwrap();
        assert_eq!(keys.indices(), vec![0, 99]);
        assert!(keys
            .keyframes()
            .iter()
            .all(|k| k.reasons == [KeyframeReason::ForcedEndpoint]));
    }

    #[test]
    fn gripper_toggle_is_keyframe() {
        let traj = line(100, 0.01);
        let g: Vec<u8> = (0..100).map(|i| u8::from(i >= 50)).collect();
        let traj = with_gripper(&traj, &g);
        let keys = select_keyframes(&traj, 10.0, &ComponentWeights::default()).unwrap();
        assert_eq!(keys.indices(), vec![0, 50, 99]);
        assert_eq!(keys.with_reason(KeyframeReason::GripperChange), vec![50]);
    }

    #[test]
    fn gripper_change_scan() {
        let traj = with_gripper(&line(5, 0.1), &[0, 0, 1, 1, 0]);
        assert_eq!(gripper_change_indices(&traj), vec![2, 4]);
        assert!(gripper_change_indices(&line(5, 0.1)).is_empty());
    }

    #[test]
    fn velocity_step_gives_single_interior_keyframe() {
        // speed jumps from 0.2 to 1.0 m/s at sample 40: one second-difference spike
        let dt = 0.01;
        let k = 40;
        let samples = (0..81)
            .map(|i| {
                let t = i as f64 * dt;
                let tk = k as f64 * dt;
                let x = if i <= k { 0.2 * t } else { 0.2 * tk + (t - tk) };
                TimedSample::new(t, Pose::from_position(Vec3::new(x, 0.0, 0.0)), 0)
            })
            .collect();
        let traj = DenseTrajectory::new(samples, Frame::World).unwrap();
        let keys = select_keyframes(&traj, 1.0, &ComponentWeights::default()).unwrap();
        assert_eq!(keys.indices(), vec![0, k, 80]);
        assert_eq!(keys.with_reason(KeyframeReason::AccelThreshold), vec![k]);
    }

    #[test]
    fn coincident_reasons_share_one_keyframe() {
        let dt = 0.01;
        let samples = (0..21)
            .map(|i| {
                let t = i as f64 * dt;
                let x = if i <= 10 { 0.0 } else { t - 0.1 };
                TimedSample::new(
                    t,
                    Pose::from_position(Vec3::new(x, 0.0, 0.0)),
                    u8::from(i >= 10),
                )
            })
            .collect();
        let traj = DenseTrajectory::new(samples, Frame::World).unwrap();
        let keys = select_keyframes(&traj, 1.0, &ComponentWeights::default()).unwrap();
        assert_eq!(keys.indices(), vec![0, 10, 20]);
        assert_eq!(
            keys.keyframes()[1].reasons,
            vec![
                KeyframeReason::AccelThreshold,
                KeyframeReason::GripperChange
            ]
        );
    }

    #[test]
    fn rejects_bad_alpha_and_short_input() {
        let traj = line(10, 0.1);
        assert!(select_keyframes(&traj, 0.0, &ComponentWeights::default()).is_err());
        assert!(matches!(
            select_keyframes(&line(2, 0.1), 1.0, &ComponentWeights::default()),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn two_sub_keyframes_is_just_keyframes() {
        let traj = with_gripper(
            &line(50, 0.02),
            &[[0u8; 20].as_slice(), &[1u8; 30]].concat(),
        );
        let keys = select_keyframes(&traj, 5.0, &ComponentWeights::default()).unwrap();
        let sparse = insert_sub_keyframes(&traj, &keys, 2).unwrap();
        let idx = keys.indices();
        assert_eq!(sparse.len(), idx.len());
        for (w, i) in sparse.waypoints().iter().zip(idx) {
            assert_eq!(*w, traj.samples()[i]);
        }
        assert!(sparse.keyframe_flags().iter().all(|&f| f));
    }

    #[test]
    fn straight_line_midpoint() {
        let samples = (0..=10)
            .map(|i| {
                let t = i as f64 / 10.0;
                TimedSample::new(t, Pose::from_position(Vec3::new(t, 0.0, 0.0)), 0)
            })
            .collect();
        let traj = DenseTrajectory::new(samples, Frame::World).unwrap();
        let keys = select_keyframes(&traj, 1.0, &ComponentWeights::default()).unwrap();
        let sparse = insert_sub_keyframes(&traj, &keys, 3).unwrap();
        assert_eq!(sparse.len(), 3);
        let mid = sparse.waypoints()[1];
        assert_eq!(mid.t, 0.5);
        assert!((mid.pose.position - Vec3::new(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(sparse.keyframe_flags(), &[true, false, true]);
    }

    #[test]
    fn helix_counts_and_spacing() {
        let samples = (0..=400)
            .map(|i| {
                let t = i as f64 / 100.0;
                let p = Vec3::new(0.1 * (3.0 * t).cos(), 0.1 * (3.0 * t).sin(), 0.05 * t);
                TimedSample::new(t, Pose::from_position(p), u8::from((150..300).contains(&i)))
            })
            .collect();
        let traj = DenseTrajectory::new(samples, Frame::World).unwrap();
        let keys = select_keyframes(&traj, 100.0, &ComponentWeights::default()).unwrap();
        assert_eq!(keys.indices(), vec![0, 150, 300, 400]);
        let n = 11;
        let sparse = insert_sub_keyframes(&traj, &keys, n).unwrap();
        assert_eq!(sparse.len(), 10 * (keys.len() - 1) + 1);
        let idx = keys.indices();
        for (seg, pair) in idx.windows(2).enumerate() {
            let (ta, tb) = (traj.samples()[pair[0]].t, traj.samples()[pair[1]].t);
            for j in 0..n {
                let expected = ta + (tb - ta) * j as f64 / 10.0;
                let got = sparse.waypoints()[seg * 10 + j].t;
                assert!((got - expected).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sub_keyframe_count_domain() {
        let traj = line(10, 0.1);
        let keys = select_keyframes(&traj, 1.0, &ComponentWeights::default()).unwrap();
        assert!(matches!(
            insert_sub_keyframes(&traj, &keys, 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn short_interval_uses_each_sample_once() {
        let traj = line(4, 0.1);
        let keys = select_keyframes(&traj, 1.0, &ComponentWeights::default()).unwrap();
        let sparse = insert_sub_keyframes(&traj, &keys, 11).unwrap();
        assert_eq!(sparse.waypoints(), traj.samples());
        assert_eq!(sparse.keyframe_flags(), &[true, false, false, true]);
    }
}
