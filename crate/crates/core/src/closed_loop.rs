// SPDX-License-Identifier: Apache-2.0

//! Online replan merging.
//!
//! At each replan the controller locates the closest pending waypoint `k*`,
//! drops it when it lies behind the end effector along the local forward
//! direction (`γ ≤ 0`), discards everything before it and splices the
//! refreshed plan onto the executing trajectory with a smooth transition.
//!
//! The splice works on the executing trajectory `A` rather than replacing it
//! outright. The refreshed waypoints are fitted with a spline `N` whose start
//! velocity is `A`'s velocity at the first waypoint. Between now and that
//! waypoint `A` is kept, offset by the quadratic that makes it meet `N` in
//! position, velocity and acceleration. A cubic Hermite correction over the
//! transition window then takes the result from the current position and
//! velocity onto it. When the new plan matches the old one every correction
//! vanishes and the trajectory is unchanged, so replanning with an unchanged
//! plan never perturbs execution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Frame, Pose, TimedSample, Vec3};
use crate::keyframe::SparseTrajectory;
use crate::spline::{
    fit, hermite_coeffs, ContinuousTrajectory, GripperSchedule, OrientationTrack, PositionSpline,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanOrigin {
    InitialPlan,
    Replan(usize),
}

/// Waypoints still to be reached, world frame, absolute times.
#[derive(Debug, Clone, PartialEq)]
pub struct PendingPlan {
    waypoints: Vec<TimedSample>,
    origin: PlanOrigin,
}

impl PendingPlan {
    /// An empty plan is allowed and means the task is complete.
    pub fn new(waypoints: Vec<TimedSample>, origin: PlanOrigin) -> Result<Self> {
        if waypoints
            .iter()
            .any(|w| !w.t.is_finite() || !w.pose.is_finite() || w.gripper > 1)
        {
            return Err(Error::validation(
                "pending waypoints must be finite with gripper 0 or 1",
            ));
        }
        if waypoints.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::validation(
                "pending waypoint times must be strictly increasing",
            ));
        }
        Ok(Self { waypoints, origin })
    }

    pub fn from_sparse(sparse: &SparseTrajectory, origin: PlanOrigin) -> Self {
        Self {
            waypoints: sparse.waypoints().to_vec(),
            origin,
        }
    }

    pub fn waypoints(&self) -> &[TimedSample] {
        &self.waypoints
    }

    pub fn origin(&self) -> PlanOrigin {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.waypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waypoints.is_empty()
    }

    fn position(&self, i: usize) -> Vec3 {
        self.waypoints[i].pose.position
    }

    fn shifted_in_time(&self, dt: f64) -> Self {
        let waypoints = self
            .waypoints
            .iter()
            .map(|w| TimedSample::new(w.t + dt, w.pose, w.gripper))
            .collect();
        Self {
            waypoints,
            origin: self.origin,
        }
    }
}

/// Index of the pending waypoint closest to `current`; ties go to the lowest index.
pub fn nearest_pending_index(current: &Vec3, pending: &PendingPlan) -> Result<usize> {
    if pending.is_empty() {
        return Err(Error::State("no pending waypoints".into()));
    }
    let mut best = (0, f64::INFINITY);
    for i in 0..pending.len() {
        let d = (pending.position(i) - current).norm();
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best.0)
}

/// Unit direction `p[k+1] − p[k]`, or `p[k] − p[k−1]` when `k` is the last waypoint.
pub fn forward_direction(pending: &PendingPlan, k: usize) -> Result<Vec3> {
    let n = pending.len();
    if k >= n {
        return Err(Error::State(format!(
            "index {k} outside a plan of {n} waypoints"
        )));
    }
    if n < 2 {
        return Err(Error::UndefinedDirection(
            "forward direction needs at least two waypoints".into(),
        ));
    }
    let step = if k + 1 < n {
        pending.position(k + 1) - pending.position(k)
    } else {
        pending.position(k) - pending.position(k - 1)
    };
    let len = step.norm();
    if !(len > 0.0) {
        return Err(Error::UndefinedDirection(format!(
            "waypoints around index {k} coincide"
        )));
    }
    Ok(step / len)
}

/// `γ = (waypoint − current)·dir`; the waypoint is kept iff `γ > 0`.
pub fn keep_test(current: &Vec3, waypoint: &Vec3, forward_dir: &Vec3) -> (f64, bool) {
    let gamma = (waypoint - current).dot(forward_dir);
    (gamma, gamma > 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefreshOutcome {
    /// Surviving waypoints in their original order; empty when the plan is complete.
    pub pending: PendingPlan,
    pub k_star: usize,
    /// `None` for single-waypoint plans, which are kept unconditionally.
    pub gamma: Option<f64>,
    pub k_star_kept: bool,
    pub dropped: usize,
}

/// Keeps the waypoints from `k*` on, or from `k* + 1` when `k*` fails the keep test.
pub fn refresh_pending(current: &Vec3, pending: &PendingPlan) -> Result<RefreshOutcome> {
    let k_star = nearest_pending_index(current, pending)?;
    let (gamma, keep) = if pending.len() == 1 {
        (None, true)
    } else {
        let dir = forward_direction(pending, k_star)?;
        let (g, keep) = keep_test(current, &pending.position(k_star), &dir);
        (Some(g), keep)
    };
    let start = k_star + usize::from(!keep);
    Ok(RefreshOutcome {
        pending: PendingPlan {
            waypoints: pending.waypoints[start..].to_vec(),
            origin: pending.origin,
        },
        k_star,
        gamma,
        k_star_kept: keep,
        dropped: start,
    })
}

/// How a refreshed plan replaces the executing trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeMode {
    /// Smooth splice with a transition window (see the module docs).
    #[default]
    Spline,
    /// Jump straight onto a fresh fit of the refreshed plan. Only useful as a
    /// baseline: position and velocity are discontinuous at the switch.
    HardSwitch,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MergeOutcome {
    Merged {
        trajectory: ContinuousTrajectory,
        refresh: RefreshOutcome,
    },
    /// Every waypoint has been passed; keep executing the current trajectory.
    PlanComplete { refresh: RefreshOutcome },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub current_time: f64,
    pub current_pose: Pose,
    pub current_velocity: Vec3,
    pub current_gripper: u8,
    pub active: ContinuousTrajectory,
    pub pending: PendingPlan,
    pub replan_interval: f64,
    pub transition_duration: f64,
    pub merge_mode: MergeMode,
    replans: usize,
}

/// Outcome of applying one replan inside a controller step.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplanRecord {
    pub time: f64,
    pub k_star: usize,
    pub dropped: usize,
    pub gamma: Option<f64>,
    pub k_star_kept: bool,
    pub plan_complete: bool,
}

impl ControllerState {
    /// Starts at the beginning of `fit(initial)`. The transition window defaults
    /// to the replan interval.
    pub fn new(initial: &SparseTrajectory, replan_interval: f64) -> Result<Self> {
        if initial.frame() != Frame::World {
            return Err(Error::Format(
                "the controller runs in the world frame".into(),
            ));
        }
        if !(replan_interval > 0.0) || !replan_interval.is_finite() {
            return Err(Error::domain("replan interval must be positive"));
        }
        let active = fit(initial)?;
        let t = active.start_time();
        let p = active.eval(t);
        Ok(Self {
            current_time: t,
            current_pose: Pose::new(p.position, p.orientation.to_euler_xyz()),
            current_velocity: active.velocity(t),
            current_gripper: p.gripper,
            pending: PendingPlan::from_sparse(initial, PlanOrigin::InitialPlan),
            active,
            replan_interval,
            transition_duration: replan_interval,
            merge_mode: MergeMode::Spline,
            replans: 0,
        })
    }

    pub fn with_transition_duration(mut self, duration: f64) -> Result<Self> {
        if !(duration > 0.0) || !duration.is_finite() {
            return Err(Error::domain("transition duration must be positive"));
        }
        self.transition_duration = duration;
        Ok(self)
    }

    pub fn with_merge_mode(mut self, mode: MergeMode) -> Self {
        self.merge_mode = mode;
        self
    }

    pub fn replan_count(&self) -> usize {
        self.replans
    }

    /// Merges `plan` at the current time and makes the result active.
    pub fn apply_replan(&mut self, plan: &PendingPlan) -> Result<ReplanRecord> {
        self.replans += 1;
        let plan = PendingPlan {
            waypoints: plan.waypoints.clone(),
            origin: PlanOrigin::Replan(self.replans),
        };
        let outcome = match self.merge_mode {
            MergeMode::Spline => merge_replan(self, &plan, self.transition_duration)?,
            MergeMode::HardSwitch => hard_switch(self, &plan)?,
        };
        let (refresh, complete) = match outcome {
            MergeOutcome::Merged {
                trajectory,
                refresh,
            } => {
                self.active = trajectory;
                (refresh, false)
            }
            MergeOutcome::PlanComplete { refresh } => (refresh, true),
        };
        let record = ReplanRecord {
            time: self.current_time,
            k_star: refresh.k_star,
            dropped: refresh.dropped,
            gamma: refresh.gamma,
            k_star_kept: refresh.k_star_kept,
            plan_complete: complete,
        };
        self.pending = refresh.pending;
        if self.merge_mode == MergeMode::HardSwitch {
            self.follow(self.current_time);
        }
        Ok(record)
    }

    /// Kinematic follower: the state becomes the active trajectory at `t`.
    fn follow(&mut self, t: f64) {
        let p = self.active.eval(t);
        self.current_time = t;
        self.current_pose = Pose::new(p.position, p.orientation.to_euler_xyz());
        // the trajectory holds its final pose, so the follower is at rest from the end time on
        self.current_velocity = if t < self.active.end_time() {
            self.active.velocity(t)
        } else {
            Vec3::zeros()
        };
        self.current_gripper = p.gripper;
    }

    fn sample(&self) -> TimedSample {
        TimedSample::new(self.current_time, self.current_pose, self.current_gripper)
    }
}

/// Applies `replan_source` (if any) at the current time, then advances to
/// `t_next` and returns the commanded sample there.
pub fn controller_step_to(
    state: &mut ControllerState,
    t_next: f64,
    replan_source: Option<&PendingPlan>,
) -> Result<(TimedSample, Option<ReplanRecord>)> {
    if !(t_next > state.current_time) {
        return Err(Error::domain("controller time must advance"));
    }
    let record = replan_source
        .map(|plan| state.apply_replan(plan))
        .transpose()?;
    state.follow(t_next);
    Ok((state.sample(), record))
}

pub fn controller_step(
    state: &mut ControllerState,
    dt: f64,
    replan_source: Option<&PendingPlan>,
) -> Result<(TimedSample, Option<ReplanRecord>)> {
    if !(dt > 0.0) {
        return Err(Error::domain("dt must be positive"));
    }
    controller_step_to(state, state.current_time + dt, replan_source)
}

/// Refreshes `new_plan` against the current position and splices it onto the
/// active trajectory from the current time on.
///
/// Waypoints stamped at or before the current time are delayed as a block so
/// the first one lands on the current time. A single surviving waypoint is
/// reached by one Hermite segment that arrives at rest no earlier than one
/// transition window from now. A single waypoint still ahead in time is
/// approached along the active trajectory, offset to end on it.
pub fn merge_replan(
    state: &ControllerState,
    new_plan: &PendingPlan,
    transition_duration: f64,
) -> Result<MergeOutcome> {
    if !(transition_duration > 0.0) || !transition_duration.is_finite() {
        return Err(Error::domain("transition duration must be positive"));
    }
    let (mut refresh, times, points) = match refresh_for_merge(state, new_plan)? {
        Ok(parts) => parts,
        Err(refresh) => return Ok(MergeOutcome::PlanComplete { refresh }),
    };
    let t_c = state.current_time;
    let cur = state.current_pose.position;
    let curv = state.current_velocity;
    let active = state.active.position();

    let t_first = times[0];
    let mut full = if points.len() == 1 && t_first <= t_c {
        // already due: go there and stop, taking at least one transition window
        let t_end = t_c + transition_duration;
        let w = refresh.pending.waypoints[0];
        refresh.pending = PendingPlan {
            waypoints: vec![TimedSample::new(t_end, w.pose, w.gripper)],
            origin: refresh.pending.origin,
        };
        let position = PositionSpline::hermite(t_c, t_end, cur, curv, points[0], Vec3::zeros())?;
        let trajectory = assemble(state, &refresh.pending, position)?;
        return Ok(MergeOutcome::Merged {
            trajectory,
            refresh,
        });
    } else if t_first > t_c {
        let mut pre = active.slice(t_c, t_first)?;
        let (pa, va, aa) = pre.piece_end_state(pre.pieces().len() - 1);
        if points.len() == 1 {
            pre.add_polynomial_between(
                t_c,
                t_first,
                &[points[0] - pa, Vec3::zeros(), Vec3::zeros(), Vec3::zeros()],
            );
        } else {
            let next = PositionSpline::clamped_start(&times, &points, va)?;
            let (pn, vn, an) = next.piece_start_state(0);
            let correction = shift_to_origin(t_first, t_c, pn - pa, vn - va, (an - aa) * 0.5);
            pre.add_polynomial_between(t_c, t_first, &correction);
            pre.append(&next)?;
        }
        pre
    } else {
        PositionSpline::clamped_start(&times, &points, curv)?
    };
    let t_e = (t_c + transition_duration).min(full.end_time());
    full.insert_knot(t_e);
    let blend = hermite_coeffs(
        t_e - t_c,
        cur - full.eval(t_c),
        curv - full.velocity(t_c),
        Vec3::zeros(),
        Vec3::zeros(),
    );
    full.add_polynomial_between(t_c, t_e, &blend);
    let position = full;
    let trajectory = assemble(state, &refresh.pending, position)?;
    Ok(MergeOutcome::Merged {
        trajectory,
        refresh,
    })
}

/// `c0 + c1·τ + c2·τ²` with `τ = t − origin`, re-expressed about `new_origin`.
fn shift_to_origin(origin: f64, new_origin: f64, c0: Vec3, c1: Vec3, c2: Vec3) -> [Vec3; 4] {
    crate::spline::taylor_shift(&[c0, c1, c2, Vec3::zeros()], new_origin - origin)
}

type MergeParts = (RefreshOutcome, Vec<f64>, Vec<Vec3>);

/// Refresh plus retiming; `Err(refresh)` signals a completed plan.
fn refresh_for_merge(
    state: &ControllerState,
    plan: &PendingPlan,
) -> Result<Result<MergeParts, RefreshOutcome>> {
    let mut refresh = refresh_pending(&state.current_pose.position, plan)?;
    if refresh.pending.is_empty() {
        return Ok(Err(refresh));
    }
    let t_first = refresh.pending.waypoints[0].t;
    if t_first < state.current_time {
        refresh.pending = refresh
            .pending
            .shifted_in_time(state.current_time - t_first);
    }
    let times = refresh.pending.waypoints.iter().map(|w| w.t).collect();
    let points = refresh
        .pending
        .waypoints
        .iter()
        .map(|w| w.pose.position)
        .collect();
    Ok(Ok((refresh, times, points)))
}

/// Orientation and gripper tracks to go with a merged position spline: start
/// from the current state, then follow the plan's knots after the current time.
fn assemble(
    state: &ControllerState,
    plan: &PendingPlan,
    position: PositionSpline,
) -> Result<ContinuousTrajectory> {
    let t_c = state.current_time;
    let t_end = position.end_time();
    let mut o_times = vec![t_c];
    let mut quats = vec![state.active.eval(t_c).orientation];
    let mut g_times = vec![t_c];
    let mut grips = vec![state.current_gripper];
    for w in &plan.waypoints {
        if w.t > t_c && w.t <= t_end {
            o_times.push(w.t);
            quats.push(w.pose.orientation());
            g_times.push(w.t);
            grips.push(w.gripper);
        } else if w.t == t_c {
            grips[0] = w.gripper;
        }
    }
    if o_times.len() == 1 {
        o_times.push(t_end);
        quats.push(plan.waypoints[plan.len() - 1].pose.orientation());
    }
    ContinuousTrajectory::new(
        position,
        OrientationTrack::new(o_times, quats)?,
        GripperSchedule::new(g_times, grips)?,
        Frame::World,
    )
}

/// Baseline merge: hold the first refreshed waypoint until its time, then
/// follow a natural spline through the plan. No attempt is made to match
/// the current position or velocity.
fn hard_switch(state: &ControllerState, plan: &PendingPlan) -> Result<MergeOutcome> {
    let (refresh, times, points) = match refresh_for_merge(state, plan)? {
        Ok(parts) => parts,
        Err(refresh) => return Ok(MergeOutcome::PlanComplete { refresh }),
    };
    let t_c = state.current_time;
    let hold = |t1: f64| {
        PositionSpline::from_pieces(
            vec![t_c, t1],
            vec![[points[0], Vec3::zeros(), Vec3::zeros(), Vec3::zeros()]],
        )
    };
    let position = if points.len() == 1 {
        hold(times[0].max(t_c + state.transition_duration))?
    } else {
        let fresh = PositionSpline::natural(&times, &points)?;
        if times[0] > t_c {
            let mut p = hold(times[0])?;
            p.append(&fresh)?;
            p
        } else {
            fresh
        }
    };
    let trajectory = assemble(state, &refresh.pending, position)?;
    Ok(MergeOutcome::Merged {
        trajectory,
        refresh,
    })
}

/// Largest position and velocity jumps across the interior knots of `spline`.
pub fn knot_continuity(spline: &PositionSpline) -> (f64, f64) {
    let mut worst = (0.0f64, 0.0f64);
    for i in 1..spline.pieces().len() {
        let (p0, v0, _) = spline.piece_end_state(i - 1);
        let (p1, v1, _) = spline.piece_start_state(i);
        worst.0 = worst.0.max((p1 - p0).norm());
        worst.1 = worst.1.max((v1 - v0).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::spline::resample;

    fn plan(points: &[[f64; 3]]) -> PendingPlan {
        let w = points
            .iter()
            .enumerate()
            .map(|(i, p)| TimedSample::new(i as f64, Pose::from_position(Vec3::from(*p)), 0))
            .collect();
        PendingPlan::new(w, PlanOrigin::InitialPlan).unwrap()
    }

    fn curved_sparse() -> SparseTrajectory {
        let w = (0..6)
            .map(|i| {
                let t = i as f64 * 0.8;
                let p = Vec3::new(0.3 * t, 0.1 * (1.3 * t).sin(), 0.05 * t * t);
                TimedSample::new(
                    t,
                    Pose::new(p, Vec3::new(0.0, 0.1 * t, 0.2)),
                    u8::from(i >= 3),
                )
            })
            .collect();
        SparseTrajectory::all_keyframes(w, Frame::World).unwrap()
    }

    fn shifted(sparse: &SparseTrajectory, offset: Vec3) -> PendingPlan {
        let w = sparse
            .waypoints()
            .iter()
            .map(|s| {
                TimedSample::new(
                    s.t,
                    Pose::new(s.pose.position + offset, s.pose.euler_xyz),
                    s.gripper,
                )
            })
            .collect();
        PendingPlan::new(w, PlanOrigin::Replan(0)).unwrap()
    }

    #[test]
    fn nearest_index_examples() {
        let p = plan(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        assert_eq!(nearest_pending_index(&Vec3::zeros(), &p).unwrap(), 0);
        assert_eq!(
            nearest_pending_index(&Vec3::new(2.1, 0.0, 0.0), &p).unwrap(),
            1
        );
        assert_eq!(
            nearest_pending_index(&Vec3::new(1.5, 0.0, 0.0), &p).unwrap(),
            0
        );
        let empty = PendingPlan::new(vec![], PlanOrigin::InitialPlan).unwrap();
        assert!(matches!(
            nearest_pending_index(&Vec3::zeros(), &empty),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn nearest_index_matches_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            // integer grid coordinates make exact ties common
            let pts: Vec<[f64; 3]> = (0..rng.gen_range(1..8))
                .map(|_| {
                    [
                        rng.gen_range(-2..3) as f64,
                        rng.gen_range(-2..3) as f64,
                        0.0,
                    ]
                })
                .collect();
            let cur = Vec3::new(
                rng.gen_range(-2..3) as f64,
                rng.gen_range(-2..3) as f64,
                0.0,
            );
            let d: Vec<f64> = pts.iter().map(|p| (Vec3::from(*p) - cur).norm()).collect();
            let min = d.iter().cloned().fold(f64::INFINITY, f64::min);
            let expect = d.iter().position(|&x| x == min).unwrap();
            assert_eq!(nearest_pending_index(&cur, &plan(&pts)).unwrap(), expect);
        }
    }

    #[test]
    fn forward_direction_branches() {
        let p = plan(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        assert_eq!(forward_direction(&p, 1).unwrap(), Vec3::x());
        let p = plan(&[[0.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(forward_direction(&p, 1).unwrap(), Vec3::y());
        let single = plan(&[[0.0, 0.0, 0.0]]);
        assert!(matches!(
            forward_direction(&single, 0),
            Err(Error::UndefinedDirection(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..100 {
            let pts: Vec<[f64; 3]> = (0..5).map(|_| [rng.gen(), rng.gen(), rng.gen()]).collect();
            let p = plan(&pts);
            for k in 0..5 {
                let (a, b) = if k < 4 {
                    (pts[k], pts[k + 1])
                } else {
                    (pts[3], pts[4])
                };
                let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let n = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                let got = forward_direction(&p, k).unwrap();
                assert!((got - Vec3::new(d[0] / n, d[1] / n, d[2] / n)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn keep_test_examples() {
        assert_eq!(
            keep_test(&Vec3::zeros(), &Vec3::x(), &Vec3::x()),
            (1.0, true)
        );
        let (g, keep) = keep_test(
            &Vec3::new(2.2, 0.0, 0.0),
            &Vec3::new(2.0, 0.0, 0.0),
            &Vec3::x(),
        );
        assert!((g + 0.2).abs() < 1e-15 && !keep);
        assert_eq!(keep_test(&Vec3::x(), &Vec3::x(), &Vec3::x()), (0.0, false));
        // scaling the frame scales γ but keeps its sign
        let (g1, k1) = keep_test(
            &Vec3::new(0.3, 0.1, 0.0),
            &Vec3::new(1.0, 0.5, 0.2),
            &Vec3::x(),
        );
        let (g2, k2) = keep_test(
            &Vec3::new(3.0, 1.0, 0.0),
            &Vec3::new(10.0, 5.0, 2.0),
            &Vec3::x(),
        );
        assert!((g2 - 10.0 * g1).abs() < 1e-12 && k1 == k2);
    }

    #[test]
    fn refresh_examples() {
        let p = plan(&[[1.0, 0.0, 0.0], [2.0, 0.0, 0.0], [3.0, 0.0, 0.0]]);
        let r = refresh_pending(&Vec3::new(-1.0, 0.0, 0.0), &p).unwrap();
        assert_eq!(r.pending, p);
        assert_eq!(r.dropped, 0);
        let r = refresh_pending(&Vec3::new(1.2, 0.0, 0.0), &p).unwrap();
        assert_eq!(r.pending.waypoints(), &p.waypoints()[1..]);
        assert_eq!((r.k_star, r.k_star_kept, r.dropped), (0, false, 1));
        assert!(r.gamma.unwrap() <= 0.0);
        let r = refresh_pending(&Vec3::new(3.5, 0.0, 0.0), &p).unwrap();
        assert!(r.pending.is_empty());
        assert_eq!(r.dropped, 3);
        let r = refresh_pending(&Vec3::new(9.0, 0.0, 0.0), &plan(&[[1.0, 0.0, 0.0]])).unwrap();
        assert_eq!((r.pending.len(), r.gamma), (1, None));
    }

    #[test]
    fn identical_plan_leaves_trajectory_unchanged() {
        let sparse = curved_sparse();
        let open_loop = fit(&sparse).unwrap();
        for t_c in [0.37, 1.0, 1.6, 2.45, 3.9] {
            let mut state = ControllerState::new(&sparse, 0.5).unwrap();
            controller_step_to(&mut state, t_c, None).unwrap();
            let merged = match merge_replan(&state, &shifted(&sparse, Vec3::zeros()), 0.5).unwrap()
            {
                MergeOutcome::Merged { trajectory, .. } => trajectory,
                other => panic!("{other:?}"),
            };
            assert_eq!(merged.start_time(), t_c);
            for k in 0..=400 {
                let t = t_c + (open_loop.end_time() - t_c) * k as f64 / 400.0;
                let (a, b) = (merged.eval(t), open_loop.eval(t));
                assert!((a.position - b.position).norm() < 1e-9, "t_c {t_c} t {t}");
                assert!(a.orientation.angle_to(&b.orientation) < 1e-9);
                assert_eq!(a.gripper, b.gripper);
            }
        }
    }

    #[test]
    fn shifted_plan_is_continuous_and_reaches_target() {
        let sparse = curved_sparse();
        let offset = Vec3::new(0.02, 0.0, 0.0);
        let mut state = ControllerState::new(&sparse, 0.5).unwrap();
        controller_step_to(&mut state, 1.3, None).unwrap();
        let (cur, curv) = (state.current_pose.position, state.current_velocity);
        let merged = match merge_replan(&state, &shifted(&sparse, offset), 0.5).unwrap() {
            MergeOutcome::Merged { trajectory, .. } => trajectory,
            other => panic!("{other:?}"),
        };
        assert!((merged.eval(1.3).position - cur).norm() < 1e-15);
        assert!((merged.velocity(1.3) - curv).norm() < 1e-12);
        let (dp, dv) = knot_continuity(merged.position());
        assert!(dp < 1e-12 && dv < 1e-9, "{dp} {dv}");
        let target = sparse.waypoints().last().unwrap().pose.position + offset;
        assert!((merged.eval(merged.end_time()).position - target).norm() < 1e-9);
        // after the window the merged curve is the old one shifted by the offset
        let old = fit(&sparse).unwrap();
        for t in [1.9, 2.5, 3.3, 4.0] {
            assert!((merged.eval(t).position - (old.eval(t).position + offset)).norm() < 1e-9);
        }
    }

    #[test]
    fn single_waypoint_from_rest() {
        let sparse = curved_sparse();
        let mut state = ControllerState::new(&sparse, 0.5).unwrap();
        controller_step_to(&mut state, 6.0, None).unwrap();
        assert_eq!(state.current_velocity, Vec3::zeros());
        let goal = Vec3::new(1.0, 0.5, 0.3);
        let one = PendingPlan::new(
            vec![TimedSample::new(5.0, Pose::from_position(goal), 1)],
            PlanOrigin::Replan(0),
        )
        .unwrap();
        let MergeOutcome::Merged {
            trajectory,
            refresh,
        } = merge_replan(&state, &one, 0.5).unwrap()
        else {
            panic!()
        };
        assert_eq!(refresh.gamma, None);
        assert_eq!(trajectory.position().pieces().len(), 1);
        assert_eq!((trajectory.start_time(), trajectory.end_time()), (6.0, 6.5));
        assert!((trajectory.eval(6.5).position - goal).norm() < 1e-12);
        assert_eq!(trajectory.velocity(6.5).norm(), 0.0);
    }

    #[test]
    fn passed_plan_reports_completion() {
        let sparse = curved_sparse();
        let mut state = ControllerState::new(&sparse, 0.5).unwrap();
        controller_step_to(&mut state, 4.5, None).unwrap();
        let last = sparse.waypoints().last().unwrap().pose.position;
        state.current_pose.position = last + (last - sparse.waypoints()[4].pose.position);
        assert!(matches!(
            merge_replan(&state, &shifted(&sparse, Vec3::zeros()), 0.5).unwrap(),
            MergeOutcome::PlanComplete { .. }
        ));
    }

    #[test]
    fn steps_without_replans_match_resample() {
        let sparse = curved_sparse();
        let open_loop = resample(&fit(&sparse).unwrap(), 50.0).unwrap();
        let mut state = ControllerState::new(&sparse, 0.5).unwrap();
        for s in &open_loop.samples()[1..] {
            let (got, rec) = controller_step_to(&mut state, s.t, None).unwrap();
            assert!(rec.is_none());
            assert!((got.pose.position - s.pose.position).norm() < 1e-12);
            assert_eq!(got.gripper, s.gripper);
        }
    }

    #[test]
    fn identical_replans_do_not_change_stream() {
        let sparse = curved_sparse();
        let same = shifted(&sparse, Vec3::zeros());
        let run = |every: usize| {
            let mut state = ControllerState::new(&sparse, 0.5).unwrap();
            (1..=240)
                .map(|k| {
                    let replan = (k > 1 && (k - 1) % every == 0).then_some(&same);
                    controller_step_to(&mut state, k as f64 / 50.0, replan)
                        .unwrap()
                        .0
                })
                .collect::<Vec<_>>()
        };
        let (a, b, c) = (run(10), run(25), run(1000));
        for ((x, y), z) in a.iter().zip(&b).zip(&c) {
            assert!((x.pose.position - y.pose.position).norm() < 1e-6);
            assert!((x.pose.position - z.pose.position).norm() < 1e-6);
        }
    }

    #[test]
    fn hard_switch_jumps() {
        let sparse = curved_sparse();
        let mut state = ControllerState::new(&sparse, 0.5)
            .unwrap()
            .with_merge_mode(MergeMode::HardSwitch);
        controller_step_to(&mut state, 1.3, None).unwrap();
        let before = state.current_pose.position;
        state
            .apply_replan(&shifted(&sparse, Vec3::new(0.02, 0.0, 0.0)))
            .unwrap();
        assert!((state.current_pose.position - before).norm() > 1e-3);
    }
}
