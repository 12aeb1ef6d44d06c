// SPDX-License-Identifier: Apache-2.0

//! Kinematic closed-loop simulation with an oracle planner.
//!
//! The end effector tracks the commanded trajectory perfectly. Target drift
//! is modelled as offsets added to every remaining waypoint from the moment
//! each perturbation fires.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::closed_loop::{controller_step_to, ControllerState, MergeMode, PendingPlan, PlanOrigin};
use crate::error::{Error, Result};
use crate::geometry::{DenseTrajectory, Frame, TimedSample, Vec3};
use crate::keyframe::SparseTrajectory;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub time: f64,
    pub target_offset: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// World-frame plan; the run starts at its first timestamp.
    pub initial_plan: SparseTrajectory,
    pub perturbations: Vec<Perturbation>,
    pub replan_interval: f64,
    pub control_rate: f64,
    pub duration: f64,
    /// Defaults to `replan_interval`.
    pub transition_duration: Option<f64>,
    pub replanning: bool,
    /// Plans are computed at request time and applied this much later.
    pub planner_delay: f64,
    pub merge_mode: MergeMode,
}

impl Scenario {
    pub fn new(
        initial_plan: SparseTrajectory,
        replan_interval: f64,
        control_rate: f64,
        duration: f64,
    ) -> Result<Self> {
        let s = Self {
            initial_plan,
            perturbations: Vec::new(),
            replan_interval,
            control_rate,
            duration,
            transition_duration: None,
            replanning: true,
            planner_delay: 0.0,
            merge_mode: MergeMode::Spline,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn start_time(&self) -> f64 {
        self.initial_plan.waypoints()[0].t
    }

    pub fn validate(&self) -> Result<()> {
        if self.initial_plan.frame() != Frame::World {
            return Err(Error::validation(
                "scenario plans must be in the world frame",
            ));
        }
        for (name, v) in [
            ("replan_interval", self.replan_interval),
            ("control_rate", self.control_rate),
            ("duration", self.duration),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::validation(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if let Some(t) = self.transition_duration {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::validation("transition_duration must be positive"));
            }
        }
        if !(self.planner_delay >= 0.0) || !self.planner_delay.is_finite() {
            return Err(Error::validation("planner_delay must be non-negative"));
        }
        ticks(self.replan_interval, self.control_rate, "replan_interval")?;
        ticks(self.planner_delay, self.control_rate, "planner_delay")?;
        let (t0, t1) = (self.start_time(), self.start_time() + self.duration);
        for (i, p) in self.perturbations.iter().enumerate() {
            if !(t0..=t1).contains(&p.time) || !p.target_offset.iter().all(|c| c.is_finite()) {
                return Err(Error::validation(format!(
                    "perturbation {i} must lie within [{t0}, {t1}] with a finite offset"
                )));
            }
        }
        Ok(())
    }

    /// Final goal once every perturbation has fired.
    pub fn final_target(&self) -> Vec3 {
        let w = self.initial_plan.waypoints();
        w[w.len() - 1].pose.position
            + self
                .perturbations
                .iter()
                .map(|p| p.target_offset)
                .sum::<Vec3>()
    }
}

/// Whole number of control ticks in `span`.
fn ticks(span: f64, rate: f64, name: &str) -> Result<usize> {
    let x = span * rate;
    let n = x.round();
    if (x - n).abs() > 1e-9 * x.max(1.0) {
        return Err(Error::validation(format!(
            "{name} must be a whole number of control periods"
        )));
    }
    Ok(n as usize)
}

/// Waypoints from the last one stamped at or before `t` onward, shifted by
/// the sum of the perturbations that have fired by `t`.
pub fn oracle_planner(scenario: &Scenario, t: f64) -> PendingPlan {
    let w = scenario.initial_plan.waypoints();
    let first = w.iter().rposition(|s| s.t <= t).unwrap_or(0);
    let offset: Vec3 = scenario
        .perturbations
        .iter()
        .filter(|p| p.time <= t)
        .map(|p| p.target_offset)
        .sum();
    let waypoints = w[first..]
        .iter()
        .map(|s| {
            let mut s = *s;
            s.pose.position += offset;
            s
        })
        .collect();
    PendingPlan::new(waypoints, PlanOrigin::Replan(0)).expect("slice of a valid plan")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplanEvent {
    /// When the merge was applied.
    pub time: f64,
    /// When the plan was requested; equals `time` without planner delay.
    pub requested_at: f64,
    pub k_star: usize,
    pub dropped_count: usize,
    pub gamma: Option<f64>,
    pub k_star_kept: bool,
    pub plan_complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExecutionLog {
    pub commanded: DenseTrajectory,
    pub replan_events: Vec<ReplanEvent>,
    /// Distance from the last commanded position to the final target.
    pub final_error: f64,
}

pub fn run(scenario: &Scenario) -> Result<ExecutionLog> {
    run_with_planner(scenario, oracle_planner)
}

/// Steps the controller at `control_rate`, requesting a plan every
/// `replan_interval` (not at the start time).
pub fn run_with_planner(
    scenario: &Scenario,
    mut planner: impl FnMut(&Scenario, f64) -> PendingPlan,
) -> Result<ExecutionLog> {
    scenario.validate()?;
    let rate = scenario.control_rate;
    let every = ticks(scenario.replan_interval, rate, "replan_interval")?.max(1);
    let delay = ticks(scenario.planner_delay, rate, "planner_delay")?;
    let steps = (scenario.duration * rate + 1e-9).floor() as usize;
    if steps < 1 {
        return Err(Error::validation(
            "duration shorter than one control period",
        ));
    }
    let t0 = scenario.start_time();
    let at = |k: usize| t0 + k as f64 / rate;

    let mut state = ControllerState::new(&scenario.initial_plan, scenario.replan_interval)?
        .with_transition_duration(
            scenario
                .transition_duration
                .unwrap_or(scenario.replan_interval),
        )?
        .with_merge_mode(scenario.merge_mode);
    let mut samples = Vec::with_capacity(steps + 1);
    samples.push(TimedSample::new(
        state.current_time,
        state.current_pose,
        state.current_gripper,
    ));
    let mut queue: VecDeque<(usize, f64, PendingPlan)> = VecDeque::new();
    let mut events = Vec::new();

    for k in 0..steps {
        if scenario.replanning && k > 0 && k % every == 0 {
            queue.push_back((k + delay, at(k), planner(scenario, at(k))));
        }
        let due = match queue.front() {
            Some((apply, _, _)) if *apply == k => queue.pop_front(),
            _ => None,
        };
        let (sample, record) =
            controller_step_to(&mut state, at(k + 1), due.as_ref().map(|d| &d.2))?;
        if let (Some(r), Some((_, requested_at, _))) = (record, due) {
            events.push(ReplanEvent {
                time: r.time,
                requested_at,
                k_star: r.k_star,
                dropped_count: r.dropped,
                gamma: r.gamma,
                k_star_kept: r.k_star_kept,
                plan_complete: r.plan_complete,
            });
        }
        samples.push(sample);
    }
    let final_error = (samples[samples.len() - 1].pose.position - scenario.final_target()).norm();
    Ok(ExecutionLog {
        commanded: DenseTrajectory::new(samples, Frame::World)?,
        replan_events: events,
        final_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Velocity,
    Acceleration,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub kind: LimitKind,
    pub value: f64,
}

/// First finite-difference velocity or acceleration above its limit, in time
/// order. Velocity over `[t_i, t_{i+1}]` and acceleration centred on `t_i`
/// are both stamped `t_i`; `None` means the log passes.
pub fn smoothness_check(log: &ExecutionLog, v_max: f64, a_max: f64) -> Result<Option<Violation>> {
    let s = log.commanded.samples();
    if s.len() < 3 {
        return Err(Error::InsufficientData(
            "smoothness check needs at least 3 samples".into(),
        ));
    }
    let vel: Vec<Vec3> = s
        .windows(2)
        .map(|w| (w[1].pose.position - w[0].pose.position) / (w[1].t - w[0].t))
        .collect();
    for i in 0..s.len() - 1 {
        if i > 0 {
            let a = (vel[i] - vel[i - 1]).norm() / (0.5 * (s[i + 1].t - s[i - 1].t));
            if a > a_max {
                return Ok(Some(Violation {
                    time: s[i].t,
                    kind: LimitKind::Acceleration,
                    value: a,
                }));
            }
        }
        let v = vel[i].norm();
        if v > v_max {
            return Ok(Some(Violation {
                time: s[i].t,
                kind: LimitKind::Velocity,
                value: v,
            }));
        }
    }
    Ok(None)
}
