// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::bundle::{Bundle, BundleFile, SampleFile};
use super::{check_version, from_json, to_json, FORMAT_VERSION};
use crate::closed_loop::MergeMode;
use crate::error::{Error, Result};
use crate::geometry::{Frame, Vec3};
use crate::keyframe::SparseTrajectory;
use crate::sim::{ExecutionLog, Perturbation, ReplanEvent, Scenario};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PerturbationFile {
    time: f64,
    target_offset: [f64; 3],
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    version: u32,
    /// World-frame waypoints.
    initial_plan: Vec<SampleFile>,
    #[serde(default)]
    perturbations: Vec<PerturbationFile>,
    replan_interval: f64,
    control_rate: f64,
    duration: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    transition_duration: Option<f64>,
    #[serde(default = "yes")]
    replanning: bool,
    #[serde(default)]
    planner_delay: f64,
    #[serde(default)]
    merge_mode: MergeMode,
}

pub fn parse_scenario(text: &str, source: &str) -> Result<Scenario> {
    let f: ScenarioFile = from_json(text, source)?;
    check_version(f.version)?;
    let waypoints = f.initial_plan.iter().map(SampleFile::to_sample).collect();
    let initial_plan = SparseTrajectory::all_keyframes(waypoints, Frame::World)
        .map_err(|e| Error::validation(format!("initial_plan: {e}")))?;
    let scenario = Scenario {
        initial_plan,
        perturbations: f
            .perturbations
            .iter()
            .map(|p| Perturbation {
                time: p.time,
                target_offset: Vec3::from(p.target_offset),
            })
            .collect(),
        replan_interval: f.replan_interval,
        control_rate: f.control_rate,
        duration: f.duration,
        transition_duration: f.transition_duration,
        replanning: f.replanning,
        planner_delay: f.planner_delay,
        merge_mode: f.merge_mode,
    };
    scenario.validate()?;
    Ok(scenario)
}

pub fn scenario_to_json(s: &Scenario) -> String {
    to_json(&ScenarioFile {
        version: FORMAT_VERSION,
        initial_plan: s
            .initial_plan
            .waypoints()
            .iter()
            .map(|w| SampleFile::from_sample(w, None))
            .collect(),
        perturbations: s
            .perturbations
            .iter()
            .map(|p| PerturbationFile {
                time: p.time,
                target_offset: p.target_offset.into(),
            })
            .collect(),
        replan_interval: s.replan_interval,
        control_rate: s.control_rate,
        duration: s.duration,
        transition_duration: s.transition_duration,
        replanning: s.replanning,
        planner_delay: s.planner_delay,
        merge_mode: s.merge_mode,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LogFile {
    version: u32,
    final_error: f64,
    replan_events: Vec<ReplanEvent>,
    commanded: BundleFile,
}

pub fn log_to_json(log: &ExecutionLog) -> String {
    to_json(&LogFile {
        version: FORMAT_VERSION,
        final_error: log.final_error,
        replan_events: log.replan_events.clone(),
        commanded: Bundle::from_dense(log.commanded.clone(), None).to_file(),
    })
}

pub fn parse_log(text: &str, source: &str) -> Result<ExecutionLog> {
    let f: LogFile = from_json(text, source)?;
    check_version(f.version)?;
    Ok(ExecutionLog {
        commanded: Bundle::from_file(f.commanded)?.trajectory,
        replan_events: f.replan_events,
        final_error: f.final_error,
    })
}
