// SPDX-License-Identifier: Apache-2.0

use super::fit;
use crate::error::{Error, Result};
use crate::geometry::{ComponentWeights, DenseTrajectory};
use crate::keyframe::{insert_sub_keyframes, select_keyframes};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyframeConfig {
    pub alpha: f64,
    pub weights: ComponentWeights,
}

impl KeyframeConfig {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            weights: ComponentWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionError {
    /// Largest position deviation over all dense samples, meters.
    pub max_err: f64,
    /// Largest deviation within each keyframe interval.
    pub per_segment: Vec<f64>,
}

/// Runs keyframes → `n_sub` interior sub-keyframes per interval → spline fit,
/// and measures the fitted position against every dense sample.
///
/// Each keyframe interval must hold at least `4 · n_sub` dense samples.
pub fn reconstruction_error(
    dense_gt: &DenseTrajectory,
    n_sub: usize,
    config: &KeyframeConfig,
) -> Result<ReconstructionError> {
    let keys = select_keyframes(dense_gt, config.alpha, &config.weights)?;
    let idx = keys.indices();
    for pair in idx.windows(2) {
        let count = pair[1] - pair[0] + 1;
        if count < 4 * n_sub {
            return Err(Error::InsufficientData(format!(
                "keyframe interval [{}, {}] has {count} samples, need at least {}",
                pair[0],
                pair[1],
                4 * n_sub
            )));
        }
    }
    let sparse = insert_sub_keyframes(dense_gt, &keys, n_sub + 2)?;
    let traj = fit(&sparse)?;
    let samples = dense_gt.samples();
    let per_segment: Vec<f64> = idx
        .windows(2)
        .map(|pair| {
            samples[pair[0]..=pair[1]]
                .iter()
                .map(|s| (traj.eval(s.t).position - s.pose.position).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let max_err = per_segment.iter().copied().fold(0.0, f64::max);
    Ok(ReconstructionError {
        max_err,
        per_segment,
    })
}
