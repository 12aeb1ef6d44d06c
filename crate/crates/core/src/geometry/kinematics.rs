// SPDX-License-Identifier: Apache-2.0

use super::{normalize_angle, DenseTrajectory};
use crate::error::{Error, Result};

/// Per-component weights for `[x, y, z, θx, θy, θz]` in the acceleration norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComponentWeights(pub [f64; 6]);

impl Default for ComponentWeights {
    fn default() -> Self {
        Self([1.0; 6])
    }
}

impl ComponentWeights {
    pub fn position_only() -> Self {
        Self([1.0, 1.0, 1.0, 0.0, 0.0, 0.0])
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::domain(
                "component weights must be finite and non-negative",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSample {
    /// Index of the interior sample in the source trajectory.
    pub index: usize,
    pub t: f64,
    pub magnitude: f64,
}

/// Central second differences of the six pose components on interior samples.
///
/// Non-uniform spacing uses the three-point formula
/// `2·((x₊ − x)/h₊ − (x − x₋)/h₋)/(h₋ + h₊)`, which reduces to
/// `(x₊ − 2x + x₋)/h²` on a uniform grid. Angle differences are wrapped into
/// `[-π, π]` so a ±π crossing does not read as a spike. The magnitude is
/// `sqrt(Σ (w_c · a_c)²)`. Endpoints have no entry.
pub fn finite_difference_accel(
    traj: &DenseTrajectory,
    weights: &ComponentWeights,
) -> Result<Vec<AccelSample>> {
    weights.validate()?;
    let s = traj.samples();
    if s.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "acceleration needs at least 3 samples, got {}",
            s.len()
        )));
    }
    let out = s
        .windows(3)
        .enumerate()
        .map(|(i, w)| {
            let (prev, cur, next) = (&w[0], &w[1], &w[2]);
            let h0 = cur.t - prev.t;
            let h1 = next.t - cur.t;
            let a = prev.pose.components();
            let b = cur.pose.components();
            let c = next.pose.components();
            let mut sq = 0.0;
            for k in 0..6 {
                let (d0, d1) = if k < 3 {
                    (b[k] - a[k], c[k] - b[k])
                } else {
                    (normalize_angle(b[k] - a[k]), normalize_angle(c[k] - b[k]))
                };
                let acc = 2.0 * (d1 / h1 - d0 / h0) / (h0 + h1);
                let wa = weights.0[k] * acc;
                sq += wa * wa;
            }
            AccelSample {
                index: i + 1,
                t: cur.t,
                magnitude: sq.sqrt(),
            }
        })
        .collect();
    Ok(out)
}
