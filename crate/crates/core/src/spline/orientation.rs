// SPDX-License-Identifier: Apache-2.0

use crate::error::{Error, Result};
use crate::geometry::UnitQuaternion;

const PARALLEL_DOT: f64 = 1.0 - 1e-9;

/// Spherical linear interpolation along the shorter arc.
///
/// Nearly parallel inputs (`dot > 1 − 1e-9`) fall back to normalized linear
/// interpolation. The output is canonicalized (`w ≥ 0`).
pub fn slerp(q0: &UnitQuaternion, q1: &UnitQuaternion, s: f64) -> UnitQuaternion {
    slerp_raw(q0, q1, s).canonical()
}

/// Like [`slerp`] but without canonicalizing the sign of the result.
fn slerp_raw(q0: &UnitQuaternion, q1: &UnitQuaternion, s: f64) -> UnitQuaternion {
    let mut d = q0.dot(q1);
    let q1 = if d < 0.0 {
        d = -d;
        q1.neg()
    } else {
        *q1
    };
    let a = [q0.w, q0.x, q0.y, q0.z];
    let b = [q1.w, q1.x, q1.y, q1.z];
    let out: [f64; 4] = if d > PARALLEL_DOT {
        std::array::from_fn(|i| a[i] + (b[i] - a[i]) * s)
    } else {
        // b = cos θ · a + sin θ · e with e ⟂ a; walk the great circle through a and e
        let perp: [f64; 4] = std::array::from_fn(|i| b[i] - d * a[i]);
        let sin_theta = perp.iter().map(|p| p * p).sum::<f64>().sqrt();
        let theta = sin_theta.atan2(d);
        let (ss, cs) = (s * theta).sin_cos();
        std::array::from_fn(|i| a[i] * cs + perp[i] / sin_theta * ss)
    };
    UnitQuaternion::new_unchecked(out[0], out[1], out[2], out[3]).normalized()
}

/// Orientation knots interpolated pairwise by SLERP.
///
/// Knot quaternions are sign-aligned on construction so consecutive dot
/// products are non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientationTrack {
    knot_times: Vec<f64>,
    quats: Vec<UnitQuaternion>,
}

impl OrientationTrack {
    pub fn new(knot_times: Vec<f64>, quats: Vec<UnitQuaternion>) -> Result<Self> {
        if knot_times.is_empty() || knot_times.len() != quats.len() {
            return Err(Error::domain(
                "orientation track needs one quaternion per knot",
            ));
        }
        if knot_times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::domain(
                "orientation knots must be strictly increasing",
            ));
        }
        let mut aligned: Vec<UnitQuaternion> = Vec::with_capacity(quats.len());
        for q in quats {
            let q = q.normalized();
            let q = match aligned.last() {
                Some(prev) if prev.dot(&q) < 0.0 => q.neg(),
                _ => q,
            };
            aligned.push(q);
        }
        Ok(Self {
            knot_times,
            quats: aligned,
        })
    }

    pub fn knot_times(&self) -> &[f64] {
        &self.knot_times
    }

    pub fn quats(&self) -> &[UnitQuaternion] {
        &self.quats
    }

    pub fn start_time(&self) -> f64 {
        self.knot_times[0]
    }

    pub fn end_time(&self) -> f64 {
        self.knot_times[self.knot_times.len() - 1]
    }

    /// Clamped evaluation; canonical sign.
    pub fn eval(&self, t: f64) -> UnitQuaternion {
        let n = self.knot_times.len();
        if n == 1 || t <= self.knot_times[0] {
            return self.quats[0].canonical();
        }
        if t >= self.knot_times[n - 1] {
            return self.quats[n - 1].canonical();
        }
        let i = self.knot_times.partition_point(|&k| k <= t) - 1;
        let (t0, t1) = (self.knot_times[i], self.knot_times[i + 1]);
        slerp(&self.quats[i], &self.quats[i + 1], (t - t0) / (t1 - t0))
    }

    /// Sub-track over `[t0, t1]`, with the interpolated orientations as new end knots.
    pub fn slice(&self, t0: f64, t1: f64) -> Result<Self> {
        let mut times = vec![t0];
        let mut quats = vec![self.eval(t0)];
        for (t, q) in self.knot_times.iter().zip(&self.quats) {
            if *t > t0 && *t < t1 {
                times.push(*t);
                quats.push(*q);
            }
        }
        times.push(t1);
        quats.push(self.eval(t1));
        Self::new(times, quats)
    }

    pub fn shifted_in_time(&self, dt: f64) -> Self {
        Self {
            knot_times: self.knot_times.iter().map(|k| k + dt).collect(),
            quats: self.quats.clone(),
        }
    }
}
