// SPDX-License-Identifier: Apache-2.0

//! Trajectory similarity metrics.
//!
//! DTW, discrete Fréchet and Hausdorff are symmetric. Orthogonal distances
//! and coverage precision measure `pred` against `ref`, so swapping the
//! arguments changes them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Ordered 2-D or 3-D points. 2-D points are stored with `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    dim: usize,
    points: Vec<Vec3>,
}

impl Polyline {
    pub fn new(points: Vec<Vec3>) -> Result<Self> {
        Self::with_dim(3, points)
    }

    pub fn from_2d(points: &[[f64; 2]]) -> Result<Self> {
        Self::with_dim(
            2,
            points.iter().map(|p| Vec3::new(p[0], p[1], 0.0)).collect(),
        )
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(3, Vec::len);
        if dim != 2 && dim != 3 {
            return Err(Error::domain(format!(
                "points must be 2-D or 3-D, got {dim}-D"
            )));
        }
        let points = rows
            .iter()
            .map(|r| {
                if r.len() != dim {
                    return Err(Error::domain("points have inconsistent dimension"));
                }
                Ok(Vec3::new(r[0], r[1], if dim == 3 { r[2] } else { 0.0 }))
            })
            .collect::<Result<_>>()?;
        Self::with_dim(dim, points)
    }

    fn with_dim(dim: usize, points: Vec<Vec3>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("a polyline needs at least one point"));
        }
        if points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::domain("polyline coordinates must be finite"));
        }
        Ok(Self { dim, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Distance from `p` to the nearest point on the polyline, segments included.
    pub fn distance_to(&self, p: &Vec3) -> f64 {
        if self.points.len() == 1 {
            return (p - self.points[0]).norm();
        }
        self.points
            .windows(2)
            .map(|s| point_segment_distance(p, &s[0], &s[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn point_segment_distance(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (p - (a + ab * s)).norm()
}

fn check_dims(a: &Polyline, b: &Polyline) -> Result<()> {
    if a.dim != b.dim {
        return Err(Error::domain(format!(
            "dimension mismatch: {} vs {}",
            a.dim, b.dim
        )));
    }
    Ok(())
}

/// Minimal-cost warping path; among equal-cost paths the shortest wins.
/// Returns `(cost, path_length)`.
fn dtw_path(a: &Polyline, b: &Polyline) -> (f64, usize) {
    let (n, m) = (a.len(), b.len());
    let mut prev = vec![(f64::INFINITY, 0usize); m];
    let mut cur = vec![(f64::INFINITY, 0usize); m];
    for i in 0..n {
        for j in 0..m {
            let d = (a.points[i] - b.points[j]).norm();
            let best = if i == 0 && j == 0 {
                (0.0, 0)
            } else {
                let mut best = (f64::INFINITY, usize::MAX);
                let mut consider = |c: (f64, usize)| {
                    if c.0 < best.0 || (c.0 == best.0 && c.1 < best.1) {
                        best = c;
                    }
                };
                if i > 0 && j > 0 {
                    consider(prev[j - 1]);
                }
                if i > 0 {
                    consider(prev[j]);
                }
                if j > 0 {
                    consider(cur[j - 1]);
                }
                best
            };
            cur[j] = (best.0 + d, best.1 + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Dynamic time warping with Euclidean cost. `normalized` divides by the
/// warping-path length.
pub fn dtw(a: &Polyline, b: &Polyline, normalized: bool) -> Result<f64> {
    check_dims(a, b)?;
    let (cost, len) = dtw_path(a, b);
    Ok(if normalized { cost / len as f64 } else { cost })
}

pub fn discrete_frechet(a: &Polyline, b: &Polyline) -> Result<f64> {
    check_dims(a, b)?;
    let m = b.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, p) in a.points.iter().enumerate() {
        for j in 0..m {
            let d = (p - b.points[j]).norm();
            let reach = match (i, j) {
                (0, 0) => 0.0,
                (0, _) => cur[j - 1],
                (_, 0) => prev[0],
                _ => prev[j - 1].min(prev[j]).min(cur[j - 1]),
            };
            cur[j] = d.max(reach);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m - 1])
}

fn directed_hausdorff(a: &Polyline, b: &Polyline) -> f64 {
    a.points
        .iter()
        .map(|p| {
            b.points
                .iter()
                .map(|q| (p - q).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between the two point sets.
pub fn hausdorff(a: &Polyline, b: &Polyline) -> Result<f64> {
    check_dims(a, b)?;
    Ok(directed_hausdorff(a, b).max(directed_hausdorff(b, a)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthogonalStats {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

/// Distance of each `pred` point to the `reference` polyline, aggregated.
/// A single-point reference degenerates to point distances.
pub fn orthogonal_distances(pred: &Polyline, reference: &Polyline) -> Result<OrthogonalStats> {
    check_dims(pred, reference)?;
    let mut d: Vec<f64> = pred
        .points
        .iter()
        .map(|p| reference.distance_to(p))
        .collect();
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let median = if n % 2 == 1 {
        d[n / 2]
    } else {
        0.5 * (d[n / 2 - 1] + d[n / 2])
    };
    Ok(OrthogonalStats {
        max: d[n - 1],
        mean: d.iter().sum::<f64>() / n as f64,
        median,
    })
}

/// `(start_err, end_err)`.
pub fn endpoint_errors(pred: &Polyline, reference: &Polyline) -> Result<(f64, f64)> {
    check_dims(pred, reference)?;
    let first = (pred.points[0] - reference.points[0]).norm();
    let last = (pred.points[pred.len() - 1] - reference.points[reference.len() - 1]).norm();
    Ok((first, last))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coverage {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision: share of `pred` points within `tau` of the reference polyline.
/// Recall: share of reference points within `tau` of the `pred` polyline.
pub fn coverage(pred: &Polyline, reference: &Polyline, tau: f64) -> Result<Coverage> {
    check_dims(pred, reference)?;
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain(format!("tau must be positive, got {tau}")));
    }
    let share = |from: &Polyline, to: &Polyline| {
        from.points
            .iter()
            .filter(|p| to.distance_to(p) <= tau)
            .count() as f64
            / from.len() as f64
    };
    let precision = share(pred, reference);
    let recall = share(reference, pred);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Coverage {
        precision,
        recall,
        f1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricConfig {
    /// Coverage threshold, in the input's units.
    pub tau: f64,
    /// Report DTW divided by the warping-path length.
    pub dtw_normalized: bool,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            dtw_normalized: true,
        }
    }
}

/// Settings and secondary values echoed next to the ten headline metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportConfig {
    pub tau: f64,
    pub dtw_normalization: String,
    pub coverage_direction: String,
    pub dtw_raw: f64,
    pub cover_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricReport {
    #[serde(rename = "cover f1")]
    pub cover_f1: f64,
    #[serde(rename = "cover precision")]
    pub cover_precision: f64,
    pub dtw: f64,
    #[serde(rename = "endpoint err")]
    pub endpoint_err: f64,
    pub frechet: f64,
    pub hausdorff: f64,
    #[serde(rename = "max orth dist")]
    pub max_orth_dist: f64,
    #[serde(rename = "mean orth dist")]
    pub mean_orth_dist: f64,
    #[serde(rename = "median orth dist")]
    pub median_orth_dist: f64,
    #[serde(rename = "startpoint err")]
    pub startpoint_err: f64,
    pub config: ReportConfig,
}

impl MetricReport {
    pub const ROW_NAMES: [&'static str; 10] = [
        "cover f1",
        "cover precision",
        "dtw",
        "endpoint err",
        "frechet",
        "hausdorff",
        "max orth dist",
        "mean orth dist",
        "median orth dist",
        "startpoint err",
    ];
}

pub fn full_report(
    pred: &Polyline,
    reference: &Polyline,
    config: &MetricConfig,
) -> Result<MetricReport> {
    check_dims(pred, reference)?;
    let (cost, len) = dtw_path(pred, reference);
    let cov = coverage(pred, reference, config.tau)?;
    let orth = orthogonal_distances(pred, reference)?;
    let (start, end) = endpoint_errors(pred, reference)?;
    Ok(MetricReport {
        cover_f1: cov.f1,
        cover_precision: cov.precision,
        dtw: if config.dtw_normalized {
            cost / len as f64
        } else {
            cost
        },
        endpoint_err: end,
        frechet: discrete_frechet(pred, reference)?,
        hausdorff: hausdorff(pred, reference)?,
        max_orth_dist: orth.max,
        mean_orth_dist: orth.mean,
        median_orth_dist: orth.median,
        startpoint_err: start,
        config: ReportConfig {
            tau: config.tau,
            dtw_normalization: if config.dtw_normalized {
                "path_length"
            } else {
                "none"
            }
            .into(),
            coverage_direction: "pred_to_ref".into(),
            dtw_raw: cost,
            cover_recall: cov.recall,
        },
    })
}
