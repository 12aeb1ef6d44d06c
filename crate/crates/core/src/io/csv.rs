// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use crate::geometry::DenseTrajectory;
use crate::metrics::MetricReport;

/// `t,x,y,z,speed`, one row per sample. Speed is the central difference
/// (one-sided at the ends).
pub fn plot_data_csv(traj: &DenseTrajectory) -> String {
    let s = traj.samples();
    let n = s.len();
    let mut out = String::from("t,x,y,z,speed\n");
    for i in 0..n {
        let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
        let speed = (s[b].pose.position - s[a].pose.position).norm() / (s[b].t - s[a].t);
        let p = s[i].pose.position;
        let _ = writeln!(out, "{},{},{},{},{}", s[i].t, p.x, p.y, p.z, speed);
    }
    out
}

/// Flat sample table, with a keyframe column when flags are given.
pub fn samples_csv(traj: &DenseTrajectory, keyframes: Option<&[bool]>) -> String {
    let mut out = String::from("t,x,y,z,rx,ry,rz,gripper");
    out.push_str(if keyframes.is_some() {
        ",keyframe\n"
    } else {
        "\n"
    });
    for (i, s) in traj.samples().iter().enumerate() {
        let (p, e) = (s.pose.position, s.pose.euler_xyz);
        let _ = write!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.t, p.x, p.y, p.z, e.x, e.y, e.z, s.gripper
        );
        if let Some(k) = keyframes {
            let _ = write!(out, ",{}", u8::from(k[i]));
        }
        out.push('\n');
    }
    out
}

pub fn metrics_csv(report: &MetricReport) -> String {
    let rows = [
        report.cover_f1,
        report.cover_precision,
        report.dtw,
        report.endpoint_err,
        report.frechet,
        report.hausdorff,
        report.max_orth_dist,
        report.mean_orth_dist,
        report.median_orth_dist,
        report.startpoint_err,
    ];
    let mut out = String::from("metric,value\n");
    for (name, v) in MetricReport::ROW_NAMES.iter().zip(rows) {
        let _ = writeln!(out, "{name},{v}");
    }
    let _ = writeln!(out, "dtw raw,{}", report.config.dtw_raw);
    let _ = writeln!(out, "cover recall,{}", report.config.cover_recall);
    out
}
