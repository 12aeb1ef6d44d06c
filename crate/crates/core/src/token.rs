// SPDX-License-Identifier: Apache-2.0

//! Anchor-conditioned waypoint tokens.
//!
//! A token sequence is `[CLS, IMG, TXT, ANCHOR(u, v, d), B_1, …, B_N, EOS]`
//! where each block `B_i = (D_i, U_i, G_i, R_i)` holds a depth bin, integer
//! pixel coordinates, the gripper bit and three Euler-angle bins. Image and
//! text payloads are not carried; their markers only appear in the string
//! form. Quantization is uniform with clamping, dequantizing to bin centers.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    back_project, project, wrap_angle_half_open, CameraModel, Frame, Pose, TimedSample, Vec3,
};
use crate::keyframe::SparseTrajectory;

/// Bin index of `value` among `bins` equal-width bins over `[min, max]`;
/// out-of-range values clamp to the end bins.
pub fn quantize(value: f64, min: f64, max: f64, bins: u32) -> Result<u32> {
    check_range(min, max, bins)?;
    if value.is_nan() {
        return Err(Error::domain("cannot quantize NaN"));
    }
    let width = (max - min) / bins as f64;
    let idx = ((value - min) / width).floor();
    Ok(idx.clamp(0.0, (bins - 1) as f64) as u32)
}

/// Center of bin `index`.
pub fn dequantize(index: u32, min: f64, max: f64, bins: u32) -> Result<f64> {
    check_range(min, max, bins)?;
    if index >= bins {
        return Err(Error::domain(format!(
            "bin {index} out of range for {bins} bins"
        )));
    }
    let width = (max - min) / bins as f64;
    Ok(min + (index as f64 + 0.5) * width)
}

fn check_range(min: f64, max: f64, bins: u32) -> Result<()> {
    if bins < 2 {
        return Err(Error::domain(format!("need at least 2 bins, got {bins}")));
    }
    if !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err(Error::domain(format!("invalid range [{min}, {max}]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepthQuantization {
    pub min: f64,
    pub max: f64,
    pub bins: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PixelGrid {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleQuantization {
    /// Bins over `[-π, π)`.
    pub bins: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DepthMode {
    #[default]
    Absolute,
    /// Depth tokens encode `d − d_anchor` over `[-max_offset, max_offset]`.
    AnchorRelative { max_offset: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantizationSpec {
    pub depth: DepthQuantization,
    pub uv: PixelGrid,
    pub angle: AngleQuantization,
    #[serde(default)]
    pub depth_mode: DepthMode,
}

impl QuantizationSpec {
    /// Depth over [0.1 m, 3.0 m] and angles over [-π, π), 256 bins each, absolute depth.
    pub fn for_camera(cam: &CameraModel) -> Self {
        Self {
            depth: DepthQuantization {
                min: 0.1,
                max: 3.0,
                bins: 256,
            },
            uv: PixelGrid {
                width: cam.width(),
                height: cam.height(),
            },
            angle: AngleQuantization { bins: 256 },
            depth_mode: DepthMode::Absolute,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_range(self.depth.min, self.depth.max, self.depth.bins)?;
        check_range(-PI, PI, self.angle.bins)?;
        if self.uv.width == 0 || self.uv.height == 0 {
            return Err(Error::domain("pixel grid must be non-empty"));
        }
        if let DepthMode::AnchorRelative { max_offset } = self.depth_mode {
            if !(max_offset > 0.0) || !max_offset.is_finite() {
                return Err(Error::domain("anchor-relative max_offset must be positive"));
            }
        }
        Ok(())
    }

    /// `(min, max)` of the quantity the depth token encodes.
    fn depth_range(&self) -> (f64, f64) {
        match self.depth_mode {
            DepthMode::Absolute => (self.depth.min, self.depth.max),
            DepthMode::AnchorRelative { max_offset } => (-max_offset, max_offset),
        }
    }

    pub fn half_depth_bin(&self) -> f64 {
        let (lo, hi) = self.depth_range();
        (hi - lo) / (2.0 * self.depth.bins as f64)
    }

    fn check_camera(&self, cam: &CameraModel) -> Result<()> {
        if self.uv.width != cam.width() || self.uv.height != cam.height() {
            return Err(Error::Format(format!(
                "token grid {}x{} does not match camera {}x{}",
                self.uv.width,
                self.uv.height,
                cam.width(),
                cam.height()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthSource {
    Sensor,
    MonocularEstimator,
    PriorScale,
}

impl DepthSource {
    fn as_str(&self) -> &'static str {
        match self {
            DepthSource::Sensor => "sensor",
            DepthSource::MonocularEstimator => "monocular_estimator",
            DepthSource::PriorScale => "prior_scale",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "sensor" => Some(DepthSource::Sensor),
            "monocular_estimator" => Some(DepthSource::MonocularEstimator),
            "prior_scale" => Some(DepthSource::PriorScale),
            _ => None,
        }
    }
}

/// Image-plane anchor with externally supplied depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Anchor {
    pub u: f64,
    pub v: f64,
    pub d: f64,
    #[serde(rename = "source")]
    pub depth_source: DepthSource,
}

impl Anchor {
    pub fn new(u: f64, v: f64, d: f64, depth_source: DepthSource) -> Self {
        Self {
            u,
            v,
            d,
            depth_source,
        }
    }

    pub fn validate(&self, grid: &PixelGrid) -> Result<()> {
        if !(0.0..grid.width as f64).contains(&self.u)
            || !(0.0..grid.height as f64).contains(&self.v)
        {
            return Err(Error::domain(format!(
                "anchor ({}, {}) outside the {}x{} image",
                self.u, self.v, grid.width, grid.height
            )));
        }
        if !(self.d > 0.0) || !self.d.is_finite() {
            return Err(Error::domain(format!(
                "anchor depth must be positive, got {}",
                self.d
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TokenBlock {
    #[serde(rename = "d")]
    pub d_token: u32,
    #[serde(rename = "u")]
    pub u_token: u32,
    #[serde(rename = "v")]
    pub v_token: u32,
    #[serde(rename = "g")]
    pub g_token: u8,
    #[serde(rename = "r")]
    pub r_tokens: [u32; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    pub spec: QuantizationSpec,
    pub anchor: Anchor,
    pub blocks: Vec<TokenBlock>,
}

impl TokenSequence {
    pub fn new(spec: QuantizationSpec, anchor: Anchor, blocks: Vec<TokenBlock>) -> Result<Self> {
        let seq = Self {
            spec,
            anchor,
            blocks,
        };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        self.anchor.validate(&self.spec.uv)?;
        if self.blocks.is_empty() {
            return Err(Error::validation(
                "a token sequence needs at least one block",
            ));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            let bad = b.d_token >= self.spec.depth.bins
                || b.u_token >= self.spec.uv.width
                || b.v_token >= self.spec.uv.height
                || b.g_token > 1
                || b.r_tokens.iter().any(|&r| r >= self.spec.angle.bins);
            if bad {
                return Err(Error::validation(format!(
                    "block {i}: token index out of range"
                )));
            }
        }
        Ok(())
    }

    /// Flat marker form, e.g.
    /// `[CLS] [IMG] [TXT] [ANCHOR 320 240 0.8 sensor] [B 12 300 200 0 128 128 64] [EOS]`.
    pub fn to_token_string(&self) -> String {
        let a = &self.anchor;
        let mut s = format!(
            "[CLS] [IMG] [TXT] [ANCHOR {:?} {:?} {:?} {}]",
            a.u,
            a.v,
            a.d,
            a.depth_source.as_str()
        );
        for b in &self.blocks {
            let _ = write!(
                s,
                " [B {} {} {} {} {} {} {}]",
                b.d_token,
                b.u_token,
                b.v_token,
                b.g_token,
                b.r_tokens[0],
                b.r_tokens[1],
                b.r_tokens[2]
            );
        }
        s.push_str(" [EOS]");
        s
    }

    pub fn parse_token_string(text: &str, spec: QuantizationSpec) -> Result<Self> {
        let fmt = |m: &str| Error::Format(m.to_string());
        let mut groups = Vec::new();
        let mut rest = text.trim();
        while !rest.is_empty() {
            let open = rest.strip_prefix('[').ok_or_else(|| fmt("expected `[`"))?;
            let close = open.find(']').ok_or_else(|| fmt("unterminated token"))?;
            groups.push(&open[..close]);
            rest = open[close + 1..].trim_start();
        }
        let n = groups.len();
        if n < 6 || groups[..3] != ["CLS", "IMG", "TXT"] || groups[n - 1] != "EOS" {
            return Err(fmt("sequence must be CLS IMG TXT ANCHOR B+ EOS"));
        }
        let anchor_fields: Vec<&str> = groups[3].split_whitespace().collect();
        let anchor = match anchor_fields.as_slice() {
            ["ANCHOR", u, v, d, src] => Anchor::new(
                u.parse().map_err(|_| fmt("bad anchor u"))?,
                v.parse().map_err(|_| fmt("bad anchor v"))?,
                d.parse().map_err(|_| fmt("bad anchor d"))?,
                DepthSource::parse(src).ok_or_else(|| fmt("bad anchor depth source"))?,
            ),
            _ => return Err(fmt("malformed ANCHOR token")),
        };
        let blocks = groups[4..n - 1]
            .iter()
            .map(|g| {
                let f: Vec<&str> = g.split_whitespace().collect();
                if f.len() != 8 || f[0] != "B" {
                    return Err(fmt("malformed block token"));
                }
                let num = |s: &str| s.parse::<u32>().map_err(|_| fmt("bad block index"));
                let g = num(f[4])?;
                Ok(TokenBlock {
                    d_token: num(f[1])?,
                    u_token: num(f[2])?,
                    v_token: num(f[3])?,
                    g_token: u8::try_from(g).map_err(|_| fmt("bad gripper token"))?,
                    r_tokens: [num(f[5])?, num(f[6])?, num(f[7])?],
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(spec, anchor, blocks)
    }
}

/// Tokenizes a camera-frame sparse trajectory, one block per waypoint.
pub fn encode_sequence(
    sparse: &SparseTrajectory,
    anchor: Anchor,
    cam: &CameraModel,
    spec: &QuantizationSpec,
) -> Result<TokenSequence> {
    if sparse.frame() != Frame::Camera {
        return Err(Error::Format(
            "waypoints must be in the camera frame".into(),
        ));
    }
    spec.validate()?;
    spec.check_camera(cam)?;
    anchor.validate(&spec.uv)?;
    let (dmin, dmax) = spec.depth_range();
    let blocks = sparse
        .waypoints()
        .iter()
        .enumerate()
        .map(|(index, w)| {
            let (u, v, d) = project(&w.pose.position, cam)?;
            let (ur, vr) = (u.round(), v.round());
            if !(0.0..=(spec.uv.width - 1) as f64).contains(&ur)
                || !(0.0..=(spec.uv.height - 1) as f64).contains(&vr)
            {
                return Err(Error::OutOfFrame { index, u, v });
            }
            let depth_value = match spec.depth_mode {
                DepthMode::Absolute => d,
                DepthMode::AnchorRelative { .. } => d - anchor.d,
            };
            if !(dmin..=dmax).contains(&depth_value) {
                return Err(Error::DepthOutOfRange {
                    index,
                    depth: d,
                    min: dmin,
                    max: dmax,
                });
            }
            let e = w.pose.euler_xyz;
            let angle = |a: f64| quantize(wrap_angle_half_open(a), -PI, PI, spec.angle.bins);
            Ok(TokenBlock {
                d_token: quantize(depth_value, dmin, dmax, spec.depth.bins)?,
                u_token: ur as u32,
                v_token: vr as u32,
                g_token: w.gripper,
                r_tokens: [angle(e.x)?, angle(e.y)?, angle(e.z)?],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    TokenSequence::new(*spec, anchor, blocks)
}

/// Camera-frame waypoints of every block, stamped `0, 1, …, N−1`.
pub fn decode_waypoints(tokens: &TokenSequence, cam: &CameraModel) -> Result<Vec<TimedSample>> {
    tokens.validate()?;
    let spec = &tokens.spec;
    spec.check_camera(cam)?;
    let (dmin, dmax) = spec.depth_range();
    let offset = match spec.depth_mode {
        DepthMode::Absolute => 0.0,
        DepthMode::AnchorRelative { .. } => tokens.anchor.d,
    };
    tokens
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let d = offset + dequantize(b.d_token, dmin, dmax, spec.depth.bins)?;
            let p = back_project(b.u_token as f64, b.v_token as f64, d, cam)?;
            let angle = |r: u32| dequantize(r, -PI, PI, spec.angle.bins);
            let e = Vec3::new(
                angle(b.r_tokens[0])?,
                angle(b.r_tokens[1])?,
                angle(b.r_tokens[2])?,
            );
            Ok(TimedSample::new(i as f64, Pose::new(p, e), b.g_token))
        })
        .collect()
}

/// Decodes into a camera-frame sparse trajectory with abstract unit time
/// steps; the first and last waypoints are flagged as keyframes.
pub fn decode_sequence(tokens: &TokenSequence, cam: &CameraModel) -> Result<SparseTrajectory> {
    let waypoints = decode_waypoints(tokens, cam)?;
    let n = waypoints.len();
    if n < 2 {
        return Err(Error::InsufficientData(
            "a sparse trajectory needs at least 2 token blocks".into(),
        ));
    }
    let flags = (0..n).map(|i| i == 0 || i == n - 1).collect();
    SparseTrajectory::new(waypoints, flags, Frame::Camera)
}

/// Upper bound on the decoded position error of a point at pixel `(u, v)`
/// and depth `d`: `(d + δ)·‖K⁻¹‖_F·(√2/2) + δ·‖K⁻¹[u, v, 1]ᵀ‖` with `δ` the
/// half depth-bin width. The first term covers rounding both pixel
/// coordinates, the second the depth bin.
pub fn quantization_error_bound(
    u: f64,
    v: f64,
    d: f64,
    cam: &CameraModel,
    spec: &QuantizationSpec,
) -> f64 {
    let half_bin = spec.half_depth_bin();
    let kinv = cam.intrinsics_inv();
    let ray = kinv * Vec3::new(u, v, 1.0);
    (d + half_bin) * kinv.norm() * std::f64::consts::FRAC_1_SQRT_2 + half_bin * ray.norm()
}

/// Metric depth of an object of known size from its apparent size in pixels,
/// `d = f̄ · metric_extent / pixel_extent` with `f̄` the mean focal length.
pub fn anchor_depth_from_prior(
    u: f64,
    v: f64,
    object_pixel_extent: f64,
    object_metric_extent: f64,
    cam: &CameraModel,
) -> Result<f64> {
    if !u.is_finite() || !v.is_finite() {
        return Err(Error::domain("anchor pixel must be finite"));
    }
    if !(object_pixel_extent > 0.0) || !(object_metric_extent > 0.0) {
        return Err(Error::domain("object extents must be positive"));
    }
    Ok(cam.mean_focal_length() * object_metric_extent / object_pixel_extent)
}
