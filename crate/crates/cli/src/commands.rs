// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::{json, Map, Value};
use trajkit_core::io::{
    bundle_to_json, load_bundle, load_json, load_tokens, log_to_json, metrics_csv, parse_scenario,
    plot_data_csv, read_text, samples_csv, save_json, save_tokens, write_atomic, Bundle,
};
use trajkit_core::keyframe::{insert_sub_keyframes, select_keyframes};
use trajkit_core::metrics::full_report;
use trajkit_core::sim;
use trajkit_core::spline::{fit_with, resample, KnotTiming};
use trajkit_core::token::{decode_sequence, encode_sequence, DepthSource};
use trajkit_core::{
    Anchor, CameraModel, ComponentWeights, Error, Frame, MetricConfig, MetricReport, Polyline,
    QuantizationSpec, Result,
};

#[derive(Debug, Parser)]
#[command(
    name = "trajkit",
    version,
    about = "End-effector trajectory sparsification, tokens, splines and metrics"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Dense bundle → sparse bundle of keyframes and sub-keyframes.
    Keyframes(KeyframesArgs),
    /// Sparse bundle → token file.
    Tokenize(TokenizeArgs),
    /// Token file or sparse bundle → dense world-frame bundle.
    Detokenize(DetokenizeArgs),
    /// Similarity report of a predicted trajectory against a reference.
    Metrics(MetricsArgs),
    /// Closed-loop simulation of a scenario file.
    Simulate(SimulateArgs),
    /// CSV with t, x, y, z, speed columns for plotting.
    PlotData(PlotDataArgs),
}

#[derive(Debug, Args)]
struct KeyframesArgs {
    #[arg(long)]
    input: PathBuf,
    /// Acceleration threshold on the weighted second-difference norm.
    #[arg(long)]
    alpha: f64,
    /// Six weights for x, y, z, rx, ry, rz.
    #[arg(long, value_delimiter = ',', num_args = 6, default_values_t = [1.0; 6])]
    weights: Vec<f64>,
    /// Sub-keyframes inserted between consecutive keyframes.
    #[arg(long, default_value_t = 10)]
    subframes: usize,
    #[arg(long)]
    out: PathBuf,
    /// Also write the waypoints as a flat CSV table.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TokenizeArgs {
    #[arg(long)]
    input: PathBuf,
    /// Bundle supplying the camera; defaults to the input's own camera.
    #[arg(long)]
    camera_from: Option<PathBuf>,
    /// QuantizationSpec JSON; defaults to 256 depth bins over [0.1, 3.0] m and 256 angle bins.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Anchor pixel and depth: `--anchor U V D`.
    #[arg(long, value_delimiter = ',', num_args = 3, required = true)]
    anchor: Vec<f64>,
    #[arg(long, value_enum, default_value_t = DepthSourceArg::Sensor)]
    depth_source: DepthSourceArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum DepthSourceArg {
    Sensor,
    MonocularEstimator,
    PriorScale,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TimingArg {
    Recorded,
    Uniform,
    Chord,
    Centripetal,
}

#[derive(Debug, Args)]
struct DetokenizeArgs {
    /// Token file.
    #[arg(long, conflicts_with = "sparse", required_unless_present = "sparse")]
    input: Option<PathBuf>,
    /// Sparse bundle.
    #[arg(long)]
    sparse: Option<PathBuf>,
    /// Bundle supplying the camera (required for token input, optional for sparse input).
    #[arg(long)]
    camera_from: Option<PathBuf>,
    /// Output sample rate in Hz.
    #[arg(long)]
    rate: f64,
    /// Knot timing; token input always uses uniform spacing.
    #[arg(long, value_enum, default_value_t = TimingArg::Recorded)]
    timing: TimingArg,
    /// Seconds per waypoint interval for uniform timing.
    #[arg(long, default_value_t = 1.0)]
    segment_duration: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct MetricsArgs {
    /// Predicted bundle, or a directory of bundles paired by file name with `--ref`.
    #[arg(long)]
    pred: PathBuf,
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Coverage threshold in meters.
    #[arg(long, default_value_t = 0.05)]
    tau: f64,
    /// Report the raw DTW sum instead of the path-length average.
    #[arg(long)]
    raw_dtw: bool,
    #[arg(long)]
    out: PathBuf,
    /// Also write `metric,value` rows (single pair only).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the commanded samples as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlotDataArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Keyframes(a) => keyframes(a),
        Command::Tokenize(a) => tokenize(a),
        Command::Detokenize(a) => detokenize(a),
        Command::Metrics(a) => metrics(a),
        Command::Simulate(a) => simulate(a),
        Command::PlotData(a) => plot_data(a),
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn keyframes(a: KeyframesArgs) -> Result<()> {
    let input = load_bundle(&a.input)?;
    let weights = ComponentWeights(
        a.weights
            .try_into()
            .map_err(|_| invalid("expected six weights"))?,
    );
    let keys = select_keyframes(&input.trajectory, a.alpha, &weights)?;
    let sparse = insert_sub_keyframes(&input.trajectory, &keys, a.subframes + 2)?;
    let mut out = Bundle::from_sparse(&sparse, input.camera);
    out.meta = input.meta;
    let text = bundle_to_json(&out)?;
    if let Some(csv) = &a.csv {
        write_atomic(
            csv,
            samples_csv(&out.trajectory, out.keyframe_flags.as_deref()).as_bytes(),
        )?;
    }
    write_atomic(&a.out, text.as_bytes())
}

fn camera_of(own: Option<CameraModel>, from: Option<&Path>) -> Result<Option<CameraModel>> {
    match from {
        Some(path) => {
            let cam = load_bundle(path)?.camera;
            if cam.is_none() {
                return Err(invalid(format!("{} has no camera", path.display())));
            }
            Ok(cam)
        }
        None => Ok(own),
    }
}

fn tokenize(a: TokenizeArgs) -> Result<()> {
    let input = load_bundle(&a.input)?;
    let cam = camera_of(input.camera.clone(), a.camera_from.as_deref())?
        .ok_or_else(|| invalid("no camera: pass --camera-from or use a bundle with a camera"))?;
    let spec = match &a.spec {
        Some(path) => {
            let spec: QuantizationSpec = load_json(path)?;
            spec.validate()?;
            spec
        }
        None => QuantizationSpec::for_camera(&cam),
    };
    let sparse = input.to_sparse()?.to_frame(Frame::Camera, &cam)?;
    let source = match a.depth_source {
        DepthSourceArg::Sensor => DepthSource::Sensor,
        DepthSourceArg::MonocularEstimator => DepthSource::MonocularEstimator,
        DepthSourceArg::PriorScale => DepthSource::PriorScale,
    };
    let anchor = Anchor::new(a.anchor[0], a.anchor[1], a.anchor[2], source);
    let tokens = encode_sequence(&sparse, anchor, &cam, &spec)?;
    save_tokens(&tokens, &a.out)
}

fn detokenize(a: DetokenizeArgs) -> Result<()> {
    let uniform = KnotTiming::Uniform {
        segment_duration: a.segment_duration,
    };
    let (sparse, cam, timing) = match (&a.input, &a.sparse) {
        (Some(tokens), _) => {
            let tokens = load_tokens(tokens)?;
            let cam = camera_of(None, a.camera_from.as_deref())?
                .ok_or_else(|| invalid("token input needs --camera-from"))?;
            (decode_sequence(&tokens, &cam)?, Some(cam), uniform)
        }
        (None, Some(path)) => {
            let b = load_bundle(path)?;
            let cam = camera_of(b.camera.clone(), a.camera_from.as_deref())?;
            let timing = match a.timing {
                TimingArg::Recorded => KnotTiming::Recorded,
                TimingArg::Uniform => uniform,
                TimingArg::Chord => KnotTiming::Chord,
                TimingArg::Centripetal => KnotTiming::Centripetal,
            };
            (b.to_sparse()?, cam, timing)
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let world = match (sparse.frame(), &cam) {
        (Frame::World, _) => sparse,
        (Frame::Camera, Some(cam)) => sparse.to_frame(Frame::World, cam)?,
        (Frame::Camera, None) => return Err(invalid("camera-frame input needs a camera")),
    };
    let dense = resample(&fit_with(&world, timing)?, a.rate)?;
    let out = Bundle::from_dense(dense, cam);
    let text = bundle_to_json(&out)?;
    if let Some(csv) = &a.csv {
        write_atomic(csv, samples_csv(&out.trajectory, None).as_bytes())?;
    }
    write_atomic(&a.out, text.as_bytes())
}

fn polyline(path: &Path) -> Result<Polyline> {
    Polyline::new(load_bundle(path)?.trajectory.positions().collect())
}

fn report_pair(pred: &Path, reference: &Path, cfg: &MetricConfig) -> Result<MetricReport> {
    full_report(&polyline(pred)?, &polyline(reference)?, cfg)
}

fn json_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            let name = path
                .file_name()
                .expect("listed file")
                .to_string_lossy()
                .into_owned();
            out.insert(name, path);
        }
    }
    Ok(out)
}

fn metrics(a: MetricsArgs) -> Result<()> {
    let cfg = MetricConfig {
        tau: a.tau,
        dtw_normalized: !a.raw_dtw,
    };
    if cfg.tau.is_nan() || cfg.tau <= 0.0 || !cfg.tau.is_finite() {
        return Err(invalid("--tau must be positive"));
    }
    if !a.pred.is_dir() && !a.reference.is_dir() {
        let report = report_pair(&a.pred, &a.reference, &cfg)?;
        if let Some(csv) = &a.csv {
            write_atomic(csv, metrics_csv(&report).as_bytes())?;
        }
        return save_json(&report, &a.out);
    }
    if !(a.pred.is_dir() && a.reference.is_dir()) {
        return Err(invalid(
            "--pred and --ref must both be files or both be directories",
        ));
    }
    if a.csv.is_some() {
        return Err(invalid("--csv applies to a single pair only"));
    }
    let (pred, reference) = (json_files(&a.pred)?, json_files(&a.reference)?);
    if pred.keys().ne(reference.keys()) {
        return Err(invalid(
            "prediction and reference directories hold different file names",
        ));
    }
    if pred.is_empty() {
        return Err(invalid("no .json bundles found"));
    }
    let names: Vec<&String> = pred.keys().collect();
    let reports = names
        .par_iter()
        .map(|n| report_pair(&pred[*n], &reference[*n], &cfg))
        .collect::<Result<Vec<_>>>()?;

    let values: Vec<Value> = reports
        .iter()
        .map(|r| serde_json::to_value(r).expect("report serializes"))
        .collect();
    let mut mean = Map::new();
    for row in MetricReport::ROW_NAMES {
        let sum: f64 = values
            .iter()
            .map(|v| v[row].as_f64().expect("numeric row"))
            .sum();
        mean.insert(row.to_string(), json!(sum / values.len() as f64));
    }
    let pairs: Map<String, Value> = names.iter().map(|n| n.to_string()).zip(values).collect();
    let summary = json!({
        "count": reports.len(),
        "mean": mean,
        "pairs": pairs,
    });
    save_json(&summary, &a.out)
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let scenario = parse_scenario(&read_text(&a.scenario)?, &a.scenario.display().to_string())?;
    let log = sim::run(&scenario)?;
    if let Some(csv) = &a.csv {
        write_atomic(csv, samples_csv(&log.commanded, None).as_bytes())?;
    }
    write_atomic(&a.out, log_to_json(&log).as_bytes())
}

fn plot_data(a: PlotDataArgs) -> Result<()> {
    let b = load_bundle(&a.input)?;
    write_atomic(&a.out, plot_data_csv(&b.trajectory).as_bytes())
}
