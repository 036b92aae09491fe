//! `pcseg`: point-cloud instance segmentation pipeline driver.
//!
//! Subcommands: `synth` (generate scenes), `segment` (run the pipeline),
//! `eval` (score predictions), `ablate` (radius/noise sweeps), `bench`
//! (stage timings by scene size).
//!
//! Exit codes: 0 success, 1 validation error, 2 I/O error, 3 internal
//! invariant violation.

mod commands;
mod input;
mod manifest;
mod util;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use pcseg_core::{CloudFormat, ClusterSpace, Error};

use commands::{ablate, bench, eval, segment, synth};
use manifest::PredictorKind;

#[derive(Parser)]
#[command(name = "pcseg", version, about = "Point-cloud instance segmentation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn parse_format(s: &str) -> Result<CloudFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_space(s: &str) -> Result<ClusterSpace, String> {
    match s {
        "shifted" => Ok(ClusterSpace::Shifted),
        "original" => Ok(ClusterSpace::Original),
        other => Err(format!("unknown space {other:?}; expected shifted or original")),
    }
}

fn parse_predictor(s: &str) -> Result<PredictorKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic scenes from a scene-spec JSON file.
    Synth {
        /// SceneSpec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory (one subdirectory per scene).
        #[arg(long)]
        out: PathBuf,
        /// Number of scenes; per-scene seeds derive from the spec seed.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Cloud file format.
        #[arg(long, default_value = "columnar", value_parser = parse_format)]
        format: CloudFormat,
        /// NoiseSpec JSON applied to the simulated predictions.
        #[arg(long)]
        noise: Option<PathBuf>,
    },
    /// Segment one cloud file into instance predictions.
    Segment {
        /// Re-run from a previously written manifest (replaces the input
        /// flags below).
        #[arg(long, conflicts_with_all = ["cloud", "config", "gt", "noise"])]
        manifest: Option<PathBuf>,
        /// Input cloud file.
        #[arg(long, required_unless_present = "manifest")]
        cloud: Option<PathBuf>,
        /// Input format.
        #[arg(long, default_value = "columnar", value_parser = parse_format)]
        format: CloudFormat,
        /// Ground-truth instance JSON (required by oracle predictors).
        #[arg(long)]
        gt: Option<PathBuf>,
        /// Mask/score predictor.
        #[arg(long, default_value = "exact", value_parser = parse_predictor)]
        predictor: PredictorKind,
        /// NoiseSpec JSON for the noisy predictor.
        #[arg(long)]
        noise: Option<PathBuf>,
        /// PipelineConfig JSON; flags below override individual fields.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Grouping radius schedule, e.g. 0.01,0.03,0.05 (meters).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        radii: Option<Vec<f64>>,
        /// Minimum merged group size.
        #[arg(long)]
        min_group_size: Option<usize>,
        /// NMS IoU threshold.
        #[arg(long)]
        nms_iou: Option<f64>,
        /// Clustering coordinate space.
        #[arg(long, value_parser = parse_space)]
        space: Option<ClusterSpace>,
        /// RNG seed recorded in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Voxel-downsample the cloud at this size before segmenting, m.
        #[arg(long)]
        voxel: Option<f64>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate predictions against ground truth.
    Eval {
        /// Prediction JSON file.
        #[arg(long)]
        pred: PathBuf,
        /// Ground-truth instance JSON file.
        #[arg(long)]
        gt: PathBuf,
        /// Also write the report JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-class CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Sweep radius subsets and noise settings over a scene batch.
    Ablate {
        /// AblationSpec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// Base PipelineConfig JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory for ablation.csv and the manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Time pipeline stages on synthetic scenes of the given sizes.
    Bench {
        /// Scene sizes in points, e.g. 1000,10000,250000.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        sizes: Vec<usize>,
        /// PipelineConfig JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Pipeline repetitions per size (timings are averaged).
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Scene seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn dispatch(command: Command) -> pcseg_core::Result<()> {
    match command {
        Command::Synth {
            spec,
            out,
            count,
            format,
            noise,
        } => synth::run(&synth::SynthArgs {
            spec,
            out,
            count,
            format,
            noise,
        }),
        Command::Segment {
            manifest,
            cloud,
            format,
            gt,
            predictor,
            noise,
            config,
            radii,
            min_group_size,
            nms_iou,
            space,
            seed,
            voxel,
            out,
        } => segment::run(&segment::SegmentArgs {
            manifest,
            cloud,
            format,
            gt,
            predictor,
            noise,
            config,
            radii,
            min_group_size,
            nms_iou,
            space,
            seed,
            voxel,
            out,
        }),
        Command::Eval { pred, gt, out, csv } => eval::run(&eval::EvalArgs { pred, gt, out, csv }),
        Command::Ablate { spec, config, out } => {
            ablate::run(&ablate::AblateArgs { spec, config, out })
        }
        Command::Bench {
            sizes,
            config,
            repeats,
            seed,
            out,
        } => bench::run(&bench::BenchArgs {
            sizes,
            config,
            repeats,
            seed,
            out,
        }),
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => 2,
        Error::Internal(_) => 3,
        _ => 1,
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
        dispatch(cli.command)
    }));
    let code = match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(_) => 3,
    };
    std::process::exit(code);
}
