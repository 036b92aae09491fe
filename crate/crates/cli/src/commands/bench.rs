//! `bench`: time the pipeline stages over scenes of increasing size.

use std::fmt::Write as _;
use std::path::PathBuf;

use pcseg_core::{
    generate_scene, run_pipeline, simulate_predictions, Config64, Error, NoiseSpec,
    OracleExactPredictor, Result, SceneSpec,
};

use crate::util::{timed, write_atomic};

pub struct BenchArgs {
    pub sizes: Vec<usize>,
    pub config: Option<PathBuf>,
    pub repeats: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

/// A packing-friendly scene spec targeting roughly `points` points at a
/// density where the default radius schedule does real work (spacing on
/// the order of a 2 cm voxel grid).
pub fn bench_scene_spec(points: usize, seed: u64) -> SceneSpec {
    let instances = ((points as f64).cbrt().round() as usize).clamp(1, 80);
    let per_instance = (points / instances).max(1);
    let per_axis = (instances as f64).cbrt().ceil();
    let extent = 0.4;
    let gap = 0.1;
    let side = per_axis * (extent + gap) * 1.7 + 1.0;
    SceneSpec {
        num_instances: instances,
        classes: vec![0, 1, 2, 3, 4],
        shape: pcseg_core::ShapeKind::Box,
        points_per_instance: (per_instance, per_instance),
        instance_extent: (extent, extent),
        min_gap: gap,
        intra_spacing: 0.02,
        bounds: ([0.0; 3], [side, side, side]),
        seed,
    }
}

pub fn run(args: &BenchArgs) -> Result<()> {
    if args.sizes.contains(&0) {
        return Err(Error::InvalidInput("sizes must be positive".into()));
    }
    if args.repeats == 0 {
        return Err(Error::InvalidInput("repeats must be >= 1".into()));
    }
    let config: Config64 = match &args.config {
        Some(path) => serde_json::from_reader(std::fs::File::open(path)?)
            .map_err(|e| Error::InvalidConfig(format!("config file: {e}")))?,
        None => {
            // Offsets are exact in the benchmark, so shifted-space grouping
            // would collapse every instance to a point; group on raw
            // positions to exercise the spatial index at scale.
            Config64 {
                cluster_space: pcseg_core::ClusterSpace::Original,
                ..Config64::default()
            }
        }
    };
    config.validate()?;

    let mut csv = String::from(
        "points,gen_ms,shift_ms,group_ms,mask_ms,nms_ms,total_ms,peak_round_groups,merged_groups,predictions\n",
    );
    for &size in &args.sizes {
        let spec = bench_scene_spec(size, args.seed);
        let (gen_out, gen_ms) = timed(|| -> Result<_> {
            let (cloud, gts) = generate_scene::<f64>(&spec)?;
            let sim = simulate_predictions(&cloud, &gts, &NoiseSpec::default())?;
            Ok((sim, gts))
        });
        let (sim, gts) = gen_out?;
        let predictor = OracleExactPredictor::new(gts, config.clone());

        let mut shift = 0.0;
        let mut group = 0.0;
        let mut mask = 0.0;
        let mut nms = 0.0;
        let mut last = None;
        for _ in 0..args.repeats {
            let run = run_pipeline(&sim, &predictor, &config)?;
            shift += run.timings.shift_ms;
            group += run.timings.group_ms;
            mask += run.timings.mask_ms;
            nms += run.timings.nms_ms;
            last = Some(run);
        }
        let run = last.expect("repeats >= 1");
        let k = args.repeats as f64;
        let (shift, group, mask, nms) = (shift / k, group / k, mask / k, nms / k);
        writeln!(
            csv,
            "{},{gen_ms:.3},{shift:.3},{group:.3},{mask:.3},{nms:.3},{:.3},{},{},{}",
            sim.len(),
            shift + group + mask + nms,
            run.peak_round_groups(),
            run.grouping.merged.len(),
            run.predictions.len(),
        )
        .expect("write to string");
    }

    print!("{csv}");
    if let Some(out) = &args.out {
        write_atomic(out, csv.as_bytes())?;
    }
    Ok(())
}
