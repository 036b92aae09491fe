//! `segment`: run the segmentation pipeline on one cloud file.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pcseg_core::{
    assignment_csv, load_cloud, run_pipeline, voxel_downsample, CloudFormat, Config64,
    ConstantPredictor, Error, Gt64, MaskPredictor, NoiseSpec, OracleExactPredictor,
    OracleNoisyPredictor, Result,
};

use crate::manifest::{PredictorKind, SegmentManifest};
use crate::util::{timed, to_json_bytes, write_atomic};

pub struct SegmentArgs {
    /// When set, every input setting is read from this manifest instead of
    /// the flags.
    pub manifest: Option<PathBuf>,
    pub cloud: Option<PathBuf>,
    pub format: CloudFormat,
    pub gt: Option<PathBuf>,
    pub predictor: PredictorKind,
    pub noise: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub radii: Option<Vec<f64>>,
    pub min_group_size: Option<usize>,
    pub nms_iou: Option<f64>,
    pub space: Option<pcseg_core::ClusterSpace>,
    pub seed: Option<u64>,
    pub voxel: Option<f64>,
    pub out: PathBuf,
}

/// The resolved settings a run actually uses.
struct Resolved {
    cloud: PathBuf,
    format: CloudFormat,
    gt: Option<PathBuf>,
    predictor: PredictorKind,
    noise: Option<NoiseSpec>,
    config: Config64,
    voxel: Option<f64>,
}

fn resolve(args: &SegmentArgs) -> Result<Resolved> {
    if let Some(path) = &args.manifest {
        let m: SegmentManifest = serde_json::from_reader(std::fs::File::open(path)?)
            .map_err(|e| Error::InvalidConfig(format!("manifest: {e}")))?;
        return Ok(Resolved {
            cloud: m.cloud,
            format: m.format,
            gt: m.gt,
            predictor: m.predictor,
            noise: m.noise,
            config: m.config,
            voxel: m.voxel,
        });
    }

    let cloud = args
        .cloud
        .clone()
        .ok_or_else(|| Error::InvalidInput("either --cloud or --manifest is required".into()))?;
    let mut config: Config64 = match &args.config {
        Some(path) => serde_json::from_reader(std::fs::File::open(path)?)
            .map_err(|e| Error::InvalidConfig(format!("config file: {e}")))?,
        None => Config64::default(),
    };
    if let Some(radii) = &args.radii {
        config.radii = radii.clone();
    }
    if let Some(v) = args.min_group_size {
        config.min_group_size = v;
    }
    if let Some(v) = args.nms_iou {
        config.nms_iou = v;
    }
    if let Some(v) = args.space {
        config.cluster_space = v;
    }
    if let Some(v) = args.seed {
        config.rng_seed = v;
    }
    let noise: Option<NoiseSpec> = match &args.noise {
        Some(path) => Some(
            serde_json::from_reader(std::fs::File::open(path)?)
                .map_err(|e| Error::InvalidConfig(format!("noise spec: {e}")))?,
        ),
        None => None,
    };
    Ok(Resolved {
        cloud,
        format: args.format,
        gt: args.gt.clone(),
        predictor: args.predictor,
        noise,
        config,
        voxel: args.voxel,
    })
}

fn build_predictor(
    kind: PredictorKind,
    gt_path: Option<&PathBuf>,
    noise: Option<&NoiseSpec>,
    config: &Config64,
) -> Result<(Box<dyn MaskPredictor<f64>>, Vec<Gt64>)> {
    let load_gt = || -> Result<Vec<Gt64>> {
        let path = gt_path.ok_or_else(|| {
            Error::InvalidInput("--gt is required for the exact and noisy predictors".into())
        })?;
        crate::input::load_gts(path)
    };
    match kind {
        PredictorKind::Exact => {
            let gts = load_gt()?;
            Ok((
                Box::new(OracleExactPredictor::new(gts.clone(), config.clone())),
                gts,
            ))
        }
        PredictorKind::Noisy => {
            let gts = load_gt()?;
            // Without an explicit noise spec the flip rate is zero and the
            // seed falls back to the pipeline seed.
            let noise = noise.cloned().unwrap_or(NoiseSpec {
                seed: config.rng_seed,
                ..NoiseSpec::default()
            });
            noise.validate()?;
            Ok((
                Box::new(OracleNoisyPredictor::new(
                    gts.clone(),
                    config.clone(),
                    noise.mask_flip_rate,
                    noise.seed,
                )?),
                gts,
            ))
        }
        PredictorKind::Constant => Ok((Box::new(ConstantPredictor), Vec::new())),
    }
}

pub fn run(args: &SegmentArgs) -> Result<()> {
    let resolved = resolve(args)?;
    resolved.config.validate()?;

    let (cloud, load_ms) = timed(|| load_cloud::<f64>(&resolved.cloud, resolved.format));
    let mut cloud = cloud?;
    if let Some(voxel) = resolved.voxel {
        cloud = voxel_downsample(&cloud, voxel)?;
    }
    let (predictor, _gts) = build_predictor(
        resolved.predictor,
        resolved.gt.as_ref(),
        resolved.noise.as_ref(),
        &resolved.config,
    )?;

    let run = run_pipeline(&cloud, predictor.as_ref(), &resolved.config)?;

    std::fs::create_dir_all(&args.out)?;
    let (write_result, write_ms) = timed(|| -> Result<()> {
        write_atomic(
            &args.out.join("predictions.json"),
            &to_json_bytes(&run.predictions)?,
        )?;
        write_atomic(
            &args.out.join("assignment.csv"),
            assignment_csv(&run.predictions, cloud.len()).as_bytes(),
        )?;
        Ok(())
    });
    write_result?;

    let mut timings = BTreeMap::new();
    timings.insert("load".to_string(), load_ms);
    timings.insert("shift".to_string(), run.timings.shift_ms);
    timings.insert("group".to_string(), run.timings.group_ms);
    timings.insert("mask".to_string(), run.timings.mask_ms);
    timings.insert("nms".to_string(), run.timings.nms_ms);
    timings.insert("write".to_string(), write_ms);

    let manifest = SegmentManifest {
        command: "segment".into(),
        cloud: resolved.cloud,
        format: resolved.format,
        gt: resolved.gt,
        predictor: resolved.predictor,
        noise: resolved.noise,
        config: resolved.config,
        voxel: resolved.voxel,
        outputs: BTreeMap::from([
            ("predictions".to_string(), "predictions.json".to_string()),
            ("assignment".to_string(), "assignment.csv".to_string()),
        ]),
        timings_ms: timings,
    };
    write_atomic(&args.out.join("manifest.json"), &to_json_bytes(&manifest)?)?;

    println!(
        "{} predictions from {} merged group(s); outputs under {}",
        run.predictions.len(),
        run.grouping.merged.len(),
        args.out.display()
    );
    Ok(())
}
