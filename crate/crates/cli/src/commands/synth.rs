//! `synth`: generate a batch of synthetic scenes with simulated
//! predictions baked in.
//!
//! Each scene directory holds a columnar (or PLY) cloud whose `sem`,
//! `offx..offz`, and `f*` columns carry the simulated backbone outputs
//! (noiseless by default, corrupted per `--noise`), plus the ground-truth
//! instances as JSON. The pair feeds straight into `segment` and `eval`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use pcseg_core::{
    derive_seed, generate_scene, save_cloud, simulate_predictions, CloudFormat, Error, NoiseSpec,
    Result, SceneSpec,
};

use crate::manifest::{SceneEntry, SynthManifest};
use crate::util::{timed, to_json_bytes, write_atomic};

pub struct SynthArgs {
    pub spec: PathBuf,
    pub out: PathBuf,
    pub count: usize,
    pub format: CloudFormat,
    pub noise: Option<PathBuf>,
}

pub fn run(args: &SynthArgs) -> Result<()> {
    let spec: SceneSpec = serde_json::from_reader(std::fs::File::open(&args.spec)?)
        .map_err(|e| Error::InvalidConfig(format!("scene spec: {e}")))?;
    spec.validate()?;
    let noise: NoiseSpec = match &args.noise {
        Some(path) => serde_json::from_reader(std::fs::File::open(path)?)
            .map_err(|e| Error::InvalidConfig(format!("noise spec: {e}")))?,
        None => NoiseSpec::default(),
    };
    noise.validate()?;

    std::fs::create_dir_all(&args.out)?;
    let mut scenes = Vec::with_capacity(args.count);
    let (result, total_ms) = timed(|| -> Result<()> {
        for i in 0..args.count {
            let scene_spec = SceneSpec {
                seed: derive_seed(spec.seed, i as u64),
                ..spec.clone()
            };
            let scene_noise = NoiseSpec {
                seed: derive_seed(noise.seed, i as u64),
                ..noise.clone()
            };
            let (cloud, gts) = generate_scene::<f64>(&scene_spec)?;
            let sim = simulate_predictions(&cloud, &gts, &scene_noise)?;
            let dir = args.out.join(format!("scene_{i:04}"));
            std::fs::create_dir_all(&dir)?;
            save_cloud(dir.join(cloud_file_name(args.format)), &sim, args.format)?;
            write_atomic(&dir.join("gt.json"), &to_json_bytes(&gts)?)?;
            scenes.push(SceneEntry {
                dir: format!("scene_{i:04}"),
                seed: scene_spec.seed,
                num_points: cloud.len(),
                num_instances: gts.len(),
            });
        }
        Ok(())
    });
    result?;

    let manifest = SynthManifest {
        command: "synth".into(),
        spec,
        noise,
        count: args.count,
        scenes,
        timings_ms: BTreeMap::from([("generate".to_string(), total_ms)]),
    };
    write_atomic(&args.out.join("manifest.json"), &to_json_bytes(&manifest)?)?;
    println!("wrote {} scene(s) under {}", args.count, args.out.display());
    Ok(())
}

pub fn cloud_file_name(format: CloudFormat) -> &'static str {
    match format {
        CloudFormat::Columnar => "cloud.txt",
        CloudFormat::PlyAscii => "cloud.ply",
    }
}
