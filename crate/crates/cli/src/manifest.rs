//! Run manifests: every artifact directory carries a JSON description of
//! the inputs, configuration, and stage timings that produced it, so a run
//! can be reproduced from the manifest alone.

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pcseg_core::{CloudFormat, Config64, NoiseSpec, SceneSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictorKind {
    Exact,
    Noisy,
    Constant,
}

impl std::str::FromStr for PredictorKind {
    type Err = pcseg_core::Error;
    fn from_str(s: &str) -> pcseg_core::Result<Self> {
        match s {
            "exact" => Ok(Self::Exact),
            "noisy" => Ok(Self::Noisy),
            "constant" => Ok(Self::Constant),
            other => Err(pcseg_core::Error::InvalidInput(format!(
                "unknown predictor {other:?}; expected exact, noisy, or constant"
            ))),
        }
    }
}

/// Manifest of one `segment` run. Re-running `segment --manifest` with the
/// same inputs reproduces the prediction files byte for byte; timings are
/// informational only.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentManifest {
    pub command: String,
    pub cloud: PathBuf,
    pub format: CloudFormat,
    pub gt: Option<PathBuf>,
    pub predictor: PredictorKind,
    pub noise: Option<NoiseSpec>,
    pub config: Config64,
    /// Optional voxel-downsampling size applied after load, meters.
    pub voxel: Option<f64>,
    pub outputs: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, f64>,
}

/// Manifest of one `synth` run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthManifest {
    pub command: String,
    pub spec: SceneSpec,
    pub noise: NoiseSpec,
    pub count: usize,
    pub scenes: Vec<SceneEntry>,
    pub timings_ms: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SceneEntry {
    pub dir: String,
    pub seed: u64,
    pub num_points: usize,
    pub num_instances: usize,
}
