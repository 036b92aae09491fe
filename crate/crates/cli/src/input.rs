//! Loading of externally supplied JSON artifacts. Index sets are
//! normalized (sorted, deduplicated) on the way in because everything
//! downstream relies on the sorted-slice contract, and hand-written files
//! cannot be trusted to honor it.

use std::path::Path;

use pcseg_core::{Error, Gt64, Prediction64, Result};

pub fn load_gts(path: &Path) -> Result<Vec<Gt64>> {
    let mut gts: Vec<Gt64> = serde_json::from_reader(std::fs::File::open(path)?)
        .map_err(|e| Error::InvalidConfig(format!("gt file: {e}")))?;
    for gt in &mut gts {
        gt.point_indices.sort_unstable();
        gt.point_indices.dedup();
        if gt.point_indices.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "gt file: instance {} has no points",
                gt.id
            )));
        }
    }
    Ok(gts)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction64>> {
    let mut preds: Vec<Prediction64> = serde_json::from_reader(std::fs::File::open(path)?)
        .map_err(|e| Error::InvalidConfig(format!("prediction file: {e}")))?;
    for (i, p) in preds.iter_mut().enumerate() {
        p.point_indices.sort_unstable();
        p.point_indices.dedup();
        if !(p.confidence.is_finite() && (0.0..=1.0).contains(&p.confidence)) {
            return Err(Error::InvalidConfig(format!(
                "prediction file: entry {i} has confidence {} outside [0, 1]",
                p.confidence
            )));
        }
    }
    Ok(preds)
}
