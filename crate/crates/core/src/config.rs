//! Pipeline configuration.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Which coordinates drive the grouping: shifted centroid estimates or raw
/// positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClusterSpace {
    #[default]
    Shifted,
    Original,
}

/// All knobs of the segmentation pipeline.
///
/// Defaults: radii 0.01/0.03/0.05 m, minimum group size 50, NMS IoU 0.7,
/// clustering in the shifted space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, bound(deserialize = "S: Scalar"))]
pub struct PipelineConfig<S: Scalar> {
    /// Grouping radius schedule, strictly increasing, meters.
    pub radii: Vec<S>,
    /// Groups smaller than this are discarded from the merged set.
    pub min_group_size: usize,
    /// Suppression threshold on point-set IoU, in (0, 1].
    pub nms_iou: S,
    pub cluster_space: ClusterSpace,
    /// Mask probabilities at or above this keep their point.
    pub mask_binarize_threshold: S,
    /// Semantic classes excluded from grouping entirely.
    pub ignored_classes: BTreeSet<u32>,
    /// IoU at or below this maps to score target 0.
    pub score_iou_low: S,
    /// IoU at or above this maps to score target 1.
    pub score_iou_high: S,
    pub rng_seed: u64,
}

impl<S: Scalar> Default for PipelineConfig<S> {
    fn default() -> Self {
        Self {
            radii: vec![
                S::from_f64_const(0.01),
                S::from_f64_const(0.03),
                S::from_f64_const(0.05),
            ],
            min_group_size: 50,
            nms_iou: S::from_f64_const(0.7),
            cluster_space: ClusterSpace::Shifted,
            mask_binarize_threshold: S::from_f64_const(0.5),
            ignored_classes: BTreeSet::new(),
            score_iou_low: S::from_f64_const(0.25),
            score_iou_high: S::from_f64_const(0.75),
            rng_seed: 0,
        }
    }
}

impl<S: Scalar> PipelineConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return Err(Error::InvalidConfig("radii: must be nonempty".into()));
        }
        let mut prev = S::zero();
        for (i, &r) in self.radii.iter().enumerate() {
            if !(r > prev) || !r.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "radii[{i}]: schedule must be positive and strictly increasing"
                )));
            }
            prev = r;
        }
        if self.min_group_size == 0 {
            return Err(Error::InvalidConfig("min_group_size: must be >= 1".into()));
        }
        if !(self.nms_iou > S::zero() && self.nms_iou <= S::one()) {
            return Err(Error::InvalidConfig("nms_iou: must be in (0, 1]".into()));
        }
        if !(self.mask_binarize_threshold > S::zero() && self.mask_binarize_threshold < S::one()) {
            return Err(Error::InvalidConfig(
                "mask_binarize_threshold: must be in (0, 1)".into(),
            ));
        }
        let in_unit = |v: S| v >= S::zero() && v <= S::one();
        if !(in_unit(self.score_iou_low)
            && in_unit(self.score_iou_high)
            && self.score_iou_low < self.score_iou_high)
        {
            return Err(Error::InvalidConfig(
                "score_iou_low/score_iou_high: need low < high, both in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    /// Number of grouping rounds.
    pub fn num_rounds(&self) -> usize {
        self.radii.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        PipelineConfig::<f64>::default().validate().unwrap();
        PipelineConfig::<f32>::default().validate().unwrap();
    }

    fn with_radii(radii: Vec<f64>) -> PipelineConfig<f64> {
        PipelineConfig {
            radii,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn non_increasing_radii_rejected() {
        assert!(with_radii(vec![0.03, 0.03]).validate().is_err());
        assert!(with_radii(vec![0.05, 0.03]).validate().is_err());
        assert!(with_radii(vec![]).validate().is_err());
    }

    #[test]
    fn score_ramp_bounds_checked() {
        let cfg = PipelineConfig::<f64> {
            score_iou_low: 0.8,
            score_iou_high: 0.2,
            ..PipelineConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: PipelineConfig<f64> = serde_json::from_str(r#"{"radii": [0.02]}"#).unwrap();
        assert_eq!(cfg.radii, vec![0.02]);
        assert_eq!(cfg.min_group_size, 50);
        assert_eq!(cfg.nms_iou, 0.7);
        assert_eq!(cfg.cluster_space, ClusterSpace::Shifted);
    }
}
