//! Final instance assembly: score-ordered non-maximum suppression over
//! masked groups, and the end-to-end scene segmentation pipeline
//! (shift -> group -> mask -> suppress).

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cloud::{shift_points, PointCloud, RowMatrix};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::grouping::{hierarchical_group, GroupingResult};
use crate::masking::{apply_mask, mask_pool, sorted_intersection_len, MaskPredictor, MaskedInstance};
use crate::scalar::Scalar;

/// One final instance prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction<S> {
    #[serde(rename = "class")]
    pub semantic_class: u32,
    pub confidence: S,
    /// Masked member point indices, sorted ascending.
    #[serde(rename = "indices")]
    pub point_indices: Vec<usize>,
}

/// Point-set IoU of two sorted, deduplicated index slices.
pub fn point_set_iou<S: Scalar>(a: &[usize], b: &[usize]) -> S {
    let inter = sorted_intersection_len(a, b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        S::zero()
    } else {
        S::from_count(inter) / S::from_count(union)
    }
}

/// Greedy score-ordered suppression on masked point sets.
///
/// Instances whose mask emptied them are dropped. The rest are visited by
/// descending score (ties: larger kept set first, then lowest smallest
/// member index) and kept iff their IoU with every already-kept prediction
/// stays strictly below `iou_threshold`.
pub fn nms<S: Scalar>(
    instances: &[MaskedInstance<S>],
    iou_threshold: S,
) -> Result<Vec<Prediction<S>>> {
    if !(iou_threshold > S::zero() && iou_threshold <= S::one()) {
        return Err(Error::InvalidInput("NMS IoU threshold must be in (0, 1]".into()));
    }
    let mut order: Vec<usize> = (0..instances.len())
        .filter(|&i| !instances[i].kept_indices.is_empty())
        .collect();
    order.sort_by(|&a, &b| {
        let ia = &instances[a];
        let ib = &instances[b];
        ib.score
            .partial_cmp(&ia.score)
            .expect("scores are finite")
            .then(ib.kept_indices.len().cmp(&ia.kept_indices.len()))
            .then(ia.kept_indices[0].cmp(&ib.kept_indices[0]))
    });

    let mut kept: Vec<Prediction<S>> = Vec::new();
    for i in order {
        let cand = &instances[i];
        let suppressed = kept.iter().any(|p| {
            point_set_iou::<S>(&cand.kept_indices, &p.point_indices) >= iou_threshold
        });
        if !suppressed {
            kept.push(Prediction {
                semantic_class: cand.group.semantic_class,
                confidence: cand.score,
                point_indices: cand.kept_indices.clone(),
            });
        }
    }
    Ok(kept)
}

/// Wall-clock stage timings of one pipeline run, milliseconds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub shift_ms: f64,
    pub group_ms: f64,
    pub mask_ms: f64,
    pub nms_ms: f64,
}

impl StageTimings {
    pub fn total_ms(&self) -> f64 {
        self.shift_ms + self.group_ms + self.mask_ms + self.nms_ms
    }
}

/// Everything produced by one pipeline run, for callers that want the
/// intermediate counts and timing alongside the predictions.
#[derive(Debug, Clone)]
pub struct PipelineRun<S> {
    pub predictions: Vec<Prediction<S>>,
    pub grouping: GroupingResult,
    pub timings: StageTimings,
}

impl<S> PipelineRun<S> {
    /// Largest per-round group count, a capacity measure for benchmarks.
    pub fn peak_round_groups(&self) -> usize {
        self.grouping.rounds.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Run shift, hierarchical grouping, per-group mask prediction, mask
/// application, and NMS. Deterministic for a fixed predictor seed.
///
/// The cloud needs positions, semantic labels (or scores to derive them),
/// and offsets. When per-point features are absent the raw positions stand
/// in as 3-wide feature rows.
pub fn run_pipeline<S: Scalar>(
    cloud: &PointCloud<S>,
    predictor: &dyn MaskPredictor<S>,
    cfg: &PipelineConfig<S>,
) -> Result<PipelineRun<S>> {
    cfg.validate()?;
    cloud.validate()?;

    let mut cloud = cloud.clone();
    if cloud.semantic_labels.is_none() {
        cloud.semantic_labels = Some(cloud.semantic_labels_or_derived()?);
    }
    if cloud.features.is_none() {
        let rows: Vec<Vec<S>> = cloud.positions.iter().map(|p| p.to_vec()).collect();
        cloud.features = Some(RowMatrix::from_rows(&rows)?);
    }

    let t0 = Instant::now();
    let shifted = shift_points(&cloud)?;
    let shift_ms = ms_since(t0);

    let t0 = Instant::now();
    let grouping = hierarchical_group(&cloud, &shifted, cfg)?;
    let group_ms = ms_since(t0);

    let t0 = Instant::now();
    let features = cloud.features.as_ref().expect("features synthesized above");
    let mut masked: Vec<MaskedInstance<S>> = Vec::with_capacity(grouping.merged.len());
    for group in &grouping.merged {
        let member_features = features.gather(&group.point_indices);
        let pred = predictor.predict(group, &member_features, &cloud);
        if pred.mask_probs.len() != group.len() {
            return Err(Error::Internal(format!(
                "predictor returned {} probabilities for a group of {}",
                pred.mask_probs.len(),
                group.len()
            )));
        }
        let pooled = mask_pool(&member_features, &pred.mask_probs)?;
        let mut instance = apply_mask(group.clone(), pred.mask_probs, pred.score, cfg)?;
        instance.pooled_feature = Some(pooled);
        masked.push(instance);
    }
    let mask_ms = ms_since(t0);

    let t0 = Instant::now();
    let predictions = nms(&masked, cfg.nms_iou)?;
    let nms_ms = ms_since(t0);

    for p in &predictions {
        if p.point_indices.iter().any(|&i| i >= cloud.len()) {
            return Err(Error::Internal("prediction index out of range".into()));
        }
    }

    Ok(PipelineRun {
        predictions,
        grouping,
        timings: StageTimings {
            shift_ms,
            group_ms,
            mask_ms,
            nms_ms,
        },
    })
}

/// [`run_pipeline`], keeping only the predictions.
pub fn segment_scene<S: Scalar>(
    cloud: &PointCloud<S>,
    predictor: &dyn MaskPredictor<S>,
    cfg: &PipelineConfig<S>,
) -> Result<Vec<Prediction<S>>> {
    Ok(run_pipeline(cloud, predictor, cfg)?.predictions)
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Per-point assignment: each point maps to the id (output position) of the
/// highest-ranked prediction containing it, or -1.
pub fn assignment_rows<S>(predictions: &[Prediction<S>], num_points: usize) -> Vec<i64> {
    let mut assign = vec![-1i64; num_points];
    for (id, p) in predictions.iter().enumerate() {
        for &i in &p.point_indices {
            if assign[i] < 0 {
                assign[i] = id as i64;
            }
        }
    }
    assign
}

/// Render the assignment CSV (`point,prediction` header).
pub fn assignment_csv<S>(predictions: &[Prediction<S>], num_points: usize) -> String {
    let mut out = String::from("point,prediction\n");
    for (i, a) in assignment_rows(predictions, num_points).iter().enumerate() {
        out.push_str(&format!("{i},{a}\n"));
    }
    out
}
