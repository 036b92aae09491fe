//! Instance-segmentation metrics: greedy IoU matching, average precision
//! with all-point interpolation, and class-averaged AP / AP50 / AP25 plus
//! mean precision and recall at IoU 0.5.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cloud::GroundTruthInstance;
use crate::inference::{point_set_iou, Prediction};
use crate::losses::compensated_sum;
use crate::scalar::Scalar;

/// The ten AP thresholds 0.50, 0.55, .., 0.95.
pub fn ap_thresholds() -> Vec<f64> {
    (10..=19).map(|i| i as f64 / 20.0).collect()
}

/// One prediction's match outcome at a fixed IoU threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PredMatch<S> {
    /// Index into the prediction list passed to [`match_predictions`].
    pub pred: usize,
    /// Index into the ground-truth list, when matched.
    pub gt: Option<usize>,
    /// IoU with the matched instance (0 when unmatched).
    pub iou: S,
}

/// Greedy matching: predictions in descending confidence order each claim
/// the unmatched same-class instance of highest IoU, provided that IoU
/// reaches `iou_t`. IoU ties resolve to the lowest instance id.
pub fn match_predictions<S: Scalar>(
    preds: &[Prediction<S>],
    gts: &[GroundTruthInstance<S>],
    iou_t: S,
) -> Vec<PredMatch<S>> {
    let mut order: Vec<usize> = (0..preds.len()).collect();
    // Stable by construction: equal confidences keep input order.
    order.sort_by(|&a, &b| {
        preds[b]
            .confidence
            .partial_cmp(&preds[a].confidence)
            .expect("confidences are finite")
    });

    let mut taken = vec![false; gts.len()];
    let mut out = Vec::with_capacity(preds.len());
    for &p in &order {
        let mut best: Option<(usize, S)> = None;
        for (k, gt) in gts.iter().enumerate() {
            if taken[k] || gt.semantic_class != preds[p].semantic_class {
                continue;
            }
            let iou = point_set_iou::<S>(&preds[p].point_indices, &gt.point_indices);
            if iou < iou_t {
                continue;
            }
            let better = match best {
                None => true,
                Some((bk, biou)) => iou > biou || (iou == biou && gt.id < gts[bk].id),
            };
            if better {
                best = Some((k, iou));
            }
        }
        match best {
            Some((k, iou)) => {
                taken[k] = true;
                out.push(PredMatch {
                    pred: p,
                    gt: Some(k),
                    iou,
                });
            }
            None => out.push(PredMatch {
                pred: p,
                gt: None,
                iou: S::zero(),
            }),
        }
    }
    out
}

/// Area under the precision-recall curve with all-point interpolation
/// (precision at each recall level is the maximum precision at that recall
/// or beyond).
///
/// `flags` are ranked match outcomes, best confidence first. With no
/// ground truth, AP is 1 when there are also no predictions and 0
/// otherwise.
pub fn average_precision<S: Scalar>(flags: &[bool], num_gt: usize) -> S {
    if num_gt == 0 {
        return if flags.is_empty() { S::one() } else { S::zero() };
    }
    debug_assert!(
        flags.iter().filter(|&&f| f).count() <= num_gt,
        "a matcher assigns each instance at most once"
    );
    let mut precisions: Vec<f64> = Vec::new();
    let mut recalls: Vec<f64> = Vec::new();
    let mut tp = 0usize;
    for (rank, &hit) in flags.iter().enumerate() {
        if hit {
            tp += 1;
        }
        precisions.push(tp as f64 / (rank + 1) as f64);
        recalls.push(tp as f64 / num_gt as f64);
    }
    // Monotone envelope from the right.
    for i in (1..precisions.len()).rev() {
        if precisions[i] > precisions[i - 1] {
            precisions[i - 1] = precisions[i];
        }
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for i in 0..flags.len() {
        if recalls[i] > prev_recall {
            ap += (recalls[i] - prev_recall) * precisions[i];
            prev_recall = recalls[i];
        }
    }
    S::from_f64_const(ap)
}

/// Per-class metrics inside an [`EvalReport`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics<S> {
    pub ap: S,
    pub ap50: S,
    pub ap25: S,
}

/// Class-averaged metrics of one evaluation.
///
/// `ap` averages the thresholds 0.50..0.95; `ap50` / `ap25` are single
/// thresholds; `mprec50` / `mrec50` average per-class precision and recall
/// at IoU 0.5 over the classes where the denominator exists (classes with
/// no predictions contribute no precision; classes with no ground truth
/// contribute no recall).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<S> {
    pub ap: S,
    pub ap50: S,
    pub ap25: S,
    pub per_class: BTreeMap<u32, ClassMetrics<S>>,
    pub mprec50: S,
    pub mrec50: S,
}

impl<S: Scalar> EvalReport<S> {
    /// CSV of per-class rows plus the mean row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,ap,ap50,ap25\n");
        for (class, m) in &self.per_class {
            out.push_str(&format!("{class},{},{},{}\n", m.ap, m.ap50, m.ap25));
        }
        out.push_str(&format!("mean,{},{},{}\n", self.ap, self.ap50, self.ap25));
        out
    }
}

/// Evaluate predictions against ground truth over a class set.
///
/// Classes with neither ground truth nor predictions are excluded from all
/// means. Every report satisfies `ap <= ap50 <= ap25` (up to float
/// round-off), which is asserted before returning.
pub fn evaluate<S: Scalar>(
    preds: &[Prediction<S>],
    gts: &[GroundTruthInstance<S>],
    classes: &[u32],
) -> EvalReport<S> {
    let mut class_list: Vec<u32> = classes.to_vec();
    class_list.sort_unstable();
    class_list.dedup();

    let thresholds = ap_thresholds();
    let mut per_class = BTreeMap::new();
    let mut aps: Vec<S> = Vec::new();
    let mut ap50s: Vec<S> = Vec::new();
    let mut ap25s: Vec<S> = Vec::new();
    let mut precs: Vec<S> = Vec::new();
    let mut recs: Vec<S> = Vec::new();

    for &class in &class_list {
        let class_preds: Vec<Prediction<S>> = preds
            .iter()
            .filter(|p| p.semantic_class == class)
            .cloned()
            .collect();
        let class_gts: Vec<GroundTruthInstance<S>> = gts
            .iter()
            .filter(|g| g.semantic_class == class)
            .cloned()
            .collect();
        if class_preds.is_empty() && class_gts.is_empty() {
            continue;
        }

        let ap_at = |t: f64| -> S {
            let matches = match_predictions(&class_preds, &class_gts, S::from_f64_const(t));
            let flags: Vec<bool> = matches.iter().map(|m| m.gt.is_some()).collect();
            average_precision(&flags, class_gts.len())
        };

        let ap_vals: Vec<S> = thresholds.iter().map(|&t| ap_at(t)).collect();
        let ap = compensated_sum(ap_vals.iter().copied()) / S::from_count(ap_vals.len());
        let ap50 = ap_vals[0];
        let ap25 = ap_at(0.25);
        per_class.insert(class, ClassMetrics { ap, ap50, ap25 });
        aps.push(ap);
        ap50s.push(ap50);
        ap25s.push(ap25);

        // Precision / recall at IoU 0.5.
        let matches = match_predictions(&class_preds, &class_gts, S::from_f64_const(0.5));
        let tp = matches.iter().filter(|m| m.gt.is_some()).count();
        if !class_preds.is_empty() {
            precs.push(S::from_count(tp) / S::from_count(class_preds.len()));
        }
        if !class_gts.is_empty() {
            recs.push(S::from_count(tp) / S::from_count(class_gts.len()));
        }
    }

    let mean = |v: &[S]| -> S {
        if v.is_empty() {
            S::zero()
        } else {
            compensated_sum(v.iter().copied()) / S::from_count(v.len())
        }
    };
    let report = EvalReport {
        ap: mean(&aps),
        ap50: mean(&ap50s),
        ap25: mean(&ap25s),
        per_class,
        mprec50: mean(&precs),
        mrec50: mean(&recs),
    };

    let slack = S::from_f64_const(1e-12);
    assert!(
        report.ap <= report.ap50 + slack && report.ap50 <= report.ap25 + slack,
        "threshold monotonicity violated: ap={:?} ap50={:?} ap25={:?}",
        report.ap,
        report.ap50,
        report.ap25
    );
    report
}

/// One scene's contribution to a pooled evaluation: its predictions, its
/// instances, and its point count.
pub type SceneOutcome<S> = (Vec<Prediction<S>>, Vec<GroundTruthInstance<S>>, usize);

/// Evaluate a batch of scenes as one pooled set: point universes are made
/// disjoint by offsetting indices, so cross-scene IoU is zero and the
/// result is the dataset-level AP.
pub fn evaluate_batch<S: Scalar>(scenes: &[SceneOutcome<S>], classes: &[u32]) -> EvalReport<S> {
    let mut preds: Vec<Prediction<S>> = Vec::new();
    let mut gts: Vec<GroundTruthInstance<S>> = Vec::new();
    let mut point_base = 0usize;
    let mut id_base = 0i32;
    for (scene_preds, scene_gts, num_points) in scenes {
        for p in scene_preds {
            let mut p = p.clone();
            for i in &mut p.point_indices {
                *i += point_base;
            }
            preds.push(p);
        }
        let mut max_id = -1;
        for g in scene_gts {
            let mut g = g.clone();
            for i in &mut g.point_indices {
                *i += point_base;
            }
            max_id = max_id.max(g.id);
            g.id += id_base;
            gts.push(g);
        }
        point_base += num_points;
        id_base += max_id + 1;
    }
    evaluate(&preds, &gts, classes)
}
