//! Group refinement: ground-truth mask derivation, mask application,
//! mask-weighted feature pooling, score targets, and the pluggable
//! mask/score predictor with oracle implementations standing in for a
//! trained network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cloud::{GroundTruthInstance, PointCloud, RowMatrix};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::grouping::Group;
use crate::scalar::Scalar;
use crate::seeding::{derive_seed, splitmix64};

/// A group after mask refinement: per-member probabilities, the surviving
/// point set, and a quality score.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedInstance<S> {
    pub group: Group,
    /// One probability per group member, in [0, 1].
    pub mask_probs: Vec<S>,
    /// Members whose probability reached the binarize threshold, ascending.
    pub kept_indices: Vec<usize>,
    /// Quality score in [0, 1].
    pub score: S,
    /// Mask-weighted mean feature row, when features were available.
    pub pooled_feature: Option<Vec<S>>,
}

/// Mask and score emitted by a predictor for one group.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPrediction<S> {
    pub mask_probs: Vec<S>,
    pub score: S,
}

/// Produces a membership mask and a quality score for a group.
///
/// `member_features` holds one row per group member, gathered from the
/// cloud's per-point features. Implementations must return values in
/// [0, 1] and be deterministic for a fixed seed; randomized predictors
/// derive a per-call RNG from the group identity so concurrent invocation
/// over groups cannot change results.
pub trait MaskPredictor<S: Scalar>: Send + Sync {
    fn predict(
        &self,
        group: &Group,
        member_features: &RowMatrix<S>,
        cloud: &PointCloud<S>,
    ) -> MaskPrediction<S>;
}

/// Point-set IoU between a group and one ground-truth instance.
fn group_gt_iou<S: Scalar>(group: &[usize], gt: &[usize]) -> S {
    let inter = sorted_intersection_len(group, gt);
    let union = group.len() + gt.len() - inter;
    if union == 0 {
        S::zero()
    } else {
        S::from_count(inter) / S::from_count(union)
    }
}

pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut count) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

/// The ground-truth instance with the largest IoU against the group's
/// point set. Ties resolve to the lowest instance id. Returns the index
/// into `gts` together with the winning IoU; `None` only when `gts` is
/// empty.
pub fn best_gt_instance<S: Scalar>(
    group: &Group,
    gts: &[GroundTruthInstance<S>],
) -> Option<(usize, S)> {
    let mut best: Option<(usize, S)> = None;
    for (k, gt) in gts.iter().enumerate() {
        let iou = group_gt_iou::<S>(&group.point_indices, &gt.point_indices);
        let better = match best {
            None => true,
            Some((bk, biou)) => iou > biou || (iou == biou && gt.id < gts[bk].id),
        };
        if better {
            best = Some((k, iou));
        }
    }
    best
}

/// The target mask of a group against its best-matching instance: 1 where
/// the member index also belongs to the instance, else 0.
pub fn gt_mask<S: Scalar>(group: &Group, gt: &GroundTruthInstance<S>) -> Vec<bool> {
    group
        .point_indices
        .iter()
        .map(|i| gt.point_indices.binary_search(i).is_ok())
        .collect()
}

/// Score target: a clamped linear ramp of the group/instance IoU, 0 at or
/// below `score_iou_low`, 1 at or above `score_iou_high`.
pub fn gt_score<S: Scalar>(iou: S, cfg: &PipelineConfig<S>) -> S {
    let t = (iou - cfg.score_iou_low) / (cfg.score_iou_high - cfg.score_iou_low);
    t.max(S::zero()).min(S::one())
}

/// Mask-weighted average of feature rows: `sum(m_j * f_j) / sum(m_j)`.
/// Falls back to the unweighted mean when the mask mass is below 1e-8.
pub fn mask_pool<S: Scalar>(features: &RowMatrix<S>, mask_probs: &[S]) -> Result<Vec<S>> {
    if features.rows() == 0 {
        return Err(Error::InvalidInput("mask_pool on empty input".into()));
    }
    if features.rows() != mask_probs.len() {
        return Err(Error::LengthMismatch {
            what: "mask probabilities",
            expected: features.rows(),
            got: mask_probs.len(),
        });
    }
    let mass: S = mask_probs.iter().copied().sum();
    let uniform = S::one();
    let (weights, total) = if mass < S::from_f64_const(1e-8) {
        (None, S::from_count(mask_probs.len()))
    } else {
        (Some(mask_probs), mass)
    };
    let mut pooled = vec![S::zero(); features.cols()];
    for (j, row) in features.iter_rows().enumerate() {
        let w = weights.map_or(uniform, |m| m[j]);
        for (acc, &v) in pooled.iter_mut().zip(row) {
            *acc += w * v;
        }
    }
    for acc in &mut pooled {
        *acc /= total;
    }
    Ok(pooled)
}

/// Binarize a mask over a group: members at or above
/// `cfg.mask_binarize_threshold` survive into `kept_indices`.
pub fn apply_mask<S: Scalar>(
    group: Group,
    mask_probs: Vec<S>,
    score: S,
    cfg: &PipelineConfig<S>,
) -> Result<MaskedInstance<S>> {
    if mask_probs.len() != group.point_indices.len() {
        return Err(Error::LengthMismatch {
            what: "mask probabilities",
            expected: group.point_indices.len(),
            got: mask_probs.len(),
        });
    }
    if !(score >= S::zero() && score <= S::one()) {
        return Err(Error::Internal(format!(
            "predictor score {score} outside [0, 1]"
        )));
    }
    let kept_indices = group
        .point_indices
        .iter()
        .zip(&mask_probs)
        .filter(|&(_, &m)| m >= cfg.mask_binarize_threshold)
        .map(|(&i, _)| i)
        .collect();
    Ok(MaskedInstance {
        group,
        mask_probs,
        kept_indices,
        score,
        pooled_feature: None,
    })
}

/// Ground-truth predictor: mask = membership in the best-matching
/// instance, score = the ramped IoU target. With no instances at all it
/// emits an all-zero mask and score 0, so such groups drop out downstream.
pub struct OracleExactPredictor<S: Scalar> {
    gts: Vec<GroundTruthInstance<S>>,
    cfg: PipelineConfig<S>,
}

impl<S: Scalar> OracleExactPredictor<S> {
    pub fn new(gts: Vec<GroundTruthInstance<S>>, cfg: PipelineConfig<S>) -> Self {
        Self { gts, cfg }
    }
}

impl<S: Scalar> MaskPredictor<S> for OracleExactPredictor<S> {
    fn predict(
        &self,
        group: &Group,
        _member_features: &RowMatrix<S>,
        _cloud: &PointCloud<S>,
    ) -> MaskPrediction<S> {
        match best_gt_instance(group, &self.gts) {
            Some((k, iou)) => MaskPrediction {
                mask_probs: gt_mask(group, &self.gts[k])
                    .into_iter()
                    .map(|b| if b { S::one() } else { S::zero() })
                    .collect(),
                score: gt_score(iou, &self.cfg),
            },
            None => MaskPrediction {
                mask_probs: vec![S::zero(); group.len()],
                score: S::zero(),
            },
        }
    }
}

/// Exact oracle corrupted by seeded noise: each mask bit flips with
/// probability `mask_flip_rate` and the score target is jittered by a
/// uniform perturbation of the same magnitude, then clamped to [0, 1].
/// The RNG is derived from the seed and the group identity, so results do
/// not depend on call order.
pub struct OracleNoisyPredictor<S: Scalar> {
    exact: OracleExactPredictor<S>,
    mask_flip_rate: f64,
    seed: u64,
}

impl<S: Scalar> OracleNoisyPredictor<S> {
    pub fn new(
        gts: Vec<GroundTruthInstance<S>>,
        cfg: PipelineConfig<S>,
        mask_flip_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&mask_flip_rate) {
            return Err(Error::InvalidConfig(
                "mask_flip_rate: must be in [0, 1)".into(),
            ));
        }
        Ok(Self {
            exact: OracleExactPredictor::new(gts, cfg),
            mask_flip_rate,
            seed,
        })
    }

    fn group_rng(&self, group: &Group) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(derive_seed(
            self.seed,
            splitmix64(
                (group.point_indices[0] as u64)
                    ^ ((group.len() as u64) << 24)
                    ^ ((group.semantic_class as u64) << 48)
                    ^ ((group.round as u64) << 56),
            ),
        ))
    }
}

impl<S: Scalar> MaskPredictor<S> for OracleNoisyPredictor<S> {
    fn predict(
        &self,
        group: &Group,
        member_features: &RowMatrix<S>,
        cloud: &PointCloud<S>,
    ) -> MaskPrediction<S> {
        let mut pred = self.exact.predict(group, member_features, cloud);
        let mut rng = self.group_rng(group);
        for m in &mut pred.mask_probs {
            if rng.gen::<f64>() < self.mask_flip_rate {
                *m = S::one() - *m;
            }
        }
        let jitter = (rng.gen::<f64>() * 2.0 - 1.0) * self.mask_flip_rate;
        let score = pred.score.to_f64().unwrap_or(0.0) + jitter;
        pred.score = S::from_f64_const(score.clamp(0.0, 1.0));
        pred
    }
}

/// Keeps every point and scores everything 1: the "no masking" baseline.
pub struct ConstantPredictor;

impl<S: Scalar> MaskPredictor<S> for ConstantPredictor {
    fn predict(
        &self,
        group: &Group,
        _member_features: &RowMatrix<S>,
        _cloud: &PointCloud<S>,
    ) -> MaskPrediction<S> {
        MaskPrediction {
            mask_probs: vec![S::one(); group.len()],
            score: S::one(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn group(indices: &[usize], class: u32) -> Group {
        Group {
            point_indices: indices.to_vec(),
            semantic_class: class,
            round: 1,
        }
    }

    fn gt(id: i32, indices: &[usize]) -> GroundTruthInstance<f64> {
        GroundTruthInstance {
            id,
            semantic_class: 0,
            point_indices: indices.to_vec(),
            centroid: [0.0; 3],
        }
    }

    #[test]
    fn best_gt_simple_overlap() {
        let g = group(&[1, 2, 3], 0);
        let gts = vec![gt(5, &[2, 3, 4])];
        let (k, iou) = best_gt_instance(&g, &gts).unwrap();
        assert_eq!(gts[k].id, 5);
        assert_eq!(iou, 0.5);
    }

    #[test]
    fn best_gt_identity_is_one() {
        let g = group(&[7, 9, 11], 0);
        let gts = vec![gt(0, &[1, 2]), gt(1, &[7, 9, 11])];
        let (k, iou) = best_gt_instance(&g, &gts).unwrap();
        assert_eq!(k, 1);
        assert_eq!(iou, 1.0);
    }

    #[test]
    fn best_gt_ties_take_lowest_id() {
        let g = group(&[0, 1], 0);
        // Both instances have IoU 1/3; ids deliberately out of order.
        let gts = vec![gt(9, &[1, 8]), gt(3, &[0, 6])];
        let (k, _) = best_gt_instance(&g, &gts).unwrap();
        assert_eq!(gts[k].id, 3);
    }

    #[test]
    fn best_gt_matches_exhaustive_reference() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let gts: Vec<GroundTruthInstance<f64>> = (0..5)
                .map(|id| {
                    let mut idx: Vec<usize> =
                        (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..100)).collect();
                    idx.sort_unstable();
                    idx.dedup();
                    gt(id, &idx)
                })
                .collect();
            for _ in 0..20 {
                let mut idx: Vec<usize> =
                    (0..rng.gen_range(1..30)).map(|_| rng.gen_range(0..100)).collect();
                idx.sort_unstable();
                idx.dedup();
                let g = group(&idx, 0);
                let (k, iou) = best_gt_instance(&g, &gts).unwrap();
                // Exhaustive max with the same tie rule.
                let mut best_iou = -1.0;
                let mut best_id = i32::MAX;
                for cand in &gts {
                    let i = sorted_intersection_len(&g.point_indices, &cand.point_indices);
                    let u = g.point_indices.len() + cand.point_indices.len() - i;
                    let v = i as f64 / u as f64;
                    if v > best_iou || (v == best_iou && cand.id < best_id) {
                        best_iou = v;
                        best_id = cand.id;
                    }
                }
                assert_eq!(gts[k].id, best_id);
                assert_eq!(iou, best_iou);
            }
        }
    }

    #[test]
    fn gt_mask_membership() {
        let g = group(&[1, 2, 3], 0);
        assert_eq!(gt_mask::<f64>(&g, &gt(0, &[2, 3, 4])), vec![false, true, true]);
        assert_eq!(gt_mask::<f64>(&g, &gt(0, &[9])), vec![false, false, false]);
        assert_eq!(gt_mask::<f64>(&g, &gt(0, &[0, 1, 2, 3])), vec![true, true, true]);
    }

    #[test]
    fn eq45_consistency() {
        let g = group(&[1, 2, 3, 10], 0);
        let gts = vec![gt(0, &[2, 3, 4]), gt(1, &[10, 11])];
        let (k, _) = best_gt_instance(&g, &gts).unwrap();
        let mask = gt_mask(&g, &gts[k]);
        let inter = sorted_intersection_len(&g.point_indices, &gts[k].point_indices);
        assert_eq!(mask.iter().filter(|&&b| b).count(), inter);
    }

    #[test]
    fn score_ramp_boundaries() {
        let cfg = PipelineConfig::<f64>::default();
        assert_eq!(gt_score(0.25, &cfg), 0.0);
        assert_eq!(gt_score(1.0, &cfg), 1.0);
        assert_eq!(gt_score(0.5, &cfg), 0.5);
        assert_eq!(gt_score(0.0, &cfg), 0.0);
        // Monotone non-decreasing over a sweep.
        let mut prev = -1.0;
        for i in 0..=100 {
            let v = gt_score(i as f64 / 100.0, &cfg);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn mask_pool_selects_and_falls_back() {
        let feats = RowMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(mask_pool(&feats, &[1.0, 0.0, 1.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(mask_pool(&feats, &[0.0, 0.0, 0.0]).unwrap(), vec![3.0, 4.0]);
        // One-hot returns exactly that row.
        assert_eq!(mask_pool(&feats, &[0.0, 1.0, 0.0]).unwrap(), vec![3.0, 4.0]);
        assert_eq!(mask_pool(&feats, &[0.0, 0.0, 1.0]).unwrap(), vec![5.0, 6.0]);
    }

    #[test]
    fn mask_pool_all_ones_is_plain_mean() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let rows: Vec<Vec<f64>> = (0..50).map(|_| vec![rng.gen(), rng.gen(), rng.gen()]).collect();
        let feats = RowMatrix::from_rows(&rows).unwrap();
        let pooled = mask_pool(&feats, &vec![1.0; 50]).unwrap();
        for c in 0..3 {
            let mean: f64 = rows.iter().map(|r| r[c]).sum::<f64>() / 50.0;
            assert!((pooled[c] - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_mask_thresholding() {
        let cfg = PipelineConfig::<f64>::default();
        let g = group(&[4, 7, 9], 1);
        let m = apply_mask(g.clone(), vec![1.0, 1.0, 1.0], 0.5, &cfg).unwrap();
        assert_eq!(m.kept_indices, vec![4, 7, 9]);
        let m = apply_mask(g.clone(), vec![0.0, 0.0, 0.0], 0.5, &cfg).unwrap();
        assert!(m.kept_indices.is_empty());
        // The comparator at the threshold is >=.
        let m = apply_mask(g, vec![0.4, 0.5, 0.6], 0.5, &cfg).unwrap();
        assert_eq!(m.kept_indices, vec![7, 9]);
    }

    #[test]
    fn apply_mask_rejects_mismatched_lengths() {
        let cfg = PipelineConfig::<f64>::default();
        assert!(apply_mask(group(&[1], 0), vec![0.5, 0.5], 1.0, &cfg).is_err());
    }

    #[test]
    fn noisy_predictor_is_deterministic_per_group() {
        let cfg = PipelineConfig::<f64>::default();
        let gts = vec![gt(0, &[0, 1, 2, 3])];
        let cloud = PointCloud::from_positions(vec![[0.0; 3]; 6]);
        let feats = RowMatrix::from_rows(&vec![vec![0.0]; 4]).unwrap();
        let g = group(&[0, 1, 2, 5], 0);
        let p = OracleNoisyPredictor::new(gts, cfg, 0.3, 42).unwrap();
        let a = p.predict(&g, &feats, &cloud);
        let b = p.predict(&g, &feats, &cloud);
        assert_eq!(a, b);
        assert!(a.mask_probs.iter().all(|&m| (0.0..=1.0).contains(&m)));
        assert!((0.0..=1.0).contains(&a.score));
    }
}
