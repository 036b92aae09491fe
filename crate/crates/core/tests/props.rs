//! Property tests for the library's structural invariants.

use proptest::prelude::*;

use pcseg_core::grouping::Group;
use pcseg_core::*;

fn arb_points(max: usize) -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec(
        [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64],
        1..max,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn grid_neighbors_equal_brute_force(
        points in arb_points(200),
        query in [-1.2..1.2f64, -1.2..1.2f64, -1.2..1.2f64],
        radius in 0.01..0.8f64,
        cell in 0.05..0.5f64,
    ) {
        let index = GridIndex::build(&points, cell).unwrap();
        prop_assert_eq!(
            index.neighbors_within(&points, query, radius),
            brute_neighbors(&points, query, radius)
        );
    }

    #[test]
    fn voxel_downsample_shrinks_and_is_idempotent(
        points in arb_points(300),
        voxel in 0.05..0.5f64,
    ) {
        let cloud = PointCloud::from_positions(points);
        let once = voxel_downsample(&cloud, voxel).unwrap();
        prop_assert!(once.len() <= cloud.len());
        let twice = voxel_downsample(&once, voxel).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn score_ramp_is_monotone_and_clamped(a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let cfg = Config64::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(gt_score(lo, &cfg) <= gt_score(hi, &cfg));
        prop_assert!((0.0..=1.0).contains(&gt_score(a, &cfg)));
    }

    #[test]
    fn nms_is_antichain_and_idempotent(
        raw in prop::collection::vec(
            (prop::collection::btree_set(0usize..30, 1..10), 0u32..3, 0u32..11),
            1..25,
        )
    ) {
        let instances: Vec<Masked64> = raw
            .iter()
            .map(|(set, class, score10)| {
                let indices: Vec<usize> = set.iter().copied().collect();
                MaskedInstance {
                    group: Group {
                        point_indices: indices.clone(),
                        semantic_class: *class,
                        round: 1,
                    },
                    mask_probs: vec![1.0; indices.len()],
                    kept_indices: indices,
                    score: *score10 as f64 / 10.0,
                    pooled_feature: None,
                }
            })
            .collect();
        let out = nms(&instances, 0.5).unwrap();
        for i in 0..out.len() {
            for j in (i + 1)..out.len() {
                prop_assert!(point_set_iou::<f64>(&out[i].point_indices, &out[j].point_indices) < 0.5);
            }
        }
        let as_masked: Vec<Masked64> = out
            .iter()
            .map(|p| MaskedInstance {
                group: Group {
                    point_indices: p.point_indices.clone(),
                    semantic_class: p.semantic_class,
                    round: 1,
                },
                mask_probs: vec![1.0; p.point_indices.len()],
                kept_indices: p.point_indices.clone(),
                score: p.confidence,
                pooled_feature: None,
            })
            .collect();
        prop_assert_eq!(nms(&as_masked, 0.5).unwrap(), out);
    }

    #[test]
    fn ap_is_within_unit_interval_and_monotone_prefix(
        raw_flags in prop::collection::vec(any::<bool>(), 0..40),
        num_gt in 0usize..20,
    ) {
        // A matcher assigns each instance at most once; keep the flag
        // stream inside that domain.
        let mut budget = num_gt;
        let flags: Vec<bool> = raw_flags
            .iter()
            .map(|&f| {
                if f && budget > 0 {
                    budget -= 1;
                    true
                } else {
                    false
                }
            })
            .collect();
        let ap: f64 = average_precision(&flags, num_gt);
        prop_assert!((0.0..=1.0).contains(&ap));
        // Appending a false flag never raises AP.
        let mut longer = flags.clone();
        longer.push(false);
        let ap2: f64 = average_precision(&longer, num_gt);
        prop_assert!(ap2 <= ap + 1e-12);
    }

    #[test]
    fn mask_pool_stays_in_row_hull_componentwise(
        rows in prop::collection::vec(prop::collection::vec(-5.0..5.0f64, 3), 1..20),
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let probs: Vec<f64> = rows.iter().map(|_| rng.gen_range(0.0..1.0)).collect();
        let feats = RowMatrix::from_rows(&rows).unwrap();
        let pooled = mask_pool(&feats, &probs).unwrap();
        for c in 0..3 {
            let lo = rows.iter().map(|r| r[c]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(pooled[c] >= lo - 1e-9 && pooled[c] <= hi + 1e-9);
        }
    }
}
