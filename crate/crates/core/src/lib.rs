//! Point-cloud instance segmentation toolkit.
//!
//! The pipeline estimates per-point instance centroids from offsets,
//! clusters points with a multi-round radius schedule (each round merging
//! same-class groups whose minimum inter-point distance falls below a
//! progressively larger radius), refines every group with a point mask,
//! scores it, and resolves overlaps with score-ordered NMS. Alongside the
//! pipeline live the training-loss evaluators, AP-style metrics, and a
//! synthetic scene generator plus prediction oracles that stand in for a
//! trained network so everything is verifiable at desk scale.
//!
//! All numeric code is generic over the [`Scalar`] floating-point type;
//! the `*64` aliases below pin the common double-precision case.

// Guards of the form `!(x > zero)` are deliberate: they reject NaN along
// with out-of-range values, which `x <= zero` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod config;
pub mod error;
pub mod eval;
pub mod geom;
pub mod grouping;
pub mod inference;
pub mod io;
pub mod losses;
pub mod masking;
pub mod scalar;
pub mod seeding;
pub mod spatial;
pub mod synth;

pub use cloud::{
    gt_instances_from_cloud, labels_from_scores, shift_points, voxel_downsample,
    GroundTruthInstance, PointCloud, RowMatrix, ShiftedCloud,
};
pub use config::{ClusterSpace, PipelineConfig};
pub use error::{Error, Result};
pub use eval::{average_precision, evaluate, evaluate_batch, match_predictions, EvalReport};
pub use grouping::{cluster_round1, hierarchical_group, merge_round, Group, GroupingResult};
pub use inference::{
    assignment_csv, nms, point_set_iou, run_pipeline, segment_scene, PipelineRun, Prediction,
    StageTimings,
};
pub use io::{load_cloud, save_cloud, CloudFormat};
pub use losses::{
    direction_loss, mask_loss, offset_loss, score_loss, semantic_loss, total_loss, LossReport,
};
pub use masking::{
    apply_mask, best_gt_instance, gt_mask, gt_score, mask_pool, ConstantPredictor, MaskPredictor,
    MaskPrediction, MaskedInstance, OracleExactPredictor, OracleNoisyPredictor,
};
pub use scalar::Scalar;
pub use seeding::derive_seed;
pub use spatial::{brute_neighbors, GridIndex};
pub use synth::{generate_scene, simulate_predictions, NoiseSpec, SceneSpec, ShapeKind};

/// Double-precision aliases for the common case.
pub type Cloud64 = PointCloud<f64>;
pub type Shifted64 = ShiftedCloud<f64>;
pub type Gt64 = GroundTruthInstance<f64>;
pub type Config64 = PipelineConfig<f64>;
pub type Masked64 = MaskedInstance<f64>;
pub type Prediction64 = Prediction<f64>;
pub type Report64 = EvalReport<f64>;
pub type Grid64 = GridIndex<f64>;
