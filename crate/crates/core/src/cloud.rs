//! Core domain types: point clouds, shifted centroids, and ground-truth
//! instances, plus the deterministic per-point operations on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::scalar::Scalar;

/// Dense row-major matrix of per-point vectors (semantic scores, features).
#[derive(Debug, Clone, PartialEq)]
pub struct RowMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> RowMatrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if rows > 0 && cols == 0 {
            return Err(Error::InvalidInput("row matrix with zero-width rows".into()));
        }
        if data.len() != rows * cols {
            return Err(Error::LengthMismatch {
                what: "row matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    what: "row matrix row",
                    expected: cols,
                    got: rows[i].len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[S]> {
        self.data.chunks_exact(self.cols.max(1))
    }

    /// Gather a subset of rows into a new matrix.
    pub fn gather(&self, indices: &[usize]) -> Self {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }
}

/// A point cloud with per-point attributes.
///
/// `positions` is mandatory; every other column is tri-state (present or
/// absent) and never silently defaulted, so a missing prediction cannot
/// masquerade as an all-zero one. All present columns have the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud<S> {
    /// Point locations, meters.
    pub positions: Vec<Vec3<S>>,
    /// RGB in [0, 1].
    pub colors: Option<Vec<Vec3<S>>>,
    /// Raw per-class scores, one row per point (softmax applied downstream).
    pub semantic_scores: Option<RowMatrix<S>>,
    /// Class id per point.
    pub semantic_labels: Option<Vec<u32>>,
    /// Predicted offset toward the instance centroid, meters.
    pub offsets: Option<Vec<Vec3<S>>>,
    /// Per-point feature rows.
    pub features: Option<RowMatrix<S>>,
    /// Ground-truth instance id per point, -1 = unassigned.
    pub gt_instance_ids: Option<Vec<i32>>,
}

impl<S> Default for PointCloud<S> {
    fn default() -> Self {
        Self {
            positions: Vec::new(),
            colors: None,
            semantic_scores: None,
            semantic_labels: None,
            offsets: None,
            features: None,
            gt_instance_ids: None,
        }
    }
}

impl<S: Scalar> PointCloud<S> {
    pub fn from_positions(positions: Vec<Vec3<S>>) -> Self {
        Self {
            positions,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Check the structural invariants: nonempty, consistent lengths,
    /// finite positions.
    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n == 0 {
            return Err(Error::InvalidInput("cloud has no points".into()));
        }
        for (i, p) in self.positions.iter().enumerate() {
            if !geom::is_finite(*p) {
                return Err(Error::NonFinite {
                    what: "positions",
                    index: i,
                });
            }
        }
        let check = |what: &'static str, len: usize| -> Result<()> {
            if len != n {
                Err(Error::LengthMismatch {
                    what,
                    expected: n,
                    got: len,
                })
            } else {
                Ok(())
            }
        };
        if let Some(c) = &self.colors {
            check("colors", c.len())?;
        }
        if let Some(s) = &self.semantic_scores {
            check("semantic_scores", s.rows())?;
        }
        if let Some(l) = &self.semantic_labels {
            check("semantic_labels", l.len())?;
        }
        if let Some(o) = &self.offsets {
            check("offsets", o.len())?;
        }
        if let Some(f) = &self.features {
            check("features", f.rows())?;
        }
        if let Some(g) = &self.gt_instance_ids {
            check("gt_instance_ids", g.len())?;
        }
        Ok(())
    }

    /// Semantic labels, deriving them from the score rows when absent.
    ///
    /// Derivation is the per-point argmax with ties broken by the lowest
    /// class id, so it is deterministic.
    pub fn semantic_labels_or_derived(&self) -> Result<Vec<u32>> {
        if let Some(l) = &self.semantic_labels {
            return Ok(l.clone());
        }
        let scores = self
            .semantic_scores
            .as_ref()
            .ok_or(Error::MissingField("semantic labels or scores"))?;
        Ok(labels_from_scores(scores))
    }

    /// Keep only the points at `indices` (ascending), filtering every
    /// present column consistently.
    pub fn select(&self, indices: &[usize]) -> Self {
        let pick_vec3 = |v: &Vec<Vec3<S>>| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            positions: pick_vec3(&self.positions),
            colors: self.colors.as_ref().map(pick_vec3),
            semantic_scores: self.semantic_scores.as_ref().map(|m| m.gather(indices)),
            semantic_labels: self
                .semantic_labels
                .as_ref()
                .map(|v| indices.iter().map(|&i| v[i]).collect()),
            offsets: self.offsets.as_ref().map(pick_vec3),
            features: self.features.as_ref().map(|m| m.gather(indices)),
            gt_instance_ids: self
                .gt_instance_ids
                .as_ref()
                .map(|v| indices.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// Per-point argmax over score rows; ties resolve to the lowest class id.
pub fn labels_from_scores<S: Scalar>(scores: &RowMatrix<S>) -> Vec<u32> {
    scores
        .iter_rows()
        .map(|row| {
            let mut best = 0usize;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best as u32
        })
        .collect()
}

/// Estimated instance centroids: position plus predicted offset, per point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedCloud<S> {
    pub centroids: Vec<Vec3<S>>,
}

/// Add each point's offset to its position. Exact, componentwise.
pub fn shift_points<S: Scalar>(cloud: &PointCloud<S>) -> Result<ShiftedCloud<S>> {
    let offsets = cloud.offsets.as_ref().ok_or(Error::MissingField("offsets"))?;
    if offsets.len() != cloud.positions.len() {
        return Err(Error::LengthMismatch {
            what: "offsets",
            expected: cloud.positions.len(),
            got: offsets.len(),
        });
    }
    let centroids = cloud
        .positions
        .iter()
        .zip(offsets)
        .map(|(&p, &d)| geom::add(p, d))
        .collect();
    Ok(ShiftedCloud { centroids })
}

/// One labeled ground-truth instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthInstance<S> {
    pub id: i32,
    #[serde(rename = "class")]
    pub semantic_class: u32,
    /// Member point indices, sorted strictly ascending.
    #[serde(rename = "indices")]
    pub point_indices: Vec<usize>,
    /// Arithmetic mean of member positions.
    pub centroid: Vec3<S>,
}

impl<S: Scalar> GroundTruthInstance<S> {
    /// Build from a member index set, computing the centroid from the cloud.
    pub fn new(
        id: i32,
        semantic_class: u32,
        mut point_indices: Vec<usize>,
        positions: &[Vec3<S>],
    ) -> Result<Self> {
        point_indices.sort_unstable();
        point_indices.dedup();
        if point_indices.is_empty() {
            return Err(Error::InvalidInput("instance with no points".into()));
        }
        if let Some(&max) = point_indices.last() {
            if max >= positions.len() {
                return Err(Error::LengthMismatch {
                    what: "instance point index",
                    expected: positions.len(),
                    got: max,
                });
            }
        }
        let mut sum = [S::zero(); 3];
        for &i in &point_indices {
            sum = geom::add(sum, positions[i]);
        }
        let n = S::from_count(point_indices.len());
        let centroid = [sum[0] / n, sum[1] / n, sum[2] / n];
        Ok(Self {
            id,
            semantic_class,
            point_indices,
            centroid,
        })
    }
}

/// Extract ground-truth instances from a cloud carrying `gt_instance_ids`
/// and `semantic_labels`. Points with id -1 belong to no instance.
pub fn gt_instances_from_cloud<S: Scalar>(
    cloud: &PointCloud<S>,
) -> Result<Vec<GroundTruthInstance<S>>> {
    let ids = cloud
        .gt_instance_ids
        .as_ref()
        .ok_or(Error::MissingField("gt_instance_ids"))?;
    let labels = cloud
        .semantic_labels
        .as_ref()
        .ok_or(Error::MissingField("semantic_labels"))?;
    let mut by_id: std::collections::BTreeMap<i32, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, &id) in ids.iter().enumerate() {
        if id >= 0 {
            by_id.entry(id).or_default().push(i);
        }
    }
    by_id
        .into_iter()
        .map(|(id, members)| {
            let class = labels[members[0]];
            GroundTruthInstance::new(id, class, members, &cloud.positions)
        })
        .collect()
}

/// Keep at most one point per occupied voxel of side `voxel_size`.
///
/// The representative is the member closest to the voxel center, ties
/// resolved to the lowest point index; averaging would invalidate
/// `gt_instance_ids`. Output order follows ascending surviving index, so
/// the operation is deterministic and idempotent at a fixed voxel size.
pub fn voxel_downsample<S: Scalar>(cloud: &PointCloud<S>, voxel_size: S) -> Result<PointCloud<S>> {
    if !(voxel_size > S::zero()) {
        return Err(Error::InvalidInput("voxel size must be positive".into()));
    }
    cloud.validate()?;
    let half = S::from_f64_const(0.5);
    let mut best: std::collections::HashMap<[i64; 3], (usize, S)> =
        std::collections::HashMap::new();
    for (i, &p) in cloud.positions.iter().enumerate() {
        let cell = voxel_cell(p, voxel_size);
        let center = [
            (S::from_i64(cell[0]).unwrap() + half) * voxel_size,
            (S::from_i64(cell[1]).unwrap() + half) * voxel_size,
            (S::from_i64(cell[2]).unwrap() + half) * voxel_size,
        ];
        let d = geom::dist_sq(p, center);
        match best.entry(cell) {
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert((i, d));
            }
            std::collections::hash_map::Entry::Occupied(mut e) => {
                let (bi, bd) = *e.get();
                if d < bd || (d == bd && i < bi) {
                    e.insert((i, d));
                }
            }
        }
    }
    let mut keep: Vec<usize> = best.values().map(|&(i, _)| i).collect();
    keep.sort_unstable();
    Ok(cloud.select(&keep))
}

/// Voxel cell coordinate of a point: `floor(p / voxel_size)` componentwise.
pub fn voxel_cell<S: Scalar>(p: Vec3<S>, voxel_size: S) -> [i64; 3] {
    [
        (p[0] / voxel_size).floor().to_i64().unwrap(),
        (p[1] / voxel_size).floor().to_i64().unwrap(),
        (p[2] / voxel_size).floor().to_i64().unwrap(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cloud3() -> PointCloud<f64> {
        PointCloud::from_positions(vec![[0.0, 0.0, 0.0], [1.0, 2.0, 3.0], [4.0, 5.0, 6.0]])
    }

    #[test]
    fn validate_rejects_length_mismatch() {
        let mut c = cloud3();
        c.offsets = Some(vec![[0.0; 3]; 2]);
        assert!(matches!(
            c.validate(),
            Err(Error::LengthMismatch { what: "offsets", .. })
        ));
    }

    #[test]
    fn validate_rejects_non_finite_positions() {
        let mut c = cloud3();
        c.positions[1][2] = f64::NAN;
        assert!(matches!(
            c.validate(),
            Err(Error::NonFinite { what: "positions", index: 1 })
        ));
    }

    #[test]
    fn shift_zero_offsets_is_identity() {
        let mut c = cloud3();
        c.offsets = Some(vec![[0.0; 3]; 3]);
        let s = shift_points(&c).unwrap();
        assert_eq!(s.centroids, c.positions);
    }

    #[test]
    fn shift_adds_componentwise() {
        let mut c = PointCloud::from_positions(vec![[1.0, 2.0, 3.0]]);
        c.offsets = Some(vec![[0.1, -0.2, 0.0]]);
        let s = shift_points(&c).unwrap();
        assert_eq!(s.centroids[0], [1.1, 1.8, 3.0]);
    }

    #[test]
    fn shift_requires_offsets() {
        let err = shift_points(&cloud3()).unwrap_err();
        assert!(err.to_string().contains("offsets required"));
    }

    #[test]
    fn argmax_ties_take_lowest_class() {
        let scores = RowMatrix::from_rows(&[vec![1.0, 1.0, 0.5], vec![0.0, 2.0, 2.0]]).unwrap();
        assert_eq!(labels_from_scores(&scores), vec![0, 1]);
    }

    #[test]
    fn centroid_is_mean_of_members() {
        let gt = GroundTruthInstance::new(
            0,
            1,
            vec![0, 2],
            &[[0.0, 0.0, 0.0], [9.0, 9.0, 9.0], [2.0, 4.0, 6.0]],
        )
        .unwrap();
        assert_eq!(gt.centroid, [1.0, 2.0, 3.0]);
    }

    #[test]
    fn voxel_same_cell_keeps_one() {
        let c = PointCloud::from_positions(vec![[0.005, 0.005, 0.005], [0.006, 0.005, 0.005]]);
        let out = voxel_downsample(&c, 0.02).unwrap();
        assert_eq!(out.len(), 1);
    }

    #[test]
    fn voxel_distinct_cells_keep_both() {
        let c = PointCloud::from_positions(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]);
        let out = voxel_downsample(&c, 0.02).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn voxel_rejects_non_positive_size() {
        assert!(voxel_downsample(&cloud3(), 0.0).is_err());
    }

    #[test]
    fn voxel_representative_is_nearest_to_center() {
        // Cell [0,0,0] with voxel 1.0 has center (0.5, 0.5, 0.5).
        let c = PointCloud::from_positions(vec![[0.1, 0.1, 0.1], [0.45, 0.5, 0.5]]);
        let out = voxel_downsample(&c, 1.0).unwrap();
        assert_eq!(out.positions, vec![[0.45, 0.5, 0.5]]);
    }

    #[test]
    fn voxel_filters_all_columns() {
        let mut c = cloud3();
        c.semantic_labels = Some(vec![7, 8, 9]);
        c.gt_instance_ids = Some(vec![0, 1, 2]);
        let out = voxel_downsample(&c, 0.5).unwrap();
        assert_eq!(out.len(), 3);
        assert_eq!(out.semantic_labels, Some(vec![7, 8, 9]));
    }

    #[test]
    fn voxel_matches_bruteforce_bucketing_and_is_idempotent() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let positions: Vec<[f64; 3]> = (0..10_000)
            .map(|_| {
                [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ]
            })
            .collect();
        let c = PointCloud::from_positions(positions.clone());
        let voxel = 0.02;
        let out = voxel_downsample(&c, voxel).unwrap();

        // Oracle: hash-map bucketing over cell coordinates.
        let mut buckets = std::collections::HashSet::new();
        for &p in &positions {
            buckets.insert(voxel_cell(p, voxel));
        }
        assert_eq!(out.len(), buckets.len());

        // Every surviving pair sits in a distinct cell.
        let mut seen = std::collections::HashSet::new();
        for &p in &out.positions {
            assert!(seen.insert(voxel_cell(p, voxel)));
        }

        let again = voxel_downsample(&out, voxel).unwrap();
        assert_eq!(again.positions, out.positions);
    }
}
