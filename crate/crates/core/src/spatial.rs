//! Fixed-radius neighbor queries over 3D points via a uniform grid hash,
//! plus an exhaustive linear-scan oracle for testing.
//!
//! The radius predicate is strictly `distance < r`, applied to squared
//! quantities so no square root ever runs. The index is immutable after
//! build; concurrent queries are safe.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::{self, Vec3};
use crate::scalar::Scalar;

/// Uniform grid over 3D points. A point at `p` lives in the cell
/// `floor(p / cell_size)` componentwise; each point index appears in
/// exactly one cell, and cell member lists are sorted ascending.
#[derive(Debug, Clone)]
pub struct GridIndex<S> {
    cell_size: S,
    cells: HashMap<[i64; 3], Vec<usize>>,
    point_count: usize,
}

impl<S: Scalar> GridIndex<S> {
    /// Bucket `points` into cells of side `cell_size`.
    pub fn build(points: &[Vec3<S>], cell_size: S) -> Result<Self> {
        if !(cell_size > S::zero()) || !cell_size.is_finite() {
            return Err(Error::InvalidInput("cell size must be positive".into()));
        }
        let mut cells: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, &p) in points.iter().enumerate() {
            cells.entry(cell_of(p, cell_size)).or_default().push(i);
        }
        // Insertion order is ascending already; the sort documents the
        // contract and keeps it independent of build strategy.
        for members in cells.values_mut() {
            members.sort_unstable();
        }
        Ok(Self {
            cell_size,
            cells,
            point_count: points.len(),
        })
    }

    pub fn cell_size(&self) -> S {
        self.cell_size
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn cells(&self) -> &HashMap<[i64; 3], Vec<usize>> {
        &self.cells
    }

    /// Indices of all points strictly closer than `radius` to `query`,
    /// ascending. `points` must be the slice the index was built from.
    ///
    /// Works for any positive radius; when `radius <= cell_size` the scan
    /// touches at most 27 cells.
    pub fn neighbors_within(&self, points: &[Vec3<S>], query: Vec3<S>, radius: S) -> Vec<usize> {
        let mut out = Vec::new();
        self.neighbors_within_into(points, query, radius, &mut out);
        out
    }

    /// Allocation-reusing form of [`Self::neighbors_within`].
    pub fn neighbors_within_into(
        &self,
        points: &[Vec3<S>],
        query: Vec3<S>,
        radius: S,
        out: &mut Vec<usize>,
    ) {
        out.clear();
        self.for_each_within(points, query, radius, |i| out.push(i));
        out.sort_unstable();
    }

    /// Visit every index strictly closer than `radius` to `query`, in an
    /// unspecified order. The cheap path for callers that do not need the
    /// sorted contract (connected-components construction is order-free).
    pub fn for_each_within(
        &self,
        points: &[Vec3<S>],
        query: Vec3<S>,
        radius: S,
        mut visit: impl FnMut(usize),
    ) {
        if !(radius > S::zero()) {
            return;
        }
        let r_sq = radius * radius;
        let lo = cell_of(
            [query[0] - radius, query[1] - radius, query[2] - radius],
            self.cell_size,
        );
        let hi = cell_of(
            [query[0] + radius, query[1] + radius, query[2] + radius],
            self.cell_size,
        );
        for cx in lo[0]..=hi[0] {
            for cy in lo[1]..=hi[1] {
                for cz in lo[2]..=hi[2] {
                    if let Some(members) = self.cells.get(&[cx, cy, cz]) {
                        for &i in members {
                            if geom::dist_sq(points[i], query) < r_sq {
                                visit(i);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Cell coordinate of a point.
#[inline]
pub fn cell_of<S: Scalar>(p: Vec3<S>, cell_size: S) -> [i64; 3] {
    [
        (p[0] / cell_size).floor().to_i64().unwrap(),
        (p[1] / cell_size).floor().to_i64().unwrap(),
        (p[2] / cell_size).floor().to_i64().unwrap(),
    ]
}

/// Exhaustive-scan reference for [`GridIndex::neighbors_within`]: indices
/// strictly closer than `radius` to `query`, ascending.
pub fn brute_neighbors<S: Scalar>(points: &[Vec3<S>], query: Vec3<S>, radius: S) -> Vec<usize> {
    let r_sq = radius * radius;
    points
        .iter()
        .enumerate()
        .filter(|&(_, &p)| geom::dist_sq(p, query) < r_sq)
        .map(|(i, _)| i)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn single_point_single_cell() {
        let pts = [[0.0f64, 0.0, 0.0]];
        let idx = GridIndex::build(&pts, 1.0).unwrap();
        assert_eq!(idx.cells().len(), 1);
        assert_eq!(idx.cells()[&[0, 0, 0]], vec![0]);
    }

    #[test]
    fn points_land_in_floor_cells() {
        let pts = [[0.5f64, 0.0, 0.0], [1.5, 0.0, 0.0], [-0.1, 0.0, 0.0]];
        let idx = GridIndex::build(&pts, 1.0).unwrap();
        assert_eq!(idx.cells()[&[0, 0, 0]], vec![0]);
        assert_eq!(idx.cells()[&[1, 0, 0]], vec![1]);
        assert_eq!(idx.cells()[&[-1, 0, 0]], vec![2]);
    }

    #[test]
    fn build_rejects_bad_cell_size() {
        let pts = [[0.0f64; 3]];
        assert!(GridIndex::build(&pts, 0.0).is_err());
        assert!(GridIndex::build(&pts, -1.0).is_err());
    }

    #[test]
    fn every_index_in_exactly_one_cell() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<[f64; 3]> = (0..10_000)
            .map(|_| [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)])
            .collect();
        let idx = GridIndex::build(&pts, 0.25).unwrap();
        let mut all: Vec<usize> = idx.cells().values().flatten().copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10_000).collect::<Vec<_>>());
    }

    #[test]
    fn self_query_within_epsilon() {
        let pts = [[1.0f64, 2.0, 3.0], [10.0, 10.0, 10.0]];
        let idx = GridIndex::build(&pts, 1.0).unwrap();
        assert_eq!(idx.neighbors_within(&pts, pts[0], 1e-9), vec![0]);
    }

    #[test]
    fn boundary_is_exclusive() {
        let pts = [[0.0f64, 0.0, 0.0], [0.5, 0.0, 0.0]];
        let idx = GridIndex::build(&pts, 0.5).unwrap();
        // Exactly radius apart: excluded by the strict predicate.
        assert_eq!(idx.neighbors_within(&pts, pts[0], 0.5), vec![0]);
        let brute = brute_neighbors(&pts, pts[0], 0.5);
        assert_eq!(brute, vec![0]);
    }

    #[test]
    fn brute_tiny_radius_finds_only_duplicates() {
        let pts = [[1.0f64, 1.0, 1.0], [1.0, 1.0, 1.0], [1.0, 1.0, 1.0 + 1e-6]];
        // Near-zero radius (small enough that nothing but an exact
        // duplicate can be strictly closer).
        let got = brute_neighbors(&pts, [1.0, 1.0, 1.0], 1e-12);
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn brute_huge_radius_finds_all() {
        let pts = [[0.0f64; 3], [1.0, 1.0, 1.0], [-2.0, 0.0, 3.0]];
        let got = brute_neighbors(&pts, [0.0, 0.0, 0.0], 100.0);
        assert_eq!(got, vec![0, 1, 2]);
    }

    #[test]
    fn grid_matches_linear_scan() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let pts: Vec<[f64; 3]> = (0..1000)
            .map(|_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)])
            .collect();
        for trial in 0..100 {
            let q = [
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
                rng.gen_range(-1.2..1.2),
            ];
            // Radii both below and above the cell size.
            let radius = rng.gen_range(0.01..0.6);
            let cell = rng.gen_range(0.05..0.3);
            let idx = GridIndex::build(&pts, cell).unwrap();
            let got = idx.neighbors_within(&pts, q, radius);
            let want = brute_neighbors(&pts, q, radius);
            assert_eq!(got, want, "trial {trial} radius {radius} cell {cell}");
        }
    }
}
