//! Hierarchical point grouping: progressive same-semantic radius clustering
//! producing a multi-scale union of groups.
//!
//! Round 1 clusters points into connected components of the "same label and
//! distance < r1" graph (single linkage). Each later round h merges groups
//! of equal class whose minimum inter-point distance is below the round's
//! radius `r_h`, with `r_{h-1} < r_h`. The merged output is the union of
//! all rounds with exact-duplicate point sets removed (earliest round wins)
//! and groups below the minimum size dropped.

use std::collections::HashSet;

use crate::cloud::{PointCloud, ShiftedCloud};
use crate::config::{ClusterSpace, PipelineConfig};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Scalar;
use crate::spatial::GridIndex;

/// A candidate instance: a semantically pure set of point indices produced
/// by some grouping round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    /// Member point indices, sorted strictly ascending.
    pub point_indices: Vec<usize>,
    pub semantic_class: u32,
    /// 1-based round that produced this group.
    pub round: usize,
}

impl Group {
    pub fn len(&self) -> usize {
        self.point_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.point_indices.is_empty()
    }

    fn first(&self) -> usize {
        self.point_indices[0]
    }
}

/// Output of the full hierarchy: the per-round group lists and the merged,
/// deduplicated, size-filtered union.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupingResult {
    pub rounds: Vec<Vec<Group>>,
    pub merged: Vec<Group>,
}

/// Union-find over `0..n`, path halving plus union by size.
#[derive(Debug, Clone)]
pub(crate) struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<u32>,
}

impl DisjointSet {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

fn sort_groups(groups: &mut [Group]) {
    groups.sort_by_key(|g| (g.semantic_class, g.first()));
}

/// Round-1 clustering: connected components of the graph joining points
/// with equal, non-ignored labels at distance strictly below `r1`.
/// Points with ignored labels belong to no group.
pub fn cluster_round1<S: Scalar>(
    coords: &[Vec3<S>],
    labels: &[u32],
    ignored: &HashSet<u32>,
    r1: S,
) -> Result<Vec<Group>> {
    if coords.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "labels",
            expected: coords.len(),
            got: labels.len(),
        });
    }
    if !(r1 > S::zero()) {
        return Err(Error::InvalidInput("clustering radius must be positive".into()));
    }

    let index = GridIndex::build(coords, r1)?;
    let mut dsu = DisjointSet::new(coords.len());
    for i in 0..coords.len() {
        if ignored.contains(&labels[i]) {
            continue;
        }
        index.for_each_within(coords, coords[i], r1, |j| {
            if j > i && labels[j] == labels[i] {
                dsu.union(i, j);
            }
        });
    }

    collect_components(&mut dsu, labels, ignored, 1)
}

fn collect_components(
    dsu: &mut DisjointSet,
    labels: &[u32],
    ignored: &HashSet<u32>,
    round: usize,
) -> Result<Vec<Group>> {
    let mut by_root: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for (i, label) in labels.iter().enumerate() {
        if ignored.contains(label) {
            continue;
        }
        by_root.entry(dsu.find(i)).or_default().push(i);
    }
    let mut groups: Vec<Group> = by_root
        .into_values()
        .map(|members| {
            // Members were pushed in ascending order.
            let class = labels[members[0]];
            Group {
                point_indices: members,
                semantic_class: class,
                round,
            }
        })
        .collect();
    sort_groups(&mut groups);
    Ok(groups)
}

/// Merge round: connected components over `prev` whose edges join
/// same-class groups containing a cross-group point pair at distance
/// strictly below `r_h`. Existence of such a pair is equivalent to the
/// minimum inter-point distance being below `r_h`.
pub fn merge_round<S: Scalar>(
    prev: &[Group],
    coords: &[Vec3<S>],
    r_h: S,
    round: usize,
) -> Result<Vec<Group>> {
    if !(r_h > S::zero()) {
        return Err(Error::InvalidInput("merge radius must be positive".into()));
    }
    const NONE: usize = usize::MAX;
    let mut group_of = vec![NONE; coords.len()];
    for (g, group) in prev.iter().enumerate() {
        for &i in &group.point_indices {
            if i >= coords.len() {
                return Err(Error::LengthMismatch {
                    what: "group point index",
                    expected: coords.len(),
                    got: i,
                });
            }
            group_of[i] = g;
        }
    }

    let index = GridIndex::build(coords, r_h)?;
    let mut dsu = DisjointSet::new(prev.len());
    for i in 0..coords.len() {
        let gi = group_of[i];
        if gi == NONE {
            continue;
        }
        index.for_each_within(coords, coords[i], r_h, |j| {
            let gj = group_of[j];
            if j > i
                && gj != NONE
                && gj != gi
                && prev[gi].semantic_class == prev[gj].semantic_class
            {
                dsu.union(gi, gj);
            }
        });
    }

    let mut by_root: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for g in 0..prev.len() {
        by_root.entry(dsu.find(g)).or_default().push(g);
    }
    let mut groups: Vec<Group> = by_root
        .into_values()
        .map(|members| {
            let mut point_indices: Vec<usize> = members
                .iter()
                .flat_map(|&g| prev[g].point_indices.iter().copied())
                .collect();
            point_indices.sort_unstable();
            Group {
                point_indices,
                semantic_class: prev[members[0]].semantic_class,
                round,
            }
        })
        .collect();
    sort_groups(&mut groups);
    Ok(groups)
}

/// Run every round of the hierarchy and assemble the merged group set.
///
/// Clustering coordinates come from `shifted` centroids or the raw cloud
/// positions depending on `cfg.cluster_space`.
pub fn hierarchical_group<S: Scalar>(
    cloud: &PointCloud<S>,
    shifted: &ShiftedCloud<S>,
    cfg: &PipelineConfig<S>,
) -> Result<GroupingResult> {
    cfg.validate()?;
    let labels = cloud
        .semantic_labels
        .as_ref()
        .ok_or(Error::MissingField("semantic_labels"))?;
    let coords: &[Vec3<S>] = match cfg.cluster_space {
        ClusterSpace::Shifted => &shifted.centroids,
        ClusterSpace::Original => &cloud.positions,
    };
    if coords.len() != labels.len() {
        return Err(Error::LengthMismatch {
            what: "cluster coordinates",
            expected: labels.len(),
            got: coords.len(),
        });
    }
    let ignored: HashSet<u32> = cfg.ignored_classes.iter().copied().collect();

    let mut rounds: Vec<Vec<Group>> = Vec::with_capacity(cfg.num_rounds());
    rounds.push(cluster_round1(coords, labels, &ignored, cfg.radii[0])?);
    for (h, &r) in cfg.radii.iter().enumerate().skip(1) {
        let next = merge_round(&rounds[h - 1], coords, r, h + 1)?;
        rounds.push(next);
    }

    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut merged: Vec<Group> = Vec::new();
    for round in &rounds {
        for g in round {
            if g.len() < cfg.min_group_size {
                continue;
            }
            if seen.insert(g.point_indices.clone()) {
                merged.push(g.clone());
            }
        }
    }
    merged.sort_by_key(|g| (g.round, g.semantic_class, g.first()));

    Ok(GroupingResult { rounds, merged })
}
