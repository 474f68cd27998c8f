//! Agglomerative clustering with Ward's minimum-variance criterion.
//!
//! Dissimilarities start as squared Euclidean distances and are updated with
//! the Lance–Williams Ward recurrence; no ½ factor and no square root are
//! applied, so a merge of two singletons sits at height `‖x − y‖²`.
//!
//! Two engines produce the same [`Dendrogram`]:
//! - [`nnchain`], the nearest-neighbour chain over cluster centroids, which
//!   needs `O(N·D)` memory and is the one to use on real data;
//! - [`naive`], the textbook `O(N³)` search over a full dissimilarity matrix,
//!   kept as a reference for testing.

pub mod diagnostics;
pub mod metrics;
pub mod naive;
pub mod nnchain;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::corpus::WordOccurrence;
use crate::error::{Error, Result};

pub use diagnostics::{k_diagnostics, KDiagnostics};
pub use metrics::adjusted_rand_index;
pub use naive::build_dendrogram_naive;
pub use nnchain::build_dendrogram_nnchain;

/// One agglomeration step. Node ids `0..N` are leaves; the merge at index
/// `i` creates node `N + i`. `left < right` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n_leaves: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    /// Wraps a merge list after checking the structural invariants: exactly
    /// `N − 1` merges, each node used once, sizes adding up, heights
    /// non-decreasing.
    pub fn new(n_leaves: usize, merges: Vec<Merge>) -> Result<Self> {
        let d = Dendrogram { n_leaves, merges };
        d.check()?;
        Ok(d)
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Number of adjacent merge pairs whose height decreases.
    pub fn height_violations(&self) -> usize {
        self.merges
            .windows(2)
            .filter(|w| w[1].height < w[0].height)
            .count()
    }

    fn check(&self) -> Result<()> {
        let n = self.n_leaves;
        if n == 0 {
            return Err(Error::Invariant("dendrogram without leaves".into()));
        }
        if self.merges.len() != n - 1 {
            return Err(Error::Invariant(format!(
                "{} merges for {n} leaves",
                self.merges.len()
            )));
        }
        let mut size = vec![1usize; n];
        size.resize(2 * n - 1, 0);
        let mut used = vec![false; 2 * n - 1];
        for (i, m) in self.merges.iter().enumerate() {
            let node = n + i;
            for child in [m.left, m.right] {
                if child >= node || used[child] {
                    return Err(Error::Invariant(format!(
                        "merge {i} reuses or forward-references node {child}"
                    )));
                }
                used[child] = true;
            }
            if m.left >= m.right {
                return Err(Error::Invariant(format!(
                    "merge {i} is not ordered left < right"
                )));
            }
            if m.size != size[m.left] + size[m.right] {
                return Err(Error::Invariant(format!(
                    "merge {i} has wrong size {}",
                    m.size
                )));
            }
            if !(m.height.is_finite() && m.height >= 0.0) {
                return Err(Error::Invariant(format!(
                    "merge {i} has height {}",
                    m.height
                )));
            }
            size[node] = m.size;
        }
        match self.height_violations() {
            0 => Ok(()),
            v => Err(Error::Invariant(format!("{v} merge heights decrease"))),
        }
    }

    /// Leaf sets created by each merge, in merge order.
    pub fn merge_clusters(&self) -> Vec<Vec<usize>> {
        let n = self.n_leaves;
        let mut nodes: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut out = Vec::with_capacity(self.merges.len());
        for m in &self.merges {
            let mut leaves = nodes[m.left].clone();
            leaves.extend_from_slice(&nodes[m.right]);
            leaves.sort_unstable();
            nodes.push(leaves.clone());
            out.push(leaves);
        }
        out
    }

    /// Flat clustering with `k` clusters: undo the last `k − 1` merges.
    /// Cluster ids are dense and ordered by each cluster's smallest leaf.
    pub fn cut(&self, k: usize) -> Result<ClusterModel> {
        let n = self.n_leaves;
        if k == 0 || k > n {
            return Err(Error::KOutOfRange { k, n });
        }
        let mut uf = UnionFind::new(n);
        // Every node id maps to one of its leaves.
        let mut rep: Vec<usize> = (0..n).collect();
        for m in &self.merges[..n - k] {
            let (a, b) = (rep[m.left], rep[m.right]);
            uf.union(a, b);
            rep.push(a);
        }
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        let assignment = (0..n)
            .map(|leaf| {
                let root = uf.find(leaf);
                if label_of_root[root] == usize::MAX {
                    label_of_root[root] = next;
                    next += 1;
                }
                label_of_root[root]
            })
            .collect();
        debug_assert_eq!(next, k);
        Ok(ClusterModel {
            k,
            assignment,
            layer: 0,
        })
    }

    /// Writes the `merge_index\tleft\tright\theight\tnew_size` export.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
        writeln!(out, "merge_index\tleft\tright\theight\tnew_size").map_err(io)?;
        for (i, m) in self.merges.iter().enumerate() {
            writeln!(
                out,
                "{i}\t{}\t{}\t{}\t{}",
                m.left, m.right, m.height, m.size
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

/// Flat assignment of rows to `k` dense cluster ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub assignment: Vec<usize>,
    pub layer: usize,
}

impl ClusterModel {
    pub fn with_layer(mut self, layer: usize) -> Self {
        self.layer = layer;
        self
    }

    /// Builds a model from arbitrary labels, relabeling densely by first row.
    pub fn from_labels(labels: &[usize], layer: usize) -> Self {
        let mut map = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        ClusterModel {
            k: map.len(),
            assignment,
            layer,
        }
    }

    /// Row indices per cluster, in cluster id order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (row, &c) in self.assignment.iter().enumerate() {
            out[c].push(row);
        }
        out
    }

    /// Writes the `cluster_id\tword\tsentence_id\tposition` export.
    pub fn write_tsv(
        &self,
        keys: &[WordOccurrence],
        word: impl Fn(u32) -> String,
        path: impl AsRef<Path>,
    ) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
        writeln!(out, "cluster_id\tword\tsentence_id\tposition").map_err(io)?;
        let mut rows: Vec<(usize, usize)> = self
            .assignment
            .iter()
            .copied()
            .enumerate()
            .map(|(r, c)| (c, r))
            .collect();
        rows.sort_unstable();
        for (c, r) in rows {
            let k = keys[r];
            writeln!(
                out,
                "{c}\t{}\t{}\t{}",
                word(k.word_id),
                k.sentence_id,
                k.position
            )
            .map_err(io)?;
        }
        out.flush().map_err(io)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    #[default]
    Nnchain,
    Naive,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nnchain" => Ok(Engine::Nnchain),
            "naive" => Ok(Engine::Naive),
            other => Err(Error::InvalidConfig(format!("unknown engine {other:?}"))),
        }
    }
}

pub fn build_dendrogram(points: ArrayView2<'_, f32>, engine: Engine) -> Result<Dendrogram> {
    match engine {
        Engine::Nnchain => build_dendrogram_nnchain(points),
        Engine::Naive => build_dendrogram_naive(points),
    }
}

pub(crate) fn validate_points(points: &ArrayView2<'_, f32>) -> Result<()> {
    if points.nrows() == 0 || points.ncols() == 0 {
        return Err(Error::EmptyInput);
    }
    for ((row, column), v) in points.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFiniteInput { row, column });
        }
    }
    Ok(())
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Joins two sets; the smaller root survives.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[drop] = keep;
        keep
    }
}
