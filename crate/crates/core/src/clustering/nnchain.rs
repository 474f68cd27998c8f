//! Nearest-neighbour-chain Ward clustering over centroids.
//!
//! With squared Euclidean starting dissimilarities, the Lance–Williams Ward
//! recurrence has the closed form
//!
//! ```text
//! d(A, B) = 2·|A|·|B| / (|A| + |B|) · ‖μ_A − μ_B‖²
//! ```
//!
//! so only centroids and sizes are kept: `O(N·D)` memory, no pairwise matrix.
//! Ward is reducible, which lets the chain merge reciprocal nearest
//! neighbours out of global order; merges are sorted by height afterwards.

use ndarray::ArrayView2;

use super::{validate_points, Dendrogram, Merge, UnionFind};
use crate::error::{Error, Result};

struct Centroids {
    dim: usize,
    data: Vec<f64>,
    size: Vec<usize>,
}

impl Centroids {
    fn row(&self, slot: usize) -> &[f64] {
        &self.data[slot * self.dim..(slot + 1) * self.dim]
    }

    fn ward(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.size[a] as f64, self.size[b] as f64);
        2.0 * na * nb / (na + nb) * squared_distance(self.row(a), self.row(b))
    }

    /// Folds `b` into `a`.
    fn merge(&mut self, a: usize, b: usize) {
        let (na, nb) = (self.size[a] as f64, self.size[b] as f64);
        let total = na + nb;
        let dim = self.dim;
        for j in 0..dim {
            let va = self.data[a * dim + j];
            let vb = self.data[b * dim + j];
            self.data[a * dim + j] = (na * va + nb * vb) / total;
        }
        self.size[a] += self.size[b];
        self.size[b] = 0;
    }
}

/// Eight independent accumulators so the loop vectorizes.
fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            let t = x[i] - y[i];
            acc[i] += t * t;
        }
    }
    let mut sum = ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        let t = x - y;
        sum += t * t;
    }
    sum
}

pub fn build_dendrogram_nnchain(points: ArrayView2<'_, f32>) -> Result<Dendrogram> {
    validate_points(&points)?;
    let n = points.nrows();
    let mut cents = Centroids {
        dim: points.ncols(),
        data: points.iter().map(|&v| v as f64).collect(),
        size: vec![1; n],
    };

    // Merges in discovery order, as (slot, slot, height). A merged cluster
    // keeps the smaller slot, which is also its smallest leaf.
    let mut raw: Vec<(usize, usize, f64)> = Vec::with_capacity(n.saturating_sub(1));
    let mut alive: Vec<usize> = (0..n).collect();
    let mut chain: Vec<usize> = Vec::new();

    while alive.len() > 1 {
        if chain.is_empty() {
            chain.push(alive[0]);
        }
        let (a, b, height) = loop {
            let a = *chain.last().unwrap();
            let prev = chain.len().checked_sub(2).map(|i| chain[i]);
            let (b, d) = nearest(&cents, &alive, a, prev);
            if Some(b) == prev {
                break (a, b, d);
            }
            chain.push(b);
        };
        chain.truncate(chain.len() - 2);

        let (keep, gone) = (a.min(b), a.max(b));
        cents.merge(keep, gone);
        if let Ok(i) = alive.binary_search(&gone) {
            alive.remove(i);
        }
        raw.push((keep, gone, height));
    }

    Dendrogram::new(n, relabel(n, raw)?)
}

/// Nearest active neighbour of `a`. Ties go to the chain predecessor when it
/// is among them, otherwise to the smallest slot.
fn nearest(cents: &Centroids, alive: &[usize], a: usize, prev: Option<usize>) -> (usize, f64) {
    let mut best: Option<(usize, f64)> = None;
    for &k in alive {
        if k == a {
            continue;
        }
        let d = cents.ward(a, k);
        let better = match best {
            None => true,
            Some((current, best_d)) => d < best_d || (d == best_d && tie_prefers(k, current, prev)),
        };
        if better {
            best = Some((k, d));
        }
    }
    best.expect("at least two active clusters")
}

fn tie_prefers(candidate: usize, current: usize, prev: Option<usize>) -> bool {
    if Some(current) == prev {
        false
    } else {
        Some(candidate) == prev || candidate < current
    }
}

/// Sorts chain-order merges by height and renames slots to node ids.
///
/// Sorting keys on the running maximum height along each merge's subtree, so
/// a parent can never be ordered before its children even if rounding leaves
/// it a hair lower; the reported height is that key.
fn relabel(n: usize, raw: Vec<(usize, usize, f64)>) -> Result<Vec<Merge>> {
    let mut subtree_max = vec![0.0f64; n];
    let mut keyed = Vec::with_capacity(raw.len());
    for (i, &(a, b, h)) in raw.iter().enumerate() {
        let key = h.max(subtree_max[a]).max(subtree_max[b]);
        subtree_max[a] = key;
        keyed.push((key, i));
    }
    keyed.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));

    let mut uf = UnionFind::new(n);
    let mut node_of_root: Vec<usize> = (0..n).collect();
    let mut size_of_root = vec![1usize; n];
    let mut merges = Vec::with_capacity(raw.len());
    for (step, &(height, i)) in keyed.iter().enumerate() {
        let (a, b, _) = raw[i];
        let (ra, rb) = (uf.find(a), uf.find(b));
        if ra == rb {
            return Err(Error::Invariant(
                "chain merged a cluster with itself".into(),
            ));
        }
        let (na, nb) = (node_of_root[ra], node_of_root[rb]);
        let size = size_of_root[ra] + size_of_root[rb];
        let root = uf.union(ra, rb);
        node_of_root[root] = n + step;
        size_of_root[root] = size;
        merges.push(Merge {
            left: na.min(nb),
            right: na.max(nb),
            height,
            size,
        });
    }
    Ok(merges)
}
