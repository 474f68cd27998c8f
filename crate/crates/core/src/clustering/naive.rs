//! Reference Ward clustering: full dissimilarity matrix, exhaustive pair
//! search at every step, Lance–Williams updates. `O(N²)` memory, `O(N³)` time.

use ndarray::ArrayView2;

use super::{validate_points, Dendrogram, Merge};
use crate::error::Result;

/// Builds the Ward dendrogram by repeatedly merging the closest pair.
///
/// Ties on dissimilarity go to the lexicographically smallest
/// `(min node id, max node id)` pair.
pub fn build_dendrogram_naive(points: ArrayView2<'_, f32>) -> Result<Dendrogram> {
    validate_points(&points)?;
    let n = points.nrows();

    let mut dist = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d: f64 = points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(&a, &b)| {
                    let t = a as f64 - b as f64;
                    t * t
                })
                .sum();
            dist[i * n + j] = d;
            dist[j * n + i] = d;
        }
    }

    // Slot s holds the cluster whose node id is node[s].
    let mut node: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));

    for step in 0..n.saturating_sub(1) {
        let mut best: Option<(f64, usize, usize, usize, usize)> = None;
        for (ai, &a) in active.iter().enumerate() {
            for &b in &active[ai + 1..] {
                let d = dist[a * n + b];
                let (lo, hi) = (node[a].min(node[b]), node[a].max(node[b]));
                let better = match best {
                    None => true,
                    Some((bd, blo, bhi, _, _)) => d < bd || (d == bd && (lo, hi) < (blo, bhi)),
                };
                if better {
                    best = Some((d, lo, hi, a, b));
                }
            }
        }
        let (height, lo, hi, a, b) = best.expect("at least two active clusters");
        let (na, nb) = (size[a] as f64, size[b] as f64);
        let d_ab = dist[a * n + b];
        for &k in &active {
            if k == a || k == b {
                continue;
            }
            let nk = size[k] as f64;
            let updated = ((na + nk) * dist[a * n + k] + (nb + nk) * dist[b * n + k] - nk * d_ab)
                / (na + nb + nk);
            dist[a * n + k] = updated;
            dist[k * n + a] = updated;
        }
        size[a] += size[b];
        node[a] = n + step;
        active.retain(|&s| s != b);
        merges.push(Merge {
            left: lo,
            right: hi,
            height,
            size: size[a],
        });
    }

    Dendrogram::new(n, merges)
}
