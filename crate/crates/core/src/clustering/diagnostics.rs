//! Elbow (distortion) and silhouette curves for choosing K.

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{build_dendrogram_nnchain, ClusterModel, Dendrogram};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KDiagnostics {
    pub k_values: Vec<usize>,
    /// Total within-cluster squared Euclidean distance to the centroid.
    pub distortion: Vec<f64>,
    /// Mean silhouette over all points, Euclidean distance.
    pub silhouette: Vec<f64>,
}

pub fn k_diagnostics(points: ArrayView2<'_, f32>, k_candidates: &[usize]) -> Result<KDiagnostics> {
    let dendrogram = build_dendrogram_nnchain(points)?;
    k_diagnostics_from(points, &dendrogram, k_candidates)
}

/// Same as [`k_diagnostics`] but reuses an existing dendrogram of `points`.
pub fn k_diagnostics_from(
    points: ArrayView2<'_, f32>,
    dendrogram: &Dendrogram,
    k_candidates: &[usize],
) -> Result<KDiagnostics> {
    let n = points.nrows();
    let mut k_values = k_candidates.to_vec();
    k_values.sort_unstable();
    k_values.dedup();
    if let Some(&k) = k_values.iter().find(|&&k| k < 2 || k + 1 > n) {
        return Err(Error::InvalidConfig(format!(
            "K candidate {k} outside [2, {}]",
            n.saturating_sub(1)
        )));
    }
    let mut distortion = Vec::with_capacity(k_values.len());
    let mut silhouette = Vec::with_capacity(k_values.len());
    for &k in &k_values {
        let model = dendrogram.cut(k)?;
        distortion.push(within_cluster_ss(points, &model));
        silhouette.push(mean_silhouette(points, &model));
    }
    Ok(KDiagnostics {
        k_values,
        distortion,
        silhouette,
    })
}

pub fn within_cluster_ss(points: ArrayView2<'_, f32>, model: &ClusterModel) -> f64 {
    let dim = points.ncols();
    let mut sum = vec![0.0f64; model.k * dim];
    let mut count = vec![0usize; model.k];
    for (row, &c) in points.rows().into_iter().zip(&model.assignment) {
        count[c] += 1;
        for (s, &v) in sum[c * dim..(c + 1) * dim].iter_mut().zip(row) {
            *s += v as f64;
        }
    }
    for (c, &cnt) in count.iter().enumerate() {
        sum[c * dim..(c + 1) * dim]
            .iter_mut()
            .for_each(|s| *s /= cnt as f64);
    }
    points
        .rows()
        .into_iter()
        .zip(&model.assignment)
        .map(|(row, &c)| {
            row.iter()
                .zip(&sum[c * dim..(c + 1) * dim])
                .map(|(&v, &m)| (v as f64 - m).powi(2))
                .sum::<f64>()
        })
        .sum()
}

/// Mean silhouette; points in singleton clusters score 0.
pub fn mean_silhouette(points: ArrayView2<'_, f32>, model: &ClusterModel) -> f64 {
    let n = points.nrows();
    let sizes: Vec<usize> = model.clusters().iter().map(Vec::len).collect();
    let mut total = 0.0;
    let mut per_cluster = vec![0.0f64; model.k];
    for i in 0..n {
        per_cluster.iter_mut().for_each(|s| *s = 0.0);
        let xi = points.row(i);
        for j in 0..n {
            if i == j {
                continue;
            }
            let d: f64 = xi
                .iter()
                .zip(points.row(j))
                .map(|(&a, &b)| (a as f64 - b as f64).powi(2))
                .sum::<f64>()
                .sqrt();
            per_cluster[model.assignment[j]] += d;
        }
        let own = model.assignment[i];
        if sizes[own] == 1 {
            continue;
        }
        let a = per_cluster[own] / (sizes[own] - 1) as f64;
        let b = (0..model.k)
            .filter(|&c| c != own)
            .map(|c| per_cluster[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / n as f64
}
