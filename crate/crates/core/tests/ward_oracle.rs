//! Both engines against a from-scratch Ward agglomeration written here.

use encoded_concepts::clustering::{build_dendrogram_naive, build_dendrogram_nnchain, Dendrogram};
use ndarray::Array2;
use proptest::prelude::*;

/// Merges the pair with the smallest Ward cost, recomputing every centroid
/// from the raw points at every step. Returns (leaf sets, heights).
fn brute_force_ward(points: &Array2<f32>) -> (Vec<Vec<usize>>, Vec<f64>) {
    let n = points.nrows();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut sets = Vec::new();
    let mut heights = Vec::new();
    let centroid = |members: &[usize]| -> Vec<f64> {
        let mut c = vec![0.0; points.ncols()];
        for &m in members {
            for (acc, &v) in c.iter_mut().zip(points.row(m)) {
                *acc += v as f64;
            }
        }
        c.iter_mut().for_each(|v| *v /= members.len() as f64);
        c
    };
    while clusters.len() > 1 {
        let cents: Vec<Vec<f64>> = clusters.iter().map(|c| centroid(c)).collect();
        let mut best = (f64::INFINITY, 0, 0);
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let (a, b) = (clusters[i].len() as f64, clusters[j].len() as f64);
                let d2: f64 = cents[i]
                    .iter()
                    .zip(&cents[j])
                    .map(|(x, y)| (x - y).powi(2))
                    .sum();
                let cost = 2.0 * a * b / (a + b) * d2;
                if cost < best.0 {
                    best = (cost, i, j);
                }
            }
        }
        let (h, i, j) = best;
        let mut merged = clusters[i].clone();
        merged.extend(&clusters[j]);
        merged.sort_unstable();
        clusters.remove(j);
        clusters[i] = merged.clone();
        sets.push(merged);
        heights.push(h);
    }
    (sets, heights)
}

fn assert_matches(d: &Dendrogram, sets: &[Vec<usize>], heights: &[f64]) {
    assert_eq!(d.merge_clusters(), sets);
    for (m, &h) in d.merges().iter().zip(heights) {
        assert!(
            (m.height - h).abs() <= 1e-9 * h.max(1e-12),
            "{} vs {h}",
            m.height
        );
    }
}

fn points(n: usize, d: usize) -> impl Strategy<Value = Array2<f32>> {
    prop::collection::vec(-100i32..100, n * d).prop_map(move |v| {
        Array2::from_shape_vec(
            (n, d),
            v.into_iter()
                .map(|x| x as f32 * 0.37 + 0.011 * (x % 7) as f32)
                .collect(),
        )
        .unwrap()
    })
}

fn distinct_costs(heights: &[f64]) -> bool {
    // Near-ties make the merge order depend on rounding; skip those inputs.
    let mut h = heights.to_vec();
    h.sort_by(f64::total_cmp);
    h.windows(2).all(|w| w[1] - w[0] > 1e-6 * w[1].max(1.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn engines_match_brute_force(pts in (2usize..40, 1usize..6).prop_flat_map(|(n, d)| points(n, d))) {
        let (sets, heights) = brute_force_ward(&pts);
        prop_assume!(distinct_costs(&heights));
        assert_matches(&build_dendrogram_nnchain(pts.view()).unwrap(), &sets, &heights);
        assert_matches(&build_dendrogram_naive(pts.view()).unwrap(), &sets, &heights);
    }

    #[test]
    fn cuts_are_nested(pts in (3usize..60, 1usize..5).prop_flat_map(|(n, d)| points(n, d))) {
        let d = build_dendrogram_nnchain(pts.view()).unwrap();
        let n = pts.nrows();
        prop_assert_eq!(d.height_violations(), 0);
        for k in 1..n {
            let fine = d.cut(k + 1).unwrap();
            let coarse = d.cut(k).unwrap();
            prop_assert_eq!(coarse.k, k);
            prop_assert_eq!(fine.k, k + 1);
            // Rows together at k + 1 stay together at k.
            for i in 0..n {
                for j in 0..n {
                    if fine.assignment[i] == fine.assignment[j] {
                        prop_assert_eq!(coarse.assignment[i], coarse.assignment[j]);
                    }
                }
            }
        }
    }
}

#[test]
fn textbook_example() {
    // 1-D points 0, 1, 10, 11, 30: pairs first, then the two pairs, then 30.
    let pts = Array2::from_shape_vec((5, 1), vec![0.0, 1.0, 10.0, 11.0, 30.0]).unwrap();
    let (sets, heights) = brute_force_ward(&pts);
    assert_eq!(
        sets,
        vec![
            vec![0, 1],
            vec![2, 3],
            vec![0, 1, 2, 3],
            vec![0, 1, 2, 3, 4]
        ]
    );
    // Pair merges cost ||x - y||^2 = 1; the two pairs: 2*2*2/4 * 10^2 = 200;
    // 30 joins centroid 5.5 of four points: 2*4*1/5 * 24.5^2 = 960.4.
    assert_eq!(heights[..3], [1.0, 1.0, 200.0]);
    assert!((heights[3] - 960.4).abs() < 1e-9);
    assert_matches(
        &build_dendrogram_nnchain(pts.view()).unwrap(),
        &sets,
        &heights,
    );
    assert_matches(
        &build_dendrogram_naive(pts.view()).unwrap(),
        &sets,
        &heights,
    );
}
