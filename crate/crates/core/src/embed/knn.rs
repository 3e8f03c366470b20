//! Exact squared-distance matrices and k-NN radii.

use rayon::prelude::*;

use crate::dataio::EmbeddingSet;

#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Row-major `a.rows() × b.rows()` squared Euclidean distances.
pub fn cross_sq_dists(a: &EmbeddingSet, b: &EmbeddingSet) -> Vec<f64> {
    let nb = b.rows();
    let mut out = vec![0.0; a.rows() * nb];
    out.par_chunks_mut(nb.max(1)).enumerate().for_each(|(i, row)| {
        let ai = a.row(i);
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = sq_dist(ai, b.row(j));
        }
    });
    out
}

/// Squared distance from each point to its k-th nearest neighbour in the
/// same set, excluding itself by index (duplicates at distance 0 count).
pub fn kth_nn_sq_radii(self_dists: &[f64], n: usize, k: usize) -> Vec<f64> {
    debug_assert!(k >= 1 && k < n);
    (0..n)
        .map(|i| {
            let mut others: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| self_dists[i * n + j]).collect();
            let (_, kth, _) = others.select_nth_unstable_by(k - 1, f64::total_cmp);
            *kth
        })
        .collect()
}

/// Index and squared distance of each row's nearest column; ties go to the
/// lowest column index.
pub fn nearest(dists: &[f64], rows: usize, cols: usize) -> Vec<(usize, f64)> {
    (0..rows)
        .map(|i| {
            let row = &dists[i * cols..(i + 1) * cols];
            let mut best = (0, row[0]);
            for (j, &d) in row.iter().enumerate().skip(1) {
                if d < best.1 {
                    best = (j, d);
                }
            }
            best
        })
        .collect()
}
