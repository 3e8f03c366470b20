//! k-NN manifold metrics: improved precision/recall, density/coverage, and
//! the authenticity percentage.
//!
//! All comparisons use squared Euclidean distances; `≤` against a k-NN
//! radius is inclusive.

use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};

use super::knn::{cross_sq_dists, kth_nn_sq_radii, nearest};

pub const DEFAULT_K: usize = 3;

fn check(r: &EmbeddingSet, s: &EmbeddingSet, k: usize) -> Result<()> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let got = r.rows().min(s.rows());
    if got <= k {
        return Err(Error::invalid(format!(
            "k={k} must be smaller than the row count of each set (min rows {got})"
        )));
    }
    Ok(())
}

/// Fraction of `queries` that land inside at least one reference ball.
fn inside_any_ball(query_to_ref: &[f64], n_query: usize, radii: &[f64]) -> f64 {
    let n_ref = radii.len();
    let hits = (0..n_query)
        .filter(|&q| {
            let row = &query_to_ref[q * n_ref..(q + 1) * n_ref];
            row.iter().zip(radii).any(|(d, r)| d <= r)
        })
        .count();
    hits as f64 / n_query as f64
}

/// `(precision, recall)` with k-th-neighbour balls around each point.
pub fn precision_recall(r: &EmbeddingSet, s: &EmbeddingSet, k: usize) -> Result<(f64, f64)> {
    check(r, s, k)?;
    let rr = cross_sq_dists(r, r);
    let ss = cross_sq_dists(s, s);
    let sr = cross_sq_dists(s, r);
    let rs = cross_sq_dists(r, s);
    let real_radii = kth_nn_sq_radii(&rr, r.rows(), k);
    let syn_radii = kth_nn_sq_radii(&ss, s.rows(), k);
    let precision = inside_any_ball(&sr, s.rows(), &real_radii);
    let recall = inside_any_ball(&rs, r.rows(), &syn_radii);
    Ok((precision, recall))
}

/// `(density, coverage)`; density may exceed 1.
pub fn density_coverage(r: &EmbeddingSet, s: &EmbeddingSet, k: usize) -> Result<(f64, f64)> {
    check(r, s, k)?;
    let rr = cross_sq_dists(r, r);
    let rs = cross_sq_dists(r, s);
    let radii = kth_nn_sq_radii(&rr, r.rows(), k);
    let (nr, ns) = (r.rows(), s.rows());

    let mut ball_hits = 0usize;
    let mut covered = 0usize;
    for (i, &rad) in radii.iter().enumerate() {
        let row = &rs[i * ns..(i + 1) * ns];
        let inside = row.iter().filter(|&&d| d <= rad).count();
        ball_hits += inside;
        if inside > 0 {
            covered += 1;
        }
    }
    let density = ball_hits as f64 / (k * ns) as f64;
    let coverage = covered as f64 / nr as f64;
    Ok((density, coverage))
}

/// Percentage of synthetic points that sit farther from their nearest real
/// point than that real point sits from its own nearest real neighbour.
/// Nearest-point ties resolve to the lowest index.
pub fn authpct(r: &EmbeddingSet, s: &EmbeddingSet) -> Result<f64> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    if r.rows() < 2 {
        return Err(Error::TooFewSamples {
            what: "authenticity",
            need: 2,
            got: r.rows(),
        });
    }
    let rr = cross_sq_dists(r, r);
    let real_nn = kth_nn_sq_radii(&rr, r.rows(), 1);
    let sr = cross_sq_dists(s, r);
    let authentic = nearest(&sr, s.rows(), r.rows())
        .into_iter()
        .filter(|&(star, d)| d > real_nn[star])
        .count();
    Ok(100.0 * authentic as f64 / s.rows() as f64)
}
