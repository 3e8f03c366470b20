//! Feature-likelihood scores from an isotropic Gaussian KDE fit on half of
//! the synthetic set.

use std::f64::consts::PI;

use rand::seq::SliceRandom;

use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::seed_parts;
use crate::seeding::stream;

use super::knn::cross_sq_dists;

pub const FLS_MIN_SYNTHETIC: usize = 10;
pub const BANDWIDTH_GRID_SIZE: usize = 20;
/// Grid spans `[10^LO, 10^HI]` times the pooled per-dimension scale.
const GRID_LOG10_LO: f64 = -2.0;
const GRID_LOG10_HI: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlsScores {
    pub fls: f64,
    pub fls_overfit: f64,
    pub bandwidth: f64,
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Mean log-density of `query` rows under the KDE on `fit` with bandwidth
/// `h`, given the precomputed query-to-fit squared distances.
fn mean_log_likelihood(sq: &[f64], n_query: usize, n_fit: usize, dims: usize, h: f64) -> f64 {
    let norm = -(n_fit as f64).ln() - 0.5 * dims as f64 * (2.0 * PI * h * h).ln();
    let inv = 1.0 / (2.0 * h * h);
    let total: f64 = (0..n_query)
        .map(|q| log_sum_exp(sq[q * n_fit..(q + 1) * n_fit].iter().map(|d| -d * inv)) + norm)
        .sum();
    total / n_query as f64
}

pub fn kde_mean_log_likelihood(query: &EmbeddingSet, fit: &EmbeddingSet, h: f64) -> Result<f64> {
    if query.dims() != fit.dims() {
        return Err(Error::DimensionMismatch {
            left: query.dims(),
            right: fit.dims(),
        });
    }
    let sq = cross_sq_dists(query, fit);
    Ok(mean_log_likelihood(&sq, query.rows(), fit.rows(), fit.dims(), h))
}

/// Root of the mean per-dimension variance of the pooled rows.
fn pooled_scale(sets: &[&EmbeddingSet]) -> f64 {
    let dims = sets[0].dims();
    let n: usize = sets.iter().map(|s| s.rows()).sum();
    let mut mean = vec![0.0; dims];
    for row in sets.iter().flat_map(|s| s.iter_rows()) {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let ss: f64 = sets
        .iter()
        .flat_map(|s| s.iter_rows())
        .map(|row| row.iter().zip(&mean).map(|(v, m)| (v - m) * (v - m)).sum::<f64>())
        .sum();
    (ss / (n as f64 * dims as f64)).sqrt()
}

pub fn bandwidth_grid(scale: f64) -> Vec<f64> {
    let steps = (BANDWIDTH_GRID_SIZE - 1) as f64;
    (0..BANDWIDTH_GRID_SIZE)
        .map(|i| {
            let e = GRID_LOG10_LO + (GRID_LOG10_HI - GRID_LOG10_LO) * i as f64 / steps;
            scale * 10f64.powf(e)
        })
        .collect()
}

/// Scores with an explicit fit/held-out split and candidate bandwidths. The
/// bandwidth maximizing held-out likelihood wins (first one on ties).
pub fn fls_with_bandwidths(
    r: &EmbeddingSet,
    fit: &EmbeddingSet,
    held_out: &EmbeddingSet,
    bandwidths: &[f64],
) -> Result<FlsScores> {
    if r.dims() != fit.dims() || held_out.dims() != fit.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: fit.dims(),
        });
    }
    if bandwidths.is_empty() || bandwidths.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::Degenerate(
            "bandwidth grid must hold positive finite values".into(),
        ));
    }
    let dims = fit.dims();
    let held_sq = cross_sq_dists(held_out, fit);
    let real_sq = cross_sq_dists(r, fit);
    let mut best = (bandwidths[0], f64::NEG_INFINITY, 0.0);
    for &h in bandwidths {
        let ll = mean_log_likelihood(&held_sq, held_out.rows(), fit.rows(), dims, h);
        if ll > best.1 {
            best = (h, ll, 0.0);
        }
    }
    let (h, held_ll, _) = best;
    let real_ll = mean_log_likelihood(&real_sq, r.rows(), fit.rows(), dims, h);
    let d = dims as f64;
    let fls = -real_ll / d;
    let held_fls = -held_ll / d;
    Ok(FlsScores {
        fls,
        fls_overfit: fls - held_fls,
        bandwidth: h,
    })
}

/// Seeded half split of `s`, bandwidth picked from a 20-point log grid.
pub fn fls_scores(r: &EmbeddingSet, s: &EmbeddingSet, rng_seed: u64) -> Result<FlsScores> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    if s.rows() < FLS_MIN_SYNTHETIC {
        return Err(Error::TooFewSamples {
            what: "feature likelihood split",
            need: FLS_MIN_SYNTHETIC,
            got: s.rows(),
        });
    }
    let scale = pooled_scale(&[r, s]);
    if scale.is_nan() || scale <= 0.0 {
        return Err(Error::Degenerate(
            "all points identical; bandwidth grid collapses to zero".into(),
        ));
    }
    let mut order: Vec<usize> = (0..s.rows()).collect();
    order.shuffle(&mut stream(seed_parts![rng_seed, "fls_split"]));
    let half = s.rows() / 2;
    let fit = s.select(&order[..half])?;
    let held = s.select(&order[half..])?;
    fls_with_bandwidths(r, &fit, &held, &bandwidth_grid(scale))
}
