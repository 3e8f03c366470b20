use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::seed_parts;
use crate::seeding::stream;

pub const DEFAULT_PROJECTIONS: usize = 128;

/// Seeded unit directions, drawn as normalized Gaussian vectors.
pub fn random_directions(dims: usize, count: usize, rng_seed: u64) -> Vec<Vec<f64>> {
    let mut rng = stream(seed_parts![rng_seed, "sliced_wasserstein"]);
    (0..count)
        .map(|_| loop {
            let v: Vec<f64> = (0..dims).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect();
            }
        })
        .collect()
}

fn project(set: &EmbeddingSet, dir: &[f64]) -> Vec<f64> {
    set.iter_rows()
        .map(|row| row.iter().zip(dir).map(|(a, b)| a * b).sum())
        .collect()
}

/// Mean over random directions of the 1-D W1 distance between the
/// projected samples. Requires equal sample sizes.
pub fn sliced_wasserstein(r: &EmbeddingSet, s: &EmbeddingSet, n_projections: usize, rng_seed: u64) -> Result<f64> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    if r.rows() != s.rows() {
        return Err(Error::invalid(format!(
            "sliced Wasserstein needs equal sizes, got {} and {}; resample first",
            r.rows(),
            s.rows()
        )));
    }
    if n_projections == 0 {
        return Err(Error::invalid("at least one projection is required"));
    }
    let dirs = random_directions(r.dims(), n_projections, rng_seed);
    let per_dir: Vec<f64> = dirs
        .par_iter()
        .map(|dir| {
            let mut a = project(r, dir);
            let mut b = project(s, dir);
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
        })
        .collect();
    // summed in direction order so thread count cannot change the result
    Ok(per_dir.iter().sum::<f64>() / n_projections as f64)
}
