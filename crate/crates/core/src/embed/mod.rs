//! Global embedding-space metrics between a real feature matrix `R` and a
//! synthetic one `S`.
//!
//! Every function is pure; the seeded ones derive their randomness from the
//! `rng_seed` argument only, so results do not depend on thread count.
//! Distances are Euclidean in the raw feature space.

mod coverage_test;
mod fls;
mod frechet;
mod kernel;
pub mod knn;
mod manifold;
mod sliced;

pub use coverage_test::{ct_scores, mann_whitney, CtScores, CT_MIN_REAL};
pub use fls::{
    bandwidth_grid, fls_scores, fls_with_bandwidths, kde_mean_log_likelihood, FlsScores, BANDWIDTH_GRID_SIZE,
    FLS_MIN_SYNTHETIC,
};
pub use frechet::{
    fid_inf_sizes, frechet_distance, frechet_distance_inf, frechet_from_summaries, GaussianSummary, FID_INF_MIN_ROWS,
    FID_INF_REPEATS, FID_INF_SIZES,
};
pub use kernel::kernel_distance;
pub use manifold::{authpct, density_coverage, precision_recall, DEFAULT_K};
pub use sliced::{random_directions, sliced_wasserstein, DEFAULT_PROJECTIONS};

use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::metric::{Direction, MetricValue, GLOBAL_METRICS};
use crate::seed_parts;
use crate::seeding::derive_u64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmbedConfig {
    /// Neighbourhood size for precision/recall and density/coverage.
    pub k: usize,
    pub n_projections: usize,
}

impl Default for EmbedConfig {
    fn default() -> Self {
        EmbedConfig {
            k: DEFAULT_K,
            n_projections: DEFAULT_PROJECTIONS,
        }
    }
}

fn direction_of(name: &str) -> Direction {
    GLOBAL_METRICS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|&(_, d)| d)
        .expect("known global metric")
}

/// All 13 global metrics, unsuffixed, in canonical order. Seeded metrics
/// each get their own child seed of `rng_seed`.
pub fn global_metrics(
    r: &EmbeddingSet,
    s: &EmbeddingSet,
    rng_seed: u64,
    cfg: &EmbedConfig,
) -> Result<Vec<MetricValue>> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    let child = |name: &str| derive_u64(seed_parts![rng_seed, name]);

    let fid = frechet_distance(r, s)?;
    let fid_inf = frechet_distance_inf(r, s, child("fid_inf"))?;
    let kd = kernel_distance(r, s)?;
    let (precision, recall) = precision_recall(r, s, cfg.k)?;
    let (density, coverage) = density_coverage(r, s, cfg.k)?;
    let auth = authpct(r, s)?;
    let sw = sliced_wasserstein(r, s, cfg.n_projections, child("sw_approx"))?;
    let ct = ct_scores(r, s, child("ct"))?;
    let fls = fls_scores(r, s, child("fls"))?;

    let values = [
        ("fid", fid),
        ("fid_inf", fid_inf),
        ("kd_value", kd),
        ("precision", precision),
        ("recall", recall),
        ("density", density),
        ("coverage", coverage),
        ("authpct", auth),
        ("sw_approx", sw),
        ("ct", ct.ct),
        ("ct_mod", ct.ct_mod),
        ("fls", fls.fls),
        ("fls_overfit", fls.fls_overfit),
    ];
    Ok(values
        .into_iter()
        .map(|(n, v)| MetricValue::new(n, v, direction_of(n)))
        .collect())
}
