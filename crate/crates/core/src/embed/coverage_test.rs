//! Split-half Mann–Whitney coverage-test pair (CT, CT_mod).

use rand::seq::SliceRandom;

use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::seed_parts;
use crate::seeding::stream;
use crate::stats::{average_ranks, tie_groups};

use super::knn::{cross_sq_dists, nearest};

pub const CT_MIN_REAL: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CtScores {
    /// Mann–Whitney z statistic; positive when synthetic-to-real NN distances
    /// are stochastically smaller than held-out real-to-real ones.
    pub ct: f64,
    /// `U / (|A|·|B|)`, the common-language effect size.
    pub ct_mod: f64,
    pub u: f64,
}

/// `U = #{(a,b): a < b} + ½·#{a = b}` computed from average ranks, with the
/// tie-corrected normal approximation for z. z is 0 when every value ties.
pub fn mann_whitney(smaller_is_win: &[f64], reference: &[f64]) -> (f64, f64) {
    let na = smaller_is_win.len();
    let nb = reference.len();
    let pooled: Vec<f64> = reference.iter().chain(smaller_is_win).copied().collect();
    let ranks = average_ranks(&pooled);
    // rank sum of the reference sample counts pairs where reference is larger
    let rank_sum_b: f64 = ranks[..nb].iter().sum();
    let u = rank_sum_b - (nb * (nb + 1)) as f64 / 2.0;

    let n = (na + nb) as f64;
    let (na_f, nb_f) = (na as f64, nb as f64);
    let tie_term: f64 = tie_groups(&pooled)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum();
    let var = na_f * nb_f / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let z = if var > 0.0 {
        (u - na_f * nb_f / 2.0) / var.sqrt()
    } else {
        0.0
    };
    (u, z)
}

/// Splits `r` into a seeded train half and test half, then compares the
/// nearest-train distances of synthetic points against those of held-out
/// real points.
pub fn ct_scores(r: &EmbeddingSet, s: &EmbeddingSet, rng_seed: u64) -> Result<CtScores> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    if r.rows() < CT_MIN_REAL {
        return Err(Error::TooFewSamples {
            what: "coverage test split",
            need: CT_MIN_REAL,
            got: r.rows(),
        });
    }
    if s.rows() == 0 {
        return Err(Error::invalid("synthetic set is empty"));
    }
    let mut order: Vec<usize> = (0..r.rows()).collect();
    order.shuffle(&mut stream(seed_parts![rng_seed, "ct_split"]));
    let half = r.rows() / 2;
    let train = r.select(&order[..half])?;
    let test = r.select(&order[half..])?;

    let nn_dist = |q: &EmbeddingSet| -> Vec<f64> {
        let d = cross_sq_dists(q, &train);
        nearest(&d, q.rows(), train.rows())
            .into_iter()
            .map(|(_, d2)| d2.sqrt())
            .collect()
    };
    let a = nn_dist(s);
    let b = nn_dist(&test);
    let (u, z) = mann_whitney(&a, &b);
    Ok(CtScores {
        ct: z,
        ct_mod: u / (a.len() * b.len()) as f64,
        u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::make_fixture;
    use approx::assert_abs_diff_eq;

    #[test]
    fn three_vs_three_by_hand() {
        // A = synthetic distances, B = held-out real distances
        let a = [0.1, 0.4, 0.6];
        let b = [0.3, 0.5, 0.9];
        // pairs a<b: 0.1<{.3,.5,.9}=3, 0.4<{.5,.9}=2, 0.6<{.9}=1  -> U = 6
        let (u, z) = mann_whitney(&a, &b);
        assert_abs_diff_eq!(u, 6.0, epsilon = 1e-12);
        // z = (6 - 4.5) / sqrt(9*7/12)
        assert_abs_diff_eq!(z, 1.5 / (63.0f64 / 12.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn ties_count_half() {
        let (u, z) = mann_whitney(&[1.0, 1.0], &[1.0, 1.0]);
        assert_eq!(u, 2.0);
        assert_eq!(z, 0.0);
        let (u, _) = mann_whitney(&[0.5, 2.0], &[1.0, 2.0]);
        // 0.5<1, 0.5<2, 2=2 -> 2.5
        assert_eq!(u, 2.5);
    }

    #[test]
    fn collapsed_synthetic_dominates() {
        let (r, _) = make_fixture(2, 40, 2, 3, 0.0).unwrap();
        let scores = ct_scores(&r, &r, 7).unwrap();
        // half of the synthetic points coincide with train points (distance 0)
        assert!(scores.ct_mod > 0.5);
        // synthetic set built from the train half only
        let mut order: Vec<usize> = (0..40).collect();
        order.shuffle(&mut stream(seed_parts![7u64, "ct_split"]));
        let s = r.select(&order[..20]).unwrap();
        let scores = ct_scores(&r, &s, 7).unwrap();
        assert_eq!(scores.ct_mod, 1.0);
        assert!(scores.ct > 0.0);
    }

    #[test]
    fn null_near_half() {
        let vals: Vec<f64> = (0..30)
            .map(|seed| {
                let (r, s) = make_fixture(seed, 60, 30, 3, 0.0).unwrap();
                ct_scores(&r, &s, seed).unwrap().ct_mod
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        assert!((mean - 0.5).abs() < 0.1, "mean ct_mod {mean}");
    }

    #[test]
    fn too_small() {
        let (r, s) = make_fixture(2, 9, 9, 3, 0.0).unwrap();
        assert!(ct_scores(&r, &s, 0).is_err());
    }
}
