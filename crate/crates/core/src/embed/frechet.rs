//! Fréchet distance between Gaussian fits, and its size-extrapolated variant.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index::sample;

use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};
use crate::seed_parts;
use crate::seeding::stream;
use crate::stats::simple_ols;

/// Mean and sample covariance of a point cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSummary {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub n: usize,
}

const SYMMETRY_TOL: f64 = 1e-9;
const NEG_EIG_TOL: f64 = 1e-10;

impl GaussianSummary {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>, n: usize) -> Result<Self> {
        let d = mean.len();
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::DimensionMismatch {
                left: d,
                right: cov.nrows(),
            });
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..d {
            for j in 0..i {
                if (cov[(i, j)] - cov[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::Degenerate(format!("covariance not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(GaussianSummary { mean, cov, n })
    }

    /// Fits mean and unbiased (n-1) covariance.
    pub fn from_set(set: &EmbeddingSet) -> Result<Self> {
        if set.rows() < 2 {
            return Err(Error::TooFewSamples {
                what: "Gaussian fit",
                need: 2,
                got: set.rows(),
            });
        }
        let centered = centered_matrix(set);
        let cov = (centered.transpose() * &centered) / (set.rows() - 1) as f64;
        let cov = symmetrize(cov);
        let mean = column_means(set);
        Ok(GaussianSummary {
            mean,
            cov,
            n: set.rows(),
        })
    }
}

fn column_means(set: &EmbeddingSet) -> DVector<f64> {
    let mut mean = DVector::zeros(set.dims());
    for row in set.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean / set.rows() as f64
}

fn centered_matrix(set: &EmbeddingSet) -> DMatrix<f64> {
    let mean = column_means(set);
    DMatrix::from_fn(set.rows(), set.dims(), |i, j| set.row(i)[j] - mean[j])
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn check_psd(eigenvalues: &DVector<f64>, what: &str) -> Result<()> {
    let max = eigenvalues.max().max(0.0);
    let min = eigenvalues.min();
    if min < -NEG_EIG_TOL * max.max(f64::MIN_POSITIVE) && min < -f64::EPSILON {
        return Err(Error::Degenerate(format!(
            "{what} has eigenvalue {min:e} below tolerance (max {max:e})"
        )));
    }
    Ok(())
}

/// Symmetric PSD square root with negative eigenvalues clamped to 0.
fn sqrt_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(m.clone());
    check_psd(&eig.eigenvalues, "covariance")?;
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

/// `‖μ1−μ2‖² + Tr(Σ1 + Σ2 − 2(Σ1^{1/2} Σ2 Σ1^{1/2})^{1/2})`, clamped at 0.
pub fn frechet_from_summaries(a: &GaussianSummary, b: &GaussianSummary) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch {
            left: a.mean.len(),
            right: b.mean.len(),
        });
    }
    let eig_b = SymmetricEigen::new(b.cov.clone());
    check_psd(&eig_b.eigenvalues, "covariance")?;
    let root_a = sqrt_psd(&a.cov)?;
    let inner = symmetrize(&root_a * &b.cov * &root_a);
    let trace_sqrt: f64 = SymmetricEigen::new(inner)
        .eigenvalues
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let diff = &a.mean - &b.mean;
    let fd = diff.norm_squared() + a.cov.trace() + b.cov.trace() - 2.0 * trace_sqrt;
    Ok(fd.max(0.0))
}

/// Low-rank route used when D exceeds the sample count: the non-zero
/// spectrum of Σ1^{1/2} Σ2 Σ1^{1/2} equals the squared singular values of
/// `X1c X2cᵀ / sqrt((n1-1)(n2-1))`.
fn frechet_low_rank(r: &EmbeddingSet, s: &EmbeddingSet) -> f64 {
    let xr = centered_matrix(r);
    let xs = centered_matrix(s);
    let scale = (((r.rows() - 1) * (s.rows() - 1)) as f64).sqrt();
    let cross = (&xr * xs.transpose()) / scale;
    let trace_sqrt: f64 = cross.singular_values().iter().sum();
    let tr_r = xr.norm_squared() / (r.rows() - 1) as f64;
    let tr_s = xs.norm_squared() / (s.rows() - 1) as f64;
    let diff = column_means(r) - column_means(s);
    (diff.norm_squared() + tr_r + tr_s - 2.0 * trace_sqrt).max(0.0)
}

fn check_pair(r: &EmbeddingSet, s: &EmbeddingSet, min_rows: usize, what: &'static str) -> Result<()> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    let got = r.rows().min(s.rows());
    if got < min_rows {
        return Err(Error::TooFewSamples {
            what,
            need: min_rows,
            got,
        });
    }
    Ok(())
}

pub fn frechet_distance(r: &EmbeddingSet, s: &EmbeddingSet) -> Result<f64> {
    check_pair(r, s, 2, "Fréchet distance")?;
    if r.dims() > r.rows().min(s.rows()) {
        Ok(frechet_low_rank(r, s))
    } else {
        frechet_from_summaries(&GaussianSummary::from_set(r)?, &GaussianSummary::from_set(s)?)
    }
}

pub const FID_INF_SIZES: usize = 8;
pub const FID_INF_REPEATS: usize = 3;
pub const FID_INF_MIN_ROWS: usize = 20;

/// Evenly spaced subsample sizes from `ceil(n/2)` to `n`.
pub fn fid_inf_sizes(n: usize) -> Vec<usize> {
    let lo = n.div_ceil(2);
    let span = (n - lo) as f64;
    (0..FID_INF_SIZES)
        .map(|i| lo + (span * i as f64 / (FID_INF_SIZES - 1) as f64).round() as usize)
        .collect()
}

/// Fréchet distance extrapolated to infinite sample size: evaluated on
/// seeded subsamples over the size ladder, regressed on `1/size`, and the
/// intercept returned (clamped at 0).
pub fn frechet_distance_inf(r: &EmbeddingSet, s: &EmbeddingSet, rng_seed: u64) -> Result<f64> {
    check_pair(r, s, FID_INF_MIN_ROWS, "extrapolated Fréchet distance")?;
    let n = r.rows().min(s.rows());
    let mut inv_sizes = Vec::with_capacity(FID_INF_SIZES * FID_INF_REPEATS);
    let mut values = Vec::with_capacity(FID_INF_SIZES * FID_INF_REPEATS);
    for (si, size) in fid_inf_sizes(n).into_iter().enumerate() {
        for rep in 0..FID_INF_REPEATS {
            let mut rng = stream(seed_parts![rng_seed, "fid_inf", si, rep]);
            let ri = sample(&mut rng, r.rows(), size).into_vec();
            let sj = sample(&mut rng, s.rows(), size).into_vec();
            let fd = frechet_distance(&r.select(&ri)?, &s.select(&sj)?)?;
            inv_sizes.push(1.0 / size as f64);
            values.push(fd);
        }
    }
    let (intercept, _) =
        simple_ols(&inv_sizes, &values).ok_or_else(|| Error::Degenerate("size ladder has a single size".into()))?;
    Ok(intercept.max(0.0))
}
