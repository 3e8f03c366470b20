use crate::dataio::EmbeddingSet;
use crate::error::{Error, Result};

#[inline]
fn poly_kernel(a: &[f64], b: &[f64], inv_dims: f64) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let base = dot * inv_dims + 1.0;
    base * base * base
}

fn off_diagonal_mean(set: &EmbeddingSet, inv_dims: f64) -> f64 {
    let n = set.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += poly_kernel(set.row(i), set.row(j), inv_dims);
        }
    }
    2.0 * sum / (n * (n - 1)) as f64
}

/// Unbiased MMD² with the cubic polynomial kernel `(x·y/D + 1)³`.
/// Equal-size sets use the U-statistic, whose cross term skips `i = j`, so
/// `kd(R, R)` is exactly 0; other sizes average the full cross block.
/// Can come out slightly negative when the two samples match.
pub fn kernel_distance(r: &EmbeddingSet, s: &EmbeddingSet) -> Result<f64> {
    if r.dims() != s.dims() {
        return Err(Error::DimensionMismatch {
            left: r.dims(),
            right: s.dims(),
        });
    }
    let got = r.rows().min(s.rows());
    if got < 2 {
        return Err(Error::TooFewSamples {
            what: "kernel distance",
            need: 2,
            got,
        });
    }
    let inv_dims = 1.0 / r.dims() as f64;
    let k_rr = off_diagonal_mean(r, inv_dims);
    let k_ss = off_diagonal_mean(s, inv_dims);
    let paired = r.rows() == s.rows();
    let mut cross = 0.0;
    for (i, a) in r.iter_rows().enumerate() {
        for (j, b) in s.iter_rows().enumerate() {
            if !(paired && i == j) {
                cross += poly_kernel(a, b, inv_dims);
            }
        }
    }
    let pairs = if paired {
        r.rows() * (r.rows() - 1)
    } else {
        r.rows() * s.rows()
    };
    Ok(k_rr + k_ss - 2.0 * cross / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Encoder;
    use crate::fixtures::make_fixture;
    use approx::assert_relative_eq;

    /// Every ordered pair written out, no symmetry shortcuts.
    fn brute_force(r: &[[f64; 2]], s: &[[f64; 2]]) -> f64 {
        let k = |a: &[f64; 2], b: &[f64; 2]| ((a[0] * b[0] + a[1] * b[1]) / 2.0 + 1.0).powi(3);
        let (m, n) = (r.len() as f64, s.len() as f64);
        let mut xx = 0.0;
        for (i, a) in r.iter().enumerate() {
            for (j, b) in r.iter().enumerate() {
                if i != j {
                    xx += k(a, b);
                }
            }
        }
        let mut yy = 0.0;
        for (i, a) in s.iter().enumerate() {
            for (j, b) in s.iter().enumerate() {
                if i != j {
                    yy += k(a, b);
                }
            }
        }
        let mut xy = 0.0;
        let paired = r.len() == s.len();
        for (i, a) in r.iter().enumerate() {
            for (j, b) in s.iter().enumerate() {
                if !(paired && i == j) {
                    xy += k(a, b);
                }
            }
        }
        let cross_pairs = if paired { m * (m - 1.0) } else { m * n };
        xx / (m * (m - 1.0)) + yy / (n * (n - 1.0)) - 2.0 * xy / cross_pairs
    }

    #[test]
    fn three_by_three_matches_expansion() {
        let r = [[0.0, 1.0], [1.5, -0.5], [2.0, 2.0]];
        let s = [[1.0, 1.0], [-1.0, 0.5], [0.25, 3.0]];
        let got = kernel_distance(
            &EmbeddingSet::from_rows("r", Encoder::Inception, &r).unwrap(),
            &EmbeddingSet::from_rows("s", Encoder::Inception, &s).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(got, brute_force(&r, &s), max_relative = 1e-12);
        let uneven = kernel_distance(
            &EmbeddingSet::from_rows("r", Encoder::Inception, &r).unwrap(),
            &EmbeddingSet::from_rows("s", Encoder::Inception, &s[..2]).unwrap(),
        )
        .unwrap();
        assert_relative_eq!(uneven, brute_force(&r, &s[..2]), max_relative = 1e-12);
    }

    #[test]
    fn identical_sets_give_zero() {
        let (r, _) = make_fixture(3, 30, 30, 5, 0.0).unwrap();
        assert!(kernel_distance(&r, &r).unwrap().abs() < 1e-12);
    }

    #[test]
    fn shifted_larger_than_matched() {
        let mut wins = 0;
        for seed in 0..20 {
            let (r0, s0) = make_fixture(seed, 40, 40, 4, 0.0).unwrap();
            let (_, s2) = make_fixture(seed, 40, 40, 4, 2.0).unwrap();
            if kernel_distance(&r0, &s2).unwrap() > kernel_distance(&r0, &s0).unwrap() {
                wins += 1;
            }
        }
        assert_eq!(wins, 20);
    }

    #[test]
    fn dimension_mismatch() {
        let (r, _) = make_fixture(0, 5, 5, 2, 0.0).unwrap();
        let (q, _) = make_fixture(0, 5, 5, 3, 0.0).unwrap();
        assert!(kernel_distance(&r, &q).is_err());
    }
}
