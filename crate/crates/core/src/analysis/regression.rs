use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{t_quantile, t_two_sided_p};

/// `y = α + Σ_a θ_a·1[level = a] + β·M + ε`, with the lowest level as the
/// reference absorbed into α.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedEffectsFit {
    pub alpha: f64,
    pub reference_level: u32,
    /// Offsets of the non-reference levels.
    pub theta: BTreeMap<u32, f64>,
    pub beta_fe: f64,
    pub se_beta: f64,
    pub p_fe: f64,
    /// 95% t-interval for β.
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    pub dof: usize,
}

/// Relative singular-value cutoff for declaring the design rank-deficient.
const RANK_TOL: f64 = 1e-10;

fn rank(x: &DMatrix<f64>) -> usize {
    let sv = x.clone().singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s > RANK_TOL * max).count()
}

pub fn fixed_effects(levels: &[u32], metric: &[f64], y: &[f64]) -> Result<FixedEffectsFit> {
    let n = y.len();
    if levels.len() != n || metric.len() != n {
        return Err(Error::DimensionMismatch {
            left: levels.len().max(metric.len()),
            right: n,
        });
    }
    if metric.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("fixed-effects inputs must be finite"));
    }
    let distinct: Vec<u32> = levels.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    if distinct.len() < 2 {
        return Err(Error::invalid("fixed effects need at least two augmentation levels"));
    }
    let p = distinct.len() + 1;
    if n <= p {
        return Err(Error::TooFewSamples {
            what: "fixed-effects regression",
            need: p + 1,
            got: n,
        });
    }
    let reference = distinct[0];
    let x = DMatrix::from_fn(n, p, |i, j| match j {
        0 => 1.0,
        j if j == p - 1 => metric[i],
        j => f64::from(levels[i] == distinct[j]),
    });
    if rank(&x) < p {
        let without_metric = x.columns(0, p - 1).into_owned();
        let what = if rank(&without_metric) == p - 1 {
            "metric is collinear with the augmentation level indicators".to_string()
        } else {
            "augmentation level indicators are linearly dependent".to_string()
        };
        return Err(Error::Collinear(what));
    }

    let yv = DVector::from_column_slice(y);
    let qr = x.clone().qr();
    let qty = qr.q().transpose() * &yv;
    let r = qr.r();
    let coef = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::Collinear("triangular solve failed".into()))?;
    let resid = &yv - &x * &coef;
    let dof = n - p;
    let sigma2 = resid.norm_squared() / dof as f64;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::Collinear("triangular inverse failed".into()))?;
    // (XᵀX)⁻¹ = R⁻¹R⁻ᵀ; only the last diagonal entry is needed
    let var_beta = sigma2 * r_inv.row(p - 1).norm_squared();
    let beta = coef[p - 1];
    let se = var_beta.sqrt();
    let p_fe = if se > 0.0 {
        t_two_sided_p(beta / se, dof as f64)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    };
    let half = t_quantile(0.975, dof as f64) * se;
    Ok(FixedEffectsFit {
        alpha: coef[0],
        reference_level: reference,
        theta: distinct[1..]
            .iter()
            .enumerate()
            .map(|(k, lvl)| (*lvl, coef[k + 1]))
            .collect(),
        beta_fe: beta,
        se_beta: se,
        p_fe,
        ci_low: beta - half,
        ci_high: beta + half,
        n,
        dof,
    })
}

/// `0.028` style, or `<0.001`.
pub fn format_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

/// `+4.630, 0.028` style pair.
pub fn format_fe(fit: &FixedEffectsFit) -> String {
    format!("{:+.3}, {}", fit.beta_fe, format_p(fit.p_fe))
}
