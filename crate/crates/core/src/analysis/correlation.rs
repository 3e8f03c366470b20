use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seed_parts;
use crate::seeding::stream;
use crate::stats::{average_ranks, mean, simple_ols, t_two_sided_p};

pub const NOTE_ZERO_METRIC: &str = "zero metric variance";
pub const NOTE_ZERO_TARGET: &str = "zero mAP variance";
pub const DEFAULT_PERMUTATIONS: usize = 10_000;

/// Residual sums of squares below this fraction of the input's total sum of
/// squares are treated as exactly zero.
const RESIDUAL_ZERO_REL: f64 = 1e-20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrType {
    Pearson,
    Spearman,
}

impl CorrType {
    pub fn tag(self) -> &'static str {
        match self {
            CorrType::Pearson => "pearson",
            CorrType::Spearman => "spearman",
        }
    }
}

impl fmt::Display for CorrType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for CorrType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pearson" => Ok(CorrType::Pearson),
            "spearman" => Ok(CorrType::Spearman),
            _ => Err(Error::invalid(format!("unknown correlation type {s:?}"))),
        }
    }
}

/// Either a defined coefficient with its p-value, or a note explaining why
/// there is none.
#[derive(Debug, Clone, PartialEq)]
pub enum CorrOutcome {
    Defined { rho: f64, p: f64 },
    Undefined(String),
}

impl CorrOutcome {
    pub fn rho(&self) -> Option<f64> {
        match self {
            CorrOutcome::Defined { rho, .. } => Some(*rho),
            CorrOutcome::Undefined(_) => None,
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            CorrOutcome::Defined { p, .. } => Some(*p),
            CorrOutcome::Undefined(_) => None,
        }
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples {
            what: "correlation",
            need: 3,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::invalid("correlation inputs must be finite"));
    }
    Ok(())
}

fn sample_r(x: &[f64], y: &[f64]) -> std::result::Result<f64, &'static str> {
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx == 0.0 {
        return Err(NOTE_ZERO_METRIC);
    }
    if syy == 0.0 {
        return Err(NOTE_ZERO_TARGET);
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Two-sided p from `t = r·sqrt((n−2)/(1−r²))` on `n − 2` degrees of
/// freedom. A perfect correlation gets the smallest positive double rather
/// than 0, so it stays a valid input to FDR control.
pub fn r_to_p(r: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - r * r;
    let p = if denom <= 0.0 {
        0.0
    } else {
        t_two_sided_p(r * (df / denom).sqrt(), df)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// `x` plays the metric role in notes.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<CorrOutcome> {
    check_pair(x, y)?;
    Ok(match sample_r(x, y) {
        Ok(rho) => CorrOutcome::Defined {
            rho,
            p: r_to_p(rho, x.len()),
        },
        Err(note) => CorrOutcome::Undefined(note.to_string()),
    })
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrOutcome> {
    check_pair(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

pub fn correlate(corr: CorrType, x: &[f64], y: &[f64]) -> Result<CorrOutcome> {
    match corr {
        CorrType::Pearson => pearson(x, y),
        CorrType::Spearman => spearman(x, y),
    }
}

/// Two-sided permutation p-value, `(1 + #{|ρ*| ≥ |ρ|}) / (1 + n_perm)`,
/// with `y` shuffled by a seeded stream.
pub fn permutation_p(corr: CorrType, x: &[f64], y: &[f64], n_perm: usize, seed: u64) -> Result<CorrOutcome> {
    let observed = correlate(corr, x, y)?;
    let rho = match observed {
        CorrOutcome::Defined { rho, .. } => rho,
        undefined => return Ok(undefined),
    };
    let mut rng = stream(seed_parts![seed, "permutation", corr.tag()]);
    let mut shuffled = y.to_vec();
    let mut hits = 0usize;
    for _ in 0..n_perm {
        shuffled.shuffle(&mut rng);
        if let Some(r) = correlate(corr, x, &shuffled)?.rho() {
            if r.abs() >= rho.abs() - 1e-12 {
                hits += 1;
            }
        }
    }
    Ok(CorrOutcome::Defined {
        rho,
        p: (1 + hits) as f64 / (1 + n_perm) as f64,
    })
}

/// Residuals of `v` after an ordinary least-squares fit on `(1, a)`. A fit
/// that explains `v` up to rounding returns exact zeros.
pub fn residualize(a: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    check_pair(a, v)?;
    let (b0, b1) = simple_ols(a, v)
        .ok_or_else(|| Error::Degenerate("augmentation ratio is constant; cannot residualize".into()))?;
    let res: Vec<f64> = a.iter().zip(v).map(|(x, y)| y - (b0 + b1 * x)).collect();
    let mv = mean(v);
    let ss_tot: f64 = v.iter().map(|y| (y - mv) * (y - mv)).sum();
    let ss_res: f64 = res.iter().map(|r| r * r).sum();
    if ss_res <= RESIDUAL_ZERO_REL * ss_tot || ss_tot == 0.0 {
        return Ok(vec![0.0; v.len()]);
    }
    Ok(res)
}
