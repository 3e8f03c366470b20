use std::collections::BTreeMap;

use serde::Serialize;

use crate::dataio::{ConfigKey, Regime, RunsTable, BASELINE};
use crate::error::{Error, Result};
use crate::stats::{mean, std_dev, t_quantile};

/// `+0.0348`.
pub fn format_delta(d: f64) -> String {
    format!("{:+.4}", d)
}

/// `+7.6%` from a fraction.
pub fn format_pct(frac: f64) -> String {
    format!("{:+.1}%", 100.0 * frac)
}

/// Real-only baseline against the best augmented configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestRow {
    pub dataset: String,
    pub regime: Regime,
    pub baseline_map: f64,
    pub best_map: f64,
    pub delta: f64,
    /// `delta / baseline_map`.
    pub delta_frac: f64,
    /// `generator@ratio%`, or `baseline` when no augmented run beats it.
    pub best_config: String,
}

impl BestRow {
    pub fn delta_str(&self) -> String {
        format_delta(self.delta)
    }

    pub fn pct_str(&self) -> String {
        format_pct(self.delta_frac)
    }
}

/// Per `(dataset, regime)`, from seed-averaged mAP. Equal best values go to
/// the first generator by name, then the lower ratio.
pub fn best_vs_baseline(runs: &RunsTable) -> Result<Vec<BestRow>> {
    let maps = runs.mean_map();
    let mut groups: BTreeMap<(String, Regime), Vec<(&ConfigKey, f64)>> = BTreeMap::new();
    for (k, v) in &maps {
        groups.entry((k.dataset.clone(), k.regime)).or_default().push((k, *v));
    }
    let mut out = Vec::new();
    for ((dataset, regime), cells) in groups {
        let base = cells
            .iter()
            .find(|(k, _)| k.is_baseline())
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::invalid(format!("no baseline run for {dataset}/{regime}")))?;
        // BTreeMap order is already (generator, ratio) within the group
        let best = cells
            .iter()
            .filter(|(k, _)| !k.is_baseline())
            .fold(None::<(&ConfigKey, f64)>, |acc, &(k, v)| match acc {
                Some((_, bv)) if bv >= v => acc,
                _ => Some((k, v)),
            });
        let (best_map, best_config) = match best {
            Some((k, v)) if v > base => (v, k.cell_label()),
            _ => (base, BASELINE.to_string()),
        };
        let delta = best_map - base;
        out.push(BestRow {
            dataset,
            regime,
            baseline_map: base,
            best_map,
            delta,
            delta_frac: if base > 0.0 { delta / base } else { 0.0 },
            best_config,
        });
    }
    if out.is_empty() {
        return Err(Error::invalid("runs table is empty"));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedCi {
    pub n: usize,
    pub deltas: Vec<f64>,
    pub delta_mean: f64,
    pub delta_std: f64,
    pub t: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

impl SeedCi {
    /// The interval contains zero.
    pub fn not_separable(&self) -> bool {
        self.ci_low <= 0.0 && self.ci_high >= 0.0
    }

    /// `Δ=+0.0131±0.0009, 95% CI [0.0110, 0.0152]`.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "Δ={}±{:.4}, 95% CI [{:.4}, {:.4}]",
            format_delta(self.delta_mean),
            self.delta_std,
            self.ci_low,
            self.ci_high
        );
        if self.not_separable() {
            s.push_str(" (not separable from seed variation)");
        }
        s
    }
}

/// Paired per-seed Δ = augmented − baseline with a Student-t interval on
/// `n − 1` degrees of freedom.
pub fn seed_ci(baseline: &[f64], augmented: &[f64]) -> Result<SeedCi> {
    if baseline.len() != augmented.len() {
        return Err(Error::DimensionMismatch {
            left: baseline.len(),
            right: augmented.len(),
        });
    }
    let n = baseline.len();
    if n < 2 {
        return Err(Error::TooFewSamples {
            what: "seed confidence interval",
            need: 2,
            got: n,
        });
    }
    let deltas: Vec<f64> = augmented.iter().zip(baseline).map(|(a, b)| a - b).collect();
    let m = mean(&deltas);
    let sd = std_dev(&deltas, 1);
    let t = t_quantile(0.975, (n - 1) as f64);
    let half = t * sd / (n as f64).sqrt();
    Ok(SeedCi {
        n,
        deltas,
        delta_mean: m,
        delta_std: sd,
        t,
        ci_low: m - half,
        ci_high: m + half,
    })
}

/// Pairs the two configurations' runs by seed.
pub fn seed_ci_for(runs: &RunsTable, baseline: &ConfigKey, augmented: &ConfigKey) -> Result<SeedCi> {
    let b = runs.seeds_for(baseline);
    let a = runs.seeds_for(augmented);
    if b.is_empty() || a.is_empty() {
        return Err(Error::invalid(format!("no runs for {baseline} or {augmented}")));
    }
    if !b.keys().eq(a.keys()) {
        return Err(Error::invalid(format!(
            "seeds differ: {baseline} has {:?}, {augmented} has {:?}",
            b.keys().collect::<Vec<_>>(),
            a.keys().collect::<Vec<_>>()
        )));
    }
    seed_ci(
        &b.into_values().collect::<Vec<_>>(),
        &a.into_values().collect::<Vec<_>>(),
    )
}
