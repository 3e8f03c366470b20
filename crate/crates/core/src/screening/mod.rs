//! Decision-oriented screening: does a metric, at a fixed augmentation
//! budget, pick the generator that trains the best detector?

mod kendall;
mod summary;

pub use kendall::kendall_tau;
pub use summary::{best_vs_baseline, format_delta, format_pct, seed_ci, seed_ci_for, BestRow, SeedCi};

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::analysis::{CorrCell, CorrType, View};
use crate::dataio::{MetricTable, Regime, RunsTable};
use crate::error::{Error, Result};
use crate::metric::{direction_for, Direction};

pub const SHORTLIST_Q: f64 = 0.05;
pub const SHORTLIST_RHO: f64 = 0.35;

/// `(generator, metric value, mAP)` for every generator at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetSlice {
    pub dataset: String,
    pub regime: Regime,
    pub budget: u32,
    pub entries: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetScreen {
    pub budget: u32,
    /// Agreement between the metric-induced and mAP rankings.
    pub tau: Option<f64>,
    pub picked: String,
    pub best: String,
    pub regret: f64,
    /// Picked generator is the unique best-mAP generator.
    pub top1: bool,
    /// Several generators share the metric-best value; the first by name was picked.
    pub metric_tie: bool,
    /// Several generators share the best mAP.
    pub map_tie: bool,
}

fn argmax_by_name(entries: &[(String, f64, f64)], key: impl Fn(&(String, f64, f64)) -> f64) -> (usize, bool) {
    let best = entries.iter().map(&key).fold(f64::NEG_INFINITY, f64::max);
    let mut hits: Vec<usize> = (0..entries.len()).filter(|&i| key(&entries[i]) == best).collect();
    hits.sort_by(|&a, &b| entries[a].0.cmp(&entries[b].0));
    (hits[0], hits.len() > 1)
}

pub fn screen_budget(slice: &BudgetSlice, direction: Direction) -> Result<BudgetScreen> {
    let e = &slice.entries;
    if e.is_empty() {
        return Err(Error::invalid(format!(
            "no generators for {}/{} at {}%",
            slice.dataset, slice.regime, slice.budget
        )));
    }
    let names: BTreeSet<&str> = e.iter().map(|x| x.0.as_str()).collect();
    if names.len() != e.len() {
        return Err(Error::invalid("budget slice lists a generator twice"));
    }
    let (pick, metric_tie) = argmax_by_name(e, |x| direction.orient(x.1));
    let (best, map_tie) = argmax_by_name(e, |x| x.2);
    let tau = if e.len() >= 2 {
        let oriented: Vec<f64> = e.iter().map(|x| direction.orient(x.1)).collect();
        let maps: Vec<f64> = e.iter().map(|x| x.2).collect();
        kendall_tau(&oriented, &maps)?
    } else {
        None
    };
    Ok(BudgetScreen {
        budget: slice.budget,
        tau,
        picked: e[pick].0.clone(),
        best: e[best].0.clone(),
        regret: (e[best].2 - e[pick].2).max(0.0),
        top1: !map_tie && pick == best,
        metric_tie,
        map_tie,
    })
}

/// Screening result for one metric across budgets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningRow {
    pub metric: String,
    pub direction: Direction,
    /// Mean τ over budgets where it is defined.
    pub avg_tau: Option<f64>,
    pub top1_hits: usize,
    pub budgets: usize,
    pub avg_regret: f64,
    pub per_budget: Vec<BudgetScreen>,
}

impl ScreeningRow {
    /// `k/B`.
    pub fn top1(&self) -> String {
        format!("{}/{}", self.top1_hits, self.budgets)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreeningSummary {
    pub dataset: String,
    pub regime: Regime,
    pub rows: Vec<ScreeningRow>,
    /// Lowest average regret; ties go to higher average τ, then name.
    pub winner: String,
}

/// Looks up the ranking direction of every shortlisted metric.
pub fn with_directions(metrics: &[String]) -> Result<Vec<(String, Direction)>> {
    metrics
        .iter()
        .map(|m| {
            direction_for(m)
                .map(|d| (m.clone(), d))
                .ok_or_else(|| Error::invalid(format!("no known ranking direction for metric {m:?}")))
        })
        .collect()
}

/// Metrics with a BH-significant residual Spearman cell or one with
/// `|ρ| ≥ 0.35`, ordered by their largest `|ρ|` then name.
pub fn shortlist_rule(cells: &[CorrCell]) -> Vec<String> {
    let mut best: BTreeMap<&str, (bool, f64)> = BTreeMap::new();
    for c in cells {
        if c.view != View::Residual || c.corr != CorrType::Spearman || c.budget.is_some() {
            continue;
        }
        let Some(rho) = c.rho else { continue };
        let e = best.entry(&c.metric).or_insert((false, 0.0));
        e.0 |= c.significant() || rho.abs() >= SHORTLIST_RHO;
        e.1 = e.1.max(rho.abs());
    }
    let mut keep: Vec<(&str, f64)> = best
        .into_iter()
        .filter(|(_, (k, _))| *k)
        .map(|(m, (_, s))| (m, s))
        .collect();
    keep.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    keep.into_iter().map(|(m, _)| m.to_string()).collect()
}

fn mean_opt(xs: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = xs.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Per `(dataset, regime)`: every shortlisted metric screened at each budget.
pub fn screening_summary(
    metrics: &MetricTable,
    runs: &RunsTable,
    shortlist: &[(String, Direction)],
    budgets: &[u32],
) -> Result<Vec<ScreeningSummary>> {
    if shortlist.is_empty() {
        return Err(Error::invalid("screening shortlist is empty"));
    }
    if budgets.is_empty() {
        return Err(Error::invalid("no screening budgets given"));
    }
    let maps = runs.mean_map();
    // (dataset, regime) -> metric -> budget -> entries
    type Grid = BTreeMap<String, BTreeMap<u32, Vec<(String, f64, f64)>>>;
    let wanted: BTreeSet<&str> = shortlist.iter().map(|(m, _)| m.as_str()).collect();
    let mut groups: BTreeMap<(String, Regime), Grid> = BTreeMap::new();
    for rec in metrics.records() {
        let k = &rec.key;
        if !wanted.contains(rec.metric.as_str()) || !budgets.contains(&k.aug_ratio) {
            continue;
        }
        let grid = groups.entry((k.dataset.clone(), k.regime)).or_default();
        if let Some(&y) = maps.get(k) {
            grid.entry(rec.metric.clone())
                .or_default()
                .entry(k.aug_ratio)
                .or_default()
                .push((k.generator.clone(), rec.value, y));
        }
    }
    if groups.is_empty() {
        return Err(Error::invalid(
            "no shortlisted metric has rows at the requested budgets",
        ));
    }
    let mut out = Vec::new();
    for ((dataset, regime), grid) in groups {
        let mut rows = Vec::new();
        for (metric, direction) in shortlist {
            let Some(per) = grid.get(metric) else {
                return Err(Error::invalid(format!(
                    "metric {metric} has no joined rows for {dataset}/{regime}"
                )));
            };
            let mut screens = Vec::new();
            for &b in budgets {
                let mut entries = per
                    .get(&b)
                    .cloned()
                    .ok_or_else(|| Error::invalid(format!("budget {b}% missing from runs for {dataset}/{regime}")))?;
                entries.sort_by(|a, b| a.0.cmp(&b.0));
                let slice = BudgetSlice {
                    dataset: dataset.clone(),
                    regime,
                    budget: b,
                    entries,
                };
                screens.push(screen_budget(&slice, *direction)?);
            }
            rows.push(ScreeningRow {
                metric: metric.clone(),
                direction: *direction,
                avg_tau: mean_opt(screens.iter().map(|s| s.tau)),
                top1_hits: screens.iter().filter(|s| s.top1).count(),
                budgets: screens.len(),
                avg_regret: screens.iter().map(|s| s.regret).sum::<f64>() / screens.len() as f64,
                per_budget: screens,
            });
        }
        let winner = rows
            .iter()
            .min_by(|a, b| {
                a.avg_regret
                    .total_cmp(&b.avg_regret)
                    .then_with(|| {
                        let ta = a.avg_tau.unwrap_or(f64::NEG_INFINITY);
                        let tb = b.avg_tau.unwrap_or(f64::NEG_INFINITY);
                        tb.total_cmp(&ta)
                    })
                    .then_with(|| a.metric.cmp(&b.metric))
            })
            .map(|r| r.metric.clone())
            .unwrap_or_default();
        out.push(ScreeningSummary {
            dataset,
            regime,
            rows,
            winner,
        });
    }
    Ok(out)
}

/// One CSV row per metric: direction, avg τ, Top-1, avg regret.
pub fn screening_to_csv(summaries: &[ScreeningSummary]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record([
        "dataset",
        "regime",
        "metric",
        "direction",
        "avg_tau",
        "top1",
        "avg_regret",
        "winner",
    ])
    .map_err(enc)?;
    for s in summaries {
        for r in &s.rows {
            w.write_record([
                s.dataset.clone(),
                s.regime.tag().to_string(),
                r.metric.clone(),
                r.direction.arrow().to_string(),
                r.avg_tau.map(|t| format!("{t:.3}")).unwrap_or_default(),
                r.top1(),
                format!("{:.4}", r.avg_regret),
                (r.metric == s.winner).to_string(),
            ])
            .map_err(enc)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}
