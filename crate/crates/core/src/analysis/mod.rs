//! Metric–performance alignment: raw and augmentation-residualized
//! correlations with BH–FDR control, the key-metric shortlist, per-budget
//! robustness and the categorical fixed-effects regression.
//!
//! Baseline runs never enter these analyses; they carry no metric.

mod correlation;
mod fdr;
mod heatmap;
mod regression;

pub use correlation::{
    correlate, pearson, permutation_p, r_to_p, residualize, spearman, CorrOutcome, CorrType, DEFAULT_PERMUTATIONS,
    NOTE_ZERO_METRIC, NOTE_ZERO_TARGET,
};
pub use fdr::bh_fdr;
pub use heatmap::{cells_to_csv, robustness_to_csv};
pub use regression::{fixed_effects, format_fe, format_p, FixedEffectsFit};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::dataio::{MetricTable, Regime, RunsTable};
use crate::error::{Error, Result};

pub const DEFAULT_BUDGETS: [u32; 3] = [25, 50, 100];
pub const DEFAULT_SHORTLIST_K: usize = 15;
pub const NOTE_TOO_FEW: &str = "too few samples";
pub const NOTE_CONSTANT_RATIO: &str = "constant augmentation ratio";
pub const NOTE_CONSTANT: &str = "constant";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum View {
    Raw,
    Residual,
}

impl View {
    pub fn tag(self) -> &'static str {
        match self {
            View::Raw => "raw",
            View::Residual => "residual",
        }
    }
}

impl fmt::Display for View {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for View {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(View::Raw),
            "residual" => Ok(View::Residual),
            _ => Err(Error::invalid(format!("unknown view {s:?}"))),
        }
    }
}

/// Aligned `(a, m, y)` over the non-baseline configurations of one
/// `(dataset, regime, metric)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub dataset: String,
    pub regime: Regime,
    pub metric: String,
    pub generators: Vec<String>,
    pub a: Vec<f64>,
    pub m: Vec<f64>,
    pub y: Vec<f64>,
    /// Metric rows without a matching run.
    pub dropped: usize,
}

impl PairedSample {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    fn at_ratio(&self, ratio: u32) -> (Vec<f64>, Vec<f64>) {
        self.a
            .iter()
            .zip(self.m.iter().zip(&self.y))
            .filter(|(a, _)| **a == f64::from(ratio))
            .map(|(_, (m, y))| (*m, *y))
            .unzip()
    }
}

/// Joins metric rows to seed-averaged mAP on the full configuration key.
pub fn paired_samples(metrics: &MetricTable, runs: &RunsTable) -> Result<Vec<PairedSample>> {
    let maps = runs.mean_map();
    let mut groups: BTreeMap<(String, Regime, String), PairedSample> = BTreeMap::new();
    let mut sorted: Vec<_> = metrics.records().iter().collect();
    sorted.sort_by(|a, b| a.key.cmp(&b.key).then_with(|| a.metric.cmp(&b.metric)));
    for rec in sorted {
        let k = &rec.key;
        let entry = groups
            .entry((k.dataset.clone(), k.regime, rec.metric.clone()))
            .or_insert_with(|| PairedSample {
                dataset: k.dataset.clone(),
                regime: k.regime,
                metric: rec.metric.clone(),
                generators: Vec::new(),
                a: Vec::new(),
                m: Vec::new(),
                y: Vec::new(),
                dropped: 0,
            });
        match maps.get(k) {
            Some(&y) if !k.is_baseline() => {
                entry.generators.push(k.generator.clone());
                entry.a.push(f64::from(k.aug_ratio));
                entry.m.push(rec.value);
                entry.y.push(y);
            }
            _ => entry.dropped += 1,
        }
    }
    let out: Vec<PairedSample> = groups.into_values().filter(|s| !s.is_empty()).collect();
    if out.is_empty() {
        return Err(Error::invalid("metrics and runs share no configurations (empty join)"));
    }
    Ok(out)
}

/// One heatmap entry.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrCell {
    pub dataset: String,
    pub regime: Regime,
    pub view: View,
    pub corr: CorrType,
    pub metric: String,
    /// Set for per-budget cells.
    pub budget: Option<u32>,
    pub rho: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub n: usize,
    pub note: String,
}

impl CorrCell {
    fn new(s: &PairedSample, view: View, corr: CorrType, budget: Option<u32>, n: usize, out: CorrOutcome) -> Self {
        let (rho, p, note) = match out {
            CorrOutcome::Defined { rho, p } => (Some(rho), Some(p), String::new()),
            CorrOutcome::Undefined(note) => (None, None, note),
        };
        CorrCell {
            dataset: s.dataset.clone(),
            regime: s.regime,
            view,
            corr,
            metric: s.metric.clone(),
            budget,
            rho,
            p,
            q: None,
            n,
            note,
        }
    }

    pub fn significant(&self) -> bool {
        self.q.is_some_and(|q| q < 0.05)
    }
}

fn sample_outcome(s: &PairedSample, view: View, corr: CorrType) -> Result<CorrOutcome> {
    if s.len() < 3 {
        return Ok(CorrOutcome::Undefined(NOTE_TOO_FEW.into()));
    }
    match view {
        View::Raw => correlate(corr, &s.m, &s.y),
        View::Residual => {
            if s.a.iter().all(|a| *a == s.a[0]) {
                return Ok(CorrOutcome::Undefined(NOTE_CONSTANT_RATIO.into()));
            }
            let rm = residualize(&s.a, &s.m)?;
            let ry = residualize(&s.a, &s.y)?;
            correlate(corr, &rm, &ry)
        }
    }
}

/// Fills `q` with one BH family per `(regime, view, corr, budget)` over all
/// defined cells of that family.
pub fn apply_bh(cells: &mut [CorrCell]) -> Result<()> {
    let mut families: BTreeMap<(Regime, View, CorrType, Option<u32>), Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        if c.p.is_some() {
            families
                .entry((c.regime, c.view, c.corr, c.budget))
                .or_default()
                .push(i);
        }
    }
    for idx in families.values() {
        let ps: Vec<f64> = idx.iter().map(|&i| cells[i].p.unwrap()).collect();
        for (&i, q) in idx.iter().zip(bh_fdr(&ps)?) {
            cells[i].q = Some(q);
        }
    }
    Ok(())
}

/// Every `(dataset, regime, metric)` cell for one view and correlation type,
/// with q-values.
pub fn correlation_matrix(
    metrics: &MetricTable,
    runs: &RunsTable,
    view: View,
    corr: CorrType,
) -> Result<Vec<CorrCell>> {
    let samples = paired_samples(metrics, runs)?;
    let mut cells = samples
        .iter()
        .map(|s| {
            Ok(CorrCell::new(
                s,
                view,
                corr,
                None,
                s.len(),
                sample_outcome(s, view, corr)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    apply_bh(&mut cells)?;
    Ok(cells)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShortlistEntry {
    pub metric: String,
    /// `max_d |ρ_resid(M, d)|`.
    pub score: f64,
    pub best_dataset: String,
}

/// Top `k` metrics by their largest absolute residual Spearman correlation
/// over datasets. Equal scores are ordered by metric name.
pub fn key_metric_shortlist(cells: &[CorrCell], k: usize) -> Result<Vec<ShortlistEntry>> {
    let mut best: BTreeMap<&str, (f64, &str)> = BTreeMap::new();
    for c in cells {
        if c.view != View::Residual || c.corr != CorrType::Spearman || c.budget.is_some() {
            continue;
        }
        if let Some(r) = c.rho {
            let e = best.entry(&c.metric).or_insert((f64::NEG_INFINITY, ""));
            if r.abs() > e.0 {
                *e = (r.abs(), &c.dataset);
            }
        }
    }
    if best.is_empty() {
        return Err(Error::invalid("no defined residual Spearman cells to shortlist from"));
    }
    let mut entries: Vec<ShortlistEntry> = best
        .into_iter()
        .map(|(m, (s, d))| ShortlistEntry {
            metric: m.to_string(),
            score: s,
            best_dataset: d.to_string(),
        })
        .collect();
    entries.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.metric.cmp(&b.metric)));
    entries.truncate(k);
    Ok(entries)
}

/// Budget robustness for one `(dataset, regime, metric)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessRow {
    pub dataset: String,
    pub regime: Regime,
    pub metric: String,
    pub per_budget: Vec<(u32, CorrOutcome)>,
    /// Mean of the defined per-budget ρ.
    pub mean_rho: Option<f64>,
    /// `25:constant; 50:constant` for budgets without a defined ρ.
    pub budget_notes: String,
    pub fe: std::result::Result<FixedEffectsFit, String>,
}

/// Spearman across generators at each fixed budget, plus the fixed-effects
/// fit over the full grid.
pub fn per_budget_correlations(
    metrics: &MetricTable,
    runs: &RunsTable,
    budgets: &[u32],
) -> Result<(Vec<CorrCell>, Vec<RobustnessRow>)> {
    let samples = paired_samples(metrics, runs)?;
    let present: BTreeSet<u32> = metrics.records().iter().map(|r| r.key.aug_ratio).collect();
    if let Some(b) = budgets.iter().find(|b| !present.contains(b)) {
        return Err(Error::invalid(format!("budget {b}% is absent from the metric grid")));
    }
    let mut cells = Vec::new();
    let mut rows = Vec::new();
    for s in &samples {
        let mut per_budget = Vec::new();
        for &b in budgets {
            let (m, y) = s.at_ratio(b);
            let out = if m.len() < 3 {
                CorrOutcome::Undefined(NOTE_TOO_FEW.into())
            } else {
                match spearman(&m, &y)? {
                    CorrOutcome::Undefined(note) if note == NOTE_ZERO_METRIC => {
                        CorrOutcome::Undefined(NOTE_CONSTANT.into())
                    }
                    other => other,
                }
            };
            cells.push(CorrCell::new(
                s,
                View::Raw,
                CorrType::Spearman,
                Some(b),
                m.len(),
                out.clone(),
            ));
            per_budget.push((b, out));
        }
        let defined: Vec<f64> = per_budget.iter().filter_map(|(_, o)| o.rho()).collect();
        let mean_rho = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
        let budget_notes = per_budget
            .iter()
            .filter_map(|(b, o)| match o {
                CorrOutcome::Undefined(note) => Some(format!("{b}:{note}")),
                CorrOutcome::Defined { .. } => None,
            })
            .collect::<Vec<_>>()
            .join("; ");
        let levels: Vec<u32> = s.a.iter().map(|a| *a as u32).collect();
        let fe = fixed_effects(&levels, &s.m, &s.y).map_err(|e| e.to_string());
        rows.push(RobustnessRow {
            dataset: s.dataset.clone(),
            regime: s.regime,
            metric: s.metric.clone(),
            per_budget,
            mean_rho,
            budget_notes,
            fe,
        });
    }
    apply_bh(&mut cells)?;
    Ok((cells, rows))
}

#[cfg(test)]
mod tests;
