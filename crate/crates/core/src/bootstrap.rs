//! Matched-size bootstrap: frozen real reference subsets, size-matched
//! synthetic draws per trial, and aggregation into metric rows.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{AnnotationSet, ConfigKey, EmbeddingSet, Encoder, MetricRecord};
use crate::embed::{global_metrics, EmbedConfig};
use crate::error::{Error, Result};
use crate::metric::encoder_metric_name;
use crate::object::{object_centric_metrics, StatsConfig};
use crate::seed_parts;
use crate::seeding::{derive_u64, stream};
use crate::stats::{mean, std_dev};

pub const DEFAULT_TRIALS: usize = 5;

/// Real reference subsets for one dataset. Built once and never mutated, so
/// every generator and ratio is compared against the same `R^(b)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanRepr")]
pub struct BootstrapPlan {
    dataset: String,
    n_match: usize,
    n_trials: usize,
    master_seed: u64,
    real_pool_size: usize,
    real_subset_indices: Vec<Vec<usize>>,
}

#[derive(Deserialize)]
struct PlanRepr {
    dataset: String,
    n_match: usize,
    n_trials: usize,
    master_seed: u64,
    real_pool_size: usize,
    real_subset_indices: Vec<Vec<usize>>,
}

impl TryFrom<PlanRepr> for BootstrapPlan {
    type Error = Error;

    fn try_from(p: PlanRepr) -> Result<Self> {
        if p.real_subset_indices.len() != p.n_trials || p.n_trials == 0 {
            return Err(Error::invalid("plan trial count does not match its subsets"));
        }
        for subset in &p.real_subset_indices {
            let mut s = subset.clone();
            s.sort_unstable();
            s.dedup();
            if s.len() != p.n_match || subset.len() != p.n_match {
                return Err(Error::invalid("plan subset is not a set of n_match indices"));
            }
            if s.last().is_some_and(|&i| i >= p.real_pool_size) {
                return Err(Error::invalid("plan subset index outside the real pool"));
            }
        }
        Ok(BootstrapPlan {
            dataset: p.dataset,
            n_match: p.n_match,
            n_trials: p.n_trials,
            master_seed: p.master_seed,
            real_pool_size: p.real_pool_size,
            real_subset_indices: p.real_subset_indices,
        })
    }
}

impl BootstrapPlan {
    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn n_match(&self) -> usize {
        self.n_match
    }

    pub fn n_trials(&self) -> usize {
        self.n_trials
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn real_pool_size(&self) -> usize {
        self.real_pool_size
    }

    /// Sorted indices of the real subset for `trial`.
    pub fn real_subset(&self, trial: usize) -> Result<&[usize]> {
        self.real_subset_indices
            .get(trial)
            .map(Vec::as_slice)
            .ok_or_else(|| self.bad_trial(trial))
    }

    fn bad_trial(&self, trial: usize) -> Error {
        Error::invalid(format!(
            "trial {trial} out of range for a plan with {} trials",
            self.n_trials
        ))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad plan: {e}")))
    }
}

pub fn make_plan(
    dataset: &str,
    real_pool_size: usize,
    n_match: usize,
    n_trials: usize,
    master_seed: u64,
) -> Result<BootstrapPlan> {
    if n_match == 0 || n_match > real_pool_size {
        return Err(Error::invalid(format!(
            "match size {n_match} must be in 1..={real_pool_size} (real pool size)"
        )));
    }
    if n_trials == 0 {
        return Err(Error::invalid("at least one bootstrap trial is required"));
    }
    let real_subset_indices = (0..n_trials)
        .map(|b| {
            let mut rng = stream(seed_parts![master_seed, "real_subset", dataset, b]);
            let mut idx = sample(&mut rng, real_pool_size, n_match).into_vec();
            idx.sort_unstable();
            idx
        })
        .collect();
    Ok(BootstrapPlan {
        dataset: dataset.to_string(),
        n_match,
        n_trials,
        master_seed,
        real_pool_size,
        real_subset_indices,
    })
}

/// `N` indices into a synthetic pool of `syn_pool_size` items. A pool of
/// exactly `N` is used whole; larger pools are subsampled without
/// replacement, smaller ones resampled with replacement.
pub fn draw_synthetic(plan: &BootstrapPlan, trial: usize, syn_pool_size: usize, key: &ConfigKey) -> Result<Vec<usize>> {
    if trial >= plan.n_trials {
        return Err(plan.bad_trial(trial));
    }
    if syn_pool_size == 0 {
        return Err(Error::invalid(format!("synthetic pool for {key} is empty")));
    }
    let n = plan.n_match;
    if syn_pool_size == n {
        return Ok((0..n).collect());
    }
    let mut rng = stream(seed_parts![
        plan.master_seed,
        "synthetic_draw",
        &key.dataset,
        &key.generator,
        key.aug_ratio,
        trial
    ]);
    if syn_pool_size > n {
        let mut idx = sample(&mut rng, syn_pool_size, n).into_vec();
        idx.sort_unstable();
        Ok(idx)
    } else {
        Ok((0..n).map(|_| rng.random_range(0..syn_pool_size)).collect())
    }
}

/// Embeddings per encoder plus labels, all indexed the same way.
#[derive(Debug, Clone)]
pub struct Pool {
    pub embeddings: BTreeMap<Encoder, EmbeddingSet>,
    pub labels: AnnotationSet,
}

impl Pool {
    pub fn new(embeddings: BTreeMap<Encoder, EmbeddingSet>, labels: AnnotationSet) -> Result<Self> {
        for (enc, set) in &embeddings {
            if set.encoder() != *enc {
                return Err(Error::invalid(format!(
                    "embedding set {} is tagged {} but was supplied as {}",
                    set.set_id(),
                    set.encoder().tag(),
                    enc.tag()
                )));
            }
            if set.rows() != labels.len() {
                return Err(Error::invalid(format!(
                    "embedding set {} has {} rows but the label set has {} images",
                    set.set_id(),
                    set.rows(),
                    labels.len()
                )));
            }
        }
        Ok(Pool { embeddings, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn encoders(&self) -> Vec<Encoder> {
        self.embeddings.keys().copied().collect()
    }

    /// The first `n` items, used for prefix-nested ratio pools.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        let embeddings = self
            .embeddings
            .iter()
            .map(|(e, s)| Ok((*e, s.prefix(n)?)))
            .collect::<Result<_>>()?;
        Ok(Pool {
            embeddings,
            labels: self.labels.prefix(n)?,
        })
    }

    fn select(&self, idx: &[usize]) -> Result<Self> {
        let embeddings = self
            .embeddings
            .iter()
            .map(|(e, s)| Ok((*e, s.select(idx)?)))
            .collect::<Result<_>>()?;
        Ok(Pool {
            embeddings,
            labels: self.labels.select(idx)?,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BootstrapConfig {
    pub embed: EmbedConfig,
    pub stats: StatsConfig,
}

/// Metric rows for one configuration: mean over trials, sample standard
/// deviation as dispersion (0 for a single trial).
pub fn run_config(
    plan: &BootstrapPlan,
    real: &Pool,
    syn: &Pool,
    key: &ConfigKey,
    cfg: &BootstrapConfig,
) -> Result<Vec<MetricRecord>> {
    if key.dataset != plan.dataset {
        return Err(Error::invalid(format!(
            "configuration {key} does not belong to the plan for {}",
            plan.dataset
        )));
    }
    if real.len() != plan.real_pool_size {
        return Err(Error::invalid(format!(
            "real pool has {} items, plan expects {}",
            real.len(),
            plan.real_pool_size
        )));
    }
    let encoders = real.encoders();
    if syn.encoders() != encoders {
        return Err(Error::invalid(format!(
            "encoder mismatch for {key}: real has {:?}, synthetic has {:?}",
            encoders,
            syn.encoders()
        )));
    }

    let per_trial: Vec<Vec<(String, f64)>> = (0..plan.n_trials)
        .into_par_iter()
        .map(|b| -> Result<Vec<(String, f64)>> {
            let r = real.select(plan.real_subset(b)?)?;
            let s = syn.select(&draw_synthetic(plan, b, syn.len(), key)?)?;
            let mut out = Vec::new();
            for enc in &encoders {
                let seed = derive_u64(seed_parts![
                    plan.master_seed,
                    "metrics",
                    &key.dataset,
                    &key.generator,
                    key.aug_ratio,
                    b,
                    enc.tag()
                ]);
                let vals = global_metrics(&r.embeddings[enc], &s.embeddings[enc], seed, &cfg.embed)?;
                out.extend(vals.into_iter().map(|m| (encoder_metric_name(&m.name, *enc), m.value)));
            }
            let obj = object_centric_metrics(&r.labels, &s.labels, &cfg.stats)?;
            out.extend(obj.into_iter().map(|m| (m.name, m.value)));
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let names: Vec<String> = per_trial[0].iter().map(|(n, _)| n.clone()).collect();
    let ddof = usize::from(plan.n_trials > 1);
    Ok(names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let xs: Vec<f64> = per_trial.iter().map(|t| t[i].1).collect();
            MetricRecord {
                key: key.clone(),
                metric: name,
                value: mean(&xs),
                dispersion: if ddof == 0 { 0.0 } else { std_dev(&xs, ddof) },
                trials: plan.n_trials,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::Regime;
    use crate::fixtures::{gaussian_cloud, label_fixture, LabelProfile};

    fn pool(seed: u64, label: &str, rows: usize, shift: f64) -> Pool {
        let mut embeddings = BTreeMap::new();
        for enc in Encoder::ALL {
            let set = gaussian_cloud(seed, &format!("{label}_{}", enc.tag()), rows, 4, shift, enc).unwrap();
            embeddings.insert(enc, set);
        }
        let profile = LabelProfile {
            mean_boxes: 3.0,
            small_prob: 0.3,
        };
        Pool::new(embeddings, label_fixture(seed, label, rows, profile)).unwrap()
    }

    fn key(gen: &str, ratio: u32) -> ConfigKey {
        ConfigKey::new("ds", Regime::Scratch, gen, ratio).unwrap()
    }

    #[test]
    fn traffic_sign_plan() {
        let plan = make_plan("TrafficSigns", 1798, 179, 5, 7).unwrap();
        assert_eq!(plan.n_trials(), 5);
        for b in 0..5 {
            let s = plan.real_subset(b).unwrap();
            assert_eq!(s.len(), 179);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(*s.last().unwrap() < 1798);
        }
        assert_ne!(plan.real_subset(0).unwrap(), plan.real_subset(1).unwrap());
        assert_eq!(plan, make_plan("TrafficSigns", 1798, 179, 5, 7).unwrap());
        assert!(make_plan("x", 10, 11, 5, 0).is_err());
    }

    #[test]
    fn exhaustive_plan() {
        let plan = make_plan("d", 30, 30, 3, 1).unwrap();
        for b in 0..3 {
            assert_eq!(plan.real_subset(b).unwrap(), (0..30).collect::<Vec<_>>().as_slice());
        }
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = make_plan("d", 100, 10, 5, 3).unwrap();
        let back = BootstrapPlan::from_json(&plan.to_json().unwrap()).unwrap();
        assert_eq!(plan, back);
        let tampered = plan.to_json().unwrap().replacen("\"n_match\": 10", "\"n_match\": 9", 1);
        assert!(BootstrapPlan::from_json(&tampered).is_err());
    }

    #[test]
    fn synthetic_draw_contracts() {
        let plan = make_plan("ds", 200, 20, 5, 9).unwrap();
        let k = key("g", 25);
        for b in 0..5 {
            assert_eq!(draw_synthetic(&plan, b, 20, &k).unwrap(), (0..20).collect::<Vec<_>>());
        }
        let draws: Vec<Vec<usize>> = (0..5).map(|b| draw_synthetic(&plan, b, 40, &k).unwrap()).collect();
        for d in &draws {
            let mut u = d.clone();
            u.dedup();
            assert_eq!(u.len(), 20);
        }
        assert_ne!(draws[0], draws[1]);
        let small = draw_synthetic(&plan, 0, 10, &k).unwrap();
        assert_eq!(small.len(), 20);
        assert!(small.iter().all(|&i| i < 10));
        assert!(draw_synthetic(&plan, 5, 20, &k).is_err());
        assert_ne!(draw_synthetic(&plan, 0, 40, &key("h", 25)).unwrap(), draws[0]);
    }

    #[test]
    fn identity_config() {
        let real = pool(1, "real", 60, 0.0);
        let plan = make_plan("ds", 60, 25, 2, 4).unwrap();
        let syn = real.select(plan.real_subset(0).unwrap()).unwrap();
        let plan1 = BootstrapPlan::from_json(&make_plan("ds", 60, 25, 1, 4).unwrap().to_json().unwrap()).unwrap();
        let rows = run_config(&plan1, &real, &syn, &key("g", 10), &BootstrapConfig::default()).unwrap();
        let get = |n: &str| rows.iter().find(|r| r.metric == n).unwrap();
        assert!(get("fid_inception").value < 1e-6);
        assert!(get("sw_approx_dino").value < 1e-9);
        assert_eq!(get("precision_inception").value, 1.0);
        assert_eq!(get("recall_dino").value, 1.0);
        assert_eq!(get("coverage_inception").value, 1.0);
        assert_eq!(get("object_count_wass_mean").value, 0.0);
        assert!(rows.iter().all(|r| r.dispersion == 0.0 && r.trials == 1));
        assert_eq!(rows.len(), 13 * 2 + 5);
    }

    #[test]
    fn shift_ordering_and_determinism() {
        let real = pool(2, "real", 80, 0.0);
        let near = pool(3, "near", 40, 0.0);
        let far = pool(3, "far", 40, 2.0);
        let plan = make_plan("ds", 80, 30, 3, 5).unwrap();
        let cfg = BootstrapConfig::default();
        let a = run_config(&plan, &real, &near, &key("near", 50), &cfg).unwrap();
        let b = run_config(&plan, &real, &far, &key("far", 50), &cfg).unwrap();
        let fid = |rows: &[MetricRecord]| rows.iter().find(|r| r.metric == "fid_inception").unwrap().value;
        assert!(fid(&a) < fid(&b));
        assert_eq!(a, run_config(&plan, &real, &near, &key("near", 50), &cfg).unwrap());
        assert!(a.iter().all(|r| r.trials == 3));
    }

    #[test]
    fn rejects_encoder_mismatch() {
        let real = pool(2, "real", 40, 0.0);
        let mut syn = pool(3, "syn", 40, 0.0);
        syn.embeddings.remove(&Encoder::Dino);
        let plan = make_plan("ds", 40, 20, 1, 0).unwrap();
        assert!(run_config(&plan, &real, &syn, &key("g", 10), &BootstrapConfig::default()).is_err());
        let mislabeled = gaussian_cloud(0, "x", 40, 4, 0.0, Encoder::Dino).unwrap();
        let mut emb = BTreeMap::new();
        emb.insert(Encoder::Inception, mislabeled);
        assert!(Pool::new(emb, real.labels.clone()).is_err());
    }
}
