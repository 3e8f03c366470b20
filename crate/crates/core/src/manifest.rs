//! Study manifest: where each dataset's real pool and each generator's
//! synthetic pool live on disk, and which ratios were trained.
//!
//! ```json
//! {
//!   "datasets": [{
//!     "name": "TrafficSigns",
//!     "real_train_size": 1798,
//!     "regimes": ["scratch", "pretrained"],
//!     "real": {"embeddings": {"inception": "real.inception.emb"}, "labels": "real/labels", "index": "real/index.txt"},
//!     "generators": [{
//!       "name": "DiffusionGAN",
//!       "embeddings": {"inception": "dgan.inception.emb"}, "labels": "dgan/labels", "index": "dgan/index.txt",
//!       "ratios": [10, 25, 50, 75, 100, 125, 150]
//!     }]
//!   }]
//! }
//! ```
//!
//! Relative paths resolve against the manifest's directory. The pool for
//! ratio `r` is the first `floor(r · real_train_size / 100)` items of the
//! generator's files unless `pool_sizes` overrides it.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bootstrap::{make_plan, run_config, BootstrapConfig, BootstrapPlan, Pool};
use crate::dataio::{load_embeddings, load_labels, ConfigKey, Encoder, MetricRecord, MetricTable, Regime};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolFiles {
    pub embeddings: BTreeMap<Encoder, PathBuf>,
    /// Directory of YOLO label files.
    pub labels: PathBuf,
    /// One image id per line, in embedding row order.
    pub index: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorEntry {
    pub name: String,
    #[serde(flatten)]
    pub files: PoolFiles,
    pub ratios: Vec<u32>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pool_sizes: BTreeMap<u32, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub name: String,
    pub real_train_size: usize,
    pub regimes: Vec<Regime>,
    pub real: PoolFiles,
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub datasets: Vec<DatasetEntry>,
}

/// Items in the ratio-`r` pool: `floor(r · n_train / 100)`.
pub fn ratio_pool_size(real_train_size: usize, ratio: u32) -> usize {
    real_train_size * ratio as usize / 100
}

/// Match size for `--match-size auto`: the +10% increment.
pub fn auto_match_size(real_train_size: usize) -> usize {
    ratio_pool_size(real_train_size, 10).max(1)
}

impl PoolFiles {
    fn resolve(&mut self, base: &Path) {
        for p in self.embeddings.values_mut() {
            *p = base.join(&*p);
        }
        self.labels = base.join(&self.labels);
        self.index = base.join(&self.index);
    }

    pub fn load(&self) -> Result<Pool> {
        let labels = load_labels(&self.labels, &self.index)?;
        let mut embeddings = BTreeMap::new();
        for (enc, path) in &self.embeddings {
            let set = load_embeddings(path)?;
            if set.encoder() != *enc {
                return Err(Error::Manifest(format!(
                    "{} declares encoder {} but is listed under {}",
                    path.display(),
                    set.encoder().tag(),
                    enc.tag()
                )));
            }
            embeddings.insert(*enc, set);
        }
        Pool::new(embeddings, labels)
    }
}

impl GeneratorEntry {
    pub fn pool_size(&self, real_train_size: usize, ratio: u32) -> usize {
        self.pool_sizes
            .get(&ratio)
            .copied()
            .unwrap_or_else(|| ratio_pool_size(real_train_size, ratio))
    }
}

impl Manifest {
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut m: Manifest = serde_json::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        for ds in &mut m.datasets {
            ds.real.resolve(base);
            for g in &mut ds.generators {
                g.files.resolve(base);
            }
        }
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::from_json(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        let mut names = BTreeSet::new();
        for ds in &self.datasets {
            let bad = |msg: String| Err(Error::Manifest(format!("dataset {}: {msg}", ds.name)));
            if !names.insert(&ds.name) {
                return bad("listed twice".into());
            }
            if ds.regimes.is_empty() {
                return bad("no regimes".into());
            }
            if ds.real.embeddings.is_empty() {
                return bad("real pool lists no embedding files".into());
            }
            let mut gens = BTreeSet::new();
            for g in &ds.generators {
                if !gens.insert(&g.name) {
                    return bad(format!("generator {} listed twice", g.name));
                }
                let encoders_match = g.files.embeddings.keys().eq(ds.real.embeddings.keys());
                if !encoders_match {
                    return bad(format!("generator {} encoders differ from the real pool", g.name));
                }
                let mut seen = BTreeSet::new();
                for &r in &g.ratios {
                    ConfigKey::new(&ds.name, ds.regimes[0], &g.name, r)?;
                    if !seen.insert(r) {
                        return bad(format!("generator {} repeats ratio {r}", g.name));
                    }
                }
            }
        }
        if self.configs().is_empty() {
            return Err(Error::Manifest("no configurations".into()));
        }
        Ok(())
    }

    /// Every declared `(dataset, regime, generator, ratio)`, sorted.
    pub fn configs(&self) -> Vec<ConfigKey> {
        let mut out: Vec<ConfigKey> = self
            .datasets
            .iter()
            .flat_map(|ds| {
                ds.regimes.iter().flat_map(move |&reg| {
                    ds.generators.iter().flat_map(move |g| {
                        g.ratios.iter().map(move |&r| ConfigKey {
                            dataset: ds.name.clone(),
                            regime: reg,
                            generator: g.name.clone(),
                            aug_ratio: r,
                        })
                    })
                })
            })
            .collect();
        out.sort();
        out
    }

    pub fn dataset(&self, name: &str) -> Option<&DatasetEntry> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchSize {
    Auto,
    Fixed(usize),
}

impl std::str::FromStr for MatchSize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(MatchSize::Auto);
        }
        s.parse()
            .map(MatchSize::Fixed)
            .map_err(|_| Error::invalid(format!("match size must be an integer or \"auto\", got {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct MetricsJob {
    pub master_seed: u64,
    pub trials: usize,
    pub match_size: MatchSize,
    pub config: BootstrapConfig,
}

/// Configurations that could not be evaluated, with the reason.
#[derive(Debug, Default)]
pub struct MetricsOutcome {
    pub table: MetricTable,
    pub failures: Vec<(String, Error)>,
}

struct Unit<'a> {
    dataset: &'a DatasetEntry,
    generator: &'a GeneratorEntry,
    ratio: u32,
}

/// Computes metric rows for every configuration in the manifest. Metrics do
/// not depend on the training regime, so each row is emitted once per
/// declared regime. A failing configuration is reported and skipped.
pub fn compute_metrics(manifest: &Manifest, job: &MetricsJob) -> MetricsOutcome {
    let mut failures = Vec::new();
    let mut plans: BTreeMap<&str, (BootstrapPlan, Pool)> = BTreeMap::new();
    for ds in &manifest.datasets {
        let prepared = ds.real.load().and_then(|real| {
            let n = match job.match_size {
                MatchSize::Auto => auto_match_size(ds.real_train_size),
                MatchSize::Fixed(n) => n,
            };
            let plan = make_plan(&ds.name, real.len(), n, job.trials, job.master_seed)?;
            Ok((plan, real))
        });
        match prepared {
            Ok(p) => {
                info!(
                    "{}: plan with N={} over {} trials",
                    ds.name,
                    p.0.n_match(),
                    p.0.n_trials()
                );
                plans.insert(&ds.name, p);
            }
            Err(e) => {
                warn!("{}: real pool unusable: {e}", ds.name);
                failures.push((ds.name.clone(), e));
            }
        }
    }

    let gen_pools: Vec<(&DatasetEntry, &GeneratorEntry, Result<Pool>)> = manifest
        .datasets
        .iter()
        .filter(|ds| plans.contains_key(ds.name.as_str()))
        .flat_map(|ds| ds.generators.iter().map(move |g| (ds, g)))
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(ds, g)| (ds, g, g.files.load()))
        .collect();

    let mut units = Vec::new();
    let mut loaded: BTreeMap<(&str, &str), &Pool> = BTreeMap::new();
    for (ds, g, pool) in &gen_pools {
        match pool {
            Ok(p) => {
                loaded.insert((&ds.name, &g.name), p);
                units.extend(g.ratios.iter().map(|&ratio| Unit {
                    dataset: ds,
                    generator: g,
                    ratio,
                }));
            }
            Err(e) => {
                warn!("{}/{}: synthetic pool unusable: {e}", ds.name, g.name);
                failures.push((format!("{}/{}", ds.name, g.name), Error::Manifest(e.to_string())));
            }
        }
    }

    let results: Vec<(String, Result<Vec<MetricRecord>>)> = units
        .par_iter()
        .map(|u| {
            let ds = u.dataset;
            let label = format!("{}/{}@{}%", ds.name, u.generator.name, u.ratio);
            let run = || -> Result<Vec<MetricRecord>> {
                let (plan, real) = &plans[ds.name.as_str()];
                let full = loaded[&(ds.name.as_str(), u.generator.name.as_str())];
                let size = u.generator.pool_size(ds.real_train_size, u.ratio);
                if size > full.len() {
                    return Err(Error::Manifest(format!(
                        "ratio pool needs {size} items, generator files hold {}",
                        full.len()
                    )));
                }
                let syn = full.prefix(size)?;
                let key = ConfigKey::new(&ds.name, ds.regimes[0], &u.generator.name, u.ratio)?;
                let rows = run_config(plan, real, &syn, &key, &job.config)?;
                Ok(ds
                    .regimes
                    .iter()
                    .flat_map(|&reg| {
                        rows.iter().map(move |r| MetricRecord {
                            key: ConfigKey {
                                regime: reg,
                                ..r.key.clone()
                            },
                            ..r.clone()
                        })
                    })
                    .collect())
            };
            let res = run();
            match &res {
                Ok(_) => info!("{label}: done"),
                Err(e) => warn!("{label}: failed: {e}"),
            }
            (label, res)
        })
        .collect();

    let mut records = Vec::new();
    for (label, res) in results {
        match res {
            Ok(rows) => records.extend(rows),
            Err(e) => failures.push((label, e)),
        }
    }
    match MetricTable::new(records) {
        Ok(t) => MetricsOutcome {
            table: t.sorted(),
            failures,
        },
        Err(e) => {
            failures.push(("metric table".into(), e));
            MetricsOutcome {
                table: MetricTable::default(),
                failures,
            }
        }
    }
}
