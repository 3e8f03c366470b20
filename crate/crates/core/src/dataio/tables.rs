//! Runs and metric tables (`runs.csv`, `metrics.csv`) keyed by experimental
//! configuration.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator name reserved for real-only training runs.
pub const BASELINE: &str = "baseline";

/// Augmentation ratios (percent of the real training split) allowed in a key.
pub const ALLOWED_RATIOS: [u32; 8] = [0, 10, 25, 50, 75, 100, 125, 150];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Scratch,
    Pretrained,
}

impl Regime {
    pub fn tag(self) -> &'static str {
        match self {
            Regime::Scratch => "scratch",
            Regime::Pretrained => "pretrained",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scratch" => Ok(Regime::Scratch),
            "pretrained" => Ok(Regime::Pretrained),
            other => Err(Error::UnknownRegime(other.to_string())),
        }
    }
}

/// One cell of the experimental grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigKey {
    pub dataset: String,
    pub regime: Regime,
    pub generator: String,
    pub aug_ratio: u32,
}

impl ConfigKey {
    pub fn new(
        dataset: impl Into<String>,
        regime: Regime,
        generator: impl Into<String>,
        aug_ratio: u32,
    ) -> Result<Self> {
        let key = ConfigKey {
            dataset: dataset.into(),
            regime,
            generator: generator.into(),
            aug_ratio,
        };
        key.validate()?;
        Ok(key)
    }

    pub fn baseline(dataset: impl Into<String>, regime: Regime) -> Self {
        ConfigKey {
            dataset: dataset.into(),
            regime,
            generator: BASELINE.to_string(),
            aug_ratio: 0,
        }
    }

    pub fn is_baseline(&self) -> bool {
        self.generator == BASELINE
    }

    pub fn validate(&self) -> Result<()> {
        if self.dataset.is_empty() || self.generator.is_empty() {
            return Err(Error::InvalidConfig(format!("empty name in {self}")));
        }
        if !ALLOWED_RATIOS.contains(&self.aug_ratio) {
            return Err(Error::InvalidConfig(format!(
                "augmentation ratio {} not in {ALLOWED_RATIOS:?}",
                self.aug_ratio
            )));
        }
        if self.is_baseline() != (self.aug_ratio == 0) {
            return Err(Error::InvalidConfig(format!(
                "{self}: ratio 0 is reserved for the baseline generator"
            )));
        }
        Ok(())
    }

    /// `generator@ratio%`, the label used in summary tables.
    pub fn cell_label(&self) -> String {
        format!("{}@{}%", self.generator, self.aug_ratio)
    }
}

impl fmt::Display for ConfigKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/{}@{}%",
            self.dataset, self.regime, self.generator, self.aug_ratio
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub key: ConfigKey,
    pub seed: u64,
    pub map5095: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunsTable {
    records: Vec<RunRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RunRow {
    dataset: String,
    regime: String,
    generator: String,
    aug_ratio: u32,
    seed: u64,
    map5095: f64,
}

impl RunsTable {
    pub fn new(records: Vec<RunRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            r.key.validate()?;
            if !(0.0..=1.0).contains(&r.map5095) {
                return Err(Error::MapOutOfRange(r.map5095));
            }
            if !seen.insert((r.key.clone(), r.seed)) {
                return Err(Error::DuplicateRun(format!("{} seed {}", r.key, r.seed)));
            }
        }
        Ok(RunsTable { records })
    }

    pub fn records(&self) -> &[RunRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// mAP per configuration, averaged over seeds.
    pub fn mean_map(&self) -> BTreeMap<ConfigKey, f64> {
        let mut acc: BTreeMap<ConfigKey, Vec<(u64, f64)>> = BTreeMap::new();
        for r in &self.records {
            acc.entry(r.key.clone()).or_default().push((r.seed, r.map5095));
        }
        acc.into_iter()
            .map(|(k, mut v)| {
                // fixed summation order regardless of file row order
                v.sort_by_key(|&(seed, _)| seed);
                let sum: f64 = v.iter().map(|&(_, m)| m).sum();
                (k, sum / v.len() as f64)
            })
            .collect()
    }

    /// Per-seed mAP values for one configuration.
    pub fn seeds_for(&self, key: &ConfigKey) -> BTreeMap<u64, f64> {
        self.records
            .iter()
            .filter(|r| &r.key == key)
            .map(|r| (r.seed, r.map5095))
            .collect()
    }

    pub fn from_reader<R: std::io::Read>(reader: R, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut records = Vec::new();
        for row in rdr.deserialize::<RunRow>() {
            let row = row.map_err(|e| Error::Csv {
                path: origin.to_path_buf(),
                source: e,
            })?;
            let key = ConfigKey::new(row.dataset, row.regime.parse()?, row.generator, row.aug_ratio)?;
            records.push(RunRecord {
                key,
                seed: row.seed,
                map5095: row.map5095,
            });
        }
        Self::new(records)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            wtr.serialize(RunRow {
                dataset: r.key.dataset.clone(),
                regime: r.key.regime.tag().to_string(),
                generator: r.key.generator.clone(),
                aug_ratio: r.key.aug_ratio,
                seed: r.seed,
                map5095: r.map5095,
            })
            .map_err(|e| Error::Csv {
                path: "<memory>".into(),
                source: e,
            })?;
        }
        finish_csv(wtr)
    }
}

pub fn load_runs(path: impl AsRef<Path>) -> Result<RunsTable> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    RunsTable::from_reader(file, path)
}

pub fn write_runs(path: impl AsRef<Path>, table: &RunsTable) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_csv_string()?).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub key: ConfigKey,
    pub metric: String,
    pub value: f64,
    pub dispersion: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricTable {
    records: Vec<MetricRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricRow {
    dataset: String,
    regime: String,
    generator: String,
    aug_ratio: u32,
    metric: String,
    value: f64,
    dispersion: f64,
    trials: usize,
}

impl MetricTable {
    pub fn new(records: Vec<MetricRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for r in &records {
            r.key.validate()?;
            if r.key.is_baseline() {
                return Err(Error::InvalidConfig(format!(
                    "metric {} recorded for baseline configuration {}",
                    r.metric, r.key
                )));
            }
            if !r.value.is_finite() || !r.dispersion.is_finite() || r.dispersion < 0.0 {
                return Err(Error::invalid(format!(
                    "metric {} for {}: value {} / dispersion {} not admissible",
                    r.metric, r.key, r.value, r.dispersion
                )));
            }
            if !seen.insert((r.key.clone(), r.metric.clone())) {
                return Err(Error::DuplicateMetric(format!("{} {}", r.key, r.metric)));
            }
        }
        Ok(MetricTable { records })
    }

    pub fn records(&self) -> &[MetricRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Sorted by key then metric name.
    pub fn sorted(mut self) -> Self {
        self.records
            .sort_by(|a, b| a.key.cmp(&b.key).then_with(|| a.metric.cmp(&b.metric)));
        self
    }

    pub fn metric_names(&self) -> BTreeSet<String> {
        self.records.iter().map(|r| r.metric.clone()).collect()
    }

    /// `metric -> key -> value`.
    pub fn by_metric(&self) -> BTreeMap<&str, BTreeMap<&ConfigKey, f64>> {
        let mut out: BTreeMap<&str, BTreeMap<&ConfigKey, f64>> = BTreeMap::new();
        for r in &self.records {
            out.entry(r.metric.as_str()).or_default().insert(&r.key, r.value);
        }
        out
    }

    pub fn from_reader<R: std::io::Read>(reader: R, origin: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let mut records = Vec::new();
        for row in rdr.deserialize::<MetricRow>() {
            let row = row.map_err(|e| Error::Csv {
                path: origin.to_path_buf(),
                source: e,
            })?;
            let key = ConfigKey::new(row.dataset, row.regime.parse()?, row.generator, row.aug_ratio)?;
            records.push(MetricRecord {
                key,
                metric: row.metric,
                value: row.value,
                dispersion: row.dispersion,
                trials: row.trials,
            });
        }
        Self::new(records)
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            wtr.serialize(MetricRow {
                dataset: r.key.dataset.clone(),
                regime: r.key.regime.tag().to_string(),
                generator: r.key.generator.clone(),
                aug_ratio: r.key.aug_ratio,
                metric: r.metric.clone(),
                value: r.value,
                dispersion: r.dispersion,
                trials: r.trials,
            })
            .map_err(|e| Error::Csv {
                path: "<memory>".into(),
                source: e,
            })?;
        }
        finish_csv(wtr)
    }
}

fn finish_csv(wtr: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = wtr.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

pub fn load_metrics(path: impl AsRef<Path>) -> Result<MetricTable> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    MetricTable::from_reader(file, path)
}

pub fn write_metrics(path: impl AsRef<Path>, table: &MetricTable) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, table.to_csv_string()?).map_err(|e| Error::io(path, e))
}
