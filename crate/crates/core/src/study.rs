//! A complete synthetic study on disk: real and generator pools for every
//! encoder, label directories, a manifest and a runs table with a planted
//! generator ordering. Used for smoke runs and end-to-end tests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataio::{write_embeddings, write_labels, write_runs, ConfigKey, Encoder, Regime, RunRecord, RunsTable};
use crate::error::{Error, Result};
use crate::fixtures::{gaussian_cloud, label_fixture, LabelProfile};
use crate::manifest::{ratio_pool_size, DatasetEntry, GeneratorEntry, Manifest, PoolFiles};
use crate::seed_parts;
use crate::seeding::stream;

#[derive(Debug, Clone)]
pub struct PlantedGenerator {
    pub name: String,
    /// Mean offset of the synthetic cloud; smaller is closer to real.
    pub shift: f64,
    pub small_prob: f64,
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub seed: u64,
    /// `(name, real_train_size)`.
    pub datasets: Vec<(String, usize)>,
    pub generators: Vec<PlantedGenerator>,
    pub ratios: Vec<u32>,
    pub regimes: Vec<Regime>,
    pub dims: usize,
    pub run_seeds: Vec<u64>,
    pub real_small_prob: f64,
    /// mAP lost per unit of generator shift.
    pub quality_gain: f64,
    /// Per-seed mAP noise standard deviation.
    pub seed_noise: f64,
}

impl Default for StudySpec {
    fn default() -> Self {
        let gen = |name: &str, shift, small_prob| PlantedGenerator {
            name: name.into(),
            shift,
            small_prob,
        };
        StudySpec {
            seed: 7,
            datasets: vec![("Alpha".into(), 300), ("Beta".into(), 240)],
            generators: vec![
                gen("Sharp", 0.3, 0.30),
                gen("Blurry", 1.2, 0.15),
                gen("Noisy", 2.4, 0.05),
            ],
            ratios: vec![10, 25, 50, 75, 100, 125, 150],
            regimes: vec![Regime::Scratch, Regime::Pretrained],
            dims: 12,
            run_seeds: vec![0, 1, 2],
            real_small_prob: 0.3,
            quality_gain: 0.02,
            seed_noise: 0.002,
        }
    }
}

impl StudySpec {
    /// Generator with the smallest shift.
    pub fn planted_best(&self) -> &str {
        self.generators
            .iter()
            .min_by(|a, b| a.shift.total_cmp(&b.shift))
            .map(|g| g.name.as_str())
            .unwrap_or("")
    }

    /// Noise-free mAP for a cell.
    pub fn planted_map(&self, dataset_idx: usize, regime: Regime, shift: Option<f64>, ratio: u32) -> f64 {
        let base = 0.30 + 0.05 * dataset_idx as f64 + if regime == Regime::Pretrained { 0.12 } else { 0.0 };
        match shift {
            None => base,
            Some(s) => base + 0.01 * (ratio as f64 / 25.0).sqrt() - self.quality_gain * s,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StudyFiles {
    pub manifest: PathBuf,
    pub runs: PathBuf,
}

const PROFILE_BOXES: f64 = 3.0;

fn pool_files(stem: &str) -> PoolFiles {
    PoolFiles {
        embeddings: Encoder::ALL
            .iter()
            .map(|e| (*e, PathBuf::from(format!("{stem}.{}.emb", e.tag()))))
            .collect(),
        labels: PathBuf::from(format!("{stem}_labels")),
        index: PathBuf::from(format!("{stem}_index.txt")),
    }
}

#[allow(clippy::too_many_arguments)]
fn write_pool(
    dir: &Path,
    files: &PoolFiles,
    seed: u64,
    label: &str,
    rows: usize,
    dims: usize,
    shift: f64,
    small_prob: f64,
) -> Result<()> {
    for (enc, rel) in &files.embeddings {
        // the second encoder sees the same offset at a different scale
        let scale = if *enc == Encoder::Dino { 1.5 } else { 1.0 };
        let set = gaussian_cloud(seed, &format!("{label}/{}", enc.tag()), rows, dims, shift * scale, *enc)?;
        write_embeddings(dir.join(rel), &set)?;
    }
    let profile = LabelProfile {
        mean_boxes: PROFILE_BOXES,
        small_prob,
    };
    let labels = label_fixture(seed, label, rows, profile);
    write_labels(dir.join(&files.labels), dir.join(&files.index), &labels)
}

/// Writes the study under `dir` (created if missing).
pub fn write_study(dir: impl AsRef<Path>, spec: &StudySpec) -> Result<StudyFiles> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let max_ratio = spec.ratios.iter().copied().max().unwrap_or(0);
    let mut datasets = Vec::new();
    for (name, n_train) in &spec.datasets {
        let ds_dir = dir.join(name);
        fs::create_dir_all(&ds_dir).map_err(|e| Error::io(&ds_dir, e))?;
        let real = pool_files(&format!("{name}/real"));
        let label = format!("{name}_real");
        write_pool(
            dir,
            &real,
            spec.seed,
            &label,
            *n_train,
            spec.dims,
            0.0,
            spec.real_small_prob,
        )?;
        let mut generators = Vec::new();
        for g in &spec.generators {
            let files = pool_files(&format!("{name}/{}", g.name));
            let rows = ratio_pool_size(*n_train, max_ratio);
            let label = format!("{name}_{}", g.name);
            write_pool(dir, &files, spec.seed, &label, rows, spec.dims, g.shift, g.small_prob)?;
            generators.push(GeneratorEntry {
                name: g.name.clone(),
                files,
                ratios: spec.ratios.clone(),
                pool_sizes: BTreeMap::new(),
            });
        }
        datasets.push(DatasetEntry {
            name: name.clone(),
            real_train_size: *n_train,
            regimes: spec.regimes.clone(),
            real,
            generators,
        });
    }
    let manifest = Manifest { datasets };
    let manifest_path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;

    let runs_path = dir.join("runs.csv");
    write_runs(&runs_path, &planted_runs(spec)?)?;
    Ok(StudyFiles {
        manifest: manifest_path,
        runs: runs_path,
    })
}

/// Runs table following [`StudySpec::planted_map`] plus seeded noise.
pub fn planted_runs(spec: &StudySpec) -> Result<RunsTable> {
    let mut rng = stream(seed_parts![spec.seed, "planted_runs"]);
    let mut records = Vec::new();
    for (di, (name, _)) in spec.datasets.iter().enumerate() {
        for &regime in &spec.regimes {
            let mut cells = vec![(ConfigKey::baseline(name, regime), None, 0)];
            for g in &spec.generators {
                for &r in &spec.ratios {
                    cells.push((ConfigKey::new(name, regime, &g.name, r)?, Some(g.shift), r));
                }
            }
            for (key, shift, ratio) in cells {
                for &seed in &spec.run_seeds {
                    let z: f64 = rng.sample(StandardNormal);
                    let map = spec.planted_map(di, regime, shift, ratio) + spec.seed_noise * z;
                    records.push(RunRecord {
                        key: key.clone(),
                        seed,
                        map5095: map.clamp(0.0, 1.0),
                    });
                }
            }
        }
    }
    RunsTable::new(records)
}
