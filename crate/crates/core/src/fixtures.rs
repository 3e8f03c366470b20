//! Deterministic synthetic inputs for tests, examples and smoke runs.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataio::{AnnotationSet, BBox, EmbeddingSet, Encoder, ImageLabels};
use crate::error::{Error, Result};
use crate::seed_parts;
use crate::seeding::stream;

/// Standard-normal cloud of `rows` points in `dims` dimensions, with `shift`
/// added to the first coordinate. Values are rounded to `f32`.
pub fn gaussian_cloud(
    seed: u64,
    label: &str,
    rows: usize,
    dims: usize,
    shift: f64,
    encoder: Encoder,
) -> Result<EmbeddingSet> {
    let mut rng = stream(seed_parts![seed, "gaussian_cloud", label]);
    let mut data = Vec::with_capacity(rows * dims);
    for _ in 0..rows {
        for d in 0..dims {
            let z: f64 = rng.sample(StandardNormal);
            let v = if d == 0 { z + shift } else { z };
            data.push(f64::from(v as f32));
        }
    }
    EmbeddingSet::new(label, encoder, rows, dims, data)
}

/// A real cloud and a synthetic cloud whose mean is moved by `shift` along
/// the first axis. Equal seeds give identical bytes.
pub fn make_fixture(
    seed: u64,
    n_real: usize,
    n_syn: usize,
    dims: usize,
    shift: f64,
) -> Result<(EmbeddingSet, EmbeddingSet)> {
    if n_real < 2 || n_syn < 2 || dims < 1 {
        return Err(Error::invalid(format!(
            "fixture needs at least 2 rows per cloud and 1 dimension, got {n_real}/{n_syn}/{dims}"
        )));
    }
    let real = gaussian_cloud(seed, "real", n_real, dims, 0.0, Encoder::Inception)?;
    let syn = gaussian_cloud(seed, "synthetic", n_syn, dims, shift, Encoder::Inception)?;
    Ok((real, syn))
}

/// Knobs for a synthetic label set.
#[derive(Debug, Clone, Copy)]
pub struct LabelProfile {
    /// Mean number of boxes per image (Poisson-like, via a binomial draw).
    pub mean_boxes: f64,
    /// Probability that a box is small (area < 0.01).
    pub small_prob: f64,
}

/// Random single-class annotations, deterministic in `(seed, label)`.
pub fn label_fixture(seed: u64, label: &str, images: usize, profile: LabelProfile) -> AnnotationSet {
    let mut rng = stream(seed_parts![seed, "label_fixture", label]);
    let max_boxes = (profile.mean_boxes * 3.0).ceil().max(1.0) as usize;
    let p = (profile.mean_boxes / max_boxes as f64).clamp(0.0, 1.0);
    let images = (0..images)
        .map(|i| {
            let n = (0..max_boxes).filter(|_| rng.random::<f64>() < p).count();
            let boxes = (0..n)
                .map(|_| {
                    let small = rng.random::<f64>() < profile.small_prob;
                    // side lengths chosen so small boxes land well below area 0.01
                    let (lo, hi) = if small { (0.02, 0.08) } else { (0.12, 0.4) };
                    let w = rng.random_range(lo..hi);
                    let h = rng.random_range(lo..hi);
                    let cx = rng.random_range(w / 2.0..1.0 - w / 2.0);
                    let cy = rng.random_range(h / 2.0..1.0 - h / 2.0);
                    BBox {
                        class_id: 0,
                        cx,
                        cy,
                        w,
                        h,
                    }
                })
                .collect();
            ImageLabels::new(format!("{label}_{i:05}"), boxes)
        })
        .collect();
    AnnotationSet::new(images)
}
