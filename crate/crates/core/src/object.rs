//! Object-centric statistics computed from bounding boxes: per-image counts,
//! small-object prevalence, complexity, overlap, and the distances between
//! real and synthetic distributions of these.

use serde::Serialize;

use crate::dataio::{AnnotationSet, ImageLabels};
use crate::error::{Error, Result};
use crate::metric::{Direction, MetricValue};

/// Boxes with normalized area strictly below this are "small".
pub const SMALL_AREA_THRESHOLD: f64 = 0.01;
/// Bins used by the continuous JSD.
pub const CONTINUOUS_BINS: usize = 16;

/// Maps `(n(I), f_small(I))` to a per-image complexity score.
pub type ComplexityFn = fn(usize, f64) -> f64;

/// `n · (1 + f_small)`: reduces to the box count when nothing is small.
pub fn default_complexity(n: usize, f_small: f64) -> f64 {
    n as f64 * (1.0 + f_small)
}

#[derive(Debug, Clone, Copy)]
pub struct StatsConfig {
    pub small_threshold: f64,
    pub complexity: ComplexityFn,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            small_threshold: SMALL_AREA_THRESHOLD,
            complexity: default_complexity,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageStats {
    pub n: usize,
    pub areas: Vec<f64>,
    pub f_small: f64,
    pub c: f64,
    pub mean_pair_iou: f64,
}

pub fn image_stats(labels: &ImageLabels, cfg: &StatsConfig) -> ImageStats {
    let n = labels.boxes.len();
    let areas: Vec<f64> = labels.boxes.iter().map(|b| b.area()).collect();
    let small = areas.iter().filter(|&&a| a < cfg.small_threshold).count();
    let f_small = if n == 0 { 0.0 } else { small as f64 / n as f64 };
    let mean_pair_iou = if n < 2 {
        0.0
    } else {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..n {
            for j in (i + 1)..n {
                sum += labels.boxes[i].iou(&labels.boxes[j]);
                pairs += 1;
            }
        }
        sum / pairs as f64
    };
    ImageStats {
        n,
        areas,
        f_small,
        c: (cfg.complexity)(n, f_small),
        mean_pair_iou,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(xs: &[f64], ddof: usize) -> Self {
        MeanStd {
            mean: if xs.is_empty() { 0.0 } else { crate::stats::mean(xs) },
            std: crate::stats::std_dev(xs, ddof),
        }
    }
}

/// Summary of a label set: counts, small share, box area and overlap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeStats {
    pub inst_per_img: MeanStd,
    pub pct_small: f64,
    pub mean_area: MeanStd,
    pub mean_iou: MeanStd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdKind {
    #[default]
    Population,
    Sample,
}

impl StdKind {
    fn ddof(self) -> usize {
        match self {
            StdKind::Population => 0,
            StdKind::Sample => 1,
        }
    }
}

/// Counts and IoU are summarized over images; area and the small share pool
/// all boxes.
pub fn regime_stats(labels: &AnnotationSet, cfg: &StatsConfig, std_kind: StdKind) -> Result<RegimeStats> {
    if labels.is_empty() {
        return Err(Error::invalid("regime statistics need at least one image"));
    }
    let per_image: Vec<ImageStats> = labels.images.iter().map(|im| image_stats(im, cfg)).collect();
    let counts: Vec<f64> = per_image.iter().map(|s| s.n as f64).collect();
    let ious: Vec<f64> = per_image.iter().map(|s| s.mean_pair_iou).collect();
    let areas: Vec<f64> = per_image.iter().flat_map(|s| s.areas.iter().copied()).collect();
    let small = areas.iter().filter(|&&a| a < cfg.small_threshold).count();
    let pct_small = if areas.is_empty() {
        0.0
    } else {
        100.0 * small as f64 / areas.len() as f64
    };
    let ddof = std_kind.ddof();
    Ok(RegimeStats {
        inst_per_img: MeanStd::of(&counts, ddof),
        pct_small,
        mean_area: MeanStd::of(&areas, ddof),
        mean_iou: MeanStd::of(&ious, ddof),
    })
}

fn check_samples(a: &[f64], b: &[f64]) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::invalid("distribution comparison needs non-empty samples"));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("distribution comparison got a non-finite sample"));
    }
    Ok(())
}

/// Exact 1-D W1 as the area between the two empirical CDFs.
pub fn wasserstein_1d(a: &[f64], b: &[f64]) -> Result<f64> {
    check_samples(a, b)?;
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(f64::total_cmp);
    xb.sort_by(f64::total_cmp);
    let mut knots: Vec<f64> = xa.iter().chain(&xb).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let (na, nb) = (xa.len() as f64, xb.len() as f64);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut total = 0.0;
    for w in knots.windows(2) {
        while ia < xa.len() && xa[ia] <= w[0] {
            ia += 1;
        }
        while ib < xb.len() && xb[ib] <= w[0] {
            ib += 1;
        }
        let gap = (ia as f64 / na - ib as f64 / nb).abs();
        total += gap * (w[1] - w[0]);
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JsdKind {
    /// Unit-width integer bins over the pooled range.
    Count,
    /// 16 equal-width bins over the pooled min–max.
    Continuous,
}

fn histogram(xs: &[f64], bins: usize, bin_of: impl Fn(f64) -> usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    for &x in xs {
        h[bin_of(x).min(bins - 1)] += 1.0;
    }
    let n = xs.len() as f64;
    h.iter_mut().for_each(|v| *v /= n);
    h
}

fn kl2(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(pi, _)| **pi > 0.0)
        .map(|(pi, mi)| pi * (pi / mi).log2())
        .sum()
}

/// Jensen–Shannon divergence (base 2, in `[0, 1]`) between histograms of
/// the two samples.
pub fn jsd_1d(a: &[f64], b: &[f64], kind: JsdKind) -> Result<f64> {
    check_samples(a, b)?;
    let lo = a.iter().chain(b).copied().fold(f64::INFINITY, f64::min);
    let hi = a.iter().chain(b).copied().fold(f64::NEG_INFINITY, f64::max);
    let (p, q) = match kind {
        JsdKind::Count => {
            let lo_i = lo.round();
            let bins = (hi.round() - lo_i) as usize + 1;
            let bin_of = |x: f64| (x.round() - lo_i) as usize;
            (histogram(a, bins, bin_of), histogram(b, bins, bin_of))
        }
        JsdKind::Continuous => {
            if hi == lo {
                // both samples are the same constant
                return Ok(0.0);
            }
            let width = (hi - lo) / CONTINUOUS_BINS as f64;
            let bin_of = |x: f64| ((x - lo) / width).floor() as usize;
            (
                histogram(a, CONTINUOUS_BINS, bin_of),
                histogram(b, CONTINUOUS_BINS, bin_of),
            )
        }
    };
    let m: Vec<f64> = p.iter().zip(&q).map(|(x, y)| 0.5 * (x + y)).collect();
    Ok((0.5 * kl2(&p, &m) + 0.5 * kl2(&q, &m)).clamp(0.0, 1.0))
}

/// Pooled fraction of boxes below the small-area threshold.
pub fn small_box_fraction(labels: &AnnotationSet, threshold: f64) -> f64 {
    let (small, total) = labels
        .images
        .iter()
        .flat_map(|im| im.boxes.iter())
        .fold((0usize, 0usize), |(s, t), b| {
            (s + usize::from(b.area() < threshold), t + 1)
        });
    if total == 0 {
        0.0
    } else {
        small as f64 / total as f64
    }
}

/// The five object-centric distances between real and synthetic labels.
pub fn object_centric_metrics(
    real: &AnnotationSet,
    syn: &AnnotationSet,
    cfg: &StatsConfig,
) -> Result<Vec<MetricValue>> {
    if real.is_empty() || syn.is_empty() {
        return Err(Error::invalid("object-centric metrics need non-empty label sets"));
    }
    let per = |set: &AnnotationSet| -> (Vec<f64>, Vec<f64>) {
        set.images
            .iter()
            .map(|im| {
                let st = image_stats(im, cfg);
                (st.n as f64, st.c)
            })
            .unzip()
    };
    let (n_real, c_real) = per(real);
    let (n_syn, c_syn) = per(syn);
    let ratio_gap =
        (small_box_fraction(real, cfg.small_threshold) - small_box_fraction(syn, cfg.small_threshold)).abs();
    let lower = Direction::LowerBetter;
    Ok(vec![
        MetricValue::new("object_count_wass_mean", wasserstein_1d(&n_real, &n_syn)?, lower),
        MetricValue::new("object_count_jsd_mean", jsd_1d(&n_real, &n_syn, JsdKind::Count)?, lower),
        MetricValue::new("complexity_wass_mean", wasserstein_1d(&c_real, &c_syn)?, lower),
        MetricValue::new(
            "complexity_jsd_mean",
            jsd_1d(&c_real, &c_syn, JsdKind::Continuous)?,
            lower,
        ),
        MetricValue::new("difficult_object_ratio_diff_mean", ratio_gap, lower),
    ])
}
