// Raw versus ratio-residualized correlation. One metric only tracks the
// augmentation ratio, the other tracks generator quality; after removing
// the ratio effect only the second keeps its signal.

use synthscreen::analysis::{correlation_matrix, fixed_effects, format_fe, per_budget_correlations, CorrType, View};
use synthscreen::dataio::{MetricRecord, MetricTable};
use synthscreen::study::{planted_runs, StudySpec};

pub fn run_example() {
    let spec = StudySpec::default();
    let runs = planted_runs(&spec).unwrap();

    let mut recs = Vec::new();
    for key in runs.mean_map().keys().filter(|k| !k.is_baseline()) {
        let shift = spec.generators.iter().find(|g| g.name == key.generator).unwrap().shift;
        let ratio = f64::from(key.aug_ratio);
        for (metric, value) in [
            ("ratio_proxy", 0.5 * ratio + 3.0),
            ("quality", shift * shift + 0.01 * ratio),
        ] {
            recs.push(MetricRecord {
                key: key.clone(),
                metric: metric.into(),
                value,
                dispersion: 0.0,
                trials: 5,
            });
        }
    }
    let metrics = MetricTable::new(recs).unwrap();

    for view in [View::Raw, View::Residual] {
        let cells = correlation_matrix(&metrics, &runs, view, CorrType::Pearson).unwrap();
        for c in cells.iter().filter(|c| c.dataset == "Alpha") {
            println!(
                "{:<8} {:<10} {:<11} rho {:>7} q {:>9} {}",
                view.tag(),
                c.regime.tag(),
                c.metric,
                c.rho.map(|r| format!("{r:+.3}")).unwrap_or_default(),
                c.q.map(|q| format!("{q:.2e}")).unwrap_or_default(),
                c.note
            );
            if view == View::Residual && c.metric == "ratio_proxy" {
                assert!(c.rho.is_none());
            }
            if view == View::Residual && c.metric == "quality" {
                assert!(c.rho.unwrap() < -0.8);
            }
        }
    }

    // per-budget cells and the ratio fixed-effects slope
    let (_, rows) = per_budget_correlations(&metrics, &runs, &[25, 50, 100]).unwrap();
    for r in rows.iter().filter(|r| r.metric == "quality") {
        let fe = r.fe.as_ref().map(format_fe).unwrap_or_else(|e| e.clone());
        println!(
            "{} {} mean rho {:+.3}  fe {fe}",
            r.dataset,
            r.regime.tag(),
            r.mean_rho.unwrap()
        );
    }

    let levels = [25, 25, 50, 50, 100, 100];
    let m = [1.0, 2.0, 1.5, 3.0, 0.5, 2.5];
    let y: Vec<f64> = levels
        .iter()
        .zip(m)
        .map(|(&l, x)| 0.01 * f64::from(l) + 0.2 * x)
        .collect();
    let fit = fixed_effects(&levels, &m, &y).unwrap();
    assert!((fit.beta_fe - 0.2).abs() < 1e-9);
    println!("noiseless fit: beta {:.6}", fit.beta_fe);
}

#[allow(dead_code)]
fn main() {
    run_example();
}
