// Fixed-budget screening: at each augmentation ratio, does the metric pick
// the generator whose detector scores best? Also the gain over the
// real-only baseline and a seed-paired interval for it.

use synthscreen::dataio::{ConfigKey, MetricRecord, MetricTable, Regime, RunRecord, RunsTable};
use synthscreen::screening::{best_vs_baseline, screening_summary, screening_to_csv, seed_ci_for, with_directions};

const GENERATORS: [(&str, f64); 4] = [
    ("DiffusionGAN", 0.049),
    ("StyleGAN2", 0.031),
    ("VQGAN", 0.022),
    ("ProjGAN", 0.010),
];

pub fn run_example() {
    let ds = "Pedestrian";
    let regime = Regime::Scratch;
    let mut runs = Vec::new();
    for (seed, jitter) in [(0u64, -0.0011), (1, 0.0), (2, 0.0013)] {
        runs.push(RunRecord {
            key: ConfigKey::baseline(ds, regime),
            seed,
            map5095: 0.4562 + jitter,
        });
        for (g, gain) in GENERATORS {
            for r in [25, 50, 75, 100] {
                let bump = if r == 75 { 0.004 } else { 0.0 };
                runs.push(RunRecord {
                    key: ConfigKey::new(ds, regime, g, r).unwrap(),
                    seed,
                    map5095: 0.4562 + gain + bump - 0.0172 + jitter * 0.6,
                });
            }
        }
    }
    let runs = RunsTable::new(runs).unwrap();

    // fid follows generator quality; recall only tracks the ratio
    let mut recs = Vec::new();
    for (i, (g, gain)) in GENERATORS.iter().enumerate() {
        for r in [25, 50, 75, 100] {
            let key = ConfigKey::new(ds, regime, *g, r).unwrap();
            let rec = |metric: &str, value| MetricRecord {
                key: key.clone(),
                metric: metric.into(),
                value,
                dispersion: 0.0,
                trials: 5,
            };
            recs.push(rec("fid_inception", 40.0 - 300.0 * gain + f64::from(r) * 0.01));
            recs.push(rec("recall_dino", 0.3 + 0.002 * f64::from(r) + 0.01 * i as f64));
        }
    }
    let metrics = MetricTable::new(recs).unwrap();

    let shortlist = with_directions(&["fid_inception".to_string(), "recall_dino".to_string()]).unwrap();
    let summary = screening_summary(&metrics, &runs, &shortlist, &[25, 50, 100]).unwrap();
    print!("{}", screening_to_csv(&summary).unwrap());
    assert_eq!(summary[0].winner, "fid_inception");

    let best = &best_vs_baseline(&runs).unwrap()[0];
    println!(
        "{} {}: {} ({}) with {}",
        best.dataset,
        regime.tag(),
        best.delta_str(),
        best.pct_str(),
        best.best_config
    );
    assert_eq!(best.best_config, "DiffusionGAN@75%");

    let ci = seed_ci_for(
        &runs,
        &ConfigKey::baseline(ds, regime),
        &ConfigKey::new(ds, regime, "DiffusionGAN", 75).unwrap(),
    )
    .unwrap();
    println!("{}", ci.describe());
    assert!(!ci.not_separable());
}

#[allow(dead_code)]
fn main() {
    run_example();
}
