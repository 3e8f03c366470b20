// Matched-size bootstrap: the real subsets are frozen per dataset and shared
// by every configuration, while synthetic draws depend on the pool size.

use std::collections::BTreeMap;

use synthscreen::bootstrap::{draw_synthetic, make_plan, run_config, BootstrapConfig, BootstrapPlan, Pool};
use synthscreen::dataio::{ConfigKey, Encoder, Regime};
use synthscreen::fixtures::{gaussian_cloud, label_fixture, LabelProfile};
use synthscreen::manifest::{auto_match_size, ratio_pool_size};

fn pool(label: &str, rows: usize, shift: f64) -> Pool {
    let emb = Encoder::ALL
        .iter()
        .map(|&e| {
            (
                e,
                gaussian_cloud(5, &format!("{label}/{}", e.tag()), rows, 8, shift, e).unwrap(),
            )
        })
        .collect::<BTreeMap<_, _>>();
    let labels = label_fixture(
        5,
        label,
        rows,
        LabelProfile {
            mean_boxes: 3.0,
            small_prob: 0.2,
        },
    );
    Pool::new(emb, labels).unwrap()
}

pub fn run_example() {
    let real_train = 1798;
    let n = auto_match_size(real_train);
    assert_eq!(n, 179);
    let plan = make_plan("Pedestrian", real_train, n, 5, 2024).unwrap();

    // plans serialize so a study can be rerun against the same subsets
    let again = BootstrapPlan::from_json(&plan.to_json().unwrap()).unwrap();
    assert_eq!(plan, again);

    for ratio in [10, 25, 100] {
        let key = ConfigKey::new("Pedestrian", Regime::Scratch, "GenA", ratio).unwrap();
        let size = ratio_pool_size(real_train, ratio);
        let draw = draw_synthetic(&plan, 0, size, &key).unwrap();
        let distinct = draw.iter().collect::<std::collections::BTreeSet<_>>().len();
        println!("{ratio:>3}%: pool {size:>4}, draw {} ({distinct} distinct)", draw.len());
    }

    let real = pool("real", real_train, 0.0);
    let cfg = BootstrapConfig::default();
    let key = ConfigKey::new("Pedestrian", Regime::Scratch, "GenA", 25).unwrap();
    let syn = pool("GenA", ratio_pool_size(real_train, 25), 0.7);
    let rows = run_config(&plan, &real, &syn, &key, &cfg).unwrap();
    for r in rows
        .iter()
        .filter(|r| r.metric.starts_with("fid") || r.metric.starts_with("object_count"))
    {
        println!(
            "{:<24} {:.4} ± {:.4} over {} trials",
            r.metric, r.value, r.dispersion, r.trials
        );
    }
    assert_eq!(rows.len(), 2 * 13 + 5);
    assert_eq!(rows, run_config(&plan, &real, &syn, &key, &cfg).unwrap());
}

#[allow(dead_code)]
fn main() {
    run_example();
}
