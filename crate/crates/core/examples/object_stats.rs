// Label statistics and object-centric distances between a real label set
// and two synthetic ones, one of which under-produces small objects.

use synthscreen::dataio::{load_labels, write_labels};
use synthscreen::fixtures::{label_fixture, LabelProfile};
use synthscreen::object::{object_centric_metrics, regime_stats, StatsConfig, StdKind};

pub fn run_example() {
    let cfg = StatsConfig::default();
    let real = label_fixture(
        1,
        "real",
        400,
        LabelProfile {
            mean_boxes: 4.0,
            small_prob: 0.35,
        },
    );
    let close = label_fixture(
        1,
        "close",
        400,
        LabelProfile {
            mean_boxes: 4.0,
            small_prob: 0.30,
        },
    );
    let far = label_fixture(
        1,
        "far",
        400,
        LabelProfile {
            mean_boxes: 2.0,
            small_prob: 0.02,
        },
    );

    // YOLO text round trip
    let dir = tempfile::tempdir().unwrap();
    let index = dir.path().join("index.txt");
    write_labels(dir.path().join("labels"), &index, &real).unwrap();
    let real = load_labels(dir.path().join("labels"), &index).unwrap();

    for (name, set) in [("real", &real), ("close", &close), ("far", &far)] {
        let s = regime_stats(set, &cfg, StdKind::Population).unwrap();
        println!(
            "{name:<6} inst/img {:.2} ± {:.2}  small {:.1}%  area {:.3}  iou {:.3}",
            s.inst_per_img.mean, s.inst_per_img.std, s.pct_small, s.mean_area.mean, s.mean_iou.mean
        );
    }

    let near = object_centric_metrics(&real, &close, &cfg).unwrap();
    let distant = object_centric_metrics(&real, &far, &cfg).unwrap();
    for (a, b) in near.iter().zip(&distant) {
        println!("{:<28} close {:.4}  far {:.4}", a.name, a.value, b.value);
        assert!(a.value < b.value, "{}", a.name);
    }
}

#[allow(dead_code)]
fn main() {
    run_example();
}
