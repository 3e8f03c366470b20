// Whole pipeline on a planted study: write pools and runs to disk, compute
// metrics, then build the report bundle and check that the generator with
// the smallest planted shift wins.

use std::fs;

use synthscreen::cli::{cmd_metrics, cmd_report, Common, MetricsArgs, ReportArgs, TablesArgs};
use synthscreen::manifest::MatchSize;
use synthscreen::study::{write_study, StudySpec};

pub fn run_example() {
    let dir = tempfile::tempdir().unwrap();
    let spec = StudySpec::default();
    let files = write_study(dir.path(), &spec).unwrap();

    let metrics_csv = dir.path().join("metrics.csv");
    let common = Common {
        seed: 11,
        threads: None,
        out: Some(metrics_csv.clone()),
    };
    let args = MetricsArgs {
        manifest: files.manifest.clone(),
        plan_seed: None,
        trials: 5,
        match_size: MatchSize::Auto,
    };
    let rep = cmd_metrics(&common, &args).unwrap();
    assert!(rep.failures.is_empty(), "{:?}", rep.failures);
    println!("{} metric rows", rep.table.records().len());

    let report_dir = dir.path().join("report");
    let common = Common {
        out: Some(report_dir.clone()),
        ..common
    };
    let tables = TablesArgs {
        metrics: metrics_csv,
        runs: files.runs.clone(),
    };
    cmd_report(
        &common,
        &ReportArgs {
            tables,
            manifest: Some(files.manifest),
            budgets: vec![25, 50, 100],
            shortlist: "auto".into(),
        },
    )
    .unwrap();

    let best = fs::read_to_string(report_dir.join("best_vs_baseline.csv")).unwrap();
    print!("{best}");
    for line in best.lines().skip(1) {
        let config = line.rsplit(',').next().unwrap();
        assert!(config.starts_with(&format!("{}@", spec.planted_best())), "{line}");
    }
    let screening = fs::read_to_string(report_dir.join("screening.csv")).unwrap();
    print!("{screening}");
    let fid = screening
        .lines()
        .filter(|l| l.contains(",fid_inception,"))
        .collect::<Vec<_>>();
    assert!(!fid.is_empty());
    for line in fid {
        assert!(line.contains(",3/3,0.0000,"), "{line}");
    }
    print!("{}", fs::read_to_string(report_dir.join("index.json")).unwrap());
}

#[allow(dead_code)]
fn main() {
    run_example();
}
