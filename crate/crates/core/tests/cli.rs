use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use synthscreen::dataio::{load_runs, write_runs, RunsTable};
use synthscreen::study::{write_study, StudyFiles, StudySpec};

fn synthscreen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthscreen"))
        .args(args)
        .env_remove("SYNTHSCREEN_THREADS")
        .output()
        .unwrap()
}

fn tiny_study(dir: &Path) -> StudyFiles {
    let spec = StudySpec {
        datasets: vec![("Tiny".into(), 200)],
        ratios: vec![25, 50, 100],
        ..StudySpec::default()
    };
    write_study(dir, &spec).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn metrics(files: &StudyFiles, out: &Path) -> Output {
    synthscreen(&[
        "metrics",
        "--manifest",
        s(&files.manifest),
        "--seed",
        "4",
        "--out",
        s(out),
    ])
}

#[test]
fn metrics_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_study(dir.path());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(metrics(&files, &a).status.success());
    assert!(metrics(&files, &b).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    // overwriting in place gives the same bytes again
    assert!(metrics(&files, &a).status.success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_inputs_fail_before_work() {
    let out = synthscreen(&[
        "correlate",
        "--metrics",
        "/nonexistent/m.csv",
        "--runs",
        "/nonexistent/r.csv",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("does not exist"));
    let out = synthscreen(&[
        "seedci",
        "--runs",
        "/nonexistent/r.csv",
        "--pair",
        "A:scratch:baseline-vs-G@25",
    ]);
    assert!(!out.status.success());
}

#[test]
fn broken_configuration_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_study(dir.path());
    // truncate one synthetic payload so its sidecar no longer matches
    let victim: PathBuf = dir.path().join("Tiny/Noisy.inception.emb");
    fs::write(&victim, [0u8; 12]).unwrap();
    let m = dir.path().join("m.csv");
    let out = metrics(&files, &m);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("Noisy"), "{stderr}");
    // the healthy configurations are still written
    let table = fs::read_to_string(&m).unwrap();
    assert!(table.contains(",Sharp,") && !table.contains(",Noisy,"));
}

#[test]
fn thread_env_var_and_flag() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_study(dir.path());
    let out = dir.path().join("m.csv");
    let run = |env: &str, extra: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_synthscreen"))
            .args(["metrics", "--manifest", s(&files.manifest), "--out", s(&out)])
            .args(extra)
            .env("SYNTHSCREEN_THREADS", env)
            .output()
            .unwrap()
    };
    assert!(!run("0", &[]).status.success());
    assert!(run("0", &["--threads", "2"]).status.success());
    assert!(run("3", &[]).status.success());
}

#[test]
fn report_bundle_and_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_study(dir.path());
    let m = dir.path().join("m.csv");
    assert!(metrics(&files, &m).status.success());
    let report = dir.path().join("report");
    let args = |runs: &Path| {
        vec![
            "report".to_string(),
            "--metrics".into(),
            s(&m).into(),
            "--runs".into(),
            s(runs).into(),
            "--manifest".into(),
            s(&files.manifest).into(),
            "--out".into(),
            s(&report).into(),
        ]
    };
    let argv = args(&files.runs);
    let out = synthscreen(&argv.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut names: Vec<String> = fs::read_dir(&report)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "best_vs_baseline.csv",
            "heatmaps.csv",
            "index.json",
            "regime_stats.csv",
            "robustness.csv",
            "screening.csv",
            "shortlist.csv"
        ]
    );
    let first = fs::read(report.join("index.json")).unwrap();

    // rerun replaces the bundle with identical bytes and leaves no staging dir
    assert!(synthscreen(&argv.iter().map(String::as_str).collect::<Vec<_>>())
        .status
        .success());
    assert_eq!(fs::read(report.join("index.json")).unwrap(), first);
    assert!(fs::read_dir(dir.path()).unwrap().all(|e| !e
        .unwrap()
        .file_name()
        .to_string_lossy()
        .starts_with(".report")));

    // without baseline runs the best-vs-baseline table is omitted with a warning
    let runs = load_runs(&files.runs).unwrap();
    let no_base = RunsTable::new(
        runs.records()
            .iter()
            .filter(|r| !r.key.is_baseline())
            .cloned()
            .collect(),
    )
    .unwrap();
    let nb = dir.path().join("no_base.csv");
    write_runs(&nb, &no_base).unwrap();
    let argv = args(&nb);
    let out = synthscreen(&argv.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!report.join("best_vs_baseline.csv").exists());
    let index: serde_json::Value = serde_json::from_slice(&fs::read(report.join("index.json")).unwrap()).unwrap();
    assert!(index["warnings"][0]
        .as_str()
        .unwrap()
        .starts_with("best_vs_baseline omitted"));
}

#[test]
fn table_commands_print_to_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let files = tiny_study(dir.path());
    let m = dir.path().join("m.csv");
    assert!(metrics(&files, &m).status.success());
    let text = |args: &[&str]| {
        let out = synthscreen(args);
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        String::from_utf8(out.stdout).unwrap()
    };
    let heat = text(&[
        "correlate",
        "--metrics",
        s(&m),
        "--runs",
        s(&files.runs),
        "--view",
        "raw",
        "--corr",
        "pearson",
    ]);
    assert!(heat.starts_with("dataset,regime,view,corr,metric,budget,rho,p,q,n,significant,note\n"));
    let rob = text(&[
        "robustness",
        "--metrics",
        s(&m),
        "--runs",
        s(&files.runs),
        "--budgets",
        "25,50,100",
    ]);
    assert!(rob.starts_with("dataset,regime,metric,rho@25,rho@50,rho@100"));
    let scr = text(&[
        "screen",
        "--metrics",
        s(&m),
        "--runs",
        s(&files.runs),
        "--budgets",
        "25,50",
    ]);
    assert!(scr.lines().count() > 1);
    let stats = text(&["stats", "--manifest", s(&files.manifest)]);
    assert!(stats.lines().nth(1).unwrap().starts_with("Tiny/real,200,"));
    let ci = text(&[
        "seedci",
        "--runs",
        s(&files.runs),
        "--pair",
        "Tiny:scratch:baseline-vs-Sharp@100",
    ]);
    assert!(ci.contains("95% CI"));

    let shortlist = dir.path().join("short.txt");
    fs::write(&shortlist, "fid_inception\nrecall_dino\n").unwrap();
    let scr = text(&[
        "screen",
        "--metrics",
        s(&m),
        "--runs",
        s(&files.runs),
        "--shortlist",
        s(&shortlist),
    ]);
    assert_eq!(scr.lines().count(), 1 + 2 * 2);
}
