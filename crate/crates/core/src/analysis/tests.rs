use super::*;
use crate::dataio::{ConfigKey, MetricRecord, RunRecord};
use crate::seed_parts;
use crate::seeding::stream;
use approx::assert_abs_diff_eq;
use rand::Rng;
use rand_distr::StandardNormal;

const GENS: [&str; 6] = ["G1", "G2", "G3", "G4", "G5", "G6"];
const RATIOS: [u32; 7] = [10, 25, 50, 75, 100, 125, 150];

type MetricFn<'a> = &'a dyn Fn(usize, usize, u32) -> f64;

/// Builds tables over `datasets × GENS × RATIOS` (scratch regime). `y` and
/// each metric are functions of `(dataset index, generator index, ratio)`.
fn tables(
    datasets: &[&str],
    y: impl Fn(usize, usize, u32) -> f64,
    metrics: &[(&str, MetricFn)],
) -> (MetricTable, RunsTable) {
    let mut runs = Vec::new();
    let mut recs = Vec::new();
    for (di, ds) in datasets.iter().enumerate() {
        runs.push(RunRecord {
            key: ConfigKey::baseline(*ds, Regime::Scratch),
            seed: 0,
            map5095: 0.5,
        });
        for (gi, g) in GENS.iter().enumerate() {
            for &r in &RATIOS {
                let key = ConfigKey::new(*ds, Regime::Scratch, *g, r).unwrap();
                runs.push(RunRecord {
                    key: key.clone(),
                    seed: 0,
                    map5095: y(di, gi, r),
                });
                for (name, f) in metrics {
                    recs.push(MetricRecord {
                        key: key.clone(),
                        metric: name.to_string(),
                        value: f(di, gi, r),
                        dispersion: 0.0,
                        trials: 5,
                    });
                }
            }
        }
    }
    (MetricTable::new(recs).unwrap(), RunsTable::new(runs).unwrap())
}

fn y_planted(di: usize, gi: usize, r: u32) -> f64 {
    0.3 + 0.001 * r as f64 + 0.01 * ((gi * 5 + di * 3) % 6) as f64 + 0.0007 * ((gi * 7 + r as usize) % 5) as f64
}

#[test]
fn oracle_metric_raw_rho_one() {
    let (m, r) = tables(&["A", "B"], y_planted, &[("oracle", &y_planted)]);
    let cells = correlation_matrix(&m, &r, View::Raw, CorrType::Pearson).unwrap();
    assert_eq!(cells.len(), 2);
    for c in &cells {
        assert_abs_diff_eq!(c.rho.unwrap(), 1.0, epsilon = 1e-12);
        assert_eq!(c.n, 42);
    }
}

#[test]
fn augmentation_proxy_has_no_residual_signal() {
    let (m, r) = tables(&["A"], y_planted, &[("ratio", &|_, _, r| r as f64 * 0.5 + 1.0)]);
    for corr in [CorrType::Pearson, CorrType::Spearman] {
        let cells = correlation_matrix(&m, &r, View::Residual, corr).unwrap();
        assert_eq!(cells[0].rho, None);
        assert_eq!(cells[0].note, NOTE_ZERO_METRIC);
        assert_eq!(cells[0].q, None);
    }
}

#[test]
fn residual_view_invariant_to_affine_ratio_terms() {
    let noise = |di: usize, gi: usize, r: u32| ((gi * 31 + r as usize * 17 + di) % 23) as f64 * 0.13;
    let shifted = move |di: usize, gi: usize, r: u32| noise(di, gi, r) + 2.5 - 0.04 * r as f64;
    let (m, r) = tables(&["A"], y_planted, &[("m", &noise), ("m_shift", &shifted)]);
    for corr in [CorrType::Pearson, CorrType::Spearman] {
        let cells = correlation_matrix(&m, &r, View::Residual, corr).unwrap();
        let a = cells.iter().find(|c| c.metric == "m").unwrap().rho.unwrap();
        let b = cells.iter().find(|c| c.metric == "m_shift").unwrap().rho.unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn baseline_rows_never_enter() {
    let (m, r) = tables(&["A"], y_planted, &[("oracle", &y_planted)]);
    let samples = paired_samples(&m, &r).unwrap();
    assert_eq!(samples[0].len(), 42);
    assert!(samples[0].a.iter().all(|a| *a > 0.0));
    assert!(paired_samples(&m, &RunsTable::default()).is_err());
}

#[test]
fn residual_view_recovers_attenuated_signal() {
    let mut wins = 0;
    for rep in 0..30u64 {
        let mut rng = stream(seed_parts![rep, "attenuation"]);
        let quality: Vec<f64> = (0..6).map(|_| rng.sample(StandardNormal)).collect();
        let mut ny = vec![0.0; 42];
        let mut nm = vec![0.0; 42];
        for i in 0..42 {
            ny[i] = 0.02 * rng.sample::<f64, _>(StandardNormal);
            nm[i] = 0.3 * rng.sample::<f64, _>(StandardNormal);
        }
        let idx = |gi: usize, r: u32| gi * 7 + RATIOS.iter().position(|x| *x == r).unwrap();
        let y = |_: usize, gi: usize, r: u32| {
            (0.2 + 0.003 * r as f64 + 0.02 * quality[gi] + ny[idx(gi, r)]).clamp(0.0, 1.0)
        };
        let metric = |_: usize, gi: usize, r: u32| quality[gi] + nm[idx(gi, r)];
        let (m, r) = tables(&["A"], y, &[("g", &metric)]);
        let raw = correlation_matrix(&m, &r, View::Raw, CorrType::Spearman).unwrap()[0]
            .rho
            .unwrap();
        let res = correlation_matrix(&m, &r, View::Residual, CorrType::Spearman).unwrap()[0]
            .rho
            .unwrap();
        if res.abs() > raw.abs() {
            wins += 1;
        }
    }
    assert!(wins >= 25, "residual beat raw in {wins}/30");
}

#[test]
fn bh_family_spans_datasets_and_metrics() {
    let noise = |di: usize, gi: usize, r: u32| ((gi * 13 + r as usize * 7 + di * 5) % 17) as f64;
    let (m, r) = tables(
        &["A", "B", "C"],
        y_planted,
        &[("oracle", &y_planted), ("noise", &noise)],
    );
    let cells = correlation_matrix(&m, &r, View::Raw, CorrType::Spearman).unwrap();
    assert_eq!(cells.len(), 6);
    let ps: Vec<f64> = cells.iter().map(|c| c.p.unwrap()).collect();
    let qs = bh_fdr(&ps).unwrap();
    for (c, q) in cells.iter().zip(qs) {
        assert_eq!(c.q, Some(q));
        assert!(c.q.unwrap() >= c.p.unwrap());
    }
}

fn cell(metric: &str, dataset: &str, rho: Option<f64>) -> CorrCell {
    CorrCell {
        dataset: dataset.into(),
        regime: Regime::Scratch,
        view: View::Residual,
        corr: CorrType::Spearman,
        metric: metric.into(),
        budget: None,
        rho,
        p: rho.map(|_| 0.5),
        q: None,
        n: 42,
        note: if rho.is_none() {
            NOTE_ZERO_METRIC.into()
        } else {
            String::new()
        },
    }
}

#[test]
fn shortlist_orders_and_breaks_ties_by_name() {
    let cells = vec![
        cell("fid", "A", Some(0.2)),
        cell("fid", "B", Some(-0.9)),
        cell("kd", "A", Some(0.2)),
        cell("zeta", "A", Some(0.5)),
        cell("alpha", "A", Some(-0.5)),
        cell("undefined", "A", None),
    ];
    let names = |k| -> Vec<String> {
        key_metric_shortlist(&cells, k)
            .unwrap()
            .into_iter()
            .map(|e| e.metric)
            .collect()
    };
    assert_eq!(names(1), ["fid"]);
    assert_eq!(names(15), ["fid", "alpha", "zeta", "kd"]);
    let top = &key_metric_shortlist(&cells, 1).unwrap()[0];
    assert_eq!((top.score, top.best_dataset.as_str()), (0.9, "B"));
    assert!(key_metric_shortlist(&[cell("x", "A", None)], 3).is_err());
}

#[test]
fn per_budget_notes_and_oracle() {
    let constant_low = |_: usize, gi: usize, r: u32| if r <= 50 { 1.0 } else { gi as f64 };
    let (m, r) = tables(&["A"], y_planted, &[("flat", &constant_low), ("oracle", &y_planted)]);
    let (cells, rows) = per_budget_correlations(&m, &r, &DEFAULT_BUDGETS).unwrap();
    assert_eq!(cells.len(), 6);
    let flat = rows.iter().find(|r| r.metric == "flat").unwrap();
    assert_eq!(flat.budget_notes, "25:constant; 50:constant");
    assert_eq!(flat.mean_rho, flat.per_budget[2].1.rho());
    let oracle = rows.iter().find(|r| r.metric == "oracle").unwrap();
    assert_eq!(oracle.mean_rho, Some(1.0));
    assert!(oracle.budget_notes.is_empty());
    assert!(per_budget_correlations(&m, &r, &[30]).is_err());
}

#[test]
fn per_budget_matches_hand_spearman() {
    // metric ranks at 50%: G1..G6 -> [1, 3, 2, 6, 4, 5]; mAP ranks -> [2, 1, 3, 4, 6, 5]
    let mr = [1.0, 3.0, 2.0, 6.0, 4.0, 5.0];
    let yr = [2.0, 1.0, 3.0, 4.0, 6.0, 5.0];
    let metric = move |_: usize, gi: usize, r: u32| mr[gi] * 10.0 + r as f64;
    let y = move |_: usize, gi: usize, r: u32| 0.1 + 0.01 * yr[gi] + 0.0001 * r as f64;
    let (m, r) = tables(&["A"], y, &[("hand", &metric)]);
    let (_, rows) = per_budget_correlations(&m, &r, &[50]).unwrap();
    let d2: f64 = mr.iter().zip(&yr).map(|(a, b)| (a - b) * (a - b)).sum();
    let expect = 1.0 - 6.0 * d2 / (6.0 * 35.0);
    assert_abs_diff_eq!(rows[0].per_budget[0].1.rho().unwrap(), expect, epsilon = 1e-12);
}

#[test]
fn heatmap_csv_shape() {
    let (m, r) = tables(
        &["A"],
        y_planted,
        &[("ratio", &|_, _, r| r as f64), ("oracle", &y_planted)],
    );
    let cells = correlation_matrix(&m, &r, View::Residual, CorrType::Spearman).unwrap();
    let text = cells_to_csv(&cells).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "dataset,regime,view,corr,metric,budget,rho,p,q,n,significant,note"
    );
    assert!(lines.iter().any(|l| l.ends_with(",false,zero metric variance")));
    let (_, rows) = per_budget_correlations(&m, &r, &DEFAULT_BUDGETS).unwrap();
    let rob = robustness_to_csv(&rows).unwrap();
    assert!(
        rob.starts_with("dataset,regime,metric,rho@25,rho@50,rho@100,mean_rho,budget_notes,beta_fe,p_fe,fe,fe_note")
    );
}
