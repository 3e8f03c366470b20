//! Command-line front end. `main.rs` only parses arguments and calls
//! [`run`]; every subcommand is also callable as a function.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::{info, warn};
use serde::Serialize;

use crate::analysis::{
    cells_to_csv, correlation_matrix, key_metric_shortlist, per_budget_correlations, robustness_to_csv, CorrCell,
    CorrType, View, DEFAULT_SHORTLIST_K,
};
use crate::bootstrap::BootstrapConfig;
use crate::dataio::{load_labels, load_metrics, load_runs, write_metrics, ConfigKey, MetricTable, Regime, RunsTable};
use crate::error::{Error, Result};
use crate::manifest::{compute_metrics, Manifest, MatchSize, MetricsJob};
use crate::object::{regime_stats, RegimeStats, StatsConfig, StdKind};
use crate::screening::{
    best_vs_baseline, screening_summary, screening_to_csv, seed_ci_for, shortlist_rule, with_directions, BestRow,
};

pub const THREADS_ENV: &str = "SYNTHSCREEN_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "synthscreen",
    version,
    about = "Screen synthetic training sets before training"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Master seed for every seeded computation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (defaults to available parallelism).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    /// Output file, or directory for `report`. Tables go to stdout when omitted.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute every metric for every configuration in a manifest.
    Metrics(MetricsArgs),
    /// Label statistics per pool.
    Stats(StatsArgs),
    /// Correlation heatmap between metrics and mAP.
    Correlate(CorrelateArgs),
    /// Per-budget correlations and the fixed-effects regression.
    Robustness(RobustnessArgs),
    /// Fixed-budget generator screening with shortlisted metrics.
    Screen(ScreenArgs),
    /// Seed-paired confidence interval for an augmented-vs-baseline gain.
    Seedci(SeedciArgs),
    /// Write the full table bundle into `--out`.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Seed for the bootstrap plan; defaults to `--seed`.
    #[arg(long)]
    pub plan_seed: Option<u64>,
    #[arg(long, default_value_t = crate::bootstrap::DEFAULT_TRIALS)]
    pub trials: usize,
    /// Subset size N, or `auto` for the +10% increment of the real training set.
    #[arg(long, default_value = "auto")]
    pub match_size: MatchSize,
}

#[derive(Debug, Clone, Args)]
pub struct StatsArgs {
    /// Summarize every pool in a manifest.
    #[arg(long, conflicts_with_all = ["labels", "index"])]
    pub manifest: Option<PathBuf>,
    /// A single label directory (requires `--index`).
    #[arg(long, requires = "index")]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Use the n−1 divisor for standard deviations.
    #[arg(long)]
    pub sample_std: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TablesArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long)]
    pub runs: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub tables: TablesArgs,
    #[arg(long, default_value = "residual")]
    pub view: View,
    #[arg(long, default_value = "spearman")]
    pub corr: CorrType,
}

#[derive(Debug, Clone, Args)]
pub struct RobustnessArgs {
    #[command(flatten)]
    pub tables: TablesArgs,
    #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
    pub budgets: Vec<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct ScreenArgs {
    #[command(flatten)]
    pub tables: TablesArgs,
    /// `auto`, or a file with one metric name per line.
    #[arg(long, default_value = "auto")]
    pub shortlist: String,
    #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
    pub budgets: Vec<u32>,
}

#[derive(Debug, Clone, Args)]
pub struct SeedciArgs {
    #[arg(long)]
    pub runs: PathBuf,
    /// `dataset:regime:baseline-vs-generator@ratio`.
    #[arg(long)]
    pub pair: String,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    #[command(flatten)]
    pub tables: TablesArgs,
    /// Adds label statistics for every pool in the manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "25,50,100")]
    pub budgets: Vec<u32>,
    #[arg(long, default_value = "auto")]
    pub shortlist: String,
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Error::invalid(format!("input file {} does not exist", path.display())))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes through a sibling temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn load_tables(t: &TablesArgs) -> Result<(MetricTable, RunsTable)> {
    require_file(&t.metrics)?;
    require_file(&t.runs)?;
    Ok((load_metrics(&t.metrics)?, load_runs(&t.runs)?))
}

/// Runs `f` on a pool with the requested thread count.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        b = b.num_threads(n);
    }
    let pool = b.build().map_err(|e| Error::invalid(e.to_string()))?;
    Ok(pool.install(f))
}

/// Per-configuration failures from `metrics`.
#[derive(Debug)]
pub struct MetricsReport {
    pub table: MetricTable,
    pub failures: Vec<(String, String)>,
}

pub fn cmd_metrics(common: &Common, args: &MetricsArgs) -> Result<MetricsReport> {
    require_file(&args.manifest)?;
    let manifest = Manifest::load(&args.manifest)?;
    let job = MetricsJob {
        master_seed: args.plan_seed.unwrap_or(common.seed),
        trials: args.trials,
        match_size: args.match_size,
        config: BootstrapConfig::default(),
    };
    let outcome = with_threads(common.threads, || compute_metrics(&manifest, &job))?;
    if !outcome.table.is_empty() {
        match &common.out {
            Some(p) => {
                let tmp = p.with_extension(format!("tmp{}", std::process::id()));
                write_metrics(&tmp, &outcome.table)?;
                fs::rename(&tmp, p).map_err(|e| Error::io(p, e))?;
            }
            None => print!("{}", outcome.table.to_csv_string()?),
        }
    }
    Ok(MetricsReport {
        table: outcome.table,
        failures: outcome.failures.into_iter().map(|(k, e)| (k, e.to_string())).collect(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StatsRow {
    pub set: String,
    pub images: usize,
    pub stats: RegimeStats,
}

fn pm(mean: f64, std: f64, digits: usize) -> String {
    format!("{mean:.digits$} ± {std:.digits$}")
}

pub fn stats_to_csv(rows: &[StatsRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record([
        "set",
        "images",
        "inst_per_img",
        "pct_small",
        "mean_area",
        "mean_iou",
        "inst_mean",
        "inst_std",
        "area_mean",
        "area_std",
        "iou_mean",
        "iou_std",
    ])
    .map_err(enc)?;
    for r in rows {
        let s = &r.stats;
        w.write_record([
            r.set.clone(),
            r.images.to_string(),
            pm(s.inst_per_img.mean, s.inst_per_img.std, 2),
            format!("{:.1}", s.pct_small),
            pm(s.mean_area.mean, s.mean_area.std, 3),
            pm(s.mean_iou.mean, s.mean_iou.std, 3),
            s.inst_per_img.mean.to_string(),
            s.inst_per_img.std.to_string(),
            s.mean_area.mean.to_string(),
            s.mean_area.std.to_string(),
            s.mean_iou.mean.to_string(),
            s.mean_iou.std.to_string(),
        ])
        .map_err(enc)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

pub fn manifest_stats(manifest: &Manifest, std_kind: StdKind) -> Result<Vec<StatsRow>> {
    let cfg = StatsConfig::default();
    let mut rows = Vec::new();
    for ds in &manifest.datasets {
        let mut sets = vec![(format!("{}/real", ds.name), &ds.real)];
        sets.extend(
            ds.generators
                .iter()
                .map(|g| (format!("{}/{}", ds.name, g.name), &g.files)),
        );
        for (set, files) in sets {
            let labels = load_labels(&files.labels, &files.index)?;
            rows.push(StatsRow {
                set,
                images: labels.len(),
                stats: regime_stats(&labels, &cfg, std_kind)?,
            });
        }
    }
    Ok(rows)
}

pub fn cmd_stats(common: &Common, args: &StatsArgs) -> Result<Vec<StatsRow>> {
    let kind = if args.sample_std {
        StdKind::Sample
    } else {
        StdKind::Population
    };
    let rows = match (&args.manifest, &args.labels, &args.index) {
        (Some(m), _, _) => {
            require_file(m)?;
            manifest_stats(&Manifest::load(m)?, kind)?
        }
        (None, Some(dir), Some(index)) => {
            require_file(index)?;
            let labels = load_labels(dir, index)?;
            vec![StatsRow {
                set: dir.display().to_string(),
                images: labels.len(),
                stats: regime_stats(&labels, &StatsConfig::default(), kind)?,
            }]
        }
        _ => return Err(Error::invalid("stats needs --manifest or --labels with --index")),
    };
    emit(common.out.as_deref(), &stats_to_csv(&rows)?)?;
    Ok(rows)
}

pub fn cmd_correlate(common: &Common, args: &CorrelateArgs) -> Result<Vec<CorrCell>> {
    let (m, r) = load_tables(&args.tables)?;
    let cells = with_threads(common.threads, || correlation_matrix(&m, &r, args.view, args.corr))??;
    emit(common.out.as_deref(), &cells_to_csv(&cells)?)?;
    Ok(cells)
}

pub fn cmd_robustness(common: &Common, args: &RobustnessArgs) -> Result<String> {
    let (m, r) = load_tables(&args.tables)?;
    let (_, rows) = per_budget_correlations(&m, &r, &args.budgets)?;
    let text = robustness_to_csv(&rows)?;
    emit(common.out.as_deref(), &text)?;
    Ok(text)
}

/// `auto` applies the heatmap rule (BH q < 0.05 or |ρ| ≥ 0.35 on residual
/// Spearman cells), falling back to the top key metrics if nothing passes.
pub fn resolve_shortlist(spec: &str, metrics: &MetricTable, runs: &RunsTable) -> Result<Vec<String>> {
    if spec != "auto" {
        let path = Path::new(spec);
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let names: Vec<String> = text
            .lines()
            .map(|l| l.split(',').next().unwrap_or("").trim().to_string())
            .filter(|l| !l.is_empty() && l != "metric")
            .collect();
        if names.is_empty() {
            return Err(Error::invalid(format!("shortlist file {spec} lists no metrics")));
        }
        return Ok(names);
    }
    let cells = correlation_matrix(metrics, runs, View::Residual, CorrType::Spearman)?;
    let picked = shortlist_rule(&cells);
    if !picked.is_empty() {
        return Ok(picked);
    }
    warn!("no metric passes the shortlist rule; using the top {DEFAULT_SHORTLIST_K} key metrics");
    Ok(key_metric_shortlist(&cells, DEFAULT_SHORTLIST_K)?
        .into_iter()
        .map(|e| e.metric)
        .collect())
}

pub fn cmd_screen(common: &Common, args: &ScreenArgs) -> Result<String> {
    let (m, r) = load_tables(&args.tables)?;
    let shortlist = with_directions(&resolve_shortlist(&args.shortlist, &m, &r)?)?;
    let summaries = screening_summary(&m, &r, &shortlist, &args.budgets)?;
    let text = screening_to_csv(&summaries)?;
    emit(common.out.as_deref(), &text)?;
    Ok(text)
}

/// Parses `dataset:regime:baseline-vs-generator@ratio`.
pub fn parse_pair(pair: &str) -> Result<(ConfigKey, ConfigKey)> {
    let bad = || {
        Error::invalid(format!(
            "expected dataset:regime:baseline-vs-generator@ratio, got {pair:?}"
        ))
    };
    let mut parts = pair.splitn(3, ':');
    let (ds, regime, rest) = match (parts.next(), parts.next(), parts.next()) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(bad()),
    };
    let regime: Regime = regime.parse()?;
    let (base, aug) = rest.split_once("-vs-").ok_or_else(bad)?;
    if base != crate::dataio::BASELINE {
        return Err(bad());
    }
    let (gen, ratio) = aug.split_once('@').ok_or_else(bad)?;
    let ratio: u32 = ratio.trim_end_matches('%').parse().map_err(|_| bad())?;
    Ok((ConfigKey::baseline(ds, regime), ConfigKey::new(ds, regime, gen, ratio)?))
}

pub fn cmd_seedci(common: &Common, args: &SeedciArgs) -> Result<String> {
    require_file(&args.runs)?;
    let (b, a) = parse_pair(&args.pair)?;
    let ci = seed_ci_for(&load_runs(&args.runs)?, &b, &a)?;
    let mut text = String::from("dataset,regime,config,n,delta_mean,delta_std,ci_low,ci_high,separable,summary\n");
    text.push_str(&format!(
        "{},{},{},{},{:.4},{:.4},{:.4},{:.4},{},\"{}\"\n",
        a.dataset,
        a.regime,
        a.cell_label(),
        ci.n,
        ci.delta_mean,
        ci.delta_std,
        ci.ci_low,
        ci.ci_high,
        !ci.not_separable(),
        ci.describe()
    ));
    emit(common.out.as_deref(), &text)?;
    Ok(text)
}

pub fn best_to_csv(rows: &[BestRow]) -> String {
    let mut s = String::from("dataset,regime,baseline,best,delta,delta_pct,best_config\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{:.4},{:.4},{},{},{}\n",
            r.dataset,
            r.regime,
            r.baseline_map,
            r.best_map,
            r.delta_str(),
            r.pct_str(),
            r.best_config
        ));
    }
    s
}

#[derive(Debug, Serialize)]
struct ReportIndex {
    files: Vec<ReportEntry>,
    warnings: Vec<String>,
    shortlist: Vec<String>,
}

#[derive(Debug, Serialize)]
struct ReportEntry {
    name: &'static str,
    file: &'static str,
    description: &'static str,
}

/// Files written by `report`.
pub const REPORT_FILES: [(&str, &str, &str); 6] = [
    (
        "best_vs_baseline",
        "best_vs_baseline.csv",
        "real-only baseline against the best augmented run",
    ),
    ("regime_stats", "regime_stats.csv", "label statistics per pool"),
    (
        "heatmaps",
        "heatmaps.csv",
        "raw and residual correlations with BH q-values",
    ),
    (
        "robustness",
        "robustness.csv",
        "per-budget correlations and fixed effects",
    ),
    ("screening", "screening.csv", "fixed-budget generator screening"),
    ("shortlist", "shortlist.csv", "key metrics ranked by peak |rho|"),
];

/// Builds the bundle in a temporary sibling directory and renames it into
/// place, replacing any previous bundle.
pub fn cmd_report(common: &Common, args: &ReportArgs) -> Result<PathBuf> {
    let out = common
        .out
        .clone()
        .ok_or_else(|| Error::invalid("report needs --out <directory>"))?;
    let (metrics, runs) = load_tables(&args.tables)?;
    let manifest = match &args.manifest {
        Some(p) => {
            require_file(p)?;
            Some(Manifest::load(p)?)
        }
        None => None,
    };

    let (files, warnings, shortlist) = with_threads(common.threads, || -> Result<_> {
        let mut warnings = Vec::new();
        let mut files: Vec<(&str, String)> = Vec::new();

        match best_vs_baseline(&runs) {
            Ok(rows) => files.push(("best_vs_baseline.csv", best_to_csv(&rows))),
            Err(e) => warnings.push(format!("best_vs_baseline omitted: {e}")),
        }
        match &manifest {
            Some(m) => files.push((
                "regime_stats.csv",
                stats_to_csv(&manifest_stats(m, StdKind::Population)?)?,
            )),
            None => warnings.push("regime_stats omitted: no --manifest given".to_string()),
        }

        let mut cells = Vec::new();
        for view in [View::Raw, View::Residual] {
            for corr in [CorrType::Pearson, CorrType::Spearman] {
                cells.extend(correlation_matrix(&metrics, &runs, view, corr)?);
            }
        }
        files.push(("heatmaps.csv", cells_to_csv(&cells)?));

        let (_, rows) = per_budget_correlations(&metrics, &runs, &args.budgets)?;
        files.push(("robustness.csv", robustness_to_csv(&rows)?));

        let shortlist = resolve_shortlist(&args.shortlist, &metrics, &runs)?;
        let summaries = screening_summary(&metrics, &runs, &with_directions(&shortlist)?, &args.budgets)?;
        files.push(("screening.csv", screening_to_csv(&summaries)?));

        let mut sl = String::from("rank,metric,score,best_dataset\n");
        for (i, e) in key_metric_shortlist(&cells, DEFAULT_SHORTLIST_K)?.iter().enumerate() {
            sl.push_str(&format!("{},{},{},{}\n", i + 1, e.metric, e.score, e.best_dataset));
        }
        files.push(("shortlist.csv", sl));
        Ok((files, warnings, shortlist))
    })??;

    let parent = out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    let name = out
        .file_name()
        .ok_or_else(|| Error::invalid("--out must name a directory"))?;
    let staging = parent.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| Error::io(&staging, e))?;
    }
    fs::create_dir(&staging).map_err(|e| Error::io(&staging, e))?;
    for (file, body) in &files {
        let p = staging.join(file);
        fs::write(&p, body).map_err(|e| Error::io(&p, e))?;
    }
    let index = ReportIndex {
        files: REPORT_FILES
            .iter()
            .filter(|(_, f, _)| files.iter().any(|(g, _)| g == f))
            .map(|&(name, file, description)| ReportEntry {
                name,
                file,
                description,
            })
            .collect(),
        warnings: warnings.clone(),
        shortlist,
    };
    let idx = serde_json::to_string_pretty(&index).map_err(|e| Error::invalid(e.to_string()))?;
    let p = staging.join("index.json");
    fs::write(&p, idx + "\n").map_err(|e| Error::io(&p, e))?;

    if out.exists() {
        fs::remove_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    }
    fs::rename(&staging, &out).map_err(|e| Error::io(&out, e))?;
    for w in &warnings {
        warn!("{w}");
    }
    info!("report written to {}", out.display());
    Ok(out)
}

/// Dispatches a parsed command line. Partial metric failures are an error.
pub fn run(cli: Cli) -> Result<()> {
    let c = &cli.common;
    match &cli.command {
        Command::Metrics(a) => {
            let rep = cmd_metrics(c, a)?;
            if !rep.failures.is_empty() {
                for (k, e) in &rep.failures {
                    eprintln!("failed: {k}: {e}");
                }
                return Err(Error::invalid(format!(
                    "{} configuration(s) failed",
                    rep.failures.len()
                )));
            }
        }
        Command::Stats(a) => {
            cmd_stats(c, a)?;
        }
        Command::Correlate(a) => {
            cmd_correlate(c, a)?;
        }
        Command::Robustness(a) => {
            cmd_robustness(c, a)?;
        }
        Command::Screen(a) => {
            cmd_screen(c, a)?;
        }
        Command::Seedci(a) => {
            cmd_seedci(c, a)?;
        }
        Command::Report(a) => {
            cmd_report(c, a)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_parsing() {
        let (b, a) = parse_pair("Pedestrian:scratch:baseline-vs-DiffusionGAN@75%").unwrap();
        assert!(b.is_baseline());
        assert_eq!(a.cell_label(), "DiffusionGAN@75%");
        assert!(parse_pair("Pedestrian:scratch:DiffusionGAN@75").is_err());
        assert!(parse_pair("P:warm:baseline-vs-G@75").is_err());
    }

    #[test]
    fn budgets_parse() {
        let cli = Cli::try_parse_from([
            "synthscreen",
            "robustness",
            "--metrics",
            "m",
            "--runs",
            "r",
            "--budgets",
            "25,50",
        ])
        .unwrap();
        match cli.command {
            Command::Robustness(a) => assert_eq!(a.budgets, vec![25, 50]),
            other => panic!("{other:?}"),
        }
        assert!(Cli::try_parse_from([
            "synthscreen",
            "robustness",
            "--metrics",
            "m",
            "--runs",
            "r",
            "--budgets",
            "a"
        ])
        .is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
