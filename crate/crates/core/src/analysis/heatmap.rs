use crate::error::{Error, Result};

use super::{format_fe, CorrCell, CorrOutcome, RobustnessRow};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::invalid(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv encoding failed: {e}"))
}

/// Plot-ready heatmap rows. Empty fields mark undefined values.
pub fn cells_to_csv(cells: &[CorrCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "dataset",
        "regime",
        "view",
        "corr",
        "metric",
        "budget",
        "rho",
        "p",
        "q",
        "n",
        "significant",
        "note",
    ])
    .map_err(csv_err)?;
    for c in cells {
        w.write_record([
            c.dataset.clone(),
            c.regime.tag().to_string(),
            c.view.tag().to_string(),
            c.corr.tag().to_string(),
            c.metric.clone(),
            c.budget.map(|b| b.to_string()).unwrap_or_default(),
            opt(c.rho),
            opt(c.p),
            opt(c.q),
            c.n.to_string(),
            c.significant().to_string(),
            c.note.clone(),
        ])
        .map_err(csv_err)?;
    }
    finish(w)
}

/// One row per `(dataset, regime, metric)` with a `rho@<budget>` column per
/// budget, the mean ρ, notes and the fixed-effects pair.
pub fn robustness_to_csv(rows: &[RobustnessRow]) -> Result<String> {
    let budgets: Vec<u32> = rows
        .first()
        .map(|r| r.per_budget.iter().map(|(b, _)| *b).collect())
        .unwrap_or_default();
    let mut header: Vec<String> = ["dataset", "regime", "metric"].map(String::from).to_vec();
    header.extend(budgets.iter().map(|b| format!("rho@{b}")));
    header.extend(["mean_rho", "budget_notes", "beta_fe", "p_fe", "fe", "fe_note"].map(String::from));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.dataset.clone(), r.regime.tag().to_string(), r.metric.clone()];
        rec.extend(r.per_budget.iter().map(|(_, o)| match o {
            CorrOutcome::Defined { rho, .. } => rho.to_string(),
            CorrOutcome::Undefined(_) => String::new(),
        }));
        rec.push(opt(r.mean_rho));
        rec.push(r.budget_notes.clone());
        match &r.fe {
            Ok(fit) => {
                rec.push(fit.beta_fe.to_string());
                rec.push(fit.p_fe.to_string());
                rec.push(format_fe(fit));
                rec.push(String::new());
            }
            Err(note) => {
                rec.extend([String::new(), String::new(), String::new(), note.clone()]);
            }
        }
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}
