//! Aggregate cell records into plain-CSV report matrices: mean AUC and AUK
//! per method and condition, the AUC-versus-AUK scatter rows, per-iteration
//! CI-EX curves with 95% t-intervals over seeds, and the failure list.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::experiment::runner::{write_atomic, FailedCell, ResultCell};

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Half-width of the 95% t-interval; empty for fewer than two samples.
fn ci95(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let t = StudentsT::new(0.0, 1.0, n as f64 - 1.0)
        .expect("valid dof")
        .inverse_cdf(0.975);
    Some(t * (var / n as f64).sqrt())
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Read every successful and failed cell record under `dir/cells`, sorted
/// by file name so aggregation order is stable.
pub fn read_cells(dir: &Path) -> Result<(Vec<ResultCell>, Vec<FailedCell>)> {
    let cells_dir = dir.join("cells");
    let mut names: Vec<PathBuf> = std::fs::read_dir(&cells_dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    names.sort();
    let mut cells = Vec::new();
    let mut failures = Vec::new();
    for path in names {
        let text = std::fs::read_to_string(&path)?;
        if path
            .file_name()
            .is_some_and(|n| n.to_string_lossy().ends_with(".failed.json"))
        {
            failures.push(serde_json::from_str(&text)?);
        } else {
            cells.push(serde_json::from_str(&text)?);
        }
    }
    Ok((cells, failures))
}

fn matrix_csv(
    cells: &[ResultCell],
    methods: &[String],
    conditions: &[String],
    value: impl Fn(&ResultCell) -> f64,
) -> String {
    let mut out = String::from("method");
    for c in conditions {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for m in methods {
        out.push_str(m);
        for c in conditions {
            let vals: Vec<f64> = cells
                .iter()
                .filter(|cell| &cell.method == m && &cell.condition == c)
                .map(&value)
                .collect();
            out.push(',');
            if !vals.is_empty() {
                out.push_str(&fmt(mean(&vals)));
            }
        }
        out.push('\n');
    }
    out
}

/// Write `report/*.csv` under the run directory. Values are plain '.'
/// decimal with no thousands separators; identical inputs yield
/// byte-identical files.
pub fn report(dir: &Path) -> Result<PathBuf> {
    let (cells, failures) = read_cells(dir)?;
    if cells.is_empty() && failures.is_empty() {
        return Err(Error::invalid(format!(
            "no cell records under {}",
            dir.join("cells").display()
        )));
    }
    let report_dir = dir.join("report");
    std::fs::create_dir_all(&report_dir)?;

    let methods: Vec<String> = cells
        .iter()
        .map(|c| c.method.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let conditions: Vec<String> = cells
        .iter()
        .map(|c| c.condition.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    write_atomic(
        &report_dir.join("auc_matrix.csv"),
        matrix_csv(&cells, &methods, &conditions, |c| c.auc).as_bytes(),
    )?;
    write_atomic(
        &report_dir.join("auk_matrix.csv"),
        matrix_csv(&cells, &methods, &conditions, |c| c.auk).as_bytes(),
    )?;

    // Scatter rows: per method and condition, the AUC difference to the
    // benchmark mean next to the AUK mean.
    let mut scatter = String::from("method,condition,delta_auc_vs_bm,mean_auk\n");
    for m in &methods {
        for c in &conditions {
            let vals: Vec<&ResultCell> = cells
                .iter()
                .filter(|cell| &cell.method == m && &cell.condition == c)
                .collect();
            if vals.is_empty() {
                continue;
            }
            let bm: Vec<f64> = cells
                .iter()
                .filter(|cell| cell.method == "bm" && &cell.condition == c)
                .map(|cell| cell.auc)
                .collect();
            let mean_auc = mean(&vals.iter().map(|v| v.auc).collect::<Vec<_>>());
            let delta = if bm.is_empty() {
                String::new()
            } else {
                fmt(mean_auc - mean(&bm))
            };
            let mean_auk = mean(&vals.iter().map(|v| v.auk).collect::<Vec<_>>());
            scatter.push_str(&format!("{m},{c},{delta},{}\n", fmt(mean_auk)));
        }
    }
    write_atomic(&report_dir.join("scatter.csv"), scatter.as_bytes())?;

    // CI-EX per-iteration curves: mean and 95% CI over seeds.
    let mut by_key: BTreeMap<(String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for cell in &cells {
        if let Some(records) = &cell.ciex_records {
            for r in records {
                let entry = by_key
                    .entry((cell.condition.clone(), r.iteration))
                    .or_default();
                entry.0.push(r.val_auc);
                entry.1.push(r.val_auk);
            }
        }
    }
    let mut curves =
        String::from("condition,iteration,n_seeds,mean_auc,ci95_auc,mean_auk,ci95_auk\n");
    for ((condition, iteration), (aucs, auks)) in &by_key {
        let ci_auc = ci95(aucs).map(fmt).unwrap_or_default();
        let ci_auk = ci95(auks).map(fmt).unwrap_or_default();
        curves.push_str(&format!(
            "{condition},{iteration},{},{},{ci_auc},{},{ci_auk}\n",
            aucs.len(),
            fmt(mean(aucs)),
            fmt(mean(auks)),
        ));
    }
    write_atomic(&report_dir.join("ciex_iterations.csv"), curves.as_bytes())?;

    let mut failed = String::from("method,condition,seed,error\n");
    for f in &failures {
        let sanitized = f.error.replace([',', '\n'], ";");
        failed.push_str(&format!("{},{},{},{sanitized}\n", f.method, f.condition, f.seed));
    }
    write_atomic(&report_dir.join("failures.csv"), failed.as_bytes())?;

    Ok(report_dir)
}
