//! Summaries and plot tables over diagnostics files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::harness::train::RunMeta;
use crate::harness::HarnessError;
use crate::optimizer::diagnostics::{load_rows, DiagnosticRow};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub file: PathBuf,
    pub label: String,
    pub steps: u64,
    /// `ℰ + α` at the last recorded row.
    pub final_objective: Option<f64>,
    pub final_grad_norm: Option<f64>,
    pub max_weight_norm: Option<f64>,
    pub r1: Option<f64>,
    pub below_r1: Option<bool>,
    pub min_margin: Option<f64>,
    pub s_k: Option<f64>,
    pub z_k: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportSummary {
    pub runs: Vec<RunReport>,
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("meta.json")
}

fn opt(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn fmax(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.filter(|v| !v.is_nan()).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
}

fn fmin(values: impl Iterator<Item = f64>) -> Option<f64> {
    values.filter(|v| !v.is_nan()).fold(None, |m, v| Some(m.map_or(v, |m: f64| m.min(v))))
}

fn label_for(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem == "diagnostics" {
        if let Some(dir) = path.parent().and_then(|p| p.file_name()) {
            return dir.to_string_lossy().into_owned();
        }
    }
    stem
}

/// Summarises one trajectory. The sidecar, when present, contributes `R₁` and
/// the per-step maxima that rows at a coarse cadence can miss.
pub fn summarize(path: &Path, rows: &[DiagnosticRow], meta: Option<&RunMeta>) -> RunReport {
    let last = rows.last();
    let mut max_norm = fmax(rows.iter().map(|r| r.x_norm));
    let mut min_margin = fmin(rows.iter().map(|r| r.margin));
    if let Some(m) = meta {
        if !rows.is_empty() {
            max_norm = fmax(max_norm.into_iter().chain([m.summary.max_x_norm]));
            min_margin = fmin(min_margin.into_iter().chain(m.summary.min_margin));
        }
    }
    let r1 = meta.and_then(|m| m.r1);
    RunReport {
        file: path.to_path_buf(),
        label: label_for(path),
        steps: last.map_or(0, |r| r.k),
        final_objective: last.and_then(|r| opt(r.f_est)),
        final_grad_norm: last.and_then(|r| opt(r.grad_f_norm_est)),
        max_weight_norm: max_norm,
        r1,
        below_r1: r1.zip(max_norm).map(|(r1, n)| n < r1),
        min_margin,
        s_k: last.and_then(|r| opt(r.s_k)),
        z_k: last.and_then(|r| opt(r.z_k)),
    }
}

/// Reads every CSV (and its sidecar) and writes the JSON summary to `out` and
/// a side-by-side plot table next to it.
pub fn report(paths: &[PathBuf], out: &Path) -> Result<ReportSummary, HarnessError> {
    if paths.is_empty() {
        return Err(HarnessError::Config("report needs at least one diagnostics csv".into()));
    }
    let mut runs = Vec::new();
    let mut tables = Vec::new();
    for path in paths {
        let rows = load_rows(path)?;
        let meta_path = sidecar(path);
        let meta: Option<RunMeta> = if meta_path.exists() {
            Some(serde_json::from_str(&std::fs::read_to_string(&meta_path)?)?)
        } else {
            None
        };
        runs.push(summarize(path, &rows, meta.as_ref()));
        tables.push(rows);
    }
    dedupe_labels(&mut runs);
    let summary = ReportSummary { runs };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(out, serde_json::to_string_pretty(&summary)?)?;
    write_plot_table(&summary, &tables, &plot_path(out))?;
    Ok(summary)
}

pub fn plot_path(summary_path: &Path) -> PathBuf {
    summary_path.with_extension("plot.csv")
}

fn dedupe_labels(runs: &mut [RunReport]) {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for run in runs.iter_mut() {
        let n = seen.entry(run.label.clone()).or_insert(0);
        if *n > 0 {
            run.label = format!("{}_{}", run.label, n);
        }
        *n += 1;
    }
}

/// Columns `k, <label>_objective, <label>_grad_norm, …` over the union of
/// recorded steps; cells are empty where a run has no row.
fn write_plot_table(summary: &ReportSummary, tables: &[Vec<DiagnosticRow>], path: &Path) -> Result<(), HarnessError> {
    let mut by_k: BTreeMap<u64, Vec<Option<(f64, f64)>>> = BTreeMap::new();
    for (i, rows) in tables.iter().enumerate() {
        for r in rows {
            by_k.entry(r.k).or_insert_with(|| vec![None; tables.len()])[i] = Some((r.f_est, r.grad_f_norm_est));
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(crate::optimizer::CsvError::from)?;
    let mut header = vec!["k".to_string()];
    for run in &summary.runs {
        header.push(format!("{}_objective", run.label));
        header.push(format!("{}_grad_norm", run.label));
    }
    w.write_record(&header).map_err(crate::optimizer::CsvError::from)?;
    for (k, cells) in by_k {
        let mut rec = vec![k.to_string()];
        for c in cells {
            match c {
                Some((f, g)) => {
                    rec.push(f.to_string());
                    rec.push(g.to_string());
                }
                None => {
                    rec.push(String::new());
                    rec.push(String::new());
                }
            }
        }
        w.write_record(&rec).map_err(crate::optimizer::CsvError::from)?;
    }
    w.flush()?;
    Ok(())
}
