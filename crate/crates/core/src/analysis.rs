//! Summary tables for a stored experiment.
//!
//! Everything here is recomputed from the cell files alone, and the output
//! is byte-deterministic: rows follow cell order and floats use fixed
//! formatting.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use crate::experiment::{CellRecord, CellStatus, RunRecord, Store, StoreError};
use crate::par::{par_map, Parallelism};
use crate::stage::{InfoRegime, Stage, NUM_STAGES};
use crate::stats::{
    bullwhip_report, cost_tables, fit_ordering_regression, group_runs, info_sharing_effects, myopia_sign_test,
    quantile_sorted, variance_to_f64, BullwhipReport, RegressionFit, RunView, StatError, VarianceProfile,
    MIN_REGRESSION_PERIODS,
};

pub const BULLWHIP_FILE: &str = "bullwhip.tsv";
pub const VARIANCES_FILE: &str = "variances.tsv";
pub const INFO_SHARING_FILE: &str = "info_sharing.tsv";
pub const MYOPIA_FITS_FILE: &str = "myopia_fits.tsv";
pub const MYOPIA_FILE: &str = "myopia.tsv";
pub const COSTS_FILE: &str = "costs.tsv";
pub const TRAJECTORIES_FILE: &str = "trajectories.tsv";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("no complete cells under {0}")]
    NoCompleteCells(PathBuf),
    #[error(transparent)]
    Stat(#[from] StatError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A tab-separated table.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str) -> Self {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("").split('\t').map(str::to_string).collect();
        let rows = lines.filter(|l| !l.is_empty()).map(|l| l.split('\t').map(str::to_string).collect()).collect();
        Self { header, rows }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn fmt_f(x: f64) -> String {
    if x.is_finite() {
        let s = format!("{x:.6}");
        if s == "-0.000000" { "0.000000".into() } else { s }
    } else {
        "NA".into()
    }
}

pub fn fmt_p(p: f64) -> String {
    if !p.is_finite() {
        "NA".into()
    } else if p == 0.0 || p >= 1e-4 {
        format!("{p:.6}")
    } else {
        format!("{p:.3e}")
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f).unwrap_or_else(|| "NA".into())
}

fn cells_of<R: RunView>(runs: &[R]) -> String {
    runs.iter().map(RunView::run_label).collect::<Vec<_>>().join(" ")
}

fn bullwhip_row(table: &mut Table, configuration: &str, regime: &str, b: &BullwhipReport) {
    let mut row = vec![
        configuration.to_string(),
        regime.to_string(),
        b.successes.to_string(),
        b.trials.to_string(),
        fmt_p(b.sign_test.p_value),
    ];
    row.extend(b.mean_variance.iter().map(|v| fmt_f(*v)));
    row.push(fmt_opt(b.end_to_end_increase));
    row.push(fmt_opt(b.mean_adjacent_increase));
    row.push(b.runs.join(" "));
    table.push(row);
}

/// Everything `analyze` computes, before it is written out.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub tables: Vec<(&'static str, Table)>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
struct FailedCell {
    cell: String,
    reason: String,
}

/// Computes every table from loaded runs.
pub fn compute(runs: &[RunRecord], failed: &[CellRecord], plan_sha256: &str) -> Result<Analysis, AnalysisError> {
    // Per-agent variances.
    let mut variances = Table::new(&[
        "cell", "configuration", "regime", "replication", "stage", "variance_exact", "variance",
    ]);
    for r in runs {
        let profile = VarianceProfile::of(&r.trace)?;
        for s in Stage::ALL {
            let v = &profile.variances[s.index()];
            variances.push(vec![
                r.run_label(),
                r.configuration(),
                r.trace.regime.as_str().into(),
                r.record.cell.replication.to_string(),
                s.to_string(),
                v.to_string(),
                fmt_f(variance_to_f64(v)),
            ]);
        }
    }

    let groups = group_runs(runs);

    // Bullwhip sign tests.
    let mut bullwhip = Table::new(&[
        "configuration", "regime", "amplifying_pairs", "pairs", "p_value", "mean_var_S1", "mean_var_S2", "mean_var_S3",
        "mean_var_S4", "end_to_end_increase", "mean_adjacent_increase", "cells",
    ]);
    let mut bullwhip_json = Vec::new();
    for ((configuration, regime), group) in &groups {
        let b = bullwhip_report(group)?;
        bullwhip_row(&mut bullwhip, configuration, regime.as_str(), &b);
        bullwhip_json.push(json!({
            "configuration": configuration, "regime": regime, "successes": b.successes, "trials": b.trials,
            "p_value": b.sign_test.p_value, "end_to_end_increase": b.end_to_end_increase,
            "mean_adjacent_increase": b.mean_adjacent_increase,
        }));
    }
    let all = bullwhip_report(runs)?;
    bullwhip_row(&mut bullwhip, "ALL", "ALL", &all);

    // Regime comparison: summary rows, then p-values and test names.
    let mut info = Table::new(&["configuration", "row", "mean_sd", "median", "cells"]);
    let effects = info_sharing_effects(runs)?;
    for e in &effects {
        let c = &e.configuration;
        let ms = |s: &crate::stats::Summary| format!("{} ({})", fmt_f(s.mean), fmt_f(s.sd));
        info.push(vec![c.clone(), InfoRegime::Isolated.table_label().into(), ms(&e.isolated), fmt_f(e.isolated.median), e.isolated_cells.join(" ")]);
        info.push(vec![c.clone(), InfoRegime::Shared.table_label().into(), ms(&e.shared), fmt_f(e.shared.median), e.shared_cells.join(" ")]);
        let t_p = e.welch.map(|w| fmt_p(w.p_value)).unwrap_or_else(|| "NA".into());
        info.push(vec![c.clone(), "p-value".into(), t_p, fmt_p(e.mann_whitney.p_value), String::new()]);
        info.push(vec![c.clone(), "Test".into(), "t-test".into(), "M.W.".into(), String::new()]);
    }

    // Ordering regressions, fitted in parallel; order follows `runs`.
    let fitted: Vec<Vec<RegressionFit>> = par_map(runs, Parallelism::Available, |r| {
        if r.trace.periods.len() < MIN_REGRESSION_PERIODS {
            return Vec::new();
        }
        Stage::ALL
            .iter()
            .filter_map(|&s| fit_ordering_regression(&r.trace, s, &r.run_label()).ok())
            .collect()
    });
    let mut fits_table = Table::new(&[
        "cell", "stage", "a_0", "a_I", "a_R", "a_S", "a_N", "a_t", "residual_variance", "valid", "aliased", "a_N_gt_a_I",
    ]);
    for f in fitted.iter().flatten() {
        let c = &f.coefficients;
        fits_table.push(vec![
            f.label.clone(),
            f.stage.to_string(),
            fmt_f(c.intercept),
            fmt_f(c.inventory),
            fmt_f(c.incoming_demand),
            fmt_f(c.arrivals),
            fmt_f(c.supply_line),
            fmt_f(c.period),
            fmt_f(f.residual_variance),
            f.is_valid().to_string(),
            f.aliased.join(","),
            f.supply_line_over_inventory().to_string(),
        ]);
    }
    let mut myopia = Table::new(&["configuration", "regime", "a_N_gt_a_I", "valid_fits", "excluded_fits", "p_value", "cells"]);
    let mut myopia_json = Vec::new();
    let mut myopia_row = |configuration: &str, regime: &str, idx: &[usize]| {
        let fits: Vec<RegressionFit> = idx.iter().flat_map(|&i| fitted[i].iter().cloned()).collect();
        let cells = idx.iter().map(|&i| runs[i].run_label()).collect::<Vec<_>>().join(" ");
        match myopia_sign_test(&fits) {
            Ok(m) => {
                myopia.push(vec![
                    configuration.into(),
                    regime.into(),
                    m.successes.to_string(),
                    m.valid_fits.to_string(),
                    m.excluded_fits.to_string(),
                    fmt_p(m.sign_test.p_value),
                    cells,
                ]);
                myopia_json.push(json!({
                    "configuration": configuration, "regime": regime, "successes": m.successes,
                    "valid_fits": m.valid_fits, "excluded_fits": m.excluded_fits, "p_value": m.sign_test.p_value,
                }));
            }
            Err(_) => {
                myopia.push(vec![
                    configuration.into(),
                    regime.into(),
                    "0".into(),
                    "0".into(),
                    fits.len().to_string(),
                    "NA".into(),
                    cells,
                ]);
            }
        }
    };
    for ((configuration, regime), _) in &groups {
        let idx: Vec<usize> = (0..runs.len())
            .filter(|&i| runs[i].configuration() == *configuration && runs[i].trace.regime == *regime)
            .collect();
        myopia_row(configuration, regime.as_str(), &idx);
    }
    myopia_row("ALL", "ALL", &(0..runs.len()).collect::<Vec<_>>());

    // Cost table: one row per configuration and regime.
    let mut costs = Table::new(&[
        "configuration", "regime", "runs", "total_cost", "cost_S1", "cost_S2", "cost_S3", "cost_S4", "var_mean",
        "var_median", "var_std", "cells",
    ]);
    let cost_rows = cost_tables(runs)?;
    for c in &cost_rows {
        let mut row = vec![
            c.configuration.clone(),
            c.regime.table_label().into(),
            c.runs.to_string(),
            c.mean_system_cost.to_float_literal(),
        ];
        row.extend(c.mean_stage_cost.iter().map(|m| m.to_float_literal()));
        row.extend([fmt_f(c.variance.mean), fmt_f(c.variance.median), fmt_f(c.variance.sd), c.cells.join(" ")]);
        costs.push(row);
    }

    // Order trajectories: per-period mean with interquartile band.
    let mut traj = Table::new(&["configuration", "regime", "stage", "period", "mean_order", "q1", "q3", "n", "cells"]);
    for ((configuration, regime), group) in &groups {
        let horizon = group.iter().map(|r| r.trace.periods.len()).min().unwrap_or(0);
        let cells = cells_of(group);
        for s in Stage::ALL {
            for t in 0..horizon {
                let mut xs: Vec<f64> = group.iter().map(|r| r.trace.periods[t].orders[s.index()] as f64).collect();
                xs.sort_by(f64::total_cmp);
                let mean = xs.iter().sum::<f64>() / xs.len() as f64;
                traj.push(vec![
                    configuration.clone(),
                    regime.as_str().into(),
                    s.to_string(),
                    (t + 1).to_string(),
                    fmt_f(mean),
                    fmt_f(quantile_sorted(&xs, 0.25)),
                    fmt_f(quantile_sorted(&xs, 0.75)),
                    xs.len().to_string(),
                    cells.clone(),
                ]);
            }
        }
    }

    let failed_cells: Vec<FailedCell> = failed
        .iter()
        .map(|r| FailedCell {
            cell: r.cell.id(),
            reason: match &r.status {
                CellStatus::Failed { reason } => reason.clone(),
                CellStatus::Complete => String::new(),
            },
        })
        .collect();
    let summary = json!({
        "format": "beerlab.analysis/1",
        "plan_sha256": plan_sha256,
        "complete_cells": runs.len(),
        "failed_cells": failed_cells,
        "bullwhip": {
            "groups": bullwhip_json,
            "pooled": {
                "successes": all.successes, "trials": all.trials, "p_value": all.sign_test.p_value,
                "end_to_end_increase": all.end_to_end_increase, "mean_adjacent_increase": all.mean_adjacent_increase,
                "note": "trials = runs x 3 adjacent stage pairs; equal variances count as failures",
            },
        },
        "myopia": myopia_json,
        "info_sharing": effects,
        "costs": cost_rows,
        "stages": NUM_STAGES,
    });

    Ok(Analysis {
        tables: vec![
            (VARIANCES_FILE, variances),
            (BULLWHIP_FILE, bullwhip),
            (INFO_SHARING_FILE, info),
            (MYOPIA_FITS_FILE, fits_table),
            (MYOPIA_FILE, myopia),
            (COSTS_FILE, costs),
            (TRAJECTORIES_FILE, traj),
        ],
        summary,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalyzeOutcome {
    pub complete_cells: usize,
    pub failed_cells: usize,
    pub files: Vec<PathBuf>,
}

/// Reads the store at `root` and writes the tables and `summary.json` to `out_dir`.
pub fn analyze(root: &Path, out_dir: &Path) -> Result<AnalyzeOutcome, AnalysisError> {
    let store = Store::new(root);
    let manifest = store.read_manifest()?;
    let (runs, failed) = store.load_runs()?;
    if runs.is_empty() {
        return Err(AnalysisError::NoCompleteCells(root.to_path_buf()));
    }
    let analysis = compute(&runs, &failed, &manifest.plan_sha256)?;
    fs::create_dir_all(out_dir).map_err(|source| AnalysisError::Io { path: out_dir.to_path_buf(), source })?;
    let mut files = Vec::new();
    let mut write = |name: &str, text: String| -> Result<(), AnalysisError> {
        let path = out_dir.join(name);
        fs::write(&path, text).map_err(|source| AnalysisError::Io { path: path.clone(), source })?;
        files.push(path);
        Ok(())
    };
    for (name, table) in &analysis.tables {
        write(name, table.to_tsv())?;
    }
    let json = serde_json::to_string_pretty(&analysis.summary).expect("summary serializes");
    write(SUMMARY_FILE, format!("{json}\n"))?;
    Ok(AnalyzeOutcome { complete_cells: runs.len(), failed_cells: failed.len(), files })
}
