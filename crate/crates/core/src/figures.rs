//! Figures from the analysis tables.
//!
//! Each figure comes with the delimited table it is drawn from. The SVGs
//! carry no numeric labels of their own: every number printed in a figure
//! is copied verbatim from its table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::analysis::{fmt_f, Table, TRAJECTORIES_FILE, VARIANCES_FILE};
use crate::stage::Stage;
use crate::stats::quantile_sorted;

pub const BOXPLOT_FILE: &str = "variance_boxplot.tsv";
pub const STAGE_VARIANCE_FILE: &str = "stage_variance.tsv";
pub const TRAJECTORY_PLOT_FILE: &str = "trajectory_plot.tsv";

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("missing analysis output {0}; run `analyze` first")]
    Missing(PathBuf),
    #[error("{path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn read_table(dir: &Path, name: &str, columns: &[&str]) -> Result<(Table, Vec<usize>), ReportError> {
    let path = dir.join(name);
    let text = fs::read_to_string(&path).map_err(|_| ReportError::Missing(path.clone()))?;
    let table = Table::parse_tsv(&text);
    let idx = columns
        .iter()
        .map(|c| {
            table
                .column(c)
                .ok_or_else(|| ReportError::Malformed { path: path.clone(), reason: format!("no column {c}") })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok((table, idx))
}

fn parse_num(path: &Path, s: &str) -> Result<f64, ReportError> {
    s.parse()
        .map_err(|_| ReportError::Malformed { path: path.to_path_buf(), reason: format!("not a number: {s:?}") })
}

/// Key in order of first appearance.
fn ordered_keys<K: PartialEq + Clone>(items: impl Iterator<Item = K>) -> Vec<K> {
    let mut out: Vec<K> = Vec::new();
    for k in items {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

/// Quartiles and Tukey whiskers (1.5 IQR, clipped to the data).
pub fn box_stats(values: &[f64]) -> [f64; 5] {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&v, 0.25);
    let med = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let iqr = q3 - q1;
    let lo = v.iter().copied().find(|&x| x >= q1 - 1.5 * iqr).unwrap_or(q1);
    let hi = v.iter().rev().copied().find(|&x| x <= q3 + 1.5 * iqr).unwrap_or(q3);
    [lo, q1, med, q3, hi]
}

struct Svg {
    body: String,
    width: f64,
    height: f64,
}

impl Svg {
    fn new(width: f64, height: f64, title: &str) -> Self {
        let mut s = Self { body: String::new(), width, height };
        s.text(width / 2.0, 22.0, title, "middle", 15);
        s
    }

    fn text(&mut self, x: f64, y: f64, text: &str, anchor: &str, size: u32) {
        let esc = text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.1}" y="{y:.1}" font-family="sans-serif" font-size="{size}" text-anchor="{anchor}">{esc}</text>"#
        );
    }

    fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, stroke: &str) {
        let _ = writeln!(self.body, r#"<line x1="{x1:.1}" y1="{y1:.1}" x2="{x2:.1}" y2="{y2:.1}" stroke="{stroke}"/>"#);
    }

    fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, fill: &str) {
        let _ = writeln!(
            self.body,
            r#"<rect x="{x:.1}" y="{y:.1}" width="{w:.1}" height="{h:.1}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#
        );
    }

    fn polyline(&mut self, points: &[(f64, f64)], stroke: &str) {
        let pts: Vec<String> = points.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
        let _ = writeln!(self.body, r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="1.5"/>"#, pts.join(" "));
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

const COLORS: [&str; 4] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

/// Maps `v` in `[lo, hi]` to the vertical pixel range `[bottom, top]`.
fn scale(v: f64, lo: f64, hi: f64, bottom: f64, top: f64) -> f64 {
    if hi <= lo {
        return bottom;
    }
    bottom - (v - lo) / (hi - lo) * (bottom - top)
}

fn write_file(path: PathBuf, text: &str, files: &mut Vec<PathBuf>) -> Result<(), ReportError> {
    fs::write(&path, text).map_err(|source| ReportError::Io { path: path.clone(), source })?;
    files.push(path);
    Ok(())
}

/// Reads the analysis tables in `analysis_dir` and writes figures and their
/// tables to `out_dir`.
pub fn report(analysis_dir: &Path, out_dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let (vars, vi) = read_table(analysis_dir, VARIANCES_FILE, &["configuration", "regime", "stage", "variance"])?;
    let (traj, ti) =
        read_table(analysis_dir, TRAJECTORIES_FILE, &["configuration", "regime", "stage", "period", "mean_order", "q1", "q3"])?;
    let vpath = analysis_dir.join(VARIANCES_FILE);
    let tpath = analysis_dir.join(TRAJECTORIES_FILE);
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io { path: out_dir.to_path_buf(), source })?;
    let mut files = Vec::new();

    let groups = ordered_keys(vars.rows.iter().map(|r| (r[vi[0]].clone(), r[vi[1]].clone())));

    // Box plots of per-agent variance by configuration x regime.
    let mut boxes = Table::new(&["configuration", "regime", "n", "whisker_low", "q1", "median", "q3", "whisker_high"]);
    let mut box_values = Vec::new();
    for (c, g) in &groups {
        let xs = vars
            .rows
            .iter()
            .filter(|r| &r[vi[0]] == c && &r[vi[1]] == g)
            .map(|r| parse_num(&vpath, &r[vi[3]]))
            .collect::<Result<Vec<_>, _>>()?;
        let b = box_stats(&xs);
        let mut row = vec![c.clone(), g.clone(), xs.len().to_string()];
        row.extend(b.iter().map(|v| fmt_f(*v)));
        boxes.push(row);
        box_values.push(b);
    }
    write_file(out_dir.join(BOXPLOT_FILE), &boxes.to_tsv(), &mut files)?;
    {
        let width = 120.0 + 90.0 * groups.len() as f64;
        let mut svg = Svg::new(width, 420.0, "Order variance per agent by configuration and regime");
        let hi = box_values.iter().map(|b| b[4]).fold(0.0, f64::max);
        let (bottom, top) = (340.0, 50.0);
        svg.line(60.0, bottom, width - 20.0, bottom, "black");
        svg.line(60.0, bottom, 60.0, top, "black");
        svg.text(20.0, (bottom + top) / 2.0, "variance", "middle", 12);
        for (i, ((c, g), b)) in groups.iter().zip(&box_values).enumerate() {
            let x = 100.0 + 90.0 * i as f64;
            let y = |v: f64| scale(v, 0.0, hi, bottom, top);
            svg.line(x, y(b[0]), x, y(b[4]), "black");
            svg.rect(x - 20.0, y(b[3]), 40.0, (y(b[1]) - y(b[3])).max(0.5), COLORS[i % 2]);
            svg.line(x - 20.0, y(b[2]), x + 20.0, y(b[2]), "black");
            svg.text(x, bottom + 18.0, c, "middle", 11);
            svg.text(x, bottom + 32.0, g, "middle", 11);
        }
        write_file(out_dir.join("variance_boxplot.svg"), &svg.finish(), &mut files)?;
    }

    // Mean variance per stage.
    let mut bars = Table::new(&["configuration", "regime", "stage", "mean_variance"]);
    let mut bar_values = Vec::new();
    for (c, g) in &groups {
        let mut means = Vec::new();
        for s in Stage::ALL {
            let name = s.to_string();
            let xs = vars
                .rows
                .iter()
                .filter(|r| &r[vi[0]] == c && &r[vi[1]] == g && r[vi[2]] == name)
                .map(|r| parse_num(&vpath, &r[vi[3]]))
                .collect::<Result<Vec<_>, _>>()?;
            let m = if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
            bars.push(vec![c.clone(), g.clone(), name, fmt_f(m)]);
            means.push(m);
        }
        bar_values.push(means);
    }
    write_file(out_dir.join(STAGE_VARIANCE_FILE), &bars.to_tsv(), &mut files)?;
    {
        let group_w = 150.0;
        let width = 120.0 + group_w * groups.len() as f64;
        let mut svg = Svg::new(width, 420.0, "Mean order variance across stages");
        let hi = bar_values.iter().flatten().copied().fold(0.0, f64::max);
        let (bottom, top) = (340.0, 50.0);
        svg.line(60.0, bottom, width - 20.0, bottom, "black");
        svg.line(60.0, bottom, 60.0, top, "black");
        svg.text(20.0, (bottom + top) / 2.0, "variance", "middle", 12);
        for (i, ((c, g), means)) in groups.iter().zip(&bar_values).enumerate() {
            let x0 = 80.0 + group_w * i as f64;
            for (j, m) in means.iter().enumerate() {
                let y = scale(*m, 0.0, hi, bottom, top);
                svg.rect(x0 + 30.0 * j as f64, y, 26.0, bottom - y, COLORS[j]);
                svg.text(x0 + 30.0 * j as f64 + 13.0, bottom + 14.0, &Stage::ALL[j].to_string(), "middle", 10);
            }
            svg.text(x0 + 60.0, bottom + 30.0, c, "middle", 11);
            svg.text(x0 + 60.0, bottom + 44.0, g, "middle", 11);
        }
        write_file(out_dir.join("stage_variance.svg"), &svg.finish(), &mut files)?;
    }

    // Order trajectories, one panel per configuration x regime.
    let mut plotted = Table::new(&["configuration", "regime", "stage", "period", "mean_order", "q1", "q3"]);
    for r in &traj.rows {
        plotted.push(ti.iter().map(|&i| r[i].clone()).collect());
    }
    write_file(out_dir.join(TRAJECTORY_PLOT_FILE), &plotted.to_tsv(), &mut files)?;
    let tgroups = ordered_keys(traj.rows.iter().map(|r| (r[ti[0]].clone(), r[ti[1]].clone())));
    for (c, g) in &tgroups {
        let rows: Vec<&Vec<String>> = traj.rows.iter().filter(|r| &r[ti[0]] == c && &r[ti[1]] == g).collect();
        let mut series: Vec<Vec<(f64, f64)>> = vec![Vec::new(); Stage::ALL.len()];
        let mut hi: f64 = 0.0;
        let mut max_t: f64 = 1.0;
        for r in &rows {
            let Some(s) = Stage::ALL.iter().position(|s| s.to_string() == r[ti[2]]) else { continue };
            let t = parse_num(&tpath, &r[ti[3]])?;
            let m = parse_num(&tpath, &r[ti[4]])?;
            hi = hi.max(parse_num(&tpath, &r[ti[6]])?).max(m);
            max_t = max_t.max(t);
            series[s].push((t, m));
        }
        let (width, bottom, top, left, right) = (640.0, 340.0, 50.0, 60.0, 600.0);
        let mut svg = Svg::new(width, 420.0, &format!("Mean order per period, {c} {g}"));
        svg.line(left, bottom, right, bottom, "black");
        svg.line(left, bottom, left, top, "black");
        svg.text(20.0, (bottom + top) / 2.0, "order", "middle", 12);
        svg.text((left + right) / 2.0, bottom + 30.0, "period", "middle", 12);
        for (j, pts) in series.iter().enumerate() {
            let px: Vec<(f64, f64)> = pts
                .iter()
                .map(|(t, m)| {
                    let x = left + (t - 1.0) / (max_t - 1.0).max(1.0) * (right - left);
                    (x, scale(*m, 0.0, hi, bottom, top))
                })
                .collect();
            svg.polyline(&px, COLORS[j]);
            svg.text(right + 10.0, top + 16.0 * j as f64, &Stage::ALL[j].to_string(), "start", 11);
        }
        let name = format!("trajectory__{c}__{g}.svg");
        write_file(out_dir.join(name), &svg.finish(), &mut files)?;
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_stats_of_small_sample() {
        let b = box_stats(&[1.0, 2.0, 3.0, 4.0, 100.0]);
        assert_eq!(b, [1.0, 2.0, 3.0, 4.0, 4.0]);
        assert_eq!(box_stats(&[5.0; 4]), [5.0; 5]);
    }
}
