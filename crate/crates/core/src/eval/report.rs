//! Grid reports: `results.csv`, `marginals.csv`, `top_configs.csv` and two
//! static SVG charts. Every file is a pure function of the result rows.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::grid::{marginal_report, Axis, ConfigKey, GridResult, MarginalRow};
use super::{summarize, Metrics, Summary};
use crate::util;
use crate::{Error, Result};

pub const RESULTS_FILE: &str = "results.csv";
pub const MARGINALS_FILE: &str = "marginals.csv";
pub const TOP_FILE: &str = "top_configs.csv";
pub const BOXPLOT_FILE: &str = "boxplot.svg";
pub const DENSITY_FILE: &str = "density.svg";

const RESULTS_HEADER: &str = "strategy,m,k,rule,threshold_mode,run,seed,precision,recall,f_measure,accuracy";

pub fn results_to_csv(results: &[GridResult]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for r in results {
        let c = &r.config;
        let m = &r.metrics;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            c.strategy, c.m, c.k, c.rule, c.threshold_mode, r.run, r.seed, m.precision, m.recall, m.f_measure, m.accuracy
        );
    }
    out
}

pub fn results_from_csv(src: &str, path: &Path) -> Result<Vec<GridResult>> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = src.lines().enumerate();
    if lines.next().map(|(_, h)| h) != Some(RESULTS_HEADER) {
        return Err(err(1, format!("expected header {RESULTS_HEADER}")));
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(err(i + 1, format!("expected 11 fields, got {}", f.len())));
        }
        let wrap = |e: Error| err(i + 1, e.to_string());
        let int = |s: &str| s.parse::<u64>().map_err(|_| err(i + 1, format!("bad integer '{s}'")));
        let real = |s: &str| s.parse::<f64>().map_err(|_| err(i + 1, format!("bad number '{s}'")));
        out.push(GridResult {
            config: ConfigKey {
                strategy: f[0].parse().map_err(wrap)?,
                m: int(f[1])? as usize,
                k: int(f[2])? as usize,
                rule: f[3].parse().map_err(wrap)?,
                threshold_mode: f[4].parse().map_err(wrap)?,
            },
            run: int(f[5])? as usize,
            seed: int(f[6])?,
            metrics: Metrics {
                precision: real(f[7])?,
                recall: real(f[8])?,
                f_measure: real(f[9])?,
                accuracy: real(f[10])?,
            },
        });
    }
    Ok(out)
}

fn group_by_config(results: &[GridResult]) -> BTreeMap<ConfigKey, Vec<&GridResult>> {
    let mut groups: BTreeMap<ConfigKey, Vec<&GridResult>> = BTreeMap::new();
    for r in results {
        groups.entry(r.config).or_default().push(r);
    }
    groups
}

/// The `n` configurations with the highest maximum F-measure; ties go to the
/// higher median, then to the smaller configuration.
pub fn top_configs(results: &[GridResult], n: usize) -> Result<Vec<ConfigKey>> {
    let mut ranked = Vec::new();
    for (config, rows) in group_by_config(results) {
        let fs: Vec<f64> = rows.iter().map(|r| r.metrics.f_measure).collect();
        ranked.push((summarize(&fs)?, config));
    }
    ranked.sort_by(|(a, ca), (b, cb)| {
        b.max
            .total_cmp(&a.max)
            .then(b.median.total_cmp(&a.median))
            .then(ca.cmp(cb))
    });
    Ok(ranked.into_iter().take(n).map(|(_, c)| c).collect())
}

/// Gaussian kernel density estimate at `points`, Silverman bandwidth.
pub fn kde(values: &[f64], points: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let h = match summarize(values) {
        Ok(s) => {
            let mean = s.mean;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
            let spread = var.sqrt().min((s.q3 - s.q1) / 1.34);
            let spread = if spread > 0.0 { spread } else { var.sqrt() };
            let h = 0.9 * spread * n.powf(-0.2);
            if h > 0.0 {
                h
            } else {
                0.01
            }
        }
        Err(_) => return vec![0.0; points.len()],
    };
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    points
        .iter()
        .map(|&x| norm * values.iter().map(|v| (-0.5 * ((x - v) / h).powi(2)).exp()).sum::<f64>())
        .collect()
}

fn summary_fields(s: &Summary) -> String {
    format!("{},{},{},{},{},{}", s.min, s.q1, s.median, s.mean, s.q3, s.max)
}

fn marginals_csv(results: &[GridResult]) -> Result<String> {
    let mut out = String::from("axis,value,min,q1,median,mean,q3,max,nobs\n");
    let mut rows: Vec<MarginalRow> = Vec::new();
    for axis in Axis::ALL {
        rows.extend(marginal_report(results, axis)?);
    }
    let all: Vec<f64> = results.iter().map(|r| r.metrics.f_measure).collect();
    rows.push(MarginalRow {
        axis: "overall".into(),
        value: "all".into(),
        summary: summarize(&all)?,
        nobs: all.len(),
    });
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.axis, r.value, summary_fields(&r.summary), r.nobs);
    }
    Ok(out)
}

fn top_csv(results: &[GridResult], top: &[ConfigKey]) -> Result<String> {
    let groups = group_by_config(results);
    let mut out = String::from("rank,config,measure,min,q1,median,mean,q3,max,nobs\n");
    for (rank, c) in top.iter().enumerate() {
        let rows = &groups[c];
        let measures: [(&str, fn(&Metrics) -> f64); 2] =
            [("f_measure", |m| m.f_measure), ("accuracy", |m| m.accuracy)];
        for (name, get) in measures {
            let vals: Vec<f64> = rows.iter().map(|r| get(&r.metrics)).collect();
            let _ = writeln!(
                out,
                "{},\"{}\",{name},{},{}",
                rank + 1,
                c.label(),
                summary_fields(&summarize(&vals)?),
                vals.len()
            );
        }
    }
    Ok(out)
}

const PALETTE: [&str; 5] = ["#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e"];

fn boxplot_svg(results: &[GridResult]) -> Result<String> {
    let mut boxes: Vec<(usize, MarginalRow)> = Vec::new();
    for (ai, axis) in Axis::ALL.into_iter().enumerate() {
        for row in marginal_report(results, axis)? {
            boxes.push((ai, row));
        }
    }
    let (left, top, plot_h, slot) = (50.0, 30.0, 260.0, 56.0);
    let width = left + slot * boxes.len() as f64 + 20.0;
    let height = top + plot_h + 60.0;
    let y = |f: f64| top + (1.0 - f.clamp(0.0, 1.0)) * plot_h;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left:.0}" y="18" font-size="13">F-measure by hyperparameter value</text>"#);
    for tick in 0..=5 {
        let f = tick as f64 / 5.0;
        let _ = writeln!(
            s,
            r##"<line x1="{left:.1}" y1="{yy:.1}" x2="{x2:.1}" y2="{yy:.1}" stroke="#dddddd"/><text x="{tx:.1}" y="{ty:.1}" text-anchor="end">{f:.1}</text>"##,
            yy = y(f),
            x2 = width - 20.0,
            tx = left - 6.0,
            ty = y(f) + 4.0
        );
    }
    for (i, (ai, row)) in boxes.iter().enumerate() {
        let cx = left + slot * (i as f64 + 0.5);
        let color = PALETTE[*ai];
        let b = &row.summary;
        let half = slot * 0.3;
        let _ = writeln!(
            s,
            r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="{color}"/>"#,
            y(b.max),
            y(b.min)
        );
        let _ = writeln!(
            s,
            r#"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{color}" fill-opacity="0.35" stroke="{color}"/>"#,
            cx - half,
            y(b.q3),
            2.0 * half,
            (y(b.q1) - y(b.q3)).max(0.5)
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{my:.1}" x2="{:.1}" y2="{my:.1}" stroke="black" stroke-width="2"/>"#,
            cx - half,
            cx + half,
            my = y(b.median)
        );
        let _ = writeln!(
            s,
            r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text><text x="{cx:.1}" y="{:.1}" text-anchor="middle" fill="{color}">{}</text>"#,
            top + plot_h + 16.0,
            row.value,
            top + plot_h + 30.0,
            row.axis
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn density_svg(results: &[GridResult], top: &[ConfigKey]) -> String {
    let groups = group_by_config(results);
    let (left, top_px, plot_w, plot_h) = (50.0, 30.0, 480.0, 260.0);
    let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let curves: Vec<(ConfigKey, Vec<f64>)> = top
        .iter()
        .map(|c| {
            let fs: Vec<f64> = groups[c].iter().map(|r| r.metrics.f_measure).collect();
            (*c, kde(&fs, &grid))
        })
        .collect();
    let peak = curves
        .iter()
        .flat_map(|(_, d)| d.iter().copied())
        .fold(0.0, f64::max)
        .max(1e-12);
    let width = left + plot_w + 20.0;
    let height = top_px + plot_h + 40.0 + 16.0 * curves.len() as f64;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{left:.0}" y="18" font-size="13">F-measure density of the top configurations</text>"#);
    let base = top_px + plot_h;
    let _ = writeln!(
        s,
        r#"<line x1="{left:.1}" y1="{base:.1}" x2="{:.1}" y2="{base:.1}" stroke="black"/>"#,
        left + plot_w
    );
    for tick in 0..=10 {
        let f = tick as f64 / 10.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{f:.1}</text>"#,
            left + f * plot_w,
            base + 14.0
        );
    }
    for (i, (c, d)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = grid
            .iter()
            .zip(d)
            .map(|(x, v)| format!("{:.2},{:.2}", left + x * plot_w, base - v / peak * plot_h))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{left:.0}" y="{:.1}" fill="{color}">TOP-{}: {}</text>"#,
            base + 32.0 + 16.0 * i as f64,
            i + 1,
            c.label()
        );
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results: PathBuf,
    pub marginals: PathBuf,
    pub top: PathBuf,
    pub boxplot: PathBuf,
    pub density: PathBuf,
}

pub fn emit_report(results: &[GridResult], out_dir: &Path) -> Result<ReportFiles> {
    if results.is_empty() {
        return Err(Error::NoResults);
    }
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let top = top_configs(results, 2)?;
    let files = ReportFiles {
        results: out_dir.join(RESULTS_FILE),
        marginals: out_dir.join(MARGINALS_FILE),
        top: out_dir.join(TOP_FILE),
        boxplot: out_dir.join(BOXPLOT_FILE),
        density: out_dir.join(DENSITY_FILE),
    };
    util::write_file(&files.results, results_to_csv(results).as_bytes())?;
    util::write_file(&files.marginals, marginals_csv(results)?.as_bytes())?;
    util::write_file(&files.top, top_csv(results, &top)?.as_bytes())?;
    util::write_file(&files.boxplot, boxplot_svg(results)?.as_bytes())?;
    util::write_file(&files.density, density_svg(results, &top).as_bytes())?;
    Ok(files)
}
