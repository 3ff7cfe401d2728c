//! Results file, landscape matrices, and max/mean summary tables.
//!
//! The results file is comma-separated with the header
//! `mu_y,mu_x,density,percentile,precision,recall,fscore,runs,nodes_scored,anomalous`.
//! Landscapes are tab-separated density-by-percentile F-score matrices, one
//! per (network, property) pair.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::MetricsRow;

const COLUMNS: [&str; 10] = [
    "mu_y",
    "mu_x",
    "density",
    "percentile",
    "precision",
    "recall",
    "fscore",
    "runs",
    "nodes_scored",
    "anomalous",
];

pub fn write_results<W: Write>(rows: &[MetricsRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let to_io = |e: csv::Error| Error::io("results", std::io::Error::other(e));
    out.write_record(COLUMNS).map_err(to_io)?;
    for r in rows {
        out.write_record([
            r.mu_y.clone(),
            r.mu_x.clone(),
            format!("{:?}", r.density),
            format!("{:?}", r.percentile),
            format!("{:?}", r.precision),
            format!("{:?}", r.recall),
            format!("{:?}", r.f_score),
            r.runs_averaged.to_string(),
            r.nodes_scored.to_string(),
            r.anomalous.to_string(),
        ])
        .map_err(to_io)?;
    }
    out.flush().map_err(|e| Error::io("results", e))
}

/// Reads a results file. A file without rows is an error.
pub fn read_results<R: Read>(r: R, origin: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
    let header = reader
        .headers()
        .map_err(|e| Error::corrupt(origin, e.to_string()))?
        .clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::corrupt(origin, "line 1: unexpected header"));
    }
    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::corrupt(origin, format!("line {line}: {e}")))?;
        let bad = |col: &str| Error::corrupt(origin, format!("line {line}: bad {col}"));
        let float = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(COLUMNS[i]));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(COLUMNS[i]));
        rows.push(MetricsRow {
            mu_y: rec[0].to_string(),
            mu_x: rec[1].to_string(),
            density: float(2)?,
            percentile: float(3)?,
            precision: float(4)?,
            recall: float(5)?,
            f_score: float(6)?,
            runs_averaged: int(7)?,
            nodes_scored: int(8)?,
            anomalous: rec[9].parse().map_err(|_| bad(COLUMNS[9]))?,
            f_score_run_max: None,
        });
    }
    if rows.is_empty() {
        return Err(Error::corrupt(origin, "no result rows"));
    }
    Ok(rows)
}

fn ordered_unique<'a>(it: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in it {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

fn ordered_unique_f64(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for x in it {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

/// (network, property) pairs in order of first appearance.
pub fn pairs(rows: &[MetricsRow]) -> Vec<(&str, &str)> {
    let mut out: Vec<(&str, &str)> = Vec::new();
    for r in rows {
        let key = (r.mu_y.as_str(), r.mu_x.as_str());
        if !out.contains(&key) {
            out.push(key);
        }
    }
    out
}

/// Density-by-percentile F-score matrix for one pair.
pub fn render_landscape(rows: &[MetricsRow], mu_y: &str, mu_x: &str) -> String {
    let cell: Vec<&MetricsRow> = rows.iter().filter(|r| r.mu_y == mu_y && r.mu_x == mu_x).collect();
    let densities = ordered_unique_f64(cell.iter().map(|r| r.density));
    let percentiles = ordered_unique_f64(cell.iter().map(|r| r.percentile));
    let mut out = String::from("density\\percentile");
    for rho in &percentiles {
        let _ = write!(out, "\t{rho:?}");
    }
    out.push('\n');
    for d in &densities {
        let _ = write!(out, "{d:?}");
        for rho in &percentiles {
            match cell.iter().find(|r| r.density == *d && r.percentile == *rho) {
                Some(r) => {
                    let _ = write!(out, "\t{:.6}", r.f_score);
                }
                None => out.push_str("\tNA"),
            }
        }
        out.push('\n');
    }
    out
}

/// Writes `landscape_<mu_y>_<mu_x>.tsv` for every pair into `dir`.
pub fn write_landscapes(rows: &[MetricsRow], dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (y, x) in pairs(rows) {
        let path = dir.join(format!("landscape_{y}_{x}.tsv"));
        fs::write(&path, render_landscape(rows, y, x)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSummary {
    pub mu_y: String,
    pub mu_x: String,
    /// Max F over the density/percentile grid.
    pub max_f: f64,
    /// Mean F over the density/percentile grid.
    pub mean_f: f64,
    pub anomalous: bool,
    pub cells: usize,
}

pub fn summarize(rows: &[MetricsRow]) -> Vec<PairSummary> {
    pairs(rows)
        .into_iter()
        .map(|(y, x)| {
            let cell: Vec<&MetricsRow> = rows.iter().filter(|r| r.mu_y == y && r.mu_x == x).collect();
            PairSummary {
                mu_y: y.to_string(),
                mu_x: x.to_string(),
                max_f: cell.iter().map(|r| r.f_score).fold(0.0, f64::max),
                mean_f: cell.iter().map(|r| r.f_score).sum::<f64>() / cell.len() as f64,
                anomalous: cell.iter().any(|r| r.anomalous),
                cells: cell.len(),
            }
        })
        .collect()
}

/// Max-F and mean-F tables, networks down, properties across. Anomalous
/// pairs are marked with `*`.
pub fn render_tables(summaries: &[PairSummary]) -> String {
    let nets = ordered_unique(summaries.iter().map(|s| s.mu_y.as_str()));
    let props = ordered_unique(summaries.iter().map(|s| s.mu_x.as_str()));
    let width = nets.iter().map(|n| n.len()).max().unwrap_or(0).max(7);
    let mut out = String::new();
    for (title, pick) in [
        ("Max F-scores", (|s: &PairSummary| s.max_f) as fn(&PairSummary) -> f64),
        ("Mean F-scores", |s: &PairSummary| s.mean_f),
    ] {
        let _ = writeln!(out, "{title}");
        let _ = write!(out, "{:width$}", "network");
        for p in &props {
            let _ = write!(out, " {p:>9}");
        }
        out.push('\n');
        for n in &nets {
            let _ = write!(out, "{n:width$}");
            for p in &props {
                match summaries.iter().find(|s| s.mu_y == *n && s.mu_x == *p) {
                    Some(s) => {
                        let mark = if s.anomalous { "*" } else { " " };
                        let _ = write!(out, " {:>8.4}{mark}", pick(s));
                    }
                    None => {
                        let _ = write!(out, " {:>9}", "-");
                    }
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(y: &str, x: &str, d: f64, rho: f64, f: f64) -> MetricsRow {
        MetricsRow {
            mu_y: y.into(),
            mu_x: x.into(),
            density: d,
            percentile: rho,
            precision: f,
            recall: f,
            f_score: f,
            runs_averaged: 1,
            nodes_scored: 3,
            anomalous: y == format!("co{x}"),
            f_score_run_max: None,
        }
    }

    #[test]
    fn results_round_trip() {
        let rows = vec![row("cokey", "jour", 0.01, 0.0, 0.1), row("cokey", "key", 0.21, 1.0, 2.0 / 3.0)];
        let mut buf = Vec::new();
        write_results(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("mu_y,mu_x,density,percentile,precision,recall,fscore,runs,nodes_scored,anomalous\n"));
        let back = read_results(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn empty_results_rejected() {
        assert!(read_results("".as_bytes(), Path::new("mem")).is_err());
        let header_only = COLUMNS.join(",") + "\n";
        assert!(read_results(header_only.as_bytes(), Path::new("mem")).is_err());
        let bad = COLUMNS.join(",") + "\ncokey,jour,x,0,0,0,0,1,1,false\n";
        let err = read_results(bad.as_bytes(), Path::new("mem")).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn summaries_and_tables() {
        let rows = vec![
            row("cite", "key", 0.01, 0.0, 0.2),
            row("cite", "key", 0.01, 1.0, 0.4),
            row("coauth", "key", 0.01, 0.0, 0.1),
            row("coauth", "key", 0.01, 1.0, 0.3),
        ];
        let s = summarize(&rows);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].max_f, 0.4);
        assert!((s[0].mean_f - 0.3).abs() < 1e-15);
        let t = render_tables(&s);
        assert!(t.contains("Max F-scores") && t.contains("Mean F-scores"));
        assert_eq!(t.lines().filter(|l| l.starts_with("cite")).count(), 2);
        assert_eq!(t.lines().filter(|l| l.starts_with("coauth")).count(), 2);
    }

    #[test]
    fn landscape_matrix() {
        let rows = vec![
            row("cokey", "jour", 0.01, 0.0, 0.25),
            row("cokey", "jour", 0.01, 1.0, 0.5),
            row("cokey", "jour", 0.21, 0.0, 0.75),
        ];
        let m = render_landscape(&rows, "cokey", "jour");
        let lines: Vec<&str> = m.lines().collect();
        assert_eq!(lines[0], "density\\percentile\t0.0\t1.0");
        assert_eq!(lines[1], "0.01\t0.250000\t0.500000");
        assert_eq!(lines[2], "0.21\t0.750000\tNA");
    }
}
