use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::{DtnError, Result};

/// How a recorded value is compared against its tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
    /// The value only has to be a finite number; no tolerance applies.
    #[serde(rename = "finite")]
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub value: f64,
    pub tolerance: Option<f64>,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckRecord {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self::judged(name, value, Some(tolerance), Relation::AtMost)
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self::judged(name, value, Some(tolerance), Relation::AtLeast)
    }

    pub fn finite(name: &str, value: f64) -> Self {
        Self::judged(name, value, None, Relation::Finite)
    }

    fn judged(name: &str, value: f64, tolerance: Option<f64>, relation: Relation) -> Self {
        let pass = match (relation, tolerance) {
            (Relation::AtMost, Some(t)) => value <= t,
            (Relation::AtLeast, Some(t)) => value >= t,
            (Relation::Finite, _) => value.is_finite(),
            _ => false,
        };
        Self {
            name: name.to_string(),
            value,
            tolerance,
            relation,
            pass,
            error: None,
        }
    }

    /// A check whose computation itself failed.
    pub fn failed(name: &str, err: &DtnError) -> Self {
        Self {
            name: name.to_string(),
            value: f64::NAN,
            tolerance: None,
            relation: Relation::Finite,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

/// Summary of one run, written as JSON.
#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub version: String,
    pub config: Value,
    pub records: Vec<CheckRecord>,
    pub wall_time_s: f64,
    pub pass: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// A CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Formats a number for CSV output independent of locale.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| DtnError::Io(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| DtnError::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| DtnError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
    }
}

/// A line plot with one or more series.
#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_y: bool,
    pub series: Vec<(String, Vec<(f64, f64)>)>,
}

const COLOURS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

impl Plot {
    pub fn to_svg(&self) -> String {
        let (w, h, m) = (640.0, 400.0, 60.0);
        let ty = |v: f64| if self.log_y { v.max(f64::MIN_POSITIVE).log10() } else { v };
        let pts: Vec<(f64, f64)> = self
            .series
            .iter()
            .flat_map(|(_, s)| s.iter().map(|&(x, y)| (x, ty(y))))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .collect();
        let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
        );
        if pts.is_empty() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 == x0 {
            x1 = x0 + 1.0;
        }
        if y1 == y0 {
            y1 = y0 + 1.0;
        }
        let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
        let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, w / 2.0, escape(&self.title));
        let _ = writeln!(s, r#"<line x1="{m}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#, h - m, w - m, h - m);
        let _ = writeln!(s, r#"<line x1="{m}" y1="{m}" x2="{m}" y2="{}" stroke="black"/>"#, h - m);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, w / 2.0, h - 15.0, escape(&self.x_label));
        let y_label = if self.log_y { format!("log10 {}", self.y_label) } else { self.y_label.clone() };
        let _ = writeln!(s, r#"<text x="15" y="{}" transform="rotate(-90 15 {})" text-anchor="middle">{}</text>"#, h / 2.0, h / 2.0, escape(&y_label));
        for (v, anchor, x, y) in [
            (x0, "start", sx(x0), h - m + 16.0),
            (x1, "end", sx(x1), h - m + 16.0),
        ] {
            let _ = writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}">{}</text>"#, tick(v));
        }
        for v in [y0, y1] {
            let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#, m - 4.0, sy(v) + 4.0, tick(v));
        }
        for (i, (label, series)) in self.series.iter().enumerate() {
            let colour = COLOURS[i % COLOURS.len()];
            let path: Vec<String> = series
                .iter()
                .map(|&(x, y)| (x, ty(y)))
                .filter(|p| p.0.is_finite() && p.1.is_finite())
                .map(|(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
                .collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{colour}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
            let ly = m + 16.0 * i as f64;
            let _ = writeln!(s, r#"<text x="{}" y="{ly}" fill="{colour}" text-anchor="end">{}</text>"#, w - m, escape(label));
        }
        s.push_str("</svg>\n");
        s
    }
}

fn tick(v: f64) -> String {
    if v != 0.0 && (v.abs() < 1e-2 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Everything an experiment produces before it is written to disk.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
}

impl RunOutput {
    /// Writes `<experiment>_<table>.csv`, `<experiment>_summary.json` and,
    /// when requested, `<experiment>_<plot>.svg` into `dir`. Returns the
    /// paths written.
    pub fn write(&self, dir: &Path, plots: bool) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).map_err(|e| DtnError::Io(format!("cannot create {}: {e}", dir.display())))?;
        let prefix = &self.report.experiment;
        let mut written = Vec::new();
        let mut put = |name: String, body: String| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, body).map_err(|e| DtnError::Io(format!("cannot write {}: {e}", path.display())))?;
            written.push(path);
            Ok(())
        };
        for t in &self.tables {
            put(format!("{prefix}_{}.csv", t.name), t.to_csv()?)?;
        }
        let json = serde_json::to_string_pretty(&self.report).map_err(|e| DtnError::Io(e.to_string()))?;
        put(format!("{prefix}_summary.json"), json + "\n")?;
        if plots {
            for p in &self.plots {
                put(format!("{prefix}_{}.svg", p.name), p.to_svg())?;
            }
        }
        Ok(written)
    }
}
