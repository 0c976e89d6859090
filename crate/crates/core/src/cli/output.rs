//! Artifact writers: per-command CSV tables, long-format plot data and the
//! JSON run report.
//!
//! CSV files carry no wall time so that identical configurations give
//! byte-identical files; the JSON report does.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::engine::Estimate;
use crate::error::Result;

pub const TOOL: &str = "mlrate";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// What every artifact embeds about the run that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct RunMeta {
    pub command: String,
    /// Full configuration minus the output directory and worker count,
    /// neither of which affects results.
    pub config: serde_json::Value,
    /// Arguments that reproduce the run.
    pub argv: Vec<String>,
}

impl RunMeta {
    fn preamble(&self) -> String {
        let config = serde_json::json!({
            "command": self.command,
            "config": self.config,
            "argv": self.argv,
        });
        format!("# {TOOL} {VERSION}\n# config: {config}\n")
    }
}

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Num(x) => fmt_num(*x),
        Cell::Int(i) => i.to_string(),
        Cell::Bool(b) => b.to_string(),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn to_csv(&self, meta: &RunMeta) -> String {
        let mut s = meta.preamble();
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(render).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }
}

/// One labelled curve for plotting.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, Estimate)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, Estimate)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

/// Long-format table `series,x,value,std_error`.
pub fn plot_table(series: &[Series]) -> Table {
    let mut t = Table::new(&["series", "x", "value", "std_error"]);
    for s in series {
        for (x, e) in &s.points {
            t.push(vec![s.label.clone().into(), (*x).into(), e.value.into(), e.std_error.into()]);
        }
    }
    t
}

/// Destination directory plus the metadata stamped on every file.
#[derive(Debug, Clone)]
pub struct Artifacts {
    pub dir: PathBuf,
    pub meta: RunMeta,
    pub written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: impl AsRef<Path>, meta: RunMeta) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Artifacts {
            dir: dir.as_ref().to_path_buf(),
            meta,
            written: Vec::new(),
        })
    }

    fn put(&mut self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, text)?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// `<command>.csv`.
    pub fn csv(&mut self, table: &Table) -> Result<PathBuf> {
        let name = format!("{}.csv", self.meta.command);
        self.put(&name, &table.to_csv(&self.meta))
    }

    /// `<command>_plot.csv`.
    pub fn plotdata(&mut self, series: &[Series]) -> Result<PathBuf> {
        let name = format!("{}_plot.csv", self.meta.command);
        self.put(&name, &plot_table(series).to_csv(&self.meta))
    }

    /// `<command>_report.json`.
    pub fn report<T: Serialize>(&mut self, wall_time: f64, result: &T) -> Result<PathBuf> {
        let doc = serde_json::json!({
            "tool": TOOL,
            "version": VERSION,
            "command": self.meta.command,
            "config": self.meta.config,
            "argv": self.meta.argv,
            "wall_time_seconds": wall_time,
            "result": result,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        let _ = writeln!(text);
        let name = format!("{}_report.json", self.meta.command);
        self.put(&name, &text)
    }
}
