//! Result files: comma-separated tables with a header line, and a JSON
//! run manifest. Floats use Rust's shortest round-trip formatting, so equal
//! inputs give byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::lattice::Topology;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Column label of a vertex: `x3` on a line, `x3_y7` on a torus.
pub fn vertex_label(topology: &Topology, vertex: usize) -> String {
    match topology {
        Topology::Line { .. } => format!("x{vertex}"),
        Topology::Torus { .. } => {
            let (x, y) = topology.coords(vertex);
            format!("x{x}_y{y}")
        }
    }
}

pub struct Table {
    text: String,
    columns: usize,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let text = header
            .iter()
            .map(|s| s.as_ref())
            .collect::<Vec<_>>()
            .join(",")
            + "\n";
        Table {
            text,
            columns: header.len(),
        }
    }

    pub fn row<I, D>(&mut self, cells: I)
    where
        I: IntoIterator<Item = D>,
        D: std::fmt::Display,
    {
        let mut n = 0;
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            write!(self.text, "{c}").expect("writing to a String");
            n += 1;
        }
        debug_assert_eq!(n, self.columns, "row width differs from header");
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn write(&self, dir: &Path, file: &str) -> Result<PathBuf> {
        let path = dir.join(file);
        fs::write(&path, &self.text)?;
        Ok(path)
    }
}

/// Per-step intensity table: `step,total,<one column per label>`.
pub fn series_table(labels: &[String], rows: &[Vec<f64>]) -> Table {
    let mut header = vec!["step".to_string(), "total".to_string()];
    header.extend(labels.iter().cloned());
    let mut table = Table::new(&header);
    for (t, row) in rows.iter().enumerate() {
        let total: f64 = row.iter().sum();
        let cells = [(t + 1).to_string(), total.to_string()]
            .into_iter()
            .chain(row.iter().map(|x| x.to_string()));
        table.row(cells);
    }
    table
}

#[derive(Debug, Clone, Serialize)]
pub struct Resolved {
    pub name: String,
    pub topology: Topology,
    pub mode_count: usize,
    pub flip_flop: bool,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub central: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<[usize; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_known: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub frequencies: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deltas: Option<Vec<f64>>,
    pub couplings_abs2: Vec<f64>,
    pub reconstruction_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: &'a ExperimentConfig,
    pub resolved: Resolved,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
    pub files: Vec<String>,
}

impl Manifest<'_> {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serialises");
        text.push('\n');
        fs::write(&path, text)?;
        Ok(path)
    }
}
