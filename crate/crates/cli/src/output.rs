//! CSV tables and plot series.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use slds_core::attractor::{AbsorptionReport, ContractionReport, PullbackReport};
use slds_core::lattice::LatticeVector;
use slds_core::trajectory::Trajectory;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A table assembled in memory and written by a single call.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (j, cell) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Float(v) => out.push_str(&format_float(*v)),
                    Cell::Int(v) => write!(out, "{v}").expect("writing to a String"),
                    Cell::Bool(v) => out.push_str(if *v { "true" } else { "false" }),
                    Cell::Text(v) => out.push_str(v),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_csv_string())
    }
}

/// Long-format table `t, i, <value>` of a trajectory.
pub fn trajectory_table(traj: &Trajectory, value_name: &str) -> CsvTable {
    let mut table = CsvTable::new(&["t", "i", value_name]);
    for (t, state) in traj.times().zip(&traj.states) {
        for (i, v) in state.sites() {
            table.push(vec![t.into(), i.into(), v.into()]);
        }
    }
    table
}

/// Table `i, value` of a single lattice vector.
pub fn vector_table(v: &LatticeVector) -> CsvTable {
    let mut table = CsvTable::new(&["i", "value"]);
    for (i, x) in v.sites() {
        table.push(vec![i.into(), x.into()]);
    }
    table
}

/// `(x, y)` series of a report, ready for any plotting tool.
pub trait PlotSeries {
    fn series(&self) -> CsvTable;
}

impl PlotSeries for ContractionReport {
    fn series(&self) -> CsvTable {
        let mut table = CsvTable::new(&["t", "log_distance"]);
        for (t, ld) in self.times.iter().zip(self.log_distances()) {
            table.push(vec![(*t).into(), ld.into()]);
        }
        table
    }
}

impl PlotSeries for PullbackReport {
    fn series(&self) -> CsvTable {
        let mut table = CsvTable::new(&["horizon", "diameter"]);
        for row in &self.rows {
            table.push(vec![row.horizon.into(), row.diameter.into()]);
        }
        table
    }
}

impl PlotSeries for AbsorptionReport {
    fn series(&self) -> CsvTable {
        let mut table = CsvTable::new(&["horizon", "max_norm"]);
        for row in &self.rows {
            table.push(vec![row.horizon.into(), row.max_norm.into()]);
        }
        table
    }
}

/// `ϱ` as a function of the quadrature window.
pub struct RadiusSweep(pub Vec<(f64, f64)>);

impl PlotSeries for RadiusSweep {
    fn series(&self) -> CsvTable {
        let mut table = CsvTable::new(&["t_past", "rho"]);
        for (t, rho) in &self.0 {
            table.push(vec![(*t).into(), (*rho).into()]);
        }
        table
    }
}

/// Writes the series of `report` to `path`.
pub fn emit_plot_series(report: &impl PlotSeries, path: &Path) -> io::Result<()> {
    report.series().write(path)
}
