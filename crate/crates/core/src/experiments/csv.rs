//! CSV output: `#`-prefixed `key: value` metadata, a header row, data rows
//! with reals in 17-significant-digit scientific notation, and trailing
//! `#` lines for derived quantities such as fitted slopes.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Real)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Lossless text form of a double.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Real(v) => format_real(*v),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Empty => String::new(),
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub trailer: Vec<(String, String)>,
}

impl CsvTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.metadata.push((key.into(), value.into()));
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn footer(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.trailer.push((key.into(), value.into()));
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            let _ = writeln!(out, "# {k}: {v}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(render).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        for (k, v) in &self.trailer {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.render().as_bytes())?;
        Ok(())
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = format_real(v);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), v.to_bits(), "{s}");
        }
        assert_eq!(format_real(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn layout() {
        let mut t = CsvTable::new(&["h", "method", "estimate"]);
        t.meta("experiment", "accuracy-sweep");
        t.push_row(vec![0.1.into(), "mu".into(), Cell::Empty]);
        t.footer("slope[mu,torsional]", "2");
        assert_eq!(
            t.render(),
            "# experiment: accuracy-sweep\nh,method,estimate\n1.0000000000000001e-1,mu,\n# slope[mu,torsional]: 2\n"
        );
        assert_eq!(t.column("estimate"), Some(2));
    }
}
