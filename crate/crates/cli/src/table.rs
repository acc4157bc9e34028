//! Versioned CSV tables.
//!
//! Every file starts with a comment line `# irsa-bac schema=<name>/v<n>`,
//! followed by a header row and data rows.

use std::fmt::Display;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

const MARKER: &str = "# irsa-bac schema=";

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub schema: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: &str, header: &[&str]) -> Self {
        Self { schema: schema.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses column `name` of every row.
    pub fn values<T: std::str::FromStr>(&self, name: &str) -> Option<Vec<T>> {
        let c = self.column(name)?;
        self.rows.iter().map(|r| r[c].parse().ok()).collect()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{MARKER}{}", self.schema)?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.flush()
    }

    pub fn write_path(&self, path: &Path) -> io::Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let (first, rest) = text.split_once('\n').unwrap_or((text, ""));
        let schema = first
            .trim_end_matches('\r')
            .strip_prefix(MARKER)
            .ok_or_else(|| "missing schema comment line".to_string())?
            .to_string();
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
        let header = r.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect::<Vec<_>>();
        if header.is_empty() || header.iter().all(String::is_empty) {
            return Err("missing header row".into());
        }
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            if rec.len() != header.len() {
                return Err(format!("row has {} fields, header has {}", rec.len(), header.len()));
            }
            rows.push(rec.iter().map(str::to_string).collect());
        }
        Ok(Self { schema, header, rows })
    }

    pub fn read_path(path: &Path) -> Result<Self, String> {
        let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }
}

/// Formats a row of heterogeneous cells.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::table::cell(&$x)),*] };
}

pub fn cell<T: Display + ?Sized>(x: &T) -> String {
    x.to_string()
}
