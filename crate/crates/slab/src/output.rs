//! Artifact files: header block with the resolved config, 17-digit CSV, atomic writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::CliError;

/// Float with 17 significant digits, round-trip exact and locale independent.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Float(x) => fmt_float(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Text(if x { "true".into() } else { "false".into() })
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.into())
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Writes the artifacts of one subcommand under the configured output directory.
pub struct ArtifactWriter<'a> {
    pub dir: PathBuf,
    pub subcommand: &'a str,
    pub config: &'a RunConfig,
    hash: String,
    pub written: Vec<PathBuf>,
}

impl<'a> ArtifactWriter<'a> {
    pub fn new(config: &'a RunConfig, subcommand: &'a str) -> Result<Self, CliError> {
        let dir = PathBuf::from(&config.output.dir);
        fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(ArtifactWriter {
            dir,
            subcommand,
            config,
            hash: config.hash(),
            written: Vec::new(),
        })
    }

    fn header(&self) -> Value {
        json!({
            "tool": "slab",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": self.subcommand,
            "config_hash": self.hash,
            "config": self.config.canonical_json(),
        })
    }

    pub fn json(&mut self, name: &str, data: Value) -> Result<(), CliError> {
        if !self.config.output.json {
            return Ok(());
        }
        let doc = json!({ "header": self.header(), "data": data });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Io(e.to_string()))?;
        text.push('\n');
        self.write(&format!("{name}.json"), text.as_bytes())
    }

    pub fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        if !self.config.output.csv {
            return Ok(());
        }
        let mut text = String::new();
        text.push_str(&format!("# slab {} {}\n", self.subcommand, env!("CARGO_PKG_VERSION")));
        text.push_str(&format!("# config_hash: {}\n", self.hash));
        text.push_str(&format!(
            "# config: {}\n",
            serde_json::to_string(&self.config.canonical_json()).map_err(|e| CliError::Io(e.to_string()))?
        ));
        text.push_str(&table.columns.join(","));
        text.push('\n');
        for row in &table.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        self.write(&format!("{name}.csv"), text.as_bytes())
    }

    fn write(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(file);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }
}

/// Writes to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.{}.tmp", std::process::id()));
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    {
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(bytes).map_err(io)?;
        f.sync_all().map_err(io)?;
    }
    fs::rename(&tmp, path).map_err(io)
}
