//! CSV and JSON artifacts, written atomically once a run has finished.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;

/// A CSV table: comma separated, LF line endings, one header row.
pub struct Table {
    text: String,
    columns: usize,
}

pub enum Cell {
    Float(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
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

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: header.join(",") + "\n",
            columns: header.len(),
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        assert_eq!(cells.len(), self.columns, "row width does not match the header");
        let fields: Vec<String> = cells
            .into_iter()
            .map(|c| match c {
                // 17 significant digits round-trip every double
                Cell::Float(v) => format!("{v:.16e}"),
                Cell::Int(v) => v.to_string(),
                Cell::Text(s) => s,
                Cell::Empty => String::new(),
            })
            .collect();
        writeln!(self.text, "{}", fields.join(",")).unwrap();
    }
}

/// Files produced by one subcommand, held until the run succeeds or fails.
pub struct Artifacts {
    dir: PathBuf,
    stem: String,
    files: Vec<(String, String)>,
}

impl Artifacts {
    pub fn new(dir: &Path, stem: &str, subcommand: &str) -> Self {
        Self {
            dir: dir.to_path_buf(),
            stem: format!("{stem}.{subcommand}"),
            files: Vec::new(),
        }
    }

    pub fn csv(&mut self, suffix: &str, table: Table) {
        self.files.push((format!("{}{suffix}.csv", self.stem), table.text));
    }

    pub fn json<T: Serialize>(&mut self, suffix: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.files.push((format!("{}{suffix}.json", self.stem), text));
        Ok(())
    }

    /// Each file goes to a temporary name in the target directory and is
    /// renamed into place.
    pub fn write(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let mut written = Vec::new();
        for (name, text) in self.files {
            let path = self.dir.join(&name);
            let tmp = self.dir.join(format!(".{name}.tmp"));
            fs::write(&tmp, text).with_context(|| format!("writing {}", tmp.display()))?;
            fs::rename(&tmp, &path).with_context(|| format!("renaming into {}", path.display()))?;
            written.push(path);
        }
        Ok(written)
    }
}
