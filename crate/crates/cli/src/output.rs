//! Result files: CSV tables with a metadata header, the run summary and
//! the resolved configuration.

use std::fmt::{Display, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use fxstats::{Error, Result};
use serde::Serialize;

pub const TOOL: &str = "fxstats";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A CSV table whose leading `# key=value` lines name the tool, the
/// analysis and its resolved parameters.
pub struct Table {
    name: String,
    head: String,
    columns: Vec<String>,
    body: String,
}

impl Table {
    pub fn new(name: impl Into<String>, analysis: &str, params: &impl Serialize, columns: &[&str]) -> Self {
        let params = serde_json::to_string(params).unwrap_or_else(|_| "null".into());
        Self {
            name: name.into(),
            head: format!("# tool={TOOL} {VERSION}\n# analysis={analysis}\n# params={params}\n"),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            body: String::new(),
        }
    }

    pub fn meta(mut self, key: &str, value: impl Display) -> Self {
        let _ = writeln!(self.head, "# {key}={value}");
        self
    }

    pub fn row(&mut self, cells: &[&dyn Display]) {
        debug_assert_eq!(cells.len(), self.columns.len());
        for (i, c) in cells.iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            let _ = write!(self.body, "{c}");
        }
        self.body.push('\n');
    }

    pub fn render(&self) -> String {
        format!("{}{}\n{}", self.head, self.columns.join(","), self.body)
    }
}

/// Collects the files of one run and writes them into the output directory.
pub struct Writer {
    dir: PathBuf,
    pub written: Vec<String>,
}

impl Writer {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.display().to_string(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, text).map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn table(&mut self, t: Table) -> Result<()> {
        self.text(&t.name, &t.render())
    }
}

/// `log10(|v|)`, NaN for zero.
pub fn log10_abs(v: f64) -> f64 {
    if v == 0.0 {
        f64::NAN
    } else {
        v.abs().log10()
    }
}

/// File-name friendly form of a series label.
pub fn slug(label: &str) -> String {
    let s: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    if s.is_empty() {
        "series".into()
    } else {
        s
    }
}
