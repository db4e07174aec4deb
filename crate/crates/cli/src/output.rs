//! Reproducibility headers and the `out/<job>/` file layout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Tolerances;

pub const REPORT_FILE: &str = "report.json";
pub const DATA_FILE: &str = "data.csv";
pub const FIELDS_FILE: &str = "fields.csv";

/// Written at the top of every output file.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub command: String,
    pub config_sha256: String,
    pub tolerances: Tolerances,
    pub force_bem: bool,
}

impl Header {
    pub fn new(command: &str, raw_config: &[u8], tolerances: Tolerances, force_bem: bool) -> Self {
        Self {
            tool: "bloch",
            version: env!("CARGO_PKG_VERSION"),
            core_version: bloch_core::VERSION,
            command: command.to_string(),
            config_sha256: sha256_hex(raw_config),
            tolerances,
            force_bem,
        }
    }

    fn comment_lines(&self) -> String {
        format!(
            "# {} {} (bloch-core {})\n# command: {}\n# config_sha256: {}\n# tolerances: exceptional={}\n# force_bem: {}\n",
            self.tool,
            self.version,
            self.core_version,
            self.command,
            self.config_sha256,
            self.tolerances.exceptional,
            self.force_bem
        )
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// A CSV table; rows shorter than the header are padded with empty cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn render(&self, header: &Header) -> String {
        let width = self.columns.len();
        let mut out = header.comment_lines();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut cells = row.clone();
            cells.resize(width.max(cells.len()), String::new());
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

/// Everything one command produces, before it touches the disk.
#[derive(Clone, Debug)]
pub struct JobOutput {
    pub report: serde_json::Value,
    pub data: Option<Table>,
    pub fields: Option<Table>,
    /// Human-readable summary for the terminal.
    pub summary: String,
}

pub fn render_report(header: &Header, report: &serde_json::Value) -> anyhow::Result<String> {
    let doc = serde_json::json!({ "header": header, "result": report });
    let mut s = serde_json::to_string_pretty(&doc)?;
    s.push('\n');
    Ok(s)
}

/// Writes the output into `root/<job>/`, returning that directory.
pub fn persist(
    root: &Path,
    job: &str,
    header: &Header,
    output: &JobOutput,
) -> anyhow::Result<PathBuf> {
    let dir = root.join(job);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let write = |name: &str, body: String| -> anyhow::Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    };
    write(REPORT_FILE, render_report(header, &output.report)?)?;
    if let Some(t) = &output.data {
        write(DATA_FILE, t.render(header))?;
    }
    if let Some(t) = &output.fields {
        write(FIELDS_FILE, t.render(header))?;
    }
    Ok(dir)
}

/// Shortest round-trip form; switches to exponent notation for very small
/// or large magnitudes.
pub fn cell(v: f64) -> String {
    format!("{v:?}")
}
