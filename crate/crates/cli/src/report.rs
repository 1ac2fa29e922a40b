use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use blockassoc::{SeedLineage, Status};
use serde::Serialize;
use serde_json::Value;

use crate::args::Format;

/// Everything a subcommand produces. Only `metadata` varies between
/// identical runs.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: &'static str,
    pub status: Status,
    pub config: Value,
    pub lineage: Option<SeedLineage>,
    pub result: Value,
    pub metadata: Metadata,
    #[serde(skip)]
    pub table: Table,
}

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub generated_at: String,
}

impl Report {
    pub fn new(subcommand: &'static str, status: Status, config: Value, result: Value, table: Table) -> Self {
        Self {
            tool: "blockassoc",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            status,
            config,
            lineage: None,
            result,
            metadata: Metadata {
                generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            },
            table,
        }
    }

    pub fn with_lineage(mut self, lineage: SeedLineage) -> Self {
        self.lineage = Some(lineage);
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }

    /// Writes to stdout and, if requested, the JSON report to `output`.
    pub fn emit(&self, format: Format, output: Option<&Path>) -> Result<()> {
        let json = self.to_json();
        let mut text = String::new();
        if format != Format::Json {
            text.push_str(&self.table.render(self.subcommand, self.status));
        }
        if format == Format::Both {
            text.push('\n');
        }
        if format != Format::Table {
            text.push_str(&json);
        }
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        stdout.flush()?;
        if let Some(path) = output {
            std::fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?;
        }
        Ok(())
    }
}

/// Two-column key/value table.
#[derive(Debug, Default)]
pub struct Table {
    rows: Vec<(String, String)>,
}

impl Table {
    pub fn row(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.rows.push((key.into(), value.to_string()));
        self
    }

    pub fn render(&self, title: &str, status: Status) -> String {
        let width = self.rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0).max(6);
        let mut s = String::new();
        let _ = writeln!(s, "{title}");
        let _ = writeln!(s, "{:<width$}  {status}", "status");
        for (k, v) in &self.rows {
            let _ = writeln!(s, "{k:<width$}  {v}");
        }
        s
    }
}

/// Compact numeric formatting for tables.
pub fn num(x: f64) -> String {
    format!("{x:.6}")
}

pub fn matrix(m: &[Vec<f64>]) -> String {
    let rows: Vec<String> = m
        .iter()
        .map(|r| format!("[{}]", r.iter().map(|v| num(*v)).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}
