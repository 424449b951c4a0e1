use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::Context;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use szego::poly::TermSpec;
use szego::ManifoldSpec;

use crate::args::{LevelRange, MeasureChoice};

pub const SCHEMA_VERSION: u32 = 1;

/// Everything that determines a report, after defaults are applied.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub command: String,
    pub manifold_source: String,
    pub manifold: ManifoldSpec,
    pub levels: Option<LevelRange>,
    pub m0: Option<u32>,
    pub extra_levels: Vec<u32>,
    pub point: Option<Vec<Complex64>>,
    pub point2: Option<Vec<Complex64>>,
    pub function: Option<Vec<TermSpec>>,
    pub seed: u64,
    pub samples: Option<usize>,
    pub points: Option<usize>,
    pub pairs: Option<usize>,
    pub tolerance: Option<f64>,
    pub measure: MeasureChoice,
    pub out: Option<String>,
}

impl CampaignConfig {
    /// SHA-256 of the compact JSON with object keys sorted.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_value(self).expect("config serializes");
        let bytes = serde_json::to_vec(&canonical).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Contract {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Contract {
    pub fn new(name: &str, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            pass,
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub config: CampaignConfig,
    pub config_hash: String,
    pub manifold_hash: String,
    pub pass: bool,
    pub contracts: Vec<Contract>,
    pub warnings: Vec<String>,
    pub result: Value,
}

/// A CSV table with a fixed header.
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{}", r.join(","));
        }
        s
    }
}

/// Output of one subcommand.
pub struct Outcome {
    pub table: Table,
    pub contracts: Vec<Contract>,
    pub warnings: Vec<String>,
    pub result: Value,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.contracts.iter().all(|c| c.pass)
    }

    pub fn into_report(self, config: CampaignConfig, manifold_hash: String) -> (Report, Table) {
        let report = Report {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: config.command.clone(),
            config_hash: config.hash(),
            manifold_hash,
            pass: self.pass(),
            contracts: self.contracts,
            warnings: self.warnings,
            result: self.result,
            config,
        };
        (report, self.table)
    }
}

/// Writes `<command>.csv` and `<command>.json` under `dir`.
pub fn write_outputs(dir: &Path, report: &Report, table: &Table) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let cmd = &report.command;
    fs::write(dir.join(format!("{cmd}.csv")), table.render())?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    fs::write(dir.join(format!("{cmd}.json")), json)?;
    Ok(())
}

pub fn fmt(x: f64) -> String {
    format!("{x:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_renders_header_and_rows() {
        let mut t = Table::new(&["m", "dimension"]);
        t.push(vec!["0".into(), "1".into()]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.render(), "m,dimension\n0,1\n1,2\n");
    }
}
