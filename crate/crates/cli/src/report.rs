//! Machine-readable run reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub group: String,
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub detail: String,
    /// Residual polynomial text or measured value on failure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<String>,
}

impl Check {
    pub fn new(group: &str, name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Check {
            group: group.to_string(),
            name: name.into(),
            passed,
            detail: detail.into(),
            residual: None,
        }
    }

    pub fn with_residual(mut self, r: impl Into<String>) -> Self {
        self.residual = Some(r.into());
        self
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub command: String,
    /// `sha256:<hex>` of the canonical inputs.
    pub inputs_digest: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub drifts: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, serde_json::Value>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    #[serde(skip)]
    started: Option<Instant>,
    /// Where `report.json` goes when the command fixes it itself.
    #[serde(skip)]
    pub out_dir: Option<PathBuf>,
    /// Plain output lines printed before the check summary.
    #[serde(skip)]
    pub text: Vec<String>,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

impl Report {
    pub fn new(command: &str, inputs: &[u8]) -> Self {
        Report {
            schema: SCHEMA,
            command: command.to_string(),
            inputs_digest: digest(inputs),
            passed: true,
            checks: vec![],
            drifts: BTreeMap::new(),
            values: BTreeMap::new(),
            warnings: vec![],
            wall_time_s: 0.0,
            started: Some(Instant::now()),
            out_dir: None,
            text: vec![],
        }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn value(&mut self, key: &str, v: impl Serialize) {
        let v = serde_json::to_value(v).expect("report values serialize");
        self.values.insert(key.to_string(), v);
    }

    pub fn finish(&mut self) {
        self.passed = self.checks.iter().all(|c| c.passed);
        if let Some(t) = self.started.take() {
            self.wall_time_s = t.elapsed().as_secs_f64();
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join("report.json");
        fs::write(&path, self.to_json() + "\n").with_context(|| format!("writing {}", path.display()))
    }

    /// Human-readable summary. Passing checks of a group listed in
    /// `collapse` are folded into one count line.
    pub fn print_text(&self, collapse: &[&str]) {
        let mut folded: BTreeMap<&str, usize> = BTreeMap::new();
        for c in &self.checks {
            if c.passed && collapse.iter().any(|g| c.group.ends_with(g)) {
                *folded.entry(&c.group).or_default() += 1;
                continue;
            }
            let tag = if c.passed { "PASS" } else { "FAIL" };
            let detail = if c.detail.is_empty() { String::new() } else { format!(": {}", c.detail) };
            println!("{tag}  {} / {}{detail}", c.group, c.name);
            if let (false, Some(r)) = (c.passed, &c.residual) {
                println!("      residual: {r}");
            }
        }
        for (g, n) in folded {
            println!("PASS  {g}: {n} identities");
        }
        for w in &self.warnings {
            println!("warning: {w}");
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        println!(
            "{}: {} checks, {} failed ({:.2} s)",
            if self.passed { "passed" } else { "FAILED" },
            self.checks.len(),
            failed,
            self.wall_time_s
        );
    }
}

/// Fixed-width scientific notation for CSV and snapshot files.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.17e}")
}

/// Writes a header and rows with [`fmt_f64`] formatting.
pub fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = header.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}
