//! Report emission: a versioned JSON schema with deterministic field order,
//! plus CSV writers for tabular outputs.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// One measured quantity.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Entry {
    pub form: String,
    pub representation: String,
    pub value: f64,
    #[serde(rename = "selfConsistencyGap")]
    pub self_consistency_gap: f64,
    pub nodes: u64,
    pub seed: u64,
}

/// One pass/fail assertion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Suite report. Field order is fixed and all maps are ordered, so identical
/// runs serialize byte-identically apart from the timestamp.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    #[serde(rename = "schemaVersion")]
    pub schema_version: u32,
    pub suite: String,
    pub seed: u64,
    pub threads: usize,
    pub timestamp: String,
    pub config: String,
    pub entries: Vec<Entry>,
    pub metrics: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Report {
    pub fn new(suite: &str, seed: u64, config: String) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            suite: suite.to_string(),
            seed,
            threads: rayon::current_num_threads(),
            timestamp: now_utc(),
            config,
            entries: Vec::new(),
            metrics: BTreeMap::new(),
            checks: Vec::new(),
            passed: true,
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: String) {
        if !passed {
            self.passed = false;
        }
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail,
        });
    }

    pub fn entry(&mut self, form: &str, representation: &str, value: f64, gap: f64, nodes: u64) {
        self.entries.push(Entry {
            form: form.to_string(),
            representation: representation.to_string(),
            value,
            self_consistency_gap: gap,
            nodes,
            seed: self.seed,
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn write_json(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_json().as_bytes())?;
        file.write_all(b"\n")
    }

    /// Serialization with the timestamp blanked, for byte-identity checks.
    pub fn to_json_without_timestamp(&self) -> String {
        let mut copy = self.clone();
        copy.timestamp = String::new();
        serde_json::to_string_pretty(&copy).expect("report serializes")
    }
}

fn now_utc() -> String {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("unix:{secs}")
}

/// Writes rows as CSV with the given header.
pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

/// Aggregates previously written JSON reports into one summary report.
pub fn aggregate(paths: &[std::path::PathBuf]) -> std::io::Result<Report> {
    let mut summary = Report::new("report", 0, String::new());
    for path in paths {
        let text = std::fs::read_to_string(path)?;
        match serde_json::from_str::<Report>(&text) {
            Ok(r) => {
                summary.metric(&format!("{}::passed", r.suite), r.passed as u64 as f64);
                summary.check(
                    &r.suite,
                    r.passed,
                    format!(
                        "{} checks, {} failures",
                        r.checks.len(),
                        r.checks.iter().filter(|c| !c.passed).count()
                    ),
                );
                for c in r.checks.iter().filter(|c| !c.passed) {
                    summary.check(&format!("{}::{}", r.suite, c.name), false, c.detail.clone());
                }
            }
            Err(e) => {
                summary.check(
                    &path.display().to_string(),
                    false,
                    format!("unreadable report: {e}"),
                );
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_runs_serialize_identically_modulo_timestamp() {
        let build = || {
            let mut r = Report::new("demo", 7, "gamma = 0.5".into());
            r.metric("value", 1.25);
            r.entry("trilinear", "omega", 0.5, 1e-9, 1000);
            r.check("identity", true, "ok".into());
            r
        };
        let a = build();
        let b = build();
        assert_eq!(a.to_json_without_timestamp(), b.to_json_without_timestamp());
    }

    #[test]
    fn failed_check_marks_report() {
        let mut r = Report::new("demo", 0, String::new());
        r.check("bad", false, "boom".into());
        assert!(!r.passed);
    }
}
