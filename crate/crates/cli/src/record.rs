//! Run outputs: the long-format CSV rows and the full run record.

use std::io::Write;
use std::path::Path;

use cheeger_core::PerimeterMode;
use serde::{Deserialize, Serialize};

use crate::config::{NormalizedConfig, Pipeline};
use crate::error::{CliError, Result};

/// One measured quantity. `p` and `k` are empty where they do not apply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub spec: String,
    pub resolution: u32,
    pub p: Option<f64>,
    pub k: Option<usize>,
    pub mode: PerimeterMode,
    pub quantity: String,
    pub value: f64,
    pub witness_file: Option<String>,
}

/// Identity of a row for diffing.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub spec: String,
    pub resolution: u32,
    /// Bit pattern of `p`, so keys are totally ordered.
    pub p_bits: Option<u64>,
    pub k: Option<usize>,
    pub mode: PerimeterMode,
    pub quantity: String,
}

impl CsvRow {
    pub fn key(&self) -> RowKey {
        RowKey {
            spec: self.spec.clone(),
            resolution: self.resolution,
            p_bits: self.p.map(f64::to_bits),
            k: self.k,
            mode: self.mode,
            quantity: self.quantity.clone(),
        }
    }

    pub fn label(&self) -> String {
        let mut s = format!("{} res={}", self.spec, self.resolution);
        if let Some(p) = self.p {
            s.push_str(&format!(" p={p}"));
        }
        if let Some(k) = self.k {
            s.push_str(&format!(" k={k}"));
        }
        format!("{s} mode={} {}", self.mode, self.quantity)
    }
}

/// Where a record entry came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Origin {
    pub pipeline: Pipeline,
    pub spec: String,
    pub resolution: u32,
    pub p: Option<f64>,
    pub k: Option<usize>,
}

/// A named inequality `lhs <= rhs`. Only asserted checks decide the exit
/// status; the rest are reported for reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    #[serde(flatten)]
    pub origin: Origin,
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub asserted: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    #[serde(flatten)]
    pub origin: Origin,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    #[serde(flatten)]
    pub origin: Origin,
    pub report: serde_json::Value,
}

/// A stage that could not produce its quantities (for example a
/// decomposition that is vacuous at this resolution).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    #[serde(flatten)]
    pub origin: Origin,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config_hash: String,
    pub config: NormalizedConfig,
    pub rows: Vec<CsvRow>,
    pub checks: Vec<CheckRecord>,
    pub reports: Vec<ReportRecord>,
    pub errors: Vec<StageError>,
    pub timings: Vec<StageTiming>,
}

impl RunRecord {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.asserted && !c.holds)
    }

    pub fn passed(&self) -> bool {
        self.failed_checks().next().is_none()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Schema {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# Run {}\n\n", &self.config_hash[..12]));
        s.push_str(&format!(
            "spec: {}\nresolutions: {:?}\np: {:?}\nk: {:?}\nmode: {}\npipelines: {}\n\n",
            self.config.spec.name,
            self.config.resolutions,
            self.config.p,
            self.config.k,
            self.config.mode,
            self.config
                .pipelines
                .iter()
                .map(|p| p.name())
                .collect::<Vec<_>>()
                .join(", ")
        ));
        let asserted = self.checks.iter().filter(|c| c.asserted).count();
        let failed: Vec<&CheckRecord> = self.failed_checks().collect();
        s.push_str(&format!(
            "rows: {}\nasserted checks: {} ({} failed)\nstage errors: {}\nverdict: {}\n",
            self.rows.len(),
            asserted,
            failed.len(),
            self.errors.len(),
            if failed.is_empty() { "PASS" } else { "FAIL" }
        ));
        if !failed.is_empty() {
            s.push_str("\n## Failed checks\n\n");
            for c in failed {
                s.push_str(&format!(
                    "- {} {} res={} p={:?} k={:?}: {} = {} > {}\n",
                    c.origin.pipeline, c.origin.spec, c.origin.resolution, c.origin.p, c.origin.k, c.name, c.lhs, c.rhs
                ));
            }
        }
        if !self.errors.is_empty() {
            s.push_str("\n## Stage errors\n\n");
            for e in &self.errors {
                s.push_str(&format!(
                    "- {} {} res={} p={:?} k={:?}: {}\n",
                    e.origin.pipeline, e.origin.spec, e.origin.resolution, e.origin.p, e.origin.k, e.message
                ));
            }
        }
        s
    }
}

pub fn write_rows<W: Write>(rows: &[CsvRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

pub fn read_rows(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
