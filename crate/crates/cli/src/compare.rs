//! Row-by-row comparison of two runs.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::record::{read_rows, CsvRow, RowKey};
use crate::error::Result;

/// Relative tolerance per quantity, with a default for the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct CompareTolerances {
    pub default_rel: f64,
    pub per_quantity: HashMap<String, f64>,
}

impl Default for CompareTolerances {
    fn default() -> Self {
        CompareTolerances {
            default_rel: 1e-6,
            per_quantity: HashMap::new(),
        }
    }
}

impl CompareTolerances {
    pub fn for_quantity(&self, q: &str) -> f64 {
        self.per_quantity.get(q).copied().unwrap_or(self.default_rel)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Change {
    pub label: String,
    pub baseline: f64,
    pub current: f64,
    pub rel_diff: f64,
    pub tolerance: f64,
    pub regression: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffReport {
    pub unchanged: usize,
    /// Rows whose value moved at all, in key order.
    pub changed: Vec<Change>,
    /// Rows only in the current run; reported, not failures.
    pub added: Vec<String>,
    /// Rows only in the baseline; a quantity that disappeared is a regression.
    pub removed: Vec<String>,
}

impl DiffReport {
    pub fn regressions(&self) -> usize {
        self.changed.iter().filter(|c| c.regression).count() + self.removed.len()
    }

    pub fn passed(&self) -> bool {
        self.regressions() == 0
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "unchanged {}, changed {}, added {}, removed {}, regressions {}",
            self.unchanged,
            self.changed.len(),
            self.added.len(),
            self.removed.len(),
            self.regressions()
        )
        .unwrap();
        for c in &self.changed {
            let tag = if c.regression { "REGRESSION" } else { "drift" };
            writeln!(
                s,
                "{tag} {}: {} -> {} (rel {:.3e}, tol {:.1e})",
                c.label, c.baseline, c.current, c.rel_diff, c.tolerance
            )
            .unwrap();
        }
        for a in &self.added {
            writeln!(s, "added {a}").unwrap();
        }
        for r in &self.removed {
            writeln!(s, "REMOVED {r}").unwrap();
        }
        s
    }
}

fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b || (a.is_nan() && b.is_nan()) {
        return 0.0;
    }
    let scale = a.abs().max(b.abs());
    if !scale.is_finite() || scale == 0.0 {
        return f64::INFINITY;
    }
    (a - b).abs() / scale
}

pub fn compare_rows(baseline: &[CsvRow], current: &[CsvRow], tol: &CompareTolerances) -> DiffReport {
    let base: BTreeMap<RowKey, &CsvRow> = baseline.iter().map(|r| (r.key(), r)).collect();
    let cur: BTreeMap<RowKey, &CsvRow> = current.iter().map(|r| (r.key(), r)).collect();
    let mut report = DiffReport {
        unchanged: 0,
        changed: Vec::new(),
        added: Vec::new(),
        removed: Vec::new(),
    };
    for (key, b) in &base {
        match cur.get(key) {
            None => report.removed.push(b.label()),
            Some(c) => {
                let d = rel_diff(b.value, c.value);
                if d == 0.0 {
                    report.unchanged += 1;
                } else {
                    let tolerance = tol.for_quantity(&b.quantity);
                    report.changed.push(Change {
                        label: b.label(),
                        baseline: b.value,
                        current: c.value,
                        rel_diff: d,
                        tolerance,
                        regression: d > tolerance,
                    });
                }
            }
        }
    }
    report.added = cur
        .iter()
        .filter(|(k, _)| !base.contains_key(k))
        .map(|(_, r)| r.label())
        .collect();
    report
}

/// Accepts a run directory or a `results.csv` path.
pub fn results_path(p: &Path) -> PathBuf {
    if p.is_dir() {
        p.join("results.csv")
    } else {
        p.to_path_buf()
    }
}

pub fn compare(baseline: &Path, current: &Path, tol: &CompareTolerances) -> Result<DiffReport> {
    let b = read_rows(&results_path(baseline))?;
    let c = read_rows(&results_path(current))?;
    Ok(compare_rows(&b, &c, tol))
}
