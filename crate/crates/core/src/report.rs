//! Check results and the serializable verification report.

use serde::{Deserialize, Serialize};

use crate::geom::ChartPoint;

/// Outcome of one sample-based check.
///
/// `passed` is always `max_residual <= tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureCheckResult {
    pub name: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: ChartPoint,
    pub samples: usize,
}

/// Running maximum of a residual over sample points.
#[derive(Debug, Clone)]
pub(crate) struct ResidualTracker {
    name: String,
    tolerance: f64,
    max: f64,
    worst: ChartPoint,
    samples: usize,
}

impl ResidualTracker {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        ResidualTracker {
            name: name.into(),
            tolerance,
            max: 0.0,
            worst: ChartPoint::origin(0),
            samples: 0,
        }
    }

    pub fn record(&mut self, residual: f64, point: &ChartPoint) {
        // NaN must never hide behind a comparison
        let residual = if residual.is_nan() { f64::INFINITY } else { residual };
        if self.samples == 0 || residual > self.max {
            self.max = residual;
            self.worst = point.clone();
        }
        self.samples += 1;
    }

    pub fn finish(self) -> StructureCheckResult {
        StructureCheckResult {
            passed: self.max <= self.tolerance,
            name: self.name,
            max_residual: self.max,
            tolerance: self.tolerance,
            worst_point: self.worst,
            samples: self.samples,
        }
    }
}

/// One row of a suite: a named identity, the mathematical statement it
/// checks, and its worst residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub worst_point: Vec<f64>,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Residual written for checks that aborted with an error. JSON has no
/// infinity, so the largest finite double stands in.
pub const ERRORED_RESIDUAL: f64 = f64::MAX;

impl CheckRecord {
    pub fn from_result(result: StructureCheckResult, anchor: &str) -> Self {
        CheckRecord {
            name: result.name,
            anchor: anchor.to_string(),
            max_residual: finite_or_max(result.max_residual),
            tolerance: result.tolerance,
            passed: result.passed,
            worst_point: result.worst_point.into_vec(),
            samples: result.samples,
            note: None,
        }
    }

    pub fn errored(name: &str, anchor: &str, tolerance: f64, err: &crate::Error) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            max_residual: ERRORED_RESIDUAL,
            tolerance,
            passed: false,
            worst_point: Vec::new(),
            samples: 0,
            note: Some(err.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

fn finite_or_max(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        ERRORED_RESIDUAL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
}

impl SuiteReport {
    pub fn new(suite: impl Into<String>, checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        SuiteReport {
            suite: suite.into(),
            checks,
            passed,
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Full report of a verification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub scenario: String,
    pub version: String,
    pub seed: u64,
    pub samples: usize,
    pub generated_at_unix: u64,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub suites: Vec<SuiteReport>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn suite(&self, name: &str) -> Option<&SuiteReport> {
        self.suites.iter().find(|s| s.suite == name)
    }

    /// Plain-text residual table, one block per suite.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {}  (seed {}, {} samples, symred {})",
            self.scenario, self.seed, self.samples, self.version
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        for suite in &self.suites {
            let _ = writeln!(out, "\n[{}] {}", suite.suite, verdict(suite.passed));
            let _ = writeln!(out, "  {:<44} {:>12} {:>10}  {:<4}  identity", "check", "residual", "tol", "");
            for c in &suite.checks {
                let _ = writeln!(
                    out,
                    "  {:<44} {:>12.3e} {:>10.1e}  {:<4}  {}",
                    c.name,
                    c.max_residual,
                    c.tolerance,
                    verdict(c.passed),
                    c.anchor
                );
                if let Some(note) = &c.note {
                    let _ = writeln!(out, "      note: {note}");
                }
                if !c.passed && !c.worst_point.is_empty() {
                    let _ = writeln!(out, "      worst point: {:?}", c.worst_point);
                }
            }
        }
        let _ = writeln!(out, "\noverall: {}", verdict(self.passed));
        out
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}
