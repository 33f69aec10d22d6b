//! Residual-check records and machine-readable run reports.
//!
//! A [`Check`] is one verified identity: name, measured residual, tolerance,
//! pass flag.  Checks are grouped into [`StageReport`]s and assembled into a
//! [`Report`] that the CLI writes as JSON.  Reports are deterministic: the
//! same config and seed produce byte-identical files (no timestamps inside).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::Result;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, residual: f64, tol: f64) -> Self {
        let pass = residual.is_finite() && residual <= tol;
        Self { name: name.into(), residual, tol, pass }
    }

    /// A check that records a count or exact match rather than a residual.
    pub fn exact(name: impl Into<String>, pass: bool) -> Self {
        Self { name: name.into(), residual: if pass { 0.0 } else { 1.0 }, tol: 0.0, pass }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub checks: Vec<Check>,
}

impl StageReport {
    pub fn new(stage: impl Into<String>) -> Self {
        Self { stage: stage.into(), checks: Vec::new() }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn record(&mut self, name: impl Into<String>, residual: f64, tol: f64) {
        self.push(Check::new(name, residual, tol));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().map(|c| c.residual).fold(0.0, f64::max)
    }
}

/// Per-block complex dimensions of a recovered fiber module.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiberSummary {
    pub per_block_dims: Vec<usize>,
    pub frame_size: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    pub stages: Vec<StageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber: Option<FiberSummary>,
    pub passed: bool,
}

impl Report {
    pub fn new(command: impl Into<String>, config: serde_json::Value) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            command: command.into(),
            config,
            stages: Vec::new(),
            fiber: None,
            passed: true,
        }
    }

    pub fn push_stage(&mut self, stage: StageReport) {
        self.passed = self.passed && stage.passed();
        self.stages.push(stage);
    }

    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                std::fs::create_dir_all(dir)?;
            }
        }
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// A named curve for CSV emission; columns `x,value[,bound]`.
#[derive(Debug, Clone)]
pub struct Curve {
    pub name: String,
    pub rows: Vec<CurveRow>,
}

#[derive(Debug, Clone, Copy)]
pub struct CurveRow {
    pub x: f64,
    pub value: f64,
    pub bound: Option<f64>,
}

impl Curve {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, x: f64, value: f64, bound: Option<f64>) {
        self.rows.push(CurveRow { x, value, bound });
    }

    pub fn to_csv(&self) -> String {
        let has_bound = self.rows.iter().any(|r| r.bound.is_some());
        let mut out = String::from(if has_bound { "x,value,bound\n" } else { "x,value\n" });
        for r in &self.rows {
            if has_bound {
                out.push_str(&format!("{},{},{}\n", r.x, r.value, r.bound.unwrap_or(f64::NAN)));
            } else {
                out.push_str(&format!("{},{}\n", r.x, r.value));
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(format!("{}.csv", self.name)), self.to_csv())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pass_iff_residual_within_tol() {
        assert!(Check::new("a", 1e-13, 1e-12).pass);
        assert!(!Check::new("b", 1e-11, 1e-12).pass);
        assert!(!Check::new("nan", f64::NAN, 1e-12).pass);
    }

    #[test]
    fn report_aggregates_stage_failures() {
        let mut rep = Report::new("verify", serde_json::json!({}));
        let mut ok = StageReport::new("s1");
        ok.record("c1", 0.0, 1e-12);
        rep.push_stage(ok);
        assert!(rep.passed);
        let mut bad = StageReport::new("s2");
        bad.record("c2", 1.0, 1e-12);
        rep.push_stage(bad);
        assert!(!rep.passed);
    }

    #[test]
    fn csv_has_bound_column_when_present() {
        let mut c = Curve::new("r");
        c.push(1.0, 0.5, Some(0.7));
        assert!(c.to_csv().starts_with("x,value,bound\n"));
    }
}
