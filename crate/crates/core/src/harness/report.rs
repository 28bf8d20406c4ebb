//! Machine-readable experiment reports.
//!
//! Schema (JSON):
//!
//! ```text
//! {
//!   "suite": "noclone",
//!   "config": { ...ExperimentConfig... },
//!   "results": { ...suite-specific payload... },
//!   "assertions": [
//!     { "name": "...", "measured": 0.1, "bound": 0.2, "margin": 0.1,
//!       "expected": null, "passed": true }
//!   ],
//!   "passed": true,
//!   "wall-time-secs": 0.42
//! }
//! ```
//!
//! `margin` is positive when the assertion holds with room to spare.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Suite};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub margin: f64,
    /// Target value for two-sided checks, where `bound` is the tolerance.
    #[serde(default)]
    pub expected: Option<f64>,
    pub passed: bool,
}

impl Assertion {
    /// `measured ≤ bound + slack`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, slack: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            margin: bound - measured,
            expected: None,
            passed: measured <= bound + slack,
        }
    }

    /// `measured ≥ bound − slack`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, slack: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            bound,
            margin: measured - bound,
            expected: None,
            passed: measured >= bound - slack,
        }
    }

    /// `|measured − expected| ≤ tol`.
    pub fn within(name: impl Into<String>, measured: f64, expected: f64, tol: f64) -> Self {
        let dev = (measured - expected).abs();
        Self {
            name: name.into(),
            measured,
            bound: tol,
            margin: tol - dev,
            expected: Some(expected),
            passed: dev <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentReport {
    pub suite: Suite,
    pub config: ExperimentConfig,
    pub results: serde_json::Value,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub wall_time_secs: f64,
}

impl ExperimentReport {
    pub fn new(
        config: ExperimentConfig,
        results: serde_json::Value,
        assertions: Vec<Assertion>,
        wall_time_secs: f64,
    ) -> Self {
        Self {
            suite: config.suite,
            passed: assertions.iter().all(|a| a.passed),
            config,
            results,
            assertions,
            wall_time_secs,
        }
    }

    pub fn failures(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    /// Everything but the wall time, serialized; equal configs give equal bytes.
    pub fn payload_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&(
            &self.suite,
            &self.config,
            &self.results,
            &self.assertions,
            self.passed,
        ))?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_json_pretty()?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }

    /// One row per assertion, for plotting bound sweeps.
    pub fn write_assertions_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["name", "measured", "bound", "margin", "expected", "passed"])?;
        for a in &self.assertions {
            w.write_record([
                a.name.clone(),
                a.measured.to_string(),
                a.bound.to_string(),
                a.margin.to_string(),
                a.expected.map(|e| e.to_string()).unwrap_or_default(),
                a.passed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
