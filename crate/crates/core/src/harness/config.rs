//! Experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    VerifyTc,
    VerifyQre,
    Noclone,
    BlindAttack,
    BfkDemo,
    All,
}

impl Suite {
    pub const NAMES: [&'static str; 6] = ["verify-tc", "verify-qre", "noclone", "blind-attack", "bfk-demo", "all"];

    /// The suites that `all` runs, in report order.
    pub const COMPONENTS: [Suite; 5] = [
        Suite::VerifyTc,
        Suite::VerifyQre,
        Suite::Noclone,
        Suite::BlindAttack,
        Suite::BfkDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::VerifyTc => "verify-tc",
            Suite::VerifyQre => "verify-qre",
            Suite::Noclone => "noclone",
            Suite::BlindAttack => "blind-attack",
            Suite::BfkDemo => "bfk-demo",
            Suite::All => "all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::COMPONENTS
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "suite",
                name: s.to_string(),
            })
    }
}

/// Suite parameters. Every field is optional; suites fill in their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Parameters {
    /// Qubit count for scheme construction.
    #[serde(default, skip_serializing_if = "Option::is_none", alias = "N")]
    pub n: Option<usize>,
    /// Copy counts for the cloner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_grid: Option<Vec<f64>>,
    /// Attack angle in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    /// Samples for the announced-angle histogram.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Built-in scheme name or path to a scheme JSON file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spec_path: Option<PathBuf>,
    /// Built-in instance names, used when no spec file is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instances: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    /// `exact` or `mc`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    /// Wire angles as octant counts `k` for `kπ/8`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub angles: Option<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub seed: u64,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

const REQUIRED: [&str; 2] = ["suite", "seed"];

impl ExperimentConfig {
    pub fn new(suite: Suite, seed: u64) -> Self {
        Self {
            suite,
            seed,
            parameters: Parameters::default(),
            output_path: None,
        }
    }

    /// Parses and validates a JSON document, naming the first missing or
    /// malformed field.
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::InvalidConfig("config must be a JSON object".into()))?;
        for field in REQUIRED {
            if !obj.contains_key(field) {
                return Err(Error::InvalidConfig(format!("missing required field `{field}`")));
            }
        }
        if let Some(name) = obj["suite"].as_str() {
            name.parse::<Suite>()?;
        }
        if !obj["seed"].is_u64() {
            return Err(Error::InvalidConfig(format!(
                "field `seed` must be an unsigned 64-bit integer, got {}",
                obj["seed"]
            )));
        }
        let config: Self = serde_json::from_value(value).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.parameters;
        if let Some(k) = &p.k {
            if k.is_empty() || k.contains(&0) {
                return Err(Error::InvalidConfig("field `k` must list positive copy counts".into()));
            }
        }
        if let Some(grid) = &p.a_grid {
            if grid.is_empty() || grid.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
                return Err(Error::InvalidConfig("field `a-grid` must list positive values".into()));
            }
        }
        if let Some(xi) = p.xi {
            if !xi.is_finite() {
                return Err(Error::InvalidConfig("field `xi` must be finite".into()));
            }
        }
        if p.trials == Some(0) || p.samples == Some(0) {
            return Err(Error::InvalidConfig("`trials` and `samples` must be positive".into()));
        }
        if let Some(mode) = &p.mode {
            if mode != "exact" && mode != "mc" {
                return Err(Error::InvalidConfig(format!(
                    "field `mode` must be exact or mc, got `{mode}`"
                )));
            }
        }
        Ok(())
    }
}
