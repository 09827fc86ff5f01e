//! JSON run records.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sublin::instance::LedgerSnapshot;

/// Quality numbers recomputed from the returned solution and the input data.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius_sq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin_lb: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_optimal: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exploitability: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials_ok: Option<usize>,
}

/// A checkable guarantee: `value <claim> bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contract {
    pub claim: String,
    pub bound: f64,
    pub holds: bool,
}

impl Contract {
    pub fn at_least(what: &str, value: f64, bound: f64) -> Contract {
        Contract {
            claim: format!("{what} >= bound"),
            bound,
            holds: value >= bound,
        }
    }

    pub fn at_most(what: &str, value: f64, bound: f64) -> Contract {
        Contract {
            claim: format!("{what} <= bound"),
            bound,
            holds: value <= bound,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    pub source: Value,
    pub config: Value,
    pub seed: u64,
    pub status: String,
    pub ledger: LedgerSnapshot,
    /// Charged queries summed over every repeat or trial.
    pub charged_all_runs: u128,
    pub audit: Audit,
    pub contract: Option<Contract>,
    pub solution: Value,
    pub wall_time: f64,
}

impl RunRecord {
    pub fn violated(&self) -> bool {
        self.contract.as_ref().is_some_and(|c| !c.holds)
    }

    pub fn read(path: &Path) -> Result<RunRecord> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn status_for(contract: Option<&Contract>) -> String {
    match contract {
        Some(c) if !c.holds => "contract-violated",
        Some(_) => "ok",
        None => "unchecked",
    }
    .to_string()
}

/// Prints `value` as pretty JSON and mirrors it to `out` when given.
pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    if let Some(p) = out {
        fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{text}");
    Ok(())
}
