//! Recomputes a stored record's audits from its solution and the original data.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sublin::mwdual::SuccinctClassifier;
use sublin::quadratic::mean_iterate;
use sublin::zerosum::{antisymmetrize, exploitability, verify_epsilon_optimal, Strategy};

use crate::record::{emit, RunRecord};
use crate::run::{
    audit_margin, margin_bound, radius_bound, radius_sq, svm_bound, svm_objective, GameEcho, QuadEcho, Recovered,
    TrainEcho,
};
use crate::source::{as_game, load_game_matrix, DataArgs};

/// Stored and recomputed audits may differ by this much.
pub const TOLERANCE: f64 = 1e-9;

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Record written by train, meb, svm or game.
    #[arg(long)]
    pub record: PathBuf,
    /// Exit with status 3 unless every check passes.
    #[arg(long)]
    pub strict: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub stored: Option<f64>,
    pub recomputed: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub record: PathBuf,
    pub command: String,
    pub verified: bool,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Default)]
struct Checks(Vec<Check>);

impl Checks {
    /// The stored value must match the recomputed one.
    fn matches(&mut self, name: &str, stored: Option<f64>, recomputed: f64) {
        let ok = stored.is_some_and(|s| (s - recomputed).abs() <= TOLERANCE || s == recomputed);
        self.push(name, stored, recomputed, ok);
    }

    fn holds(&mut self, name: &str, bound: f64, recomputed: f64, ok: bool) {
        self.push(name, Some(bound), recomputed, ok);
    }

    fn push(&mut self, name: &str, stored: Option<f64>, recomputed: f64, ok: bool) {
        self.0.push(Check {
            name: name.into(),
            stored,
            recomputed,
            ok,
        });
    }
}

fn field<T: serde::de::DeserializeOwned>(v: &Value, key: &str) -> Result<T> {
    let x = v.get(key).with_context(|| format!("record solution has no {key:?}"))?;
    Ok(serde_json::from_value(x.clone())?)
}

fn recheck(r: &RunRecord, checks: &mut Checks) -> Result<()> {
    match r.command.as_str() {
        "train" => {
            let cfg: TrainEcho = serde_json::from_value(r.config.clone())?;
            let data = serde_json::from_value::<DataArgs>(r.source.clone())?.load(r.seed)?;
            let c: SuccinctClassifier = field(&r.solution, "classifier")?;
            let margin = audit_margin(&data, &cfg.kernel, &c)?;
            checks.matches("margin", r.audit.margin, margin);
            if let Some(b) = margin_bound(&data, &cfg.kernel, cfg.eps)? {
                checks.holds("margin contract", b, margin, margin >= b);
            }
        }
        "meb" | "svm" => {
            let cfg: QuadEcho = serde_json::from_value(r.config.clone())?;
            let data = serde_json::from_value::<DataArgs>(r.source.clone())?.load(r.seed)?;
            let picks: Vec<usize> = field(&r.solution, "picks")?;
            if let Some(&i) = picks.iter().find(|&&i| i >= data.x.n()) {
                bail!("pick {i} of {} rows", data.x.n());
            }
            let center = mean_iterate(&data.x, &picks);
            let stored: Vec<f64> = field(&r.solution, "center")?;
            let drift = center.iter().zip(&stored).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            checks.push("center", Some(0.0), drift, stored.len() == center.len() && drift <= TOLERANCE);
            if r.command == "meb" {
                let rsq = radius_sq(&data, &center);
                checks.matches("radius_sq", r.audit.radius_sq, rsq);
                if let Some(b) = radius_bound(&data, cfg.eps) {
                    checks.holds("radius contract", b, rsq, rsq <= b);
                }
            } else {
                let objective = svm_objective(&data, &center);
                checks.matches("objective", r.audit.objective, objective);
                if let Some(b) = svm_bound(&data, cfg.eps) {
                    let lb = if objective > 0.0 { objective.sqrt() } else { 0.0 };
                    checks.holds("margin_lb contract", b, lb, lb >= b);
                }
            }
        }
        "game" => {
            let cfg: GameEcho = serde_json::from_value(r.config.clone())?;
            let source: String = field(&r.source, "matrix")?;
            let x = load_game_matrix(&source, r.seed)?;
            let g = match as_game(&x) {
                Some(g) => g,
                None => antisymmetrize(&x)?,
            };
            let w: Strategy = field(&r.solution, "strategy")?;
            w.validate()?;
            let v = verify_epsilon_optimal(g.matrix(), &w.dense(), cfg.eps)?;
            checks.matches("max_violation", r.audit.max_violation, v.max_violation);
            checks.holds("eps-optimal", cfg.eps, v.max_violation, v.ok);
            if let Some(rec) = r.solution.get("recovered").filter(|v| v.get("row").is_some()) {
                let rec: Recovered = serde_json::from_value(rec.clone())?;
                checks.matches("exploitability", r.audit.exploitability, exploitability(&x, &rec.row, &rec.col));
            }
        }
        other => bail!("cannot verify a {other:?} record"),
    }
    Ok(())
}

pub fn run(a: &VerifyArgs) -> Result<bool> {
    let record = RunRecord::read(&a.record)?;
    let mut checks = Checks::default();
    // A record whose solution no longer fits its data fails verification
    // rather than aborting it.
    let error = recheck(&record, &mut checks).err().map(|e| format!("{e:#}"));
    let verified = error.is_none() && !checks.0.is_empty() && checks.0.iter().all(|c| c.ok);
    let report = Report {
        record: a.record.clone(),
        command: record.command,
        verified,
        checks: checks.0,
        error,
    };
    emit(&report, a.out.as_deref())?;
    Ok(verified || !a.strict)
}
