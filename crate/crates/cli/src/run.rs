//! train, meb, svm and game.

use std::time::Instant;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sublin::classify::{
    kernel_margin, train_kernel, train_linear_sqrt_d, train_linear_sqrt_n, KernelMode, KernelSpec, TrainResult,
};
use sublin::instance::{exact_margin, optima, reference_maximin, InstanceKind, LedgerSnapshot, QueryLedger};
use sublin::mwdual::{AmpModel, SuccinctClassifier, TrainConfig};
use sublin::qsim::QueryCostModel;
use sublin::quadratic::{train_l2_svm, train_meb, Budget, SvmOutcome};
use sublin::rng::{child, seeded};
use sublin::zerosum::{
    antisymmetrize, exploitability, recover_strategies, solve_game_rounds, verify_epsilon_optimal, GameSolution,
    Strategy,
};

use crate::record::{emit, status_for, Audit, Contract, RunRecord};
use crate::source::{as_game, load_game_matrix, Loaded};
use crate::{CommonArgs, GameArgs, QuadArgs, RoundArgs, TrainArgs};

/// Largest `n·d` for which `train` computes a reference margin itself.
pub const REFERENCE_CELLS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainEcho {
    pub eps: f64,
    pub budget: Budget,
    pub kernel: KernelSpec,
    pub kernel_mode: KernelMode,
    pub amp_model: AmpModel,
    pub repeats: u64,
    pub rounds: Option<u64>,
    pub t_const: Option<f64>,
    pub cost: QueryCostModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadEcho {
    pub eps: f64,
    pub budget: Budget,
    pub amp_model: AmpModel,
    pub rounds: Option<u64>,
    pub t_const: Option<f64>,
    pub cost: QueryCostModel,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameEcho {
    pub eps: f64,
    pub trials: u64,
    pub rounds: Option<u64>,
    pub cost: QueryCostModel,
}

fn train_config(eps: f64, seed: u64, r: &RoundArgs) -> TrainConfig {
    let mut cfg = TrainConfig::new(eps, seed);
    cfg.rounds = r.rounds.map(|t| t as usize);
    cfg.t_const = r.t_const;
    cfg.amp_model = r.amp_model;
    cfg
}

/// Exact margin of `c`, in feature space for non-linear kernels.
pub fn audit_margin(data: &Loaded, kernel: &KernelSpec, c: &SuccinctClassifier) -> Result<f64> {
    Ok(match kernel {
        KernelSpec::Linear => exact_margin(&data.x, &c.reconstruct(&data.x)?)?,
        k => {
            let labels = if data.labels.is_empty() {
                vec![1.0; data.points.n()]
            } else {
                data.labels.clone()
            };
            kernel_margin(&data.points, &labels, k, c)?
        }
    })
}

/// Margin a correct run must reach, when one is known or cheap to compute.
pub fn margin_bound(data: &Loaded, kernel: &KernelSpec, eps: f64) -> Result<Option<f64>> {
    if *kernel != KernelSpec::Linear {
        return Ok(None);
    }
    Ok(match data.kind {
        Some(InstanceKind::Case1) => Some(optima::sigma_case1() - eps),
        Some(InstanceKind::Case2) => Some(optima::sigma_case2() - eps),
        _ if data.x.n() * data.x.d() <= REFERENCE_CELLS => {
            let tol = eps / 4.0;
            Some(reference_maximin(&data.x, tol)? - tol - eps)
        }
        _ => None,
    })
}

pub fn radius_bound(data: &Loaded, eps: f64) -> Option<f64> {
    match data.kind {
        Some(InstanceKind::Case1) => Some(optima::meb_case1() + eps),
        Some(InstanceKind::Case2) => Some(optima::meb_case2() + eps),
        _ => None,
    }
}

pub fn svm_bound(data: &Loaded, eps: f64) -> Option<f64> {
    match data.kind {
        Some(InstanceKind::Case2) => Some((optima::svm_case2() - eps).max(0.0).sqrt()),
        _ => None,
    }
}

fn finish(record: RunRecord, common: &CommonArgs) -> Result<bool> {
    emit(&record, common.out.as_deref())?;
    Ok(!(common.strict && record.violated()))
}

pub fn train(a: &TrainArgs) -> Result<bool> {
    let start = Instant::now();
    let seed = a.common.seed()?;
    let cost = a.common.cost.model();
    let data = a.data.load(seed)?;
    let cfg = train_config(a.eps, seed, &a.rounds);
    let mut master = seeded(seed);
    let mut best: Option<(f64, TrainResult)> = None;
    let mut charged_all_runs = 0;
    for _ in 0..a.repeats {
        let mut rng = child(&mut master);
        let mut ledger = QueryLedger::new(cost.clone());
        let run = match (&a.kernel, a.budget) {
            (KernelSpec::Linear, Budget::SqrtN) => train_linear_sqrt_n(&data.x, &cfg, &mut ledger, &mut rng)?,
            (KernelSpec::Linear, Budget::SqrtD) => train_linear_sqrt_d(&data.x, &cfg, &mut ledger, &mut rng)?,
            (k, _) => train_kernel(&data.points, &data.labels, k, &cfg, a.kernel_mode, &mut ledger, &mut rng)?,
        };
        charged_all_runs += run.ledger.charged_queries;
        let margin = audit_margin(&data, &a.kernel, &run.classifier)?;
        if best.as_ref().is_none_or(|(m, _)| margin > *m) {
            best = Some((margin, run));
        }
    }
    let (margin, run) = best.expect("at least one repeat");
    let contract = margin_bound(&data, &a.kernel, a.eps)?.map(|b| Contract::at_least("margin", margin, b));
    let record = RunRecord {
        command: "train".into(),
        source: serde_json::to_value(&a.data)?,
        config: serde_json::to_value(TrainEcho {
            eps: a.eps,
            budget: a.budget,
            kernel: a.kernel,
            kernel_mode: a.kernel_mode,
            amp_model: a.rounds.amp_model,
            repeats: a.repeats,
            rounds: a.rounds.rounds,
            t_const: a.rounds.t_const,
            cost,
        })?,
        seed,
        status: status_for(contract.as_ref()),
        ledger: run.ledger,
        charged_all_runs,
        audit: Audit {
            margin: Some(margin),
            ..Audit::default()
        },
        contract,
        solution: json!({ "classifier": run.classifier }),
        wall_time: start.elapsed().as_secs_f64(),
    };
    finish(record, &a.common)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Quad {
    Meb,
    Svm,
}

/// `min_i 2X_i·w − ‖w‖²`, the ℓ2-SVM objective.
pub fn svm_objective(data: &Loaded, w: &[f64]) -> f64 {
    let norm_sq: f64 = w.iter().map(|v| v * v).sum();
    (0..data.x.n())
        .map(|i| 2.0 * data.x.matrix().row_dot(i, w) - norm_sq)
        .fold(f64::INFINITY, f64::min)
}

pub fn radius_sq(data: &Loaded, c: &[f64]) -> f64 {
    (0..data.x.n())
        .map(|i| {
            let row = data.x.matrix().row_dense(i);
            row.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn quadratic(a: &QuadArgs, which: Quad) -> Result<bool> {
    let start = Instant::now();
    let seed = a.common.seed()?;
    let cost = a.common.cost.model();
    let data = a.data.load(seed)?;
    let cfg = train_config(a.eps, seed, &a.rounds);
    let mut ledger = QueryLedger::new(cost.clone());
    let mut rng = seeded(seed);
    let (run, status, audit, contract, extra) = match which {
        Quad::Meb => {
            let r = train_meb(&data.x, &cfg, a.budget, &mut ledger, &mut rng)?;
            let rsq = radius_sq(&data, &r.run.center);
            let contract = radius_bound(&data, a.eps).map(|b| Contract::at_most("radius_sq", rsq, b));
            let audit = Audit {
                radius_sq: Some(rsq),
                ..Audit::default()
            };
            (r.run, status_for(contract.as_ref()), audit, contract, Value::Null)
        }
        Quad::Svm => {
            let r = train_l2_svm(&data.x, &cfg, a.budget, &mut ledger, &mut rng)?;
            let objective = svm_objective(&data, &r.run.center);
            let margin_lb = (objective > 0.0).then(|| objective.sqrt());
            let contract = svm_bound(&data, a.eps).map(|b| Contract::at_least("margin_lb", margin_lb.unwrap_or(0.0), b));
            let status = match (&r.outcome, contract.as_ref()) {
                (SvmOutcome::NotSeparated, c) if c.is_none_or(|c| c.holds) => "not-separated".to_string(),
                (_, c) => status_for(c),
            };
            let audit = Audit {
                objective: Some(objective),
                margin_lb,
                ..Audit::default()
            };
            (r.run, status, audit, contract, serde_json::to_value(&r.outcome)?)
        }
    };
    let mut solution = json!({ "picks": run.picks, "center": run.center });
    if which == Quad::Svm {
        solution["outcome"] = extra;
    }
    let record = RunRecord {
        command: if which == Quad::Meb { "meb" } else { "svm" }.into(),
        source: serde_json::to_value(&a.data)?,
        config: serde_json::to_value(QuadEcho {
            eps: a.eps,
            budget: a.budget,
            amp_model: a.rounds.amp_model,
            rounds: a.rounds.rounds,
            t_const: a.rounds.t_const,
            cost,
        })?,
        seed,
        status,
        charged_all_runs: run.ledger.charged_queries,
        ledger: run.ledger,
        audit,
        contract,
        solution,
        wall_time: start.elapsed().as_secs_f64(),
    };
    finish(record, &a.common)
}

pub fn meb(a: &QuadArgs) -> Result<bool> {
    quadratic(a, Quad::Meb)
}

pub fn svm(a: &QuadArgs) -> Result<bool> {
    quadratic(a, Quad::Svm)
}

/// Row and column strategies recovered from an antisymmetrized solution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Recovered {
    pub row: Strategy,
    pub col: Strategy,
}

pub fn game(a: &GameArgs) -> Result<bool> {
    let start = Instant::now();
    let seed = a.common.seed()?;
    let cost = a.common.cost.model();
    let x = load_game_matrix(&a.matrix, seed)?;
    let (g, reduced) = match as_game(&x) {
        Some(g) => (g, false),
        None => (antisymmetrize(&x)?, true),
    };
    let mut master = seeded(seed);
    let mut charged_all_runs = 0;
    let mut trials_ok = 0;
    let mut best: Option<(f64, GameSolution, LedgerSnapshot)> = None;
    for _ in 0..a.trials {
        let mut rng = child(&mut master);
        let mut ledger = QueryLedger::new(cost.clone());
        let s = solve_game_rounds(&g, a.eps, a.rounds.map(|t| t as usize), &mut ledger, &mut rng)?;
        charged_all_runs += ledger.charged_queries();
        let v = verify_epsilon_optimal(g.matrix(), &s.strategy.dense(), a.eps)?;
        if v.ok {
            trials_ok += 1;
        }
        let better = match &best {
            None => true,
            Some((m, _, _)) => *m > a.eps && v.max_violation < *m,
        };
        if better {
            best = Some((v.max_violation, s, ledger.snapshot()));
        }
    }
    let (violation, s, ledger) = best.expect("at least one trial");
    let contract = Contract::at_most("max_violation", violation, a.eps);
    let mut audit = Audit {
        max_violation: Some(violation),
        eps_optimal: Some(contract.holds),
        trials_ok: Some(trials_ok),
        ..Audit::default()
    };
    let mut status = status_for(Some(&contract));
    let mut solution = json!({ "strategy": s.strategy, "rounds": s.rounds, "reduced": reduced });
    if reduced {
        match recover_strategies(&s.strategy, x.rows(), x.cols()) {
            Ok((row, col)) => {
                audit.exploitability = Some(exploitability(&x, &row, &col));
                solution["recovered"] = serde_json::to_value(Recovered { row, col })?;
            }
            Err(sublin::Error::Degenerate(msg)) => {
                status = "degenerate".into();
                solution["recovered"] = json!({ "error": msg });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let record = RunRecord {
        command: "game".into(),
        source: json!({ "matrix": a.matrix }),
        config: serde_json::to_value(GameEcho {
            eps: a.eps,
            trials: a.trials,
            rounds: a.rounds,
            cost,
        })?,
        seed,
        status,
        ledger,
        charged_all_runs,
        audit,
        contract: Some(contract),
        solution,
        wall_time: start.elapsed().as_secs_f64(),
    };
    finish(record, &a.common)
}
