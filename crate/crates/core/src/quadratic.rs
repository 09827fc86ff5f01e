//! The quadratic maximin family `max_w min_i b_i + 2X_i·w − ‖w‖²`: minimum
//! enclosing ball (`b_i = −‖X_i‖²`) and ℓ2-margin SVM (`b_i = 0`).

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classify::SparseSum;
use crate::error::{invalid, Error, Result};
use crate::instance::{DataMatrix, LedgerSnapshot, QueryLedger};
use crate::mwdual::{l2_sample, log_n, MwMonitor, Step, TrainConfig, WeightState};
use crate::rng::{child, SimRng};

/// Round constant for the quadratic solvers.
pub const QUAD_CONST: f64 = 23.0;

/// How the dual side's norm and samples are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Budget {
    /// Host-resident dual vector, exact norm, direct ℓ2 sampling.
    #[default]
    SqrtN,
    /// Estimated norm and prepared-state sampling over the dual accessor.
    SqrtD,
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Budget> {
        match s {
            "sqrt-n" => Ok(Budget::SqrtN),
            "sqrt-d" => Ok(Budget::SqrtD),
            other => invalid(format!("unknown budget {other:?}; expected sqrt-n or sqrt-d")),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Budget::SqrtN => "sqrt-n",
            Budget::SqrtD => "sqrt-d",
        })
    }
}

/// Unbiased estimate of `b_i + 2X_i·w − ‖w‖²` from one ℓ2 sample of `w`.
pub fn quad_estimator(
    b_i: f64,
    row: &[f64],
    w: &[f64],
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<f64> {
    if row.len() != w.len() {
        return Err(Error::Dimension(format!("{} vs {} coordinates", row.len(), w.len())));
    }
    let w_sq: f64 = w.iter().map(|v| v * v).sum();
    if w_sq == 0.0 {
        return Ok(b_i);
    }
    let j = l2_sample(w, ledger, rng)?;
    Ok(b_i + 2.0 * row[j] * w_sq / w[j] - w_sq)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuadDiagnostics {
    pub rounds: usize,
    pub eta: f64,
    pub log_n: f64,
    pub mw_pv: f64,
    pub mw_pv2: f64,
    pub mw_min_cum: f64,
    /// `max_w Σ_t f_t(w)`, attained at the mean of the picked rows.
    pub regret_best: f64,
    /// `Σ_t f_t(w_t)`.
    pub regret_achieved: f64,
}

impl QuadDiagnostics {
    /// `4(1 + ln T)`: the bound for step `1/(2t)` on 2-strongly concave
    /// losses with gradients of norm at most 4.
    pub fn regret_bound(&self) -> f64 {
        4.0 * (1.0 + (self.rounds as f64).ln())
    }

    pub fn regret_holds(&self) -> bool {
        self.regret_best - self.regret_achieved <= self.regret_bound() + 1e-9 * self.rounds as f64
    }

    fn record_mw(&mut self, m: &MwMonitor) {
        self.mw_pv = m.pv;
        self.mw_pv2 = m.pv2;
        self.mw_min_cum = m.min_cum();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub center: Vec<f64>,
    pub picks: Vec<usize>,
    /// Exact `min_i b_i + 2X_i·w̄ − ‖w̄‖²`.
    pub objective: f64,
    pub ledger: LedgerSnapshot,
    pub wall_time: f64,
    pub diagnostics: QuadDiagnostics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MebResult {
    #[serde(flatten)]
    pub run: QuadResult,
    /// Exact `max_i ‖w̄ − X_i‖²`.
    pub radius_sq: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SvmOutcome {
    Separated { direction: Vec<f64>, margin_lb: f64 },
    NotSeparated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmResult {
    #[serde(flatten)]
    pub run: QuadResult,
    pub outcome: SvmOutcome,
}

/// Minimum enclosing ball: returns a center whose squared radius is within
/// `ε` of optimal with probability ≥ 2/3.
pub fn train_meb(
    x: &DataMatrix,
    cfg: &TrainConfig,
    budget: Budget,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<MebResult> {
    let b: Vec<f64> = (0..x.n()).map(|i| -x.matrix().row_norm_sq(i)).collect();
    let run = train_quadratic(x, &b, cfg, budget, ledger, rng)?;
    let radius_sq = (0..x.n())
        .map(|i| {
            x.matrix()
                .row_dense(i)
                .iter()
                .zip(&run.center)
                .map(|(a, c)| (a - c) * (a - c))
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(MebResult { run, radius_sq })
}

/// ℓ2-margin SVM: `ŵ = w̄/‖w̄‖` with `min_i X_i·ŵ ≥ √(min_i 2X_i·w̄ − ‖w̄‖²)`,
/// or [`SvmOutcome::NotSeparated`] when that objective is not positive.
pub fn train_l2_svm(
    x: &DataMatrix,
    cfg: &TrainConfig,
    budget: Budget,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<SvmResult> {
    let b = vec![0.0; x.n()];
    let run = train_quadratic(x, &b, cfg, budget, ledger, rng)?;
    let outcome = if run.objective > 0.0 {
        let norm = run.center.iter().map(|v| v * v).sum::<f64>().sqrt();
        SvmOutcome::Separated {
            direction: run.center.iter().map(|v| v / norm).collect(),
            margin_lb: run.objective.sqrt(),
        }
    } else {
        SvmOutcome::NotSeparated
    };
    Ok(SvmResult { run, outcome })
}

/// Primal–dual loop with the quadratic estimator. The dual player runs
/// gradient ascent with step `1/(2t)`, which makes `w_{t+1}` the mean of the
/// rows picked so far (`w_1 = 0`).
fn train_quadratic(
    x: &DataMatrix,
    b: &[f64],
    cfg: &TrainConfig,
    budget: Budget,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<QuadResult> {
    cfg.validate()?;
    ledger.cost().validate()?;
    let start = Instant::now();
    let (n, d) = (x.n(), x.d());
    let rounds = cfg.rounds_for(n, QUAD_CONST);
    let eta = TrainConfig::eta(n, rounds);
    let delta = (eta * eta).min(0.5);
    let reps = crate::classify::norm_repeats(rounds);
    let step_charge = ledger.cost().history_step_charge as u128;

    let mut state = WeightState::for_rows(x, eta, cfg.amp_model);
    let mut z = SparseSum::new(d);
    let mut picks = Vec::with_capacity(rounds);
    let mut achieved = 0.0;
    let mut b_sum = 0.0;

    for t in 0..rounds {
        let mut r = child(rng);
        let per_call = step_charge * t as u128;
        let i = state.measure(per_call, ledger, &mut r)?;
        let h = t.max(1) as f64;
        let exact_sq = z.norm_sq() / (h * h);
        let step = if z.is_zero() {
            Step {
                col: r.random_range(0..d),
                scale: 0.0,
                shift: 0.0,
            }
        } else {
            let (j, w_sq) = match budget {
                Budget::SqrtN => {
                    let w: Vec<f64> = z.values.iter().map(|v| v / h).collect();
                    (l2_sample(&w, ledger, &mut r)?, exact_sq)
                }
                Budget::SqrtD => {
                    let (est, _) = crate::classify::estimate_sum_norm_sq(&z, t, delta, reps, per_call, ledger, &mut r)?;
                    let j = crate::classify::sample_support(&z, d, per_call, ledger, &mut r)?;
                    (j, est / (h * h))
                }
            };
            Step {
                col: j,
                scale: 2.0 * w_sq / (z.values[j] / h),
                shift: -w_sq,
            }
        };
        achieved += b[i] + 2.0 * z.dot_row(x, i) / h - exact_sq;
        b_sum += b[i];
        state.apply(x, &step, Some(b));
        picks.push(i);
        z.add_row(x, i);
    }

    let center = mean_iterate(x, &picks);
    let w_sq: f64 = center.iter().map(|v| v * v).sum();
    let objective = (0..n)
        .map(|i| b[i] + 2.0 * x.matrix().row_dot(i, &center) - w_sq)
        .fold(f64::INFINITY, f64::min);
    let mut diagnostics = QuadDiagnostics {
        rounds,
        eta,
        log_n: log_n(n),
        regret_best: b_sum + z.norm_sq() / rounds as f64,
        regret_achieved: achieved,
        ..QuadDiagnostics::default()
    };
    diagnostics.record_mw(&state.monitor);
    Ok(QuadResult {
        center,
        picks,
        objective,
        ledger: ledger.snapshot(),
        wall_time: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}

/// `w̄ = (1/T)·Σ_t w_t` where `w_t` is the mean of the first `t − 1` picks.
pub fn mean_iterate(x: &DataMatrix, picks: &[usize]) -> Vec<f64> {
    let t = picks.len();
    let mut beta = vec![0.0; t];
    let mut suffix = 0.0;
    for r in (0..t).rev() {
        beta[r] = suffix / t as f64;
        suffix += 1.0 / (r.max(1)) as f64;
    }
    // Round r (0-based) uses the mean of r picks; pick r first enters round r + 1.
    let mut w = vec![0.0; x.d()];
    for (&i, &bta) in picks.iter().zip(&beta) {
        for (j, v) in x.matrix().row(i) {
            w[j] += bta * v;
        }
    }
    w
}
