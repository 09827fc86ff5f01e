use std::time::Instant;

use rand::Rng;

use super::{Diagnostics, SparseSum, TrainResult, SQRT_D_CONST, SQRT_N_CONST};
use crate::error::Result;
use crate::instance::{exact_margin, Charge, DataMatrix, QueryLedger};
use crate::mwdual::{l2_sample, log_n, ogd_step, DualState, Step, SuccinctClassifier, TrainConfig, WeightState};
use crate::qsim::{amplify_prepare_sample, estimate_mean_batch, median, BitCounts, SupportOracle};
use crate::rng::{child, SimRng};

#[derive(Clone, Copy, PartialEq, Eq)]
enum RowSampler {
    Quantum,
    Classical,
}

/// Primal–dual training with quantum row sampling: `Õ(√n)` per round.
///
/// Each round measures the weight state (whose oracle replays the history),
/// takes an exact OGD step on the host-resident dual vector and ℓ2-samples
/// one column of `w_t` for the update estimate.
pub fn train_linear_sqrt_n(
    x: &DataMatrix,
    cfg: &TrainConfig,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<TrainResult> {
    train_dense(x, cfg, RowSampler::Quantum, ledger, rng)
}

/// The classical sublinear algorithm: exact weights, `n + d` queries per round.
pub fn train_classical_baseline(
    x: &DataMatrix,
    cfg: &TrainConfig,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<TrainResult> {
    train_dense(x, cfg, RowSampler::Classical, ledger, rng)
}

fn train_dense(
    x: &DataMatrix,
    cfg: &TrainConfig,
    sampler: RowSampler,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<TrainResult> {
    cfg.validate()?;
    ledger.cost().validate()?;
    let start = Instant::now();
    let (n, d) = (x.n(), x.d());
    let rounds = cfg.rounds_for(n, SQRT_N_CONST);
    let eta = TrainConfig::eta(n, rounds);
    let step_charge = ledger.cost().history_step_charge as u128;
    let entry = ledger.cost().entry_charge as u128;

    let mut state = WeightState::for_rows(x, eta, cfg.amp_model);
    let mut dual = DualState::new(d, rounds);
    let mut norms = Vec::with_capacity(rounds);
    let mut achieved = 0.0;
    let mut best = SparseSum::new(d);

    for t in 0..rounds {
        let mut r = child(rng);
        let w = dual.w();
        let i = match sampler {
            RowSampler::Quantum => state.measure(step_charge * t as u128, ledger, &mut r)?,
            RowSampler::Classical => state.sample_host(&mut r),
        };
        let step = if dual.norm_sq > 0.0 {
            let j = l2_sample(&w, ledger, &mut r)?;
            let w_sq: f64 = w.iter().map(|v| v * v).sum();
            Step::linear(j, w_sq / w[j])
        } else {
            Step::linear(r.random_range(0..d), 0.0)
        };
        if sampler == RowSampler::Classical {
            ledger.charge(Charge::Direct, entry * n as u128);
        }
        achieved += x.matrix().row_dot(i, &w);
        best.add_row(x, i);
        state.apply(x, &step, None);
        norms.push(dual.norm());
        ogd_step(&mut dual, x, i);
    }

    let classifier = SuccinctClassifier {
        t: rounds,
        scale: dual.scale,
        picks: dual.picks,
        norms,
    };
    let mut diagnostics = Diagnostics {
        rounds,
        eta,
        log_n: log_n(n),
        regret_best: best.norm_sq().sqrt(),
        regret_achieved: achieved,
        ..Diagnostics::default()
    };
    diagnostics.record_mw(&state.monitor);
    finish(x, classifier, diagnostics, ledger, start)
}

/// Primal–dual training with `Õ(√d)` per-round cost: the dual vector is
/// never materialized. Its norm comes from the median of `2⌈ln T⌉` mean
/// estimates at accuracy `η²`, and columns are drawn by state preparation
/// over the dual accessor.
pub fn train_linear_sqrt_d(
    x: &DataMatrix,
    cfg: &TrainConfig,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<TrainResult> {
    cfg.validate()?;
    ledger.cost().validate()?;
    let start = Instant::now();
    let (n, d) = (x.n(), x.d());
    let rounds = cfg.rounds_for(n, SQRT_D_CONST);
    let eta = TrainConfig::eta(n, rounds);
    let delta = (eta * eta).min(0.5);
    let reps = norm_repeats(rounds);
    let step_charge = ledger.cost().history_step_charge as u128;
    let inv = 1.0 / (2.0 * rounds as f64).sqrt();

    let mut state = WeightState::for_rows(x, eta, cfg.amp_model);
    let mut z = SparseSum::new(d);
    let mut picks = Vec::with_capacity(rounds);
    let mut norms = Vec::with_capacity(rounds);
    let mut diagnostics = Diagnostics {
        rounds,
        eta,
        log_n: log_n(n),
        delta: Some(delta),
        ..Diagnostics::default()
    };

    for t in 0..rounds {
        let mut r = child(rng);
        let per_call = step_charge * t as u128;
        let i = state.measure(per_call, ledger, &mut r)?;
        let (step, norm) = if z.is_zero() {
            (Step::linear(r.random_range(0..d), 0.0), 0.0)
        } else {
            let (sum_sq, target) = estimate_sum_norm_sq(&z, t, delta, reps, per_call, ledger, &mut r)?;
            let m_est = sum_sq * inv * inv;
            let m_true = target * inv * inv;
            diagnostics.norm_rounds += 1;
            if (m_est - m_true).abs() <= delta * m_true {
                diagnostics.norm_within_delta += 1;
            }
            let j = sample_support(&z, d, per_call, ledger, &mut r)?;
            let norm = m_est.sqrt();
            let scale = if m_est > 0.0 {
                m_est / (z.values[j] * inv * norm.max(1.0))
            } else {
                0.0
            };
            (Step::linear(j, scale), norm)
        };
        diagnostics.regret_achieved += z.dot_row(x, i) * inv / norm.max(1.0);
        state.apply(x, &step, None);
        norms.push(norm);
        picks.push(i);
        z.add_row(x, i);
    }

    diagnostics.regret_best = z.norm_sq().sqrt();
    diagnostics.record_mw(&state.monitor);
    let classifier = SuccinctClassifier {
        t: rounds,
        scale: inv,
        picks,
        norms,
    };
    finish(x, classifier, diagnostics, ledger, start)
}

/// `2⌈ln T⌉`, at least 1.
pub(crate) fn norm_repeats(rounds: usize) -> usize {
    (2 * (rounds as f64).ln().ceil() as usize).max(1)
}

/// Median estimate of `‖z‖²` for `z` a sum of `count` rows in the unit ball,
/// so that `|z_j| ≤ count`, together with the value it targets: `‖z‖²` after
/// fixed-point truncation of each `(z_j/count)²`.
pub(crate) fn estimate_sum_norm_sq(
    z: &SparseSum,
    count: usize,
    delta: f64,
    reps: usize,
    per_call: u128,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<(f64, f64)> {
    let h = count as f64;
    let d = z.values.len();
    let counts = BitCounts::from_values(
        z.support.iter().map(|&j| (z.values[j] / h).powi(2)),
        d,
        ledger.cost().bits_l,
    );
    let mut ests = estimate_mean_batch(&counts, delta, per_call, reps, ledger, rng)?;
    let scale = d as f64 * h * h;
    Ok((median(&mut ests) * scale, counts.truncated_mean() * scale))
}

/// Draws `j ∝ z_j²` by state preparation over the accessor of `z`.
pub(crate) fn sample_support(
    z: &SparseSum,
    d: usize,
    per_call: u128,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<usize> {
    let oracle = SupportOracle {
        len: d,
        support: &z.support,
        values: &z.values,
        per_call,
    };
    Ok(amplify_prepare_sample(&oracle, ledger, rng)?.index)
}

fn finish(
    x: &DataMatrix,
    classifier: SuccinctClassifier,
    diagnostics: Diagnostics,
    ledger: &QueryLedger,
    start: Instant,
) -> Result<TrainResult> {
    let w = classifier.reconstruct(x)?;
    Ok(TrainResult {
        achieved_margin: exact_margin(x, &w)?,
        classifier,
        ledger: ledger.snapshot(),
        wall_time: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}
