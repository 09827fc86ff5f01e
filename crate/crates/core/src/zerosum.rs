//! Zero-sum games: the sublinear solver for antisymmetric payoff matrices, the
//! antisymmetrization reduction and exact verification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::instance::{Matrix, QueryLedger};
use crate::qsim::{amplify_prepare_sample, SliceOracle};
use crate::rng::{child, SimRng};

/// Square payoff matrix with entries in `[−1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GameInstance {
    x: Matrix,
    antisymmetric: bool,
}

impl GameInstance {
    pub fn new(x: Matrix) -> Result<GameInstance> {
        if x.rows() != x.cols() {
            return Err(Error::Dimension(format!("payoff matrix is {}x{}", x.rows(), x.cols())));
        }
        if x.rows() == 0 {
            return Err(Error::Empty);
        }
        let max = x.max_abs();
        if max > 1.0 {
            return invalid(format!("payoff entries must lie in [-1, 1], found {max}"));
        }
        let antisymmetric = x.is_antisymmetric();
        Ok(GameInstance { x, antisymmetric })
    }

    pub fn matrix(&self) -> &Matrix {
        &self.x
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn is_antisymmetric(&self) -> bool {
        self.antisymmetric
    }
}

/// Probability vector stored by its support.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub n: usize,
    pub support: BTreeMap<usize, f64>,
}

impl Strategy {
    pub fn from_dense(p: &[f64]) -> Result<Strategy> {
        let support: BTreeMap<usize, f64> = p
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        let s = Strategy { n: p.len(), support };
        s.validate()?;
        Ok(s)
    }

    /// `counts[i]/Σcounts` for integer tallies.
    pub fn from_tally(tally: &BTreeMap<usize, u64>, n: usize) -> Result<Strategy> {
        let total: u64 = tally.values().sum();
        if total == 0 {
            return Err(Error::Degenerate("empty tally".into()));
        }
        let support = tally
            .iter()
            .filter(|(_, &c)| c > 0)
            .map(|(&i, &c)| (i, c as f64 / total as f64))
            .collect();
        Ok(Strategy { n, support })
    }

    pub fn validate(&self) -> Result<()> {
        if self.support.keys().any(|&i| i >= self.n) {
            return Err(Error::OutOfRange("strategy support outside its dimension".into()));
        }
        if self.support.values().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return invalid("strategy masses must be non-negative");
        }
        let s: f64 = self.support.values().sum();
        if (s - 1.0).abs() > 1e-12 {
            return invalid(format!("strategy masses sum to {s}"));
        }
        Ok(())
    }

    pub fn dense(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.n];
        for (&i, &v) in &self.support {
            p[i] = v;
        }
        p
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.support.get(&i).copied().unwrap_or(0.0)
    }
}

/// The `(n1+n2+1)`-dimensional skew matrix `[[0, X, −1], [−Xᵀ, 0, 1], [1ᵀ, −1ᵀ, 0]]`.
pub fn antisymmetrize(x: &Matrix) -> Result<GameInstance> {
    let (n1, n2) = (x.rows(), x.cols());
    let n = n1 + n2 + 1;
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in rows.iter_mut().enumerate().take(n1) {
        row.extend(x.row(i).filter(|&(_, v)| v != 0.0).map(|(j, v)| (n1 + j, v)));
        row.push((n - 1, -1.0));
    }
    for i in 0..n1 {
        for (j, v) in x.row(i) {
            if v != 0.0 {
                rows[n1 + j].push((i, -v));
            }
        }
    }
    for j in 0..n2 {
        rows[n1 + j].sort_by_key(|&(c, _)| c);
        rows[n1 + j].push((n - 1, 1.0));
    }
    rows[n - 1] = (0..n1).map(|i| (i, 1.0)).chain((0..n2).map(|j| (n1 + j, -1.0))).collect();
    GameInstance::new(Matrix::sparse(n, n, rows)?)
}

/// Solver output together with the run's final potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    pub strategy: Strategy,
    pub rounds: usize,
    /// `ln Φ(T)` with `Φ(T) = Σ_i exp(ε·s_i/2)`, `s = Σ_τ X_{·,k_τ}`.
    pub log_potential: f64,
}

/// `T = ⌈4·ε⁻²·ln n⌉`.
pub fn game_rounds(n: usize, eps: f64) -> usize {
    ((4.0 * (n.max(2) as f64).ln() / (eps * eps)).ceil() as usize).max(1)
}

/// Finds `w̄` on the simplex with `Xw̄ ≤ ε·1` (with probability ≥ 2/3).
pub fn solve_game(g: &GameInstance, eps: f64, ledger: &mut QueryLedger, rng: &mut SimRng) -> Result<GameSolution> {
    solve_game_rounds(g, eps, None, ledger, rng)
}

/// As [`solve_game`], with an optional fixed round count.
///
/// Each round measures the state with amplitudes `exp(ε(s_i − s_max)/4)`,
/// i.e. probabilities `∝ exp(ε·s_i/2)`; every amplitude evaluation replays
/// the `t − 1` recorded picks.
pub fn solve_game_rounds(
    g: &GameInstance,
    eps: f64,
    rounds: Option<usize>,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<GameSolution> {
    if !g.is_antisymmetric() {
        return Err(Error::NotAntisymmetric);
    }
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("eps must lie in (0, 1), got {eps}"));
    }
    let n = g.n();
    let t_total = rounds.unwrap_or_else(|| game_rounds(n, eps));
    if t_total == 0 {
        return invalid("round count must be at least 1");
    }
    let step = ledger.cost().history_step_charge as u128;
    let mut s = vec![0.0; n];
    let mut amp = vec![0.0; n];
    let mut tally: BTreeMap<usize, u64> = BTreeMap::new();
    for t in 0..t_total {
        let mut round = child(rng);
        let top = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, &si) in amp.iter_mut().zip(&s) {
            *a = (eps * (si - top) / 4.0).exp();
        }
        let oracle = SliceOracle {
            values: &amp,
            per_call: step * t as u128,
        };
        let k = amplify_prepare_sample(&oracle, ledger, &mut round)?.index;
        *tally.entry(k).or_insert(0) += 1;
        for (i, v) in g.matrix().col(k) {
            s[i] += v;
        }
    }
    Ok(GameSolution {
        strategy: Strategy::from_tally(&tally, n)?,
        rounds: t_total,
        log_potential: log_sum_exp(s.iter().map(|v| eps * v / 2.0)),
    })
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Splits a strategy for the antisymmetrized game into row and column
/// strategies for the original `n1 × n2` game.
pub fn recover_strategies(w: &Strategy, n1: usize, n2: usize) -> Result<(Strategy, Strategy)> {
    if w.n != n1 + n2 + 1 {
        return Err(Error::Dimension(format!("strategy over {} for a {n1}x{n2} game", w.n)));
    }
    let block = |lo: usize, len: usize, name: &str| -> Result<Strategy> {
        let mass: f64 = (lo..lo + len).map(|i| w.mass(i)).sum();
        if mass <= 0.0 {
            return Err(Error::Degenerate(format!("{name} block has no mass")));
        }
        let support = (lo..lo + len)
            .filter(|&i| w.mass(i) > 0.0)
            .map(|i| (i - lo, w.mass(i) / mass))
            .collect();
        Ok(Strategy { n: len, support })
    };
    Ok((block(0, n1, "row")?, block(n1, n2, "column")?))
}

/// `max_i (Xq)_i − min_j (pᵀX)_j`: how much the pair `(p, q)` can be exploited.
pub fn exploitability(x: &Matrix, p: &Strategy, q: &Strategy) -> f64 {
    let best_row = x.mul_vec(&q.dense()).into_iter().fold(f64::NEG_INFINITY, f64::max);
    let best_col = x.tmul_vec(&p.dense()).into_iter().fold(f64::INFINITY, f64::min);
    best_row - best_col
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub ok: bool,
    pub max_violation: f64,
}

/// Checks `Xw̄ ≤ ε·1` exactly.
pub fn verify_epsilon_optimal(x: &Matrix, w: &[f64], eps: f64) -> Result<Verification> {
    if w.len() != x.cols() {
        return Err(Error::Dimension(format!("strategy over {} for {} columns", w.len(), x.cols())));
    }
    let max = x.mul_vec(w).into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok(Verification {
        ok: max <= eps,
        max_violation: max,
    })
}
