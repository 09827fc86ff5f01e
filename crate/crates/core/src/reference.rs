//! Deterministic reference computations used to audit the sampled solvers.

use crate::error::{Error, Result};
use crate::instance::{DataMatrix, Matrix};
use crate::mwdual::{log_n, mw_factor};

/// Largest `n·d` the dense reference accepts.
pub const MAX_CELLS: usize = 1_000_000;

const START_ROUNDS: usize = 256;
const MAX_ROUNDS: usize = 1 << 24;

/// A full-information primal–dual run.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactRun {
    /// Midpoint of the certified bracket.
    pub sigma: f64,
    /// `max(0, min_i X_i·w̄)`: a margin achieved by `w̄`.
    pub lower: f64,
    /// `‖Xᵀp̄‖`: no unit vector beats it against `p̄`.
    pub upper: f64,
    pub rounds: usize,
    pub w_bar: Vec<f64>,
    pub p_bar: Vec<f64>,
    /// The multiplicative-weights regret inequality held.
    pub mw_bound_holds: bool,
    /// The gradient-descent regret bound `2√(2T)` held.
    pub ogd_bound_holds: bool,
}

/// Maximin margin `max_{‖w‖≤1} min_i X_i·w` bracketed to width `2·eps`.
///
/// Runs quadratic multiplicative weights against exact losses `Xw_t` and
/// online gradient ascent against exact gradients `Xᵀp_t`, doubling `T`
/// until the certified bracket is narrow enough.
pub fn exact_primal_dual(x: &DataMatrix, eps: f64) -> Result<ExactRun> {
    if x.n().saturating_mul(x.d()) > MAX_CELLS {
        return Err(Error::TooLarge(format!("{}x{} exceeds {MAX_CELLS} cells", x.n(), x.d())));
    }
    if !(eps > 0.0) {
        return Err(Error::Invalid(format!("eps must be positive, got {eps}")));
    }
    let mut rounds = START_ROUNDS;
    loop {
        let run = run_exact(x.matrix(), rounds);
        if run.upper - run.lower <= 2.0 * eps || rounds >= MAX_ROUNDS {
            return Ok(run);
        }
        rounds *= 2;
    }
}

fn run_exact(x: &Matrix, rounds: usize) -> ExactRun {
    let (n, d) = (x.rows(), x.cols());
    let eta = (log_n(n) / rounds as f64).sqrt();
    let step = 1.0 / (2.0 * rounds as f64).sqrt();
    let mut u = vec![1.0; n];
    let mut y = vec![0.0; d];
    let mut w_bar = vec![0.0; d];
    let mut p_bar = vec![0.0; n];
    let mut q_sum = vec![0.0; d];
    let mut cum_v = vec![0.0; n];
    let (mut pv, mut pv2, mut qw) = (0.0, 0.0, 0.0);
    for _ in 0..rounds {
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        let w: Vec<f64> = y.iter().map(|v| v / norm.max(1.0)).collect();
        let total: f64 = u.iter().sum();
        let p: Vec<f64> = u.iter().map(|v| v / total).collect();
        let v = x.mul_vec(&w);
        let q = x.tmul_vec(&p);
        for i in 0..n {
            let c = v[i].clamp(-1.0 / eta, 1.0 / eta);
            pv += p[i] * c;
            pv2 += p[i] * c * c;
            cum_v[i] += c;
            u[i] *= mw_factor(v[i], eta);
            p_bar[i] += p[i];
        }
        let max = u.iter().copied().fold(0.0, f64::max);
        if !(1e-100..=1e100).contains(&max) {
            u.iter_mut().for_each(|a| *a /= max);
        }
        for j in 0..d {
            qw += q[j] * w[j];
            q_sum[j] += q[j];
            w_bar[j] += w[j];
            y[j] += step * q[j];
        }
    }
    let t = rounds as f64;
    w_bar.iter_mut().for_each(|a| *a /= t);
    p_bar.iter_mut().for_each(|a| *a /= t);
    let lower = x
        .mul_vec(&w_bar)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let upper = x.tmul_vec(&p_bar).iter().map(|v| v * v).sum::<f64>().sqrt();
    let min_cum = cum_v.iter().copied().fold(f64::INFINITY, f64::min);
    let slack = 1e-9 * t;
    let q_best = q_sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    ExactRun {
        sigma: 0.5 * (lower + upper),
        lower,
        upper,
        rounds,
        w_bar,
        p_bar,
        mw_bound_holds: pv <= min_cum + eta * pv2 + log_n(n) / eta + slack,
        ogd_bound_holds: q_best - qw <= 2.0 * (2.0 * t).sqrt() + slack,
    }
}

/// Largest side [`tiny_game_value`] accepts.
pub const TINY_GAME_MAX: usize = 6;

/// Value `max_p min_q pᵀXq` of a small matrix game, by enumerating square
/// supports of the row player's optimal vertex.
pub fn tiny_game_value(x: &Matrix) -> Result<f64> {
    let (m, k) = (x.rows(), x.cols());
    if m > TINY_GAME_MAX || k > TINY_GAME_MAX {
        return Err(Error::TooLarge(format!("{m}x{k} game; at most {TINY_GAME_MAX}x{TINY_GAME_MAX}")));
    }
    if m == 0 || k == 0 {
        return Err(Error::Empty);
    }
    let a = x.to_rows();
    let mut best = f64::NEG_INFINITY;
    for rows in 1u32..(1 << m) {
        let rs: Vec<usize> = (0..m).filter(|i| rows >> i & 1 == 1).collect();
        for cols in 1u32..(1 << k) {
            if cols.count_ones() as usize != rs.len() {
                continue;
            }
            let cs: Vec<usize> = (0..k).filter(|j| cols >> j & 1 == 1).collect();
            let Some(p_sub) = solve_indifference(&a, &rs, &cs) else {
                continue;
            };
            if p_sub.iter().any(|&v| v < -1e-12) {
                continue;
            }
            let mut p = vec![0.0; m];
            for (&i, &v) in rs.iter().zip(&p_sub) {
                p[i] = v.max(0.0);
            }
            let value = (0..k)
                .map(|j| (0..m).map(|i| p[i] * a[i][j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            best = best.max(value);
        }
    }
    Ok(best)
}

/// Solves `Σ_{i∈rs} p_i·a[i][j] = v` for `j ∈ cs` and `Σ p_i = 1`.
fn solve_indifference(a: &[Vec<f64>], rs: &[usize], cs: &[usize]) -> Option<Vec<f64>> {
    let s = rs.len();
    let dim = s + 1;
    // Unknowns (p_1..p_s, v).
    let mut mat = vec![vec![0.0; dim + 1]; dim];
    for (r, &j) in cs.iter().enumerate() {
        for (c, &i) in rs.iter().enumerate() {
            mat[r][c] = a[i][j];
        }
        mat[r][s] = -1.0;
    }
    for c in 0..s {
        mat[s][c] = 1.0;
    }
    mat[s][dim] = 1.0;
    for col in 0..dim {
        let piv = (col..dim).max_by(|&p, &q| mat[p][col].abs().total_cmp(&mat[q][col].abs()))?;
        if mat[piv][col].abs() < 1e-12 {
            return None;
        }
        mat.swap(col, piv);
        for r in 0..dim {
            if r != col {
                let f = mat[r][col] / mat[col][col];
                if f != 0.0 {
                    for c in col..=dim {
                        mat[r][c] -= f * mat[col][c];
                    }
                }
            }
        }
    }
    Some((0..s).map(|c| mat[c][dim] / mat[c][c]).collect())
}
