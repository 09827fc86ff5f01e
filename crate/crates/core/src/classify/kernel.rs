use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use super::{linear, Diagnostics, TrainResult, SQRT_N_CONST};
use crate::error::{invalid, Error, Result};
use crate::instance::{Charge, DataMatrix, Matrix, QueryLedger};
use crate::mwdual::{log_n, SuccinctClassifier, TrainConfig, WeightState};
use crate::rng::{child, SimRng};

/// Largest explicit feature dimension `d^q`.
pub const MAX_FEATURES: usize = 1_000_000;

/// Largest `n` for which the estimator trainer keeps the exact Gram matrix.
pub const MAX_GRAM_ROWS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Polynomial { q: u32 },
    Gaussian { s: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Polynomial { q: 0 } => invalid("polynomial degree must be at least 1"),
            KernelSpec::Gaussian { s } if !(s > 0.0 && s.is_finite()) => {
                invalid(format!("gaussian width must be positive, got {s}"))
            }
            _ => Ok(()),
        }
    }

    /// Variance budget `L_k` of the unbiased estimator.
    pub fn variance_bound(&self) -> f64 {
        match *self {
            KernelSpec::Linear => 1.0,
            KernelSpec::Polynomial { q } => q as f64,
            KernelSpec::Gaussian { s } => s.powi(-4),
        }
    }

    pub fn exact(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Polynomial { q } => dot(x, y).powi(q as i32),
            KernelSpec::Gaussian { s } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * s * s)).exp()
            }
        }
    }
}

impl FromStr for KernelSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<KernelSpec> {
        let spec = match s.split_once(':') {
            None if s == "linear" => KernelSpec::Linear,
            Some(("poly", q)) => KernelSpec::Polynomial {
                q: q.parse().map_err(|_| Error::Invalid(format!("bad degree {q:?}")))?,
            },
            Some(("gauss", w)) => KernelSpec::Gaussian {
                s: w.parse().map_err(|_| Error::Invalid(format!("bad width {w:?}")))?,
            },
            _ => return invalid(format!("unknown kernel {s:?}; expected linear, poly:q or gauss:s")),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => f.write_str("linear"),
            KernelSpec::Polynomial { q } => write!(f, "poly:{q}"),
            KernelSpec::Gaussian { s } => write!(f, "gauss:{s}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelMode {
    /// Train linearly on the explicit polynomial features.
    ExplicitFeature,
    /// Replace feature inner products by unbiased kernel estimates.
    #[default]
    Estimator,
}

impl FromStr for KernelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<KernelMode> {
        match s {
            "explicit" | "explicit-feature" => Ok(KernelMode::ExplicitFeature),
            "estimator" => Ok(KernelMode::Estimator),
            other => invalid(format!("unknown kernel mode {other:?}")),
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// One ℓ2-sample estimate of `x·y`: `x(j)·‖y‖²/y(j)` with `j ∝ y(j)²`.
fn inner_sample(x: &[f64], y: &[f64], y_sq: f64, rng: &mut SimRng) -> f64 {
    let target = rng.random::<f64>() * y_sq;
    let mut acc = 0.0;
    let mut pick = 0;
    for (j, &v) in y.iter().enumerate() {
        if v != 0.0 {
            acc += v * v;
            pick = j;
            if acc > target {
                break;
            }
        }
    }
    x[pick] * y_sq / y[pick]
}

/// Unbiased estimate of `k(x, y)`.
///
/// Polynomial: a product of `q` independent ℓ2-sample estimates of `x·y`.
/// Gaussian: `exp(−(‖x‖²+‖y‖²)/(2s²))` times a randomized Taylor estimate of
/// `exp(x·y/s²)`; the term index `m` is geometric with ratio `c/(1+c)`,
/// `c = 1/s²`, and `(x·y)^m` is a product of `m` ℓ2-sample estimates.
///
/// Each ℓ2 sample bills two entry queries.
pub fn kernel_estimate(
    k: &KernelSpec,
    x: &[f64],
    y: &[f64],
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<f64> {
    k.validate()?;
    if x.len() != y.len() {
        return Err(Error::Dimension(format!("{} vs {} coordinates", x.len(), y.len())));
    }
    let entry = ledger.cost().entry_charge as u128;
    let y_sq: f64 = y.iter().map(|v| v * v).sum();
    let factors = |m: u32, ledger: &mut QueryLedger, rng: &mut SimRng| -> f64 {
        if y_sq == 0.0 {
            ledger.charge(Charge::Direct, entry * 2 * x.len() as u128);
            return dot(x, y).powi(m as i32);
        }
        ledger.charge(Charge::Direct, entry * 2 * m as u128);
        (0..m).map(|_| inner_sample(x, y, y_sq, rng)).product()
    };
    Ok(match *k {
        KernelSpec::Linear => factors(1, ledger, rng),
        KernelSpec::Polynomial { q } => factors(q, ledger, rng),
        KernelSpec::Gaussian { s } => {
            let c = 1.0 / (s * s);
            let rho = c / (1.0 + c);
            ledger.charge(Charge::Direct, entry * 2 * x.len() as u128);
            let x_sq: f64 = x.iter().map(|v| v * v).sum();
            let prefactor = (-(x_sq + y_sq) * c / 2.0).exp();
            let m = Geometric::new(1.0 - rho)
                .map_err(|e| Error::Invalid(e.to_string()))?
                .sample(rng) as u32;
            // c^m / (m! · (1−ρ)ρ^m) = (1+c)^{m+1} / m!
            let mut weight = 1.0 + c;
            for r in 1..=m {
                weight *= (1.0 + c) / r as f64;
            }
            prefactor * weight * factors(m, ledger, rng)
        }
    })
}

/// Degree-`q` monomial features indexed by lexicographic `q`-tuples, so that
/// `Ψ(x)·Ψ(y) = (x·y)^q`.
pub fn feature_map(x: &[f64], q: u32) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..q {
        let mut next = Vec::with_capacity(out.len() * x.len());
        for &a in &out {
            next.extend(x.iter().map(|&b| a * b));
        }
        out = next;
    }
    out
}

fn feature_matrix(points: &[Vec<f64>], labels: &[f64], q: u32) -> Result<DataMatrix> {
    let d = points.first().map_or(0, Vec::len);
    let dim = (d as f64).powi(q as i32);
    if dim > MAX_FEATURES as f64 {
        return Err(Error::TooLarge(format!("{d}^{q} features exceed {MAX_FEATURES}")));
    }
    let rows: Vec<Vec<f64>> = points
        .iter()
        .zip(labels)
        .map(|(p, &l)| feature_map(p, q).into_iter().map(|v| v * l).collect())
        .collect();
    DataMatrix::new(Matrix::from_rows(&rows)?, true)
}

/// `min_a l_a·Σ_r β_r·l_{i_r}·k(x_a, x_{i_r})`: the exact margin of the
/// classifier in the kernel's feature space.
pub fn kernel_margin(
    x: &DataMatrix,
    labels: &[f64],
    k: &KernelSpec,
    c: &SuccinctClassifier,
) -> Result<f64> {
    c.validate(x.n())?;
    let points = x.matrix().to_rows();
    let mut coef = vec![0.0; x.n()];
    for (&i, b) in c.picks.iter().zip(c.pick_weights()) {
        coef[i] += b * labels[i];
    }
    Ok((0..x.n())
        .map(|a| {
            labels[a]
                * coef
                    .iter()
                    .enumerate()
                    .filter(|(_, &b)| b != 0.0)
                    .map(|(r, &b)| b * k.exact(&points[a], &points[r]))
                    .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min))
}

/// Kernel maximin training on points `x` with ±1 `labels` (all +1 if empty).
///
/// Labels multiply feature vectors, not raw points, so `x` must hold the
/// unsigned points.
pub fn train_kernel(
    x: &DataMatrix,
    labels: &[f64],
    k: &KernelSpec,
    cfg: &TrainConfig,
    mode: KernelMode,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<TrainResult> {
    k.validate()?;
    cfg.validate()?;
    let labels: Vec<f64> = if labels.is_empty() {
        vec![1.0; x.n()]
    } else if labels.len() == x.n() {
        labels.to_vec()
    } else {
        return Err(Error::Dimension(format!("{} labels for {} rows", labels.len(), x.n())));
    };
    match mode {
        KernelMode::ExplicitFeature => {
            let q = match *k {
                KernelSpec::Linear => 1,
                KernelSpec::Polynomial { q } => q,
                KernelSpec::Gaussian { .. } => {
                    return invalid("the gaussian kernel has no finite explicit feature map")
                }
            };
            let features = feature_matrix(&x.matrix().to_rows(), &labels, q)?;
            let mut r = linear::train_linear_sqrt_d(&features, cfg, ledger, rng)?;
            r.achieved_margin = kernel_margin(x, &labels, k, &r.classifier)?;
            Ok(r)
        }
        KernelMode::Estimator => train_estimator(x, &labels, k, cfg, ledger, rng),
    }
}

/// Each round adds one fresh estimate `l_a·l_{i_t}·k̃(x_a, x_{i_t})` to every
/// row's running inner product with the dual vector; the dual norm is kept
/// exactly through Gram sums.
fn train_estimator(
    x: &DataMatrix,
    labels: &[f64],
    k: &KernelSpec,
    cfg: &TrainConfig,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<TrainResult> {
    ledger.cost().validate()?;
    let n = x.n();
    if n > MAX_GRAM_ROWS {
        return Err(Error::TooLarge(format!("{n} rows exceed {MAX_GRAM_ROWS} for the Gram matrix")));
    }
    let start = Instant::now();
    let rounds = cfg.rounds_for(n, SQRT_N_CONST);
    let eta = TrainConfig::eta(n, rounds);
    let inv = 1.0 / (2.0 * rounds as f64).sqrt();
    let step_charge = ledger.cost().history_step_charge as u128;
    let points = x.matrix().to_rows();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| labels[a] * labels[b] * k.exact(&points[a], &points[b])).collect())
        .collect();

    let mut state = WeightState::new(n, eta, cfg.amp_model);
    // Estimated and exact `Σ_τ ⟨Ψ_a, Ψ_{i_τ}⟩` per row, signed.
    let mut est = vec![0.0; n];
    let mut exact = vec![0.0; n];
    let mut norm_sq = 0.0;
    let mut picks = Vec::with_capacity(rounds);
    let mut norms = Vec::with_capacity(rounds);
    let mut achieved = 0.0;
    let mut v = vec![0.0; n];

    for t in 0..rounds {
        let mut r = child(rng);
        let i = state.measure(step_charge * t as u128, ledger, &mut r)?;
        let norm = f64::max(norm_sq, 0.0).sqrt();
        let s = inv / norm.max(1.0);
        for (va, &e) in v.iter_mut().zip(&est) {
            *va = e * s;
        }
        achieved += exact[i] * s;
        state.apply_values(&v);
        norms.push(norm);
        picks.push(i);
        norm_sq += 2.0 * inv * inv * exact[i] + inv * inv * gram[i][i];
        for a in 0..n {
            let kt = kernel_estimate(k, &points[a], &points[i], ledger, &mut r)?;
            est[a] += labels[a] * labels[i] * kt;
            exact[a] += gram[a][i];
        }
    }

    let classifier = SuccinctClassifier {
        t: rounds,
        scale: inv,
        picks,
        norms,
    };
    let mut counts = vec![0.0; n];
    for &i in &classifier.picks {
        counts[i] += 1.0;
    }
    let best_sq: f64 = (0..n)
        .filter(|&a| counts[a] > 0.0)
        .map(|a| counts[a] * (0..n).map(|b| counts[b] * gram[a][b]).sum::<f64>())
        .sum();
    let mut diagnostics = Diagnostics {
        rounds,
        eta,
        log_n: log_n(n),
        regret_best: best_sq.max(0.0).sqrt(),
        regret_achieved: achieved,
        ..Diagnostics::default()
    };
    diagnostics.record_mw(&state.monitor);
    Ok(TrainResult {
        achieved_margin: kernel_margin(x, labels, k, &classifier)?,
        classifier,
        ledger: ledger.snapshot(),
        wall_time: start.elapsed().as_secs_f64(),
        diagnostics,
    })
}
