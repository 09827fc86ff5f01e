//! End-to-end trainers for maximin linear and kernel classification.

mod kernel;
mod linear;
mod sparse;

pub use kernel::{feature_map, kernel_estimate, kernel_margin, train_kernel, KernelMode, KernelSpec};
pub use linear::{train_classical_baseline, train_linear_sqrt_d, train_linear_sqrt_n};
pub(crate) use linear::{estimate_sum_norm_sq, norm_repeats, sample_support};
pub(crate) use sparse::SparseSum;

use serde::{Deserialize, Serialize};

use crate::instance::LedgerSnapshot;
use crate::mwdual::{MwMonitor, SuccinctClassifier};

/// Round constant of the √n trainer and the classical baseline.
pub const SQRT_N_CONST: f64 = 23.0;
/// Round constant of the √d trainer.
pub const SQRT_D_CONST: f64 = 27.0;

/// Threshold of the lower-bound decision rule.
pub const CASE_THRESHOLD: f64 = 0.94;

/// Per-run quantities for the regret certificates, all computed exactly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub rounds: usize,
    pub eta: f64,
    pub log_n: f64,
    /// `Σ_t p_t·v_t` with `p_t` the exact normalized weights.
    pub mw_pv: f64,
    /// `Σ_t p_t·v_t²`.
    pub mw_pv2: f64,
    /// `min_i Σ_t v_t(i)`.
    pub mw_min_cum: f64,
    /// `‖Σ_t X_{i_t}‖`, the best fixed unit vector's total.
    pub regret_best: f64,
    /// `Σ_t X_{i_t}·w_t`.
    pub regret_achieved: f64,
    /// Rounds with a norm estimate, and how many landed within `delta` of
    /// the fixed-point truncated norm they estimate.
    pub norm_rounds: u64,
    pub norm_within_delta: u64,
    pub delta: Option<f64>,
}

impl Diagnostics {
    pub(crate) fn record_mw(&mut self, m: &MwMonitor) {
        self.mw_pv = m.pv;
        self.mw_pv2 = m.pv2;
        self.mw_min_cum = m.min_cum();
    }

    /// `Σ p·v ≤ min_i Σ v(i) + η Σ p·v² + ln n/η`.
    pub fn mw_inequality_holds(&self) -> bool {
        let rhs = self.mw_min_cum + self.eta * self.mw_pv2 + self.log_n / self.eta;
        self.mw_pv <= rhs + 1e-9 * (1.0 + rhs.abs())
    }

    pub fn regret_bound(&self) -> f64 {
        2.0 * (2.0 * self.rounds as f64).sqrt()
    }

    pub fn regret_holds(&self) -> bool {
        self.regret_best - self.regret_achieved <= self.regret_bound() + 1e-9 * self.rounds as f64
    }

    /// `Σ_t p_t·v_t² ≤ factor·T`.
    pub fn variance_within(&self, factor: f64) -> bool {
        self.mw_pv2 <= factor * self.rounds as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub classifier: SuccinctClassifier,
    /// Exact `min_i X_i·w̄` (kernel margin for kernel trainers).
    pub achieved_margin: f64,
    pub ledger: LedgerSnapshot,
    pub wall_time: f64,
    pub diagnostics: Diagnostics,
}

/// Which lower-bound instance a trained direction points to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaseCall {
    /// 1 or 2.
    pub case: u8,
    /// 0-based planted column.
    pub l: usize,
}

/// Reads the lower-bound case off `w̄`: some `w̄_j > 0.94` with `j ≥ 1` means
/// Case 2 with `l = j`; otherwise Case 1 with `l` the largest such coordinate.
pub fn identify_lower_bound_case(w: &[f64]) -> Option<CaseCall> {
    let (l, &top) = w
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))?;
    Some(CaseCall {
        case: if top > CASE_THRESHOLD { 2 } else { 1 },
        l,
    })
}
