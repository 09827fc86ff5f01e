//! Outcome-level simulators of the quantum subroutines.
//!
//! Each simulator computes the exact answer on the host, draws the outcome from
//! the distribution the quantum procedure would produce, and bills the
//! procedure's oracle calls to the ledger. Host time is not the complexity
//! observable; the ledger is.

mod counting;
mod mean;

pub use counting::{amplitude_estimate, grover_applications, AEResult, BooleanOracle, Predicate};
pub use mean::{
    estimate_mean, estimate_mean_batch, estimate_norm_sq, median, repeats_per_bit, BitCounts, DenseVector,
    VectorOracle,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::instance::{Charge, QueryLedger};
use crate::rng::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryCostModel {
    /// Coefficient-oracle calls per application of the preparation unitary.
    pub c_prep_per_iter: u64,
    /// Dürr–Høyer multiplier: one search costs ⌈c_dh·√n⌉ oracle calls.
    pub c_dh: f64,
    /// Fixed-point precision for mean estimation.
    pub bits_l: u32,
    /// Phase-grid constant: M = ⌈ae_const/ε·√(N/max(t,1))⌉.
    pub ae_const: f64,
    /// Charge for one direct entry query.
    pub entry_charge: u64,
    /// Queries per recorded history step when an oracle is evaluated lazily
    /// from the run history (compute + uncompute).
    pub history_step_charge: u64,
}

impl Default for QueryCostModel {
    fn default() -> Self {
        QueryCostModel {
            c_prep_per_iter: 2,
            c_dh: 22.5,
            bits_l: 16,
            ae_const: 8.0,
            entry_charge: 1,
            history_step_charge: 2,
        }
    }
}

impl QueryCostModel {
    pub fn validate(&self) -> Result<()> {
        if self.c_prep_per_iter == 0 || self.entry_charge == 0 || self.history_step_charge == 0 {
            return invalid("cost constants must be positive");
        }
        if !(self.c_dh > 0.0 && self.c_dh.is_finite()) {
            return invalid(format!("c_dh must be positive, got {}", self.c_dh));
        }
        if !(self.ae_const > 0.0 && self.ae_const.is_finite()) {
            return invalid(format!("ae_const must be positive, got {}", self.ae_const));
        }
        if !(1..=64).contains(&self.bits_l) {
            return invalid(format!("bits_l must be in 1..=64, got {}", self.bits_l));
        }
        Ok(())
    }

    /// Oracle calls billed for one maximum search over `n` entries.
    pub fn dh_calls(&self, n: usize) -> u128 {
        (self.c_dh * (n as f64).sqrt()).ceil() as u128
    }
}

/// Host view of the coefficients an oracle exposes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profile {
    pub norm_sq: f64,
    pub argmax: usize,
    pub max_abs: f64,
}

/// Oracle `|i⟩|0⟩ ↦ |i⟩|a_i⟩` over `[len]`.
///
/// `profile` and `draw` are host-side helpers; structured oracles override them
/// to avoid scanning entries known to be zero or to skip redundant transforms.
pub trait AmplitudeOracle {
    fn len(&self) -> usize;

    fn coefficient(&self, i: usize) -> f64;

    /// Underlying data queries charged for one coefficient evaluation.
    fn queries_per_call(&self) -> u128;

    fn profile(&self) -> Profile {
        let mut p = Profile {
            norm_sq: 0.0,
            argmax: 0,
            max_abs: 0.0,
        };
        for i in 0..self.len() {
            let a = self.coefficient(i).abs();
            p.norm_sq += a * a;
            if a > p.max_abs {
                p.max_abs = a;
                p.argmax = i;
            }
        }
        p
    }

    /// Draws `i` with probability `a_i²/‖a‖²`.
    fn draw(&self, profile: &Profile, rng: &mut SimRng) -> usize {
        let target = rng.random::<f64>() * profile.norm_sq;
        let mut acc = 0.0;
        let mut last = profile.argmax;
        for i in 0..self.len() {
            let a = self.coefficient(i);
            if a != 0.0 {
                acc += a * a;
                last = i;
                if acc > target {
                    return i;
                }
            }
        }
        last
    }
}

/// Coefficients held in a slice.
pub struct SliceOracle<'a> {
    pub values: &'a [f64],
    pub per_call: u128,
}

impl AmplitudeOracle for SliceOracle<'_> {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn coefficient(&self, i: usize) -> f64 {
        self.values[i]
    }

    fn queries_per_call(&self) -> u128 {
        self.per_call
    }
}

/// Coefficients that vanish outside a known support. `values` is indexed by
/// coordinate; only `support` entries are read.
pub struct SupportOracle<'a> {
    pub len: usize,
    pub support: &'a [usize],
    pub values: &'a [f64],
    pub per_call: u128,
}

impl AmplitudeOracle for SupportOracle<'_> {
    fn len(&self) -> usize {
        self.len
    }

    fn coefficient(&self, i: usize) -> f64 {
        self.values[i]
    }

    fn queries_per_call(&self) -> u128 {
        self.per_call
    }

    fn profile(&self) -> Profile {
        let mut p = Profile {
            norm_sq: 0.0,
            argmax: 0,
            max_abs: 0.0,
        };
        for &i in self.support {
            let a = self.values[i].abs();
            p.norm_sq += a * a;
            if a > p.max_abs || (a == p.max_abs && a > 0.0 && i < p.argmax) {
                p.max_abs = a;
                p.argmax = i;
            }
        }
        p
    }

    fn draw(&self, profile: &Profile, rng: &mut SimRng) -> usize {
        let target = rng.random::<f64>() * profile.norm_sq;
        let mut acc = 0.0;
        let mut last = profile.argmax;
        for &i in self.support {
            let a = self.values[i];
            if a != 0.0 {
                acc += a * a;
                last = i;
                if acc > target {
                    return i;
                }
            }
        }
        last
    }
}

/// Maximum of `|a_i|` with ties broken towards the smallest index. The answer
/// is exact; the ledger is billed ⌈c_dh·√n⌉ oracle calls.
pub fn durr_hoyer_max(oracle: &impl AmplitudeOracle, ledger: &mut QueryLedger) -> (usize, f64) {
    let p = oracle.profile();
    charge_dh(oracle.len(), oracle.queries_per_call(), ledger);
    (p.argmax, p.max_abs)
}

fn charge_dh(n: usize, per_call: u128, ledger: &mut QueryLedger) {
    let calls = ledger.cost().dh_calls(n);
    ledger.charge(Charge::MaxFinding, calls * per_call);
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Prepared {
    pub index: usize,
    pub attempts: u64,
    pub iterations: u64,
}

/// Prepares `Σ a_i|i⟩/‖a‖` by amplitude amplification and measures it.
///
/// One Dürr–Høyer search finds `a_max`; each attempt applies the preparation
/// unitary `2k+1` times with `k = ⌊π/(4θ)⌋`, `sin θ = ‖a‖/(√n·a_max)`, and
/// succeeds with probability `sin²((2k+1)θ) ≥ 1/2`.
pub fn amplify_prepare_sample(
    oracle: &impl AmplitudeOracle,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<Prepared> {
    let n = oracle.len();
    let profile = oracle.profile();
    if profile.max_abs == 0.0 {
        return Err(Error::ZeroVector);
    }
    let per_call = oracle.queries_per_call();
    charge_dh(n, per_call, ledger);

    let sin_theta = (profile.norm_sq.sqrt() / ((n as f64).sqrt() * profile.max_abs)).min(1.0);
    let theta = sin_theta.asin();
    let k = (std::f64::consts::PI / (4.0 * theta)).floor() as u64;
    let success = ((2 * k + 1) as f64 * theta).sin().powi(2);
    let mut attempts = 1u64;
    while rng.random::<f64>() >= success {
        attempts += 1;
    }
    let calls = attempts as u128 * (2 * k as u128 + 1) * ledger.cost().c_prep_per_iter as u128;
    ledger.charge(Charge::StatePrep, calls * per_call);

    Ok(Prepared {
        index: oracle.draw(&profile, rng),
        attempts,
        iterations: k,
    })
}
