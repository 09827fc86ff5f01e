use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::rc::Rc;

use rand::Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;

use crate::error::{invalid, Result};
use crate::instance::{Charge, QueryLedger};
use crate::rng::SimRng;

/// Oracle calls per Grover application (the predicate and its inverse).
const CALLS_PER_GROVER: u128 = 2;

/// Half-width of the phase window sampled from an explicit table.
const WINDOW: i64 = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AEResult {
    pub estimate: f64,
    pub grover_applications: u64,
    pub charged: u128,
}

/// Boolean predicate over `[len]`.
pub trait BooleanOracle {
    fn len(&self) -> usize;

    fn eval(&self, i: usize) -> bool;

    fn queries_per_call(&self) -> u128;

    fn count(&self) -> u64 {
        (0..self.len()).filter(|&i| self.eval(i)).count() as u64
    }
}

pub struct Predicate<F> {
    pub len: usize,
    pub f: F,
    pub per_call: u128,
}

impl<F: Fn(usize) -> bool> BooleanOracle for Predicate<F> {
    fn len(&self) -> usize {
        self.len
    }

    fn eval(&self, i: usize) -> bool {
        (self.f)(i)
    }

    fn queries_per_call(&self) -> u128 {
        self.per_call
    }
}

/// Phase-grid size for accuracy `eps` when `t` of `n` items are marked.
pub fn grover_applications(ae_const: f64, eps: f64, n: u64, t: u64) -> u64 {
    if t == 0 {
        return ((ae_const * (n as f64).sqrt()).ceil() as u64).max(1);
    }
    ((ae_const / eps * (n as f64 / t as f64).sqrt()).ceil() as u64).max(1)
}

/// Quantum counting: estimates `t = |f⁻¹(1)|` to relative accuracy `eps`.
pub fn amplitude_estimate(
    f: &impl BooleanOracle,
    eps: f64,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<AEResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return invalid(format!("accuracy must lie in (0, 1), got {eps}"));
    }
    let n = f.len() as u64;
    let t = f.count();
    let counter = Counter::new(n, t, eps, ledger.cost().ae_const);
    let estimate = counter.draw(rng);
    let charged = counter.grover as u128 * CALLS_PER_GROVER * f.queries_per_call();
    ledger.charge(Charge::NormEstimation, charged);
    Ok(AEResult {
        estimate,
        grover_applications: counter.grover,
        charged,
    })
}

/// Repeated counting runs for one `(n, t, eps)`; the phase table is built once.
pub(crate) struct Counter {
    pub(crate) grover: u64,
    table: Option<Rc<PhaseTable>>,
}

impl Counter {
    pub(crate) fn new(n: u64, t: u64, eps: f64, ae_const: f64) -> Counter {
        let grover = grover_applications(ae_const, eps, n, t);
        let table = (t > 0).then(|| cached_table(n, t, grover));
        Counter { grover, table }
    }

    /// One counting run's estimate `t̂ = N·sin²(πy/M)`.
    #[inline]
    pub(crate) fn draw(&self, rng: &mut SimRng) -> f64 {
        match &self.table {
            None => 0.0,
            Some(table) => table.estimate(rng),
        }
    }
}

fn phase_sin2(base: u64, k: i64, m: u64) -> f64 {
    let y = (base as i64 + k).rem_euclid(m as i64);
    (PI * y as f64 / m as f64).sin().powi(2)
}

thread_local! {
    static TABLES: RefCell<HashMap<(u64, u64, u64), Rc<PhaseTable>>> = RefCell::new(HashMap::new());
}

fn cached_table(n: u64, t: u64, m: u64) -> Rc<PhaseTable> {
    TABLES.with(|cell| {
        let mut map = cell.borrow_mut();
        if map.len() > 4096 {
            map.clear();
        }
        map.entry((n, t, m))
            .or_insert_with(|| {
                let omega = ((t as f64 / n as f64).sqrt()).asin() / PI;
                Rc::new(PhaseTable::new(m, omega, n as f64))
            })
            .clone()
    })
}

/// Outcome law of phase estimation with `m` grid points for true phase `omega`
/// (in units of π): `Pr[y] = sin²(πf) / (m² sin²(π(k − f)/m))` for
/// `y = base + k`, where `omega·m = base + f`.
///
/// The state is an equal mixture of phases ±omega; both aliases give the same
/// estimate `sin²(πy/m)`, so only one is sampled.
///
/// Offsets within `WINDOW` of the peak come from an alias table; the remaining
/// tail is drawn by rejection from a discrete envelope `∝ 1/(s(s−1))` on the
/// circular distance `s`, using `m² sin²(πs/m) ≥ 4s²` for `s ≤ m/2`.
pub(crate) struct PhaseTable {
    m: u64,
    base: u64,
    #[cfg_attr(not(test), allow(dead_code))]
    k_lo: i64,
    alias: Option<WeightedAliasIndex<f64>>,
    /// `n·sin²(πy/m)` for each alias slot.
    values: Vec<f64>,
    n: f64,
    tail: Option<Tail>,
}

struct Tail {
    sin2: f64,
    a: f64,
    b: f64,
    right: f64,
    envelope: f64,
}

impl PhaseTable {
    pub(crate) fn new(m: u64, omega: f64, n: f64) -> PhaseTable {
        let c = omega * m as f64;
        let base = c.floor();
        let f = c - base;
        let base = base as u64 % m;
        if f == 0.0 {
            return PhaseTable {
                m,
                base,
                k_lo: 0,
                alias: None,
                values: vec![n * (PI * base as f64 / m as f64).sin().powi(2)],
                n,
                tail: None,
            };
        }
        let sin2 = (PI * f).sin().powi(2);
        let mf = m as f64;
        let prob = |k: i64| sin2 / (mf * mf * (PI * (k as f64 - f) / mf).sin().powi(2));
        if m as i64 <= 4 * WINDOW {
            let k_lo = -((m as i64 - 1) / 2);
            let weights: Vec<f64> = (k_lo..k_lo + m as i64).map(prob).collect();
            let values = (k_lo..k_lo + m as i64).map(|k| n * phase_sin2(base, k, m)).collect();
            return PhaseTable {
                m,
                base,
                k_lo,
                alias: Some(WeightedAliasIndex::new(weights).expect("finite positive weights")),
                values,
                n,
                tail: None,
            };
        }
        let k_lo = -WINDOW + 1;
        let mut weights: Vec<f64> = (k_lo..=WINDOW).map(prob).collect();
        let window_mass: f64 = weights.iter().sum();
        weights.push((1.0 - window_mass).max(0.0));
        let a = WINDOW as f64 - f;
        let b = WINDOW as f64 - 1.0 + f;
        let values = (k_lo..=WINDOW).map(|k| n * phase_sin2(base, k, m)).collect();
        PhaseTable {
            m,
            base,
            k_lo,
            alias: Some(WeightedAliasIndex::new(weights).expect("finite positive weights")),
            values,
            n,
            tail: Some(Tail {
                sin2,
                a,
                b,
                right: (1.0 / a) / (1.0 / a + 1.0 / b),
                envelope: sin2 / 4.0 * (1.0 / a + 1.0 / b),
            }),
        }
    }

    /// Draws `n·sin²(πy/m)` for an outcome `y`.
    #[inline]
    pub(crate) fn estimate(&self, rng: &mut SimRng) -> f64 {
        let Some(alias) = &self.alias else {
            return self.values[0];
        };
        let idx = alias.sample(rng);
        if self.tail.is_some() && idx as i64 == 2 * WINDOW {
            let k = self.sample_tail(rng);
            return self.n * phase_sin2(self.base, k, self.m);
        }
        self.values[idx]
    }

    #[cfg(test)]
    pub(crate) fn sample(&self, rng: &mut SimRng) -> u64 {
        let Some(alias) = &self.alias else {
            return self.base;
        };
        let idx = alias.sample(rng);
        let k = if self.tail.is_some() && idx as i64 == 2 * WINDOW {
            self.sample_tail(rng)
        } else {
            self.k_lo + idx as i64
        };
        (self.base as i64 + k).rem_euclid(self.m as i64) as u64
    }

    fn sample_tail(&self, rng: &mut SimRng) -> i64 {
        let tail = self.tail.as_ref().expect("tail present");
        let mf = self.m as f64;
        loop {
            let go_right = rng.random::<f64>() < tail.right;
            let (shift, weight) = if go_right {
                (tail.a, tail.right)
            } else {
                (tail.b, 1.0 - tail.right)
            };
            let u = 1.0 - rng.random::<f64>();
            let r = (shift / u - shift).ceil().max(1.0);
            if !r.is_finite() || r > mf {
                continue;
            }
            let s = r + shift;
            let inside = if go_right { s <= mf / 2.0 } else { s < mf / 2.0 };
            if !inside {
                continue;
            }
            let proposal = weight * shift * (1.0 / (s - 1.0) - 1.0 / s);
            let target = tail.sin2 / (mf * mf * (PI * s / mf).sin().powi(2));
            if rng.random::<f64>() * tail.envelope * proposal <= target {
                return if go_right {
                    WINDOW + r as i64
                } else {
                    -(WINDOW - 1 + r as i64)
                };
            }
        }
    }
}
