use super::counting::Counter;
use crate::error::{invalid, Error, Result};
use crate::instance::{Charge, QueryLedger};
use crate::rng::SimRng;

/// Oracle `F: [len] → [0, 1]`.
pub trait VectorOracle {
    fn len(&self) -> usize;

    fn value(&self, i: usize) -> f64;

    fn queries_per_call(&self) -> u128;
}

pub struct DenseVector<'a> {
    pub values: &'a [f64],
    pub per_call: u128,
}

impl VectorOracle for DenseVector<'_> {
    fn len(&self) -> usize {
        self.values.len()
    }

    fn value(&self, i: usize) -> f64 {
        self.values[i]
    }

    fn queries_per_call(&self) -> u128 {
        self.per_call
    }
}

/// Per-bit marked counts of an `l`-bit fixed-point encoding of `F`.
///
/// `F(i)` is truncated to `q = ⌊F(i)·2^{l−1}⌋`; bit `k` (0 = most significant)
/// carries weight `2^{−k}`, so `F = 1` is representable.
#[derive(Clone, Debug, PartialEq)]
pub struct BitCounts {
    pub counts: Vec<u64>,
    pub d: usize,
}

impl BitCounts {
    /// Counts over `d` entries; entries not produced by `values` are zero.
    pub fn from_values(values: impl IntoIterator<Item = f64>, d: usize, bits: u32) -> BitCounts {
        let mut counts = vec![0u64; bits as usize];
        let top = (bits - 1) as i32;
        let full = 1u64 << top;
        for v in values {
            let q = ((v.clamp(0.0, 1.0) * 2f64.powi(top)).floor() as u64).min(full);
            if q == 0 {
                continue;
            }
            for (k, c) in counts.iter_mut().enumerate() {
                if q >> (top - k as i32) & 1 == 1 {
                    *c += 1;
                }
            }
        }
        BitCounts { counts, d }
    }

    pub fn from_oracle(f: &impl VectorOracle, bits: u32) -> BitCounts {
        BitCounts::from_values((0..f.len()).map(|i| f.value(i)), f.len(), bits)
    }

    /// `(1/d)·Σ_i F(i)` after truncation.
    pub fn truncated_mean(&self) -> f64 {
        let s: f64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(k, &c)| c as f64 * 2f64.powi(-(k as i32)))
            .sum();
        s / self.d as f64
    }
}

/// Counting runs per bit: ⌈ln l⌉ rounded up to an odd number.
pub fn repeats_per_bit(bits: u32) -> usize {
    let c = (bits as f64).ln().ceil().max(0.0) as usize;
    2 * (c / 2) + 1
}

/// Median; the mean of the two middle values for even lengths.
pub fn median(xs: &mut [f64]) -> f64 {
    assert!(!xs.is_empty(), "median of an empty sample");
    xs.sort_unstable_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Estimates `m = (1/d)·Σ F(i)` to relative accuracy `delta`.
///
/// Each bit's count comes from the median of `repeats_per_bit` counting runs
/// at accuracy `delta/2`.
pub fn estimate_mean(
    f: &impl VectorOracle,
    delta: f64,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<f64> {
    check_delta(delta)?;
    let counts = BitCounts::from_oracle(f, ledger.cost().bits_l);
    Ok(estimate_mean_batch(&counts, delta, f.queries_per_call(), 1, ledger, rng)?[0])
}

/// `reps` independent mean estimates for the same counts.
pub fn estimate_mean_batch(
    counts: &BitCounts,
    delta: f64,
    per_call: u128,
    reps: usize,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    check_delta(delta)?;
    if counts.d == 0 {
        return Err(Error::Empty);
    }
    let cost = ledger.cost();
    let runs = repeats_per_bit(cost.bits_l);
    let mut sums = vec![0.0; reps];
    let mut grover_total: u128 = 0;
    let mut draws = vec![0.0; runs];
    for (k, &t) in counts.counts.iter().enumerate() {
        let counter = Counter::new(counts.d as u64, t, delta / 2.0, cost.ae_const);
        grover_total += counter.grover as u128;
        if t == 0 {
            continue;
        }
        let weight = 2f64.powi(-(k as i32));
        for sum in sums.iter_mut() {
            for x in draws.iter_mut() {
                *x = counter.draw(rng);
            }
            *sum += weight * median(&mut draws);
        }
    }
    let calls = grover_total * runs as u128 * reps as u128 * 2 * per_call;
    ledger.charge(Charge::NormEstimation, calls);
    let d = counts.d as f64;
    Ok(sums.into_iter().map(|s| s / d).collect())
}

/// Estimates `‖y‖²` given `|y(j)| ≤ bound`, via the mean of `y(j)²/bound²`.
pub fn estimate_norm_sq(
    y: &[f64],
    bound: f64,
    delta: f64,
    per_call: u128,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<f64> {
    if !(bound > 0.0 && bound.is_finite()) {
        return invalid(format!("entry bound must be positive, got {bound}"));
    }
    let b2 = bound * bound;
    let f: Vec<f64> = y.iter().map(|v| v * v / b2).collect();
    let m = estimate_mean(&DenseVector { values: &f, per_call }, delta, ledger, rng)?;
    Ok(m * y.len() as f64 * b2)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        invalid(format!("relative accuracy must lie in (0, 1), got {delta}"))
    }
}
