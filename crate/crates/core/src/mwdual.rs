//! Primal–dual core: clipped quadratic multiplicative weights, ℓ2 sampling,
//! online gradient descent on the dual vector and the succinct classifier.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::instance::{query_entry, Charge, DataMatrix, Matrix, QueryLedger};
use crate::qsim::{amplify_prepare_sample, AmplitudeOracle, Profile};
use crate::rng::SimRng;

/// Rescale the dense weights when their maximum leaves this range.
const RESCALE_HI: f64 = 1e100;
const RESCALE_LO: f64 = 1e-100;

/// `v` clamped into `[−c, c]`.
#[inline]
pub fn clip(v: f64, c: f64) -> f64 {
    v.clamp(-c, c)
}

/// The quadratic update factor `1 − ηv + η²v²` with `v` clipped to `1/η`.
#[inline]
pub fn mw_factor(v: f64, eta: f64) -> f64 {
    let c = clip(v, 1.0 / eta);
    1.0 - eta * c + eta * eta * c * c
}

/// Amplitude convention of the weight state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmpModel {
    /// Amplitudes `√u(i)`: rows are measured with probability `u(i)/‖u‖₁`.
    #[default]
    SqrtWeight,
    /// Amplitudes `u(i)`: rows are measured with probability `u(i)²/‖u‖₂²`.
    LinearAmplitude,
}

impl FromStr for AmpModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<AmpModel> {
        match s {
            "sqrt-weight" => Ok(AmpModel::SqrtWeight),
            "linear-amplitude" => Ok(AmpModel::LinearAmplitude),
            other => invalid(format!("unknown amplitude model {other:?}")),
        }
    }
}

impl fmt::Display for AmpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AmpModel::SqrtWeight => "sqrt-weight",
            AmpModel::LinearAmplitude => "linear-amplitude",
        })
    }
}

/// `ln n` with `n` floored at 2, so a single-row input still gets a
/// non-degenerate round count.
pub fn log_n(n: usize) -> f64 {
    (n.max(2) as f64).ln()
}

/// Training parameters shared by the primal–dual solvers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub eps: f64,
    /// Fixed round count; derived from `eps` when absent.
    pub rounds: Option<usize>,
    /// Constant `c` in `T = ⌈c²·ε⁻²·ln n⌉`; each trainer has its own default.
    pub t_const: Option<f64>,
    pub amp_model: AmpModel,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(eps: f64, seed: u64) -> TrainConfig {
        TrainConfig {
            eps,
            rounds: None,
            t_const: None,
            amp_model: AmpModel::SqrtWeight,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return invalid(format!("eps must lie in (0, 1), got {}", self.eps));
        }
        if self.rounds == Some(0) {
            return invalid("round count must be at least 1");
        }
        if let Some(c) = self.t_const {
            if !(c > 0.0 && c.is_finite()) {
                return invalid(format!("round constant must be positive, got {c}"));
            }
        }
        Ok(())
    }

    pub fn rounds_for(&self, n: usize, default_const: f64) -> usize {
        if let Some(t) = self.rounds {
            return t;
        }
        let c = self.t_const.unwrap_or(default_const);
        ((c * c * log_n(n) / (self.eps * self.eps)).ceil() as usize).max(1)
    }

    /// `η = √(ln n / T)`.
    pub fn eta(n: usize, rounds: usize) -> f64 {
        (log_n(n) / rounds as f64).sqrt()
    }
}

/// One round of the estimator `ṽ(i) = b_i + X_i(col)·scale + shift`.
///
/// Linear rounds have `shift = 0` and no offsets; `scale = ‖w‖²/w(col)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub col: usize,
    pub scale: f64,
    pub shift: f64,
}

impl Step {
    pub fn linear(col: usize, scale: f64) -> Step {
        Step { col, scale, shift: 0.0 }
    }
}

/// The per-round records from which any weight `u_t(i)` can be recomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightHistory {
    pub eta: f64,
    pub steps: Vec<Step>,
    /// Row offsets `b_i` shared by every round (quadratic problems).
    pub offsets: Option<Vec<f64>>,
}

impl WeightHistory {
    pub fn new(eta: f64) -> WeightHistory {
        WeightHistory {
            eta,
            steps: Vec::new(),
            offsets: None,
        }
    }

    pub fn with_offsets(eta: f64, offsets: Vec<f64>) -> WeightHistory {
        WeightHistory {
            eta,
            steps: Vec::new(),
            offsets: Some(offsets),
        }
    }

    pub fn push(&mut self, step: Step) -> Result<()> {
        if !(step.scale.is_finite() && step.shift.is_finite()) {
            return invalid("history steps must be finite");
        }
        self.steps.push(step);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Unclipped `ṽ_s(i)`.
    #[inline]
    pub fn estimate(&self, x: &DataMatrix, i: usize, s: &Step) -> f64 {
        let b = self.offsets.as_ref().map_or(0.0, |b| b[i]);
        b + x.entry(i, s.col) * s.scale + s.shift
    }

    fn weight(&self, x: &DataMatrix, i: usize) -> f64 {
        self.steps
            .iter()
            .map(|s| mw_factor(self.estimate(x, i, s), self.eta))
            .product()
    }

    /// Data queries billed per weight evaluation.
    pub fn per_call(&self, ledger: &QueryLedger) -> u128 {
        ledger.cost().history_step_charge as u128 * self.steps.len() as u128
    }
}

/// `u_{t+1}(i) = Π_s (1 − ηv_s(i) + η²v_s(i)²)`, recomputed from the history.
/// Each recorded step costs `history_step_charge` entry queries.
pub fn lazy_weight(h: &WeightHistory, x: &DataMatrix, ledger: &mut QueryLedger, i: usize) -> Result<f64> {
    if i >= x.n() {
        return Err(Error::OutOfRange(format!("row {i} of {}", x.n())));
    }
    ledger.charge(Charge::Direct, h.per_call(ledger));
    Ok(h.weight(x, i))
}

/// Rows with identical entries. Their weights never differ under the linear
/// and quadratic updates, so they are tracked once per group.
#[derive(Clone, Debug)]
struct RowGroups {
    /// One representative row per group.
    reduced: DataMatrix,
    group_of: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl RowGroups {
    /// `None` when every row is distinct.
    fn find(x: &DataMatrix) -> Option<RowGroups> {
        let mut index: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();
        let mut group_of = Vec::with_capacity(x.n());
        let mut members: Vec<Vec<usize>> = Vec::new();
        for i in 0..x.n() {
            let key: Vec<(usize, u64)> = x
                .matrix()
                .row(i)
                .filter(|&(_, v)| v != 0.0)
                .map(|(j, v)| (j, v.to_bits()))
                .collect();
            let g = *index.entry(key).or_insert_with(|| {
                members.push(Vec::new());
                members.len() - 1
            });
            members[g].push(i);
            group_of.push(g);
        }
        if members.len() == x.n() {
            return None;
        }
        let rows: Vec<Vec<(usize, f64)>> = members
            .iter()
            .map(|m| x.matrix().row(m[0]).filter(|&(_, v)| v != 0.0).collect())
            .collect();
        let m = Matrix::sparse(members.len(), x.d(), rows).ok()?;
        let reduced = DataMatrix::new(m, x.labels_folded()).ok()?;
        Some(RowGroups {
            reduced,
            group_of,
            members,
        })
    }
}

/// Coefficient oracle over grouped weights under an amplitude convention.
struct WeightOracle<'a> {
    u: &'a [f64],
    groups: Option<&'a RowGroups>,
    n: usize,
    model: AmpModel,
    per_call: u128,
    profile: Profile,
}

impl<'a> WeightOracle<'a> {
    fn new(u: &'a [f64], groups: Option<&'a RowGroups>, model: AmpModel, per_call: u128) -> WeightOracle<'a> {
        let n = groups.map_or(u.len(), |g| g.group_of.len());
        let mut total = 0.0;
        let mut max = 0.0;
        let mut argmax = usize::MAX;
        for (g, &w) in u.iter().enumerate() {
            let a2 = amp_sq(model, w);
            let first = groups.map_or(g, |gr| gr.members[g][0]);
            total += a2 * groups.map_or(1.0, |gr| gr.members[g].len() as f64);
            if w > max || (w == max && w > 0.0 && first < argmax) {
                max = w;
                argmax = first;
            }
        }
        WeightOracle {
            u,
            groups,
            n,
            model,
            per_call,
            profile: Profile {
                norm_sq: total,
                argmax: if argmax == usize::MAX { 0 } else { argmax },
                max_abs: amp_sq(model, max).sqrt(),
            },
        }
    }
}

#[inline]
fn amp_sq(model: AmpModel, w: f64) -> f64 {
    match model {
        AmpModel::SqrtWeight => w,
        AmpModel::LinearAmplitude => w * w,
    }
}

impl AmplitudeOracle for WeightOracle<'_> {
    fn len(&self) -> usize {
        self.n
    }

    fn coefficient(&self, i: usize) -> f64 {
        let w = self.u[self.groups.map_or(i, |g| g.group_of[i])];
        amp_sq(self.model, w).sqrt()
    }

    fn queries_per_call(&self) -> u128 {
        self.per_call
    }

    fn profile(&self) -> Profile {
        self.profile
    }

    fn draw(&self, profile: &Profile, rng: &mut SimRng) -> usize {
        let target = rng.random::<f64>() * profile.norm_sq;
        let mut acc = 0.0;
        let mut pick = None;
        for (g, &w) in self.u.iter().enumerate() {
            let size = self.groups.map_or(1.0, |gr| gr.members[g].len() as f64);
            acc += amp_sq(self.model, w) * size;
            if acc > target {
                pick = Some(g);
                break;
            }
        }
        let g = match pick.or_else(|| self.u.iter().rposition(|&w| w > 0.0)) {
            Some(g) => g,
            None => return profile.argmax,
        };
        match self.groups {
            None => g,
            Some(gr) => {
                let m = &gr.members[g];
                if m.len() == 1 {
                    m[0]
                } else {
                    m[rng.random_range(0..m.len())]
                }
            }
        }
    }
}

/// Prepares the weight state from lazily evaluated weights and measures it.
pub fn measure_weight_state(
    h: &WeightHistory,
    x: &DataMatrix,
    model: AmpModel,
    ledger: &mut QueryLedger,
    rng: &mut SimRng,
) -> Result<usize> {
    let u: Vec<f64> = (0..x.n()).map(|i| h.weight(x, i)).collect();
    let per_call = h.per_call(ledger);
    measure(&WeightOracle::new(&u, None, model, per_call), ledger, rng)
}

fn measure(oracle: &WeightOracle<'_>, ledger: &mut QueryLedger, rng: &mut SimRng) -> Result<usize> {
    if oracle.profile.max_abs == 0.0 {
        return Err(Error::Degenerate("every weight vanished".into()));
    }
    Ok(amplify_prepare_sample(oracle, ledger, rng)?.index)
}

/// Running sums that certify the multiplicative-weights regret inequality.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MwMonitor {
    /// `Σ_t p_t·v_t` with `p_t = u_t/‖u_t‖₁` and `v_t` clipped.
    pub pv: f64,
    /// `Σ_t p_t·v_t²`.
    pub pv2: f64,
    /// `Σ_t v_t(i)` per row (per group of identical rows when grouped).
    pub cum_v: Vec<f64>,
}

impl MwMonitor {
    pub fn min_cum(&self) -> f64 {
        self.cum_v.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Densely maintained weights, equal to the lazy weights up to a common
/// positive factor.
#[derive(Clone, Debug)]
pub struct WeightState {
    /// One weight per group of identical rows (per row when ungrouped).
    u: Vec<f64>,
    size: Vec<f64>,
    groups: Option<RowGroups>,
    /// `Σ size·u`.
    total: f64,
    eta: f64,
    pub model: AmpModel,
    pub monitor: MwMonitor,
}

impl WeightState {
    /// Uniform weights over `n` rows, each tracked separately.
    pub fn new(n: usize, eta: f64, model: AmpModel) -> WeightState {
        WeightState {
            u: vec![1.0; n],
            size: vec![1.0; n],
            groups: None,
            total: n as f64,
            eta,
            model,
            monitor: MwMonitor {
                cum_v: vec![0.0; n],
                ..MwMonitor::default()
            },
        }
    }

    /// Uniform weights over the rows of `x`, with identical rows sharing one
    /// weight. Only valid with [`WeightState::apply`].
    pub fn for_rows(x: &DataMatrix, eta: f64, model: AmpModel) -> WeightState {
        let Some(groups) = RowGroups::find(x) else {
            return WeightState::new(x.n(), eta, model);
        };
        let k = groups.members.len();
        WeightState {
            u: vec![1.0; k],
            size: groups.members.iter().map(|m| m.len() as f64).collect(),
            groups: Some(groups),
            total: x.n() as f64,
            eta,
            model,
            monitor: MwMonitor {
                cum_v: vec![0.0; k],
                ..MwMonitor::default()
            },
        }
    }

    /// Per-row weights.
    pub fn weights(&self) -> Vec<f64> {
        match &self.groups {
            None => self.u.clone(),
            Some(g) => g.group_of.iter().map(|&k| self.u[k]).collect(),
        }
    }

    /// The normalized `ℓ1` law `u/‖u‖₁` over rows.
    pub fn probabilities(&self) -> Vec<f64> {
        self.weights().into_iter().map(|w| w / self.total).collect()
    }

    /// Applies one round's update and records it in the monitor.
    pub fn apply(&mut self, x: &DataMatrix, step: &Step, offsets: Option<&[f64]>) {
        let c = 1.0 / self.eta;
        let eta = self.eta;
        let (mut pv, mut pv2) = (0.0, 0.0);
        let size = &self.size;
        let mut update = |g: usize, raw: f64, u: &mut [f64], cum: &mut [f64]| {
            let v = clip(raw, c);
            let mass = u[g] * size[g];
            pv += mass * v;
            pv2 += mass * v * v;
            cum[g] += v;
            u[g] *= 1.0 - eta * v + eta * eta * v * v;
        };
        let (m, reps) = match &self.groups {
            None => (x, None),
            Some(g) => (&g.reduced, Some(&g.members)),
        };
        match offsets {
            None if step.shift == 0.0 => {
                if step.scale != 0.0 {
                    for (g, a) in m.matrix().col(step.col) {
                        update(g, a * step.scale, &mut self.u, &mut self.monitor.cum_v);
                    }
                }
            }
            _ => {
                let mut xcol = vec![0.0; self.u.len()];
                for (g, a) in m.matrix().col(step.col) {
                    xcol[g] = a;
                }
                for (g, &a) in xcol.iter().enumerate() {
                    let b = offsets.map_or(0.0, |b| b[reps.map_or(g, |r| r[g][0])]);
                    update(g, b + a * step.scale + step.shift, &mut self.u, &mut self.monitor.cum_v);
                }
            }
        }
        self.monitor.pv += pv / self.total;
        self.monitor.pv2 += pv2 / self.total;
        self.refresh();
    }

    /// Applies one round given every row's unclipped estimate.
    ///
    /// # Panics
    ///
    /// If the state groups identical rows.
    pub fn apply_values(&mut self, v: &[f64]) {
        assert!(self.groups.is_none(), "per-row values need an ungrouped state");
        let c = 1.0 / self.eta;
        let (mut pv, mut pv2) = (0.0, 0.0);
        for ((u, cum), &raw) in self.u.iter_mut().zip(self.monitor.cum_v.iter_mut()).zip(v) {
            let v = clip(raw, c);
            pv += *u * v;
            pv2 += *u * v * v;
            *cum += v;
            *u *= 1.0 - self.eta * v + self.eta * self.eta * v * v;
        }
        self.monitor.pv += pv / self.total;
        self.monitor.pv2 += pv2 / self.total;
        self.refresh();
    }

    /// Recomputes the total and rescales when the weights drift out of range.
    fn refresh(&mut self) {
        let mut max = 0.0f64;
        let mut total = 0.0;
        for (&w, &s) in self.u.iter().zip(&self.size) {
            max = max.max(w);
            total += w * s;
        }
        if max > 0.0 && !(RESCALE_LO..=RESCALE_HI).contains(&max) {
            self.u.iter_mut().for_each(|w| *w /= max);
            total /= max;
        }
        self.total = total;
    }

    /// Draws a row from the `ℓ1` law `u/‖u‖₁` on the host, without charging.
    pub fn sample_host(&self, rng: &mut SimRng) -> usize {
        let oracle = WeightOracle::new(&self.u, self.groups.as_ref(), AmpModel::SqrtWeight, 0);
        oracle.draw(&oracle.profile, rng)
    }

    /// Measures the weight state; each coefficient evaluation is billed
    /// `per_call` data queries.
    pub fn measure(&self, per_call: u128, ledger: &mut QueryLedger, rng: &mut SimRng) -> Result<usize> {
        measure(&WeightOracle::new(&self.u, self.groups.as_ref(), self.model, per_call), ledger, rng)
    }
}

/// Draws `j` with probability `v(j)²/‖v‖²` from a host-resident vector,
/// billing one entry query per coordinate.
pub fn l2_sample(v: &[f64], ledger: &mut QueryLedger, rng: &mut SimRng) -> Result<usize> {
    let total: f64 = v.iter().map(|a| a * a).sum();
    if total == 0.0 {
        return Err(Error::ZeroVector);
    }
    let c = ledger.cost().entry_charge as u128;
    ledger.charge(Charge::Direct, c * v.len() as u128);
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (j, a) in v.iter().enumerate() {
        acc += a * a;
        if acc > target {
            return Ok(j);
        }
    }
    Ok(v.iter().rposition(|&a| a != 0.0).expect("nonzero vector"))
}

/// The dual iterate `y_t = (1/√(2T))·Σ_{τ<t} X_{i_τ}` with its exact norm.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    pub scale: f64,
    pub y: Vec<f64>,
    pub norm_sq: f64,
    pub picks: Vec<usize>,
}

impl DualState {
    pub fn new(d: usize, rounds: usize) -> DualState {
        DualState {
            scale: 1.0 / (2.0 * rounds as f64).sqrt(),
            y: vec![0.0; d],
            norm_sq: 0.0,
            picks: Vec::new(),
        }
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq.max(0.0).sqrt()
    }

    /// `w_t = y_t / max(1, ‖y_t‖)`.
    pub fn w(&self) -> Vec<f64> {
        let s = self.norm().max(1.0);
        self.y.iter().map(|v| v / s).collect()
    }
}

/// `y_{t+1} = y_t + X_i/√(2T)`, updating the cached norm incrementally.
pub fn ogd_step(s: &mut DualState, x: &DataMatrix, i: usize) {
    let a = s.scale;
    let dot = x.matrix().row_dot(i, &s.y);
    s.norm_sq += 2.0 * a * dot + a * a * x.matrix().row_norm_sq(i);
    for (j, v) in x.matrix().row(i) {
        s.y[j] += a * v;
    }
    s.picks.push(i);
}

/// `w̄ = (1/T)·Σ_t y_t / max(1, norm_t)` stored as its pick log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccinctClassifier {
    #[serde(rename = "T")]
    pub t: usize,
    pub scale: f64,
    pub picks: Vec<usize>,
    pub norms: Vec<f64>,
}

impl SuccinctClassifier {
    pub fn validate(&self, n: usize) -> Result<()> {
        if self.picks.len() != self.t || self.norms.len() != self.t {
            return invalid(format!(
                "T = {} but {} picks and {} norms",
                self.t,
                self.picks.len(),
                self.norms.len()
            ));
        }
        if let Some(&i) = self.picks.iter().find(|&&i| i >= n) {
            return Err(Error::OutOfRange(format!("pick {i} of {n} rows")));
        }
        if self.norms.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return invalid("norms must be finite and non-negative");
        }
        Ok(())
    }

    /// Coefficient `β_r` of `X_{i_r}` in `w̄ = Σ_r β_r X_{i_r}`.
    pub fn pick_weights(&self) -> Vec<f64> {
        let mut beta = vec![0.0; self.t];
        let mut suffix = 0.0;
        for r in (0..self.t).rev() {
            beta[r] = self.scale * suffix / self.t as f64;
            suffix += 1.0 / self.norms[r].max(1.0);
        }
        beta
    }

    /// `w̄` densely, without charging.
    pub fn reconstruct(&self, x: &DataMatrix) -> Result<Vec<f64>> {
        self.validate(x.n())?;
        let mut w = vec![0.0; x.d()];
        for (&i, b) in self.picks.iter().zip(self.pick_weights()) {
            if b != 0.0 {
                for (j, v) in x.matrix().row(i) {
                    w[j] += b * v;
                }
            }
        }
        Ok(w)
    }
}

/// `w̄(j)`, reading `X_{i_t}(j)` through the entry oracle once per round.
pub fn reconstruct_coordinate(
    c: &SuccinctClassifier,
    x: &DataMatrix,
    ledger: &mut QueryLedger,
    j: usize,
) -> Result<f64> {
    c.validate(x.n())?;
    if j >= x.d() {
        return Err(Error::OutOfRange(format!("column {j} of {}", x.d())));
    }
    let mut y = 0.0;
    let mut acc = 0.0;
    for (&i, &norm) in c.picks.iter().zip(&c.norms) {
        acc += y / norm.max(1.0);
        y += c.scale * query_entry(x, ledger, i, j)?;
    }
    Ok(acc / c.t as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{case2, Matrix};
    use crate::rng::seeded;

    #[test]
    fn clip_examples() {
        assert_eq!(clip(0.5, 10.0), 0.5);
        assert_eq!(clip(15.0, 10.0), 10.0);
        assert_eq!(clip(-15.0, 10.0), -10.0);
    }

    #[test]
    fn factor_at_clip_boundary_is_one() {
        for eta in [0.01, 0.3, 1.0] {
            assert!((mw_factor(1.0 / eta, eta) - 1.0).abs() < 1e-12);
            assert!((mw_factor(1e9, eta) - 1.0).abs() < 1e-12);
        }
        assert_eq!(mw_factor(0.0, 0.1), 1.0);
    }

    #[test]
    fn empty_history_gives_unit_weights() {
        let x = case2(4, 3, 1).unwrap();
        let h = WeightHistory::new(0.1);
        let mut l = QueryLedger::default();
        for i in 0..4 {
            assert_eq!(lazy_weight(&h, &x, &mut l, i).unwrap(), 1.0);
        }
        assert_eq!(l.charged_queries(), 0);
    }

    #[test]
    fn lazy_weight_charges_per_step() {
        let x = case2(4, 3, 1).unwrap();
        let mut h = WeightHistory::new(0.1);
        h.push(Step::linear(2, 1.0)).unwrap();
        h.push(Step::linear(0, 0.5)).unwrap();
        let mut l = QueryLedger::default();
        let u = lazy_weight(&h, &x, &mut l, 1).unwrap();
        assert_eq!(l.charged_queries(), 4);
        let v = std::f64::consts::FRAC_1_SQRT_2 * 0.5;
        assert!((u - (1.0 - 0.1 * v + 0.01 * v * v)).abs() < 1e-15);
    }

    #[test]
    fn ogd_collinear_norm() {
        let x = DataMatrix::from_rows(&[vec![1.0, 0.0]]).unwrap();
        let t = 50;
        let mut s = DualState::new(2, t);
        ogd_step(&mut s, &x, 0);
        assert!((s.y[0] - 0.1).abs() < 1e-15);
        for _ in 1..t {
            ogd_step(&mut s, &x, 0);
        }
        assert!((s.norm() - (t as f64 / 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn first_iterate_is_zero() {
        let x = DataMatrix::from_rows(&[vec![0.6, 0.8]]).unwrap();
        let c = SuccinctClassifier {
            t: 1,
            scale: 1.0 / 2f64.sqrt(),
            picks: vec![0],
            norms: vec![0.0],
        };
        let mut l = QueryLedger::default();
        assert_eq!(reconstruct_coordinate(&c, &x, &mut l, 0).unwrap(), 0.0);
        assert_eq!(c.reconstruct(&x).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn classifier_serializes_in_fixed_order() {
        let c = SuccinctClassifier {
            t: 2,
            scale: 0.5,
            picks: vec![1, 0],
            norms: vec![0.0, 0.5],
        };
        let s = serde_json::to_string(&c).unwrap();
        assert_eq!(s, r#"{"T":2,"scale":0.5,"picks":[1,0],"norms":[0.0,0.5]}"#);
    }

    #[test]
    fn l2_sample_point_mass_and_zero() {
        let mut l = QueryLedger::default();
        let mut rng = seeded(0);
        for _ in 0..50 {
            assert_eq!(l2_sample(&[0.0, 0.0, 2.0], &mut l, &mut rng).unwrap(), 2);
        }
        assert_eq!(l.charged_queries(), 150);
        assert!(matches!(l2_sample(&[0.0; 3], &mut l, &mut rng), Err(Error::ZeroVector)));
    }

    #[test]
    fn dense_state_tracks_lazy_weights() {
        let m = Matrix::from_rows(&[vec![0.5, -0.2], vec![-0.7, 0.1], vec![0.0, 0.9]]).unwrap();
        let x = DataMatrix::new(m, false).unwrap();
        let eta = 0.3;
        let mut h = WeightHistory::new(eta);
        let mut st = WeightState::new(3, eta, AmpModel::SqrtWeight);
        for (t, col) in [0usize, 1, 1, 0, 1].iter().enumerate() {
            let step = Step::linear(*col, 0.4 + t as f64);
            h.push(step).unwrap();
            st.apply(&x, &step, None);
        }
        for i in 0..3 {
            assert!((st.weights()[i] - h.weight(&x, i)).abs() < 1e-12);
        }
    }

    #[test]
    fn grouped_rows_match_per_row_state() {
        let x = case2(6, 3, 1).unwrap();
        let eta = 0.2;
        let mut grouped = WeightState::for_rows(&x, eta, AmpModel::SqrtWeight);
        let mut plain = WeightState::new(6, eta, AmpModel::SqrtWeight);
        assert!(grouped.groups.is_some());
        let b: Vec<f64> = (0..6).map(|i| -x.matrix().row_norm_sq(i)).collect();
        for (t, col) in [0usize, 1, 0, 2].iter().enumerate() {
            let step = Step { col: *col, scale: 1.5 - t as f64, shift: -0.3 };
            grouped.apply(&x, &step, Some(&b));
            plain.apply(&x, &step, Some(&b));
        }
        for (a, b) in grouped.weights().iter().zip(plain.weights()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((grouped.monitor.pv - plain.monitor.pv).abs() < 1e-12);
        assert!((grouped.monitor.pv2 - plain.monitor.pv2).abs() < 1e-12);
        assert_eq!(grouped.monitor.min_cum(), plain.monitor.min_cum());
    }
}
