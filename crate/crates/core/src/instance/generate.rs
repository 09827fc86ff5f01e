use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DataMatrix, Matrix};
use crate::error::{Error, Result};
use crate::rng::{seeded, SimRng};
use crate::zerosum::GameInstance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InstanceKind {
    RandomBall,
    Case1,
    Case2,
    LowerZeroSum,
    RandomAntisymmetric,
    File,
}

impl InstanceKind {
    fn name(self) -> &'static str {
        match self {
            InstanceKind::RandomBall => "ball",
            InstanceKind::Case1 => "case1",
            InstanceKind::Case2 => "case2",
            InstanceKind::LowerZeroSum => "zerosum",
            InstanceKind::RandomAntisymmetric => "antisym",
            InstanceKind::File => "file",
        }
    }
}

/// Declarative instance description, e.g. `case1:n=64,d=8,k=3,l=2`.
///
/// `k` and `l` are 1-based here, matching the lower-bound constructions
/// (column 1 is the shared column, `l ∈ {2..d}`, `k ∈ {3..n}`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceSpec {
    pub kind: InstanceKind,
    pub n: usize,
    pub d: usize,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub seed: Option<u64>,
}

pub enum Generated {
    Data(DataMatrix),
    Game(GameInstance),
}

impl Generated {
    pub fn into_data(self) -> Result<DataMatrix> {
        match self {
            Generated::Data(x) => Ok(x),
            Generated::Game(_) => Err(Error::Invalid("instance is a game, not a data matrix".into())),
        }
    }

    pub fn into_game(self) -> Result<GameInstance> {
        match self {
            Generated::Game(g) => Ok(g),
            Generated::Data(_) => Err(Error::Invalid("instance is a data matrix, not a game".into())),
        }
    }
}

impl FromStr for InstanceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<InstanceSpec> {
        let (kind, params) = s.split_once(':').unwrap_or((s, ""));
        let kind = match kind {
            "ball" | "random-ball" => InstanceKind::RandomBall,
            "case1" | "lower-linear-case1" => InstanceKind::Case1,
            "case2" | "lower-linear-case2" => InstanceKind::Case2,
            "zerosum" | "lower-zerosum" => InstanceKind::LowerZeroSum,
            "antisym" | "random-antisymmetric" => InstanceKind::RandomAntisymmetric,
            other => return Err(Error::Invalid(format!("unknown instance kind {other:?}"))),
        };
        let mut spec = InstanceSpec {
            kind,
            n: 0,
            d: 0,
            k: None,
            l: None,
            seed: None,
        };
        for kv in params.split(',').filter(|p| !p.is_empty()) {
            let (key, val) = kv
                .split_once('=')
                .ok_or_else(|| Error::Invalid(format!("expected key=value, got {kv:?}")))?;
            let num: u64 = val
                .parse()
                .map_err(|_| Error::Invalid(format!("{key}: not an integer: {val:?}")))?;
            match key {
                "n" => spec.n = num as usize,
                "d" => spec.d = num as usize,
                "k" => spec.k = Some(num as usize),
                "l" => spec.l = Some(num as usize),
                "seed" => spec.seed = Some(num),
                other => return Err(Error::Invalid(format!("unknown instance parameter {other:?}"))),
            }
        }
        if matches!(kind, InstanceKind::LowerZeroSum | InstanceKind::RandomAntisymmetric) && spec.d == 0 {
            spec.d = spec.n;
        }
        Ok(spec)
    }
}

impl fmt::Display for InstanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:n={}", self.kind.name(), self.n)?;
        if !matches!(self.kind, InstanceKind::LowerZeroSum | InstanceKind::RandomAntisymmetric) {
            write!(f, ",d={}", self.d)?;
        }
        if let Some(k) = self.k {
            write!(f, ",k={k}")?;
        }
        if let Some(l) = self.l {
            write!(f, ",l={l}")?;
        }
        if let Some(s) = self.seed {
            write!(f, ",seed={s}")?;
        }
        Ok(())
    }
}

fn need(v: Option<usize>, name: &str) -> Result<usize> {
    v.ok_or_else(|| Error::Invalid(format!("missing parameter {name}")))
}

/// Builds the instance. Random kinds use `spec.seed` when present, otherwise `rng`.
pub fn generate(spec: &InstanceSpec, rng: &mut SimRng) -> Result<Generated> {
    let mut own;
    let rng = match spec.seed {
        Some(s) => {
            own = seeded(s);
            &mut own
        }
        None => rng,
    };
    match spec.kind {
        InstanceKind::RandomBall => random_ball(spec.n, spec.d, rng).map(Generated::Data),
        InstanceKind::Case1 => {
            let k = need(spec.k, "k")?;
            let l = need(spec.l, "l")?;
            if k < 3 || k > spec.n {
                return Err(Error::OutOfRange(format!("k={k} not in 3..={}", spec.n)));
            }
            if l < 2 || l > spec.d {
                return Err(Error::OutOfRange(format!("l={l} not in 2..={}", spec.d)));
            }
            case1(spec.n, spec.d, k - 1, l - 1).map(Generated::Data)
        }
        InstanceKind::Case2 => {
            let l = need(spec.l, "l")?;
            if l < 2 || l > spec.d {
                return Err(Error::OutOfRange(format!("l={l} not in 2..={}", spec.d)));
            }
            case2(spec.n, spec.d, l - 1).map(Generated::Data)
        }
        InstanceKind::LowerZeroSum => {
            let k = need(spec.k, "k")?;
            if k < 1 || k > spec.n {
                return Err(Error::OutOfRange(format!("k={k} not in 1..={}", spec.n)));
            }
            lower_zerosum(spec.n, k - 1).map(Generated::Game)
        }
        InstanceKind::RandomAntisymmetric => random_antisymmetric(spec.n, rng).map(Generated::Game),
        InstanceKind::File => Err(Error::Invalid("file instances are loaded, not generated".into())),
    }
}

/// Rows drawn uniformly from the unit ball.
pub fn random_ball(n: usize, d: usize, rng: &mut SimRng) -> Result<DataMatrix> {
    if n == 0 || d == 0 {
        return Err(Error::Empty);
    }
    let mut data = Vec::with_capacity(n * d);
    for _ in 0..n {
        let g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let r = rng.random::<f64>().powf(1.0 / d as f64);
        data.extend(g.iter().map(|v| v * r / norm));
    }
    DataMatrix::new(Matrix::dense(n, d, data)?, false)
}

fn lower_linear(n: usize, d: usize, planted: Option<usize>, l: usize) -> Result<DataMatrix> {
    if l == 0 || l >= d {
        return Err(Error::OutOfRange(format!("column {l} not in 1..{d}")));
    }
    let rows = (0..n)
        .map(|i| {
            if Some(i) == planted {
                vec![(0, 1.0)]
            } else if i == 0 {
                vec![(0, -FRAC_1_SQRT_2), (l, FRAC_1_SQRT_2)]
            } else {
                vec![(0, FRAC_1_SQRT_2), (l, FRAC_1_SQRT_2)]
            }
        })
        .collect();
    DataMatrix::new(Matrix::sparse(n, d, rows)?, false)
}

/// Case 1 of the linear lower bound: row 0 is (−1/√2)e₀ + (1/√2)e_l, row `k`
/// is e₀, all others (1/√2)(e₀ + e_l). Indices 0-based; `k ≥ 2`, `l ≥ 1`.
pub fn case1(n: usize, d: usize, k: usize, l: usize) -> Result<DataMatrix> {
    if n < 3 {
        return Err(Error::Invalid(format!("case 1 needs n >= 3, got {n}")));
    }
    if k < 2 || k >= n {
        return Err(Error::OutOfRange(format!("planted row {k} not in 2..{n}")));
    }
    lower_linear(n, d, Some(k), l)
}

/// Case 2 of the linear lower bound: Case 1 without the planted row.
pub fn case2(n: usize, d: usize, l: usize) -> Result<DataMatrix> {
    if n == 0 {
        return Err(Error::Empty);
    }
    lower_linear(n, d, None, l)
}

/// Hard zero-sum instance: row `k` is +1 off the diagonal, column `k` is −1
/// off the diagonal, everything else 0.
pub fn lower_zerosum(n: usize, k: usize) -> Result<GameInstance> {
    if k >= n {
        return Err(Error::OutOfRange(format!("planted index {k} not below {n}")));
    }
    let rows = (0..n)
        .map(|i| {
            if i == k {
                (0..n).filter(|&j| j != k).map(|j| (j, 1.0)).collect()
            } else {
                vec![(k, -1.0)]
            }
        })
        .collect();
    GameInstance::new(Matrix::sparse(n, n, rows)?)
}

/// Antisymmetric matrix with upper-triangle entries uniform on [−1, 1].
pub fn random_antisymmetric(n: usize, rng: &mut SimRng) -> Result<GameInstance> {
    if n == 0 {
        return Err(Error::Empty);
    }
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.random_range(-1.0..=1.0);
            data[i * n + j] = v;
            data[j * n + i] = -v;
        }
    }
    GameInstance::new(Matrix::dense(n, n, data)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S: f64 = FRAC_1_SQRT_2;

    fn gen(s: &str) -> Result<Generated> {
        generate(&s.parse()?, &mut seeded(0))
    }

    #[test]
    fn case2_matches_display() {
        let x = gen("case2:n=4,d=3,l=2").unwrap().into_data().unwrap();
        assert_eq!(
            x.matrix().to_rows(),
            vec![
                vec![-S, S, 0.0],
                vec![S, S, 0.0],
                vec![S, S, 0.0],
                vec![S, S, 0.0]
            ]
        );
    }

    #[test]
    fn case1_plants_unit_row() {
        let x = gen("case1:n=4,d=3,k=3,l=2").unwrap().into_data().unwrap();
        assert_eq!(
            x.matrix().to_rows(),
            vec![
                vec![-S, S, 0.0],
                vec![S, S, 0.0],
                vec![1.0, 0.0, 0.0],
                vec![S, S, 0.0]
            ]
        );
    }

    #[test]
    fn lower_zerosum_matches_construction() {
        let g = gen("zerosum:n=3,k=2").unwrap().into_game().unwrap();
        assert_eq!(
            g.matrix().to_rows(),
            vec![
                vec![0.0, -1.0, 0.0],
                vec![1.0, 0.0, 1.0],
                vec![0.0, -1.0, 0.0]
            ]
        );
        assert!(g.is_antisymmetric());
    }

    #[test]
    fn index_checks() {
        assert!(gen("case1:n=2,d=3,k=2,l=2").is_err());
        assert!(gen("case1:n=4,d=3,k=2,l=2").is_err());
        assert!(gen("case1:n=4,d=3,k=3,l=1").is_err());
        assert!(gen("case2:n=4,d=3,l=4").is_err());
        assert!(gen("zerosum:n=3,k=4").is_err());
        assert!(gen("case2:n=4,d=3").is_err());
        assert!("bogus:n=1".parse::<InstanceSpec>().is_err());
        assert!("case2:n=x".parse::<InstanceSpec>().is_err());
    }

    #[test]
    fn spec_round_trips_through_text() {
        for s in ["case1:n=64,d=8,k=3,l=2", "ball:n=5,d=3,seed=9", "zerosum:n=64,k=7"] {
            let spec: InstanceSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn random_ball_rows_inside_ball() {
        let x = random_ball(200, 5, &mut seeded(3)).unwrap();
        assert!(x.max_row_norm() <= 1.0 + 1e-12);
        let same = random_ball(200, 5, &mut seeded(3)).unwrap();
        assert_eq!(x, same);
    }

    #[test]
    fn random_antisymmetric_is_antisymmetric() {
        let g = random_antisymmetric(9, &mut seeded(1)).unwrap();
        assert!(g.is_antisymmetric());
        assert!(g.matrix().max_abs() <= 1.0);
    }
}
