//! Charged-query scaling sweeps.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use sublin::classify::{train_classical_baseline, train_linear_sqrt_d, train_linear_sqrt_n, SQRT_D_CONST, SQRT_N_CONST};
use sublin::instance::{case2, lower_zerosum, QueryLedger};
use sublin::mwdual::TrainConfig;
use sublin::rng::seeded;
use sublin::zerosum::{game_rounds, solve_game_rounds};

use crate::{resolve_seed, unit_eps, CostArgs, Usage};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Sweep {
    N,
    D,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Alg {
    SqrtN,
    SqrtD,
    Baseline,
    Game,
}

impl Alg {
    fn name(self) -> &'static str {
        match self {
            Alg::SqrtN => "sqrt-n",
            Alg::SqrtD => "sqrt-d",
            Alg::Baseline => "baseline",
            Alg::Game => "game",
        }
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Dimension to sweep.
    #[arg(long, value_enum)]
    pub sweep: Sweep,
    /// Smallest size is 2^from.
    #[arg(long, default_value_t = 8)]
    pub from: u32,
    /// Largest size is 2^to.
    #[arg(long, default_value_t = 13)]
    pub to: u32,
    /// Algorithms to run (repeatable).
    #[arg(long = "alg", value_enum, required = true)]
    pub algs: Vec<Alg>,
    /// Seeds per size.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    #[arg(long, default_value_t = 0.1, value_parser = unit_eps)]
    pub eps: f64,
    /// Row count when sweeping d.
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    /// Column count when sweeping n.
    #[arg(long, default_value_t = 8)]
    pub d: usize,
    /// Let the round count grow with n instead of fixing it at the smallest size.
    #[arg(long = "scale-rounds")]
    pub scale_rounds: bool,
    /// Base seed; required here (or via $SUBLIN_SEED).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the csv here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub cost: CostArgs,
}

/// Least-squares slope of `ln y` against `ln x`; NaN below two points.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    if points.len() < 2 {
        return f64::NAN;
    }
    let k = points.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let k = v.len() as f64;
    let mean = v.iter().sum::<f64>() / k;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, var.sqrt())
}

fn charged(a: &BenchArgs, alg: Alg, size: usize, rounds: usize, seed: u64) -> Result<f64> {
    let cost = a.cost.model();
    let mut ledger = QueryLedger::new(cost);
    let mut rng = seeded(seed);
    if alg == Alg::Game {
        let g = lower_zerosum(size, (size / 3).max(1))?;
        solve_game_rounds(&g, a.eps, Some(rounds), &mut ledger, &mut rng)?;
        return Ok(ledger.charged_queries() as f64);
    }
    let (n, d) = match a.sweep {
        Sweep::N => (size, a.d),
        Sweep::D => (a.n, size),
    };
    let x = case2(n, d, 2.min(d))?;
    let mut cfg = TrainConfig::new(a.eps, seed);
    cfg.rounds = Some(rounds);
    let run = match alg {
        Alg::SqrtN => train_linear_sqrt_n(&x, &cfg, &mut ledger, &mut rng)?,
        Alg::SqrtD => train_linear_sqrt_d(&x, &cfg, &mut ledger, &mut rng)?,
        _ => train_classical_baseline(&x, &cfg, &mut ledger, &mut rng)?,
    };
    Ok(run.ledger.charged_queries as f64)
}

fn rounds_for(a: &BenchArgs, alg: Alg, size: usize) -> usize {
    let n = match (a.sweep, a.scale_rounds) {
        (Sweep::N, true) => size,
        (Sweep::N, false) => 1usize << a.from,
        (Sweep::D, _) => a.n,
    };
    match alg {
        Alg::Game => game_rounds(n, a.eps),
        Alg::SqrtD => TrainConfig::new(a.eps, 0).rounds_for(n, SQRT_D_CONST),
        _ => TrainConfig::new(a.eps, 0).rounds_for(n, SQRT_N_CONST),
    }
}

pub fn run(a: &BenchArgs) -> Result<bool> {
    let seed = resolve_seed(a.seed)?.ok_or_else(|| Usage("bench needs --seed or SUBLIN_SEED".into()))?;
    if a.from > a.to || a.to > 30 {
        return Err(Usage(format!("bad exponent range {}..{}", a.from, a.to)).into());
    }
    if a.sweep == Sweep::D && a.algs.contains(&Alg::Game) {
        return Err(Usage("the game solver has no column dimension to sweep".into()).into());
    }
    if a.sweep == Sweep::D && a.n < 3 || a.sweep == Sweep::N && (a.d < 2 || a.from < 2) {
        return Err(Usage("lower-bound instances need n >= 4 and d >= 2".into()).into());
    }
    let mut csv = String::from("alg,size,mean_charged,std_charged\n");
    let mut slopes = Vec::new();
    for &alg in &a.algs {
        let mut points = Vec::new();
        for e in a.from..=a.to {
            let size = 1usize << e;
            let rounds = rounds_for(a, alg, size);
            let samples = (0..a.seeds)
                .map(|s| charged(a, alg, size, rounds, seed.wrapping_add(s)))
                .collect::<Result<Vec<f64>>>()?;
            let (mean, std) = mean_std(&samples);
            writeln!(csv, "{},{size},{mean},{std}", alg.name())?;
            points.push((size as f64, mean));
        }
        slopes.push((alg, loglog_slope(&points)));
    }
    match &a.out {
        Some(p) => fs::write(p, &csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{csv}"),
    }
    for (alg, slope) in slopes {
        if slope.is_nan() {
            eprintln!("warning: {} has a single size; slope undefined", alg.name());
        }
        eprintln!("slope {} {slope}", alg.name());
    }
    Ok(true)
}
