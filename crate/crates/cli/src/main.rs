use std::env;
use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use sublin::classify::{KernelMode, KernelSpec};
use sublin::instance::{InstanceKind, InstanceSpec};
use sublin::mwdual::AmpModel;
use sublin::qsim::QueryCostModel;
use sublin::quadratic::Budget;

mod bench;
mod record;
mod run;
mod source;
mod verify;

use source::DataArgs;

#[derive(Parser, Debug)]
#[command(name = "sublin", version, about = "Sublinear maximin classifiers, enclosing balls, SVMs and zero-sum games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a maximin-margin classifier.
    Train(TrainArgs),
    /// Approximate the minimum enclosing ball.
    Meb(QuadArgs),
    /// Train an l2-margin SVM.
    Svm(QuadArgs),
    /// Solve a zero-sum game.
    Game(GameArgs),
    /// Measure charged queries across a geometric size sweep.
    Bench(bench::BenchArgs),
    /// Recompute the audits of a stored run record.
    Verify(verify::VerifyArgs),
    /// Write a generated instance as csv.
    Gen(GenArgs),
}

/// Flags shared by every command that runs a solver.
#[derive(Args, Clone, Debug)]
pub struct CommonArgs {
    /// Master seed; falls back to $SUBLIN_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the JSON record here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with status 3 when the run's contract is violated.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    pub cost: CostArgs,
}

#[derive(Args, Clone, Debug, Default)]
pub struct CostArgs {
    /// Coefficient-oracle calls per amplification iteration.
    #[arg(long = "cost.c-prep", value_parser = clap::value_parser!(u64).range(1..))]
    pub c_prep: Option<u64>,
    /// Maximum-finding multiplier.
    #[arg(long = "cost.c-dh", value_parser = positive)]
    pub c_dh: Option<f64>,
    /// Fixed-point bits for mean estimation.
    #[arg(long = "cost.bits-l", value_parser = clap::value_parser!(u32).range(1..=64))]
    pub bits_l: Option<u32>,
    /// Phase-grid constant for amplitude estimation.
    #[arg(long = "cost.ae-const", value_parser = positive)]
    pub ae_const: Option<f64>,
}

impl CostArgs {
    pub fn model(&self) -> QueryCostModel {
        let mut m = QueryCostModel::default();
        if let Some(v) = self.c_prep {
            m.c_prep_per_iter = v;
        }
        if let Some(v) = self.c_dh {
            m.c_dh = v;
        }
        if let Some(v) = self.bits_l {
            m.bits_l = v;
        }
        if let Some(v) = self.ae_const {
            m.ae_const = v;
        }
        m
    }
}

/// A bad flag value that only shows up after parsing; exits with status 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

impl CommonArgs {
    pub fn seed(&self) -> Result<u64> {
        Ok(resolve_seed(self.seed)?.unwrap_or(0))
    }
}

pub fn resolve_seed(flag: Option<u64>) -> Result<Option<u64>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match env::var("SUBLIN_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Usage(format!("SUBLIN_SEED={v:?} is not an unsigned integer")).into()),
        Err(_) => Ok(None),
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

pub fn unit_eps(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v < 1.0 => Ok(v),
        _ => Err(format!("eps must lie in (0, 1), got {s:?}")),
    }
}

/// Round-count overrides shared by the trainers.
#[derive(Args, Clone, Debug)]
pub struct RoundArgs {
    /// Fixed round count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: Option<u64>,
    /// Constant c in T = ceil(c^2 ln(n) / eps^2).
    #[arg(long = "t-const", value_parser = positive)]
    pub t_const: Option<f64>,
    /// Weight-state amplitude convention.
    #[arg(long = "amp-model", default_value = "sqrt-weight")]
    pub amp_model: AmpModel,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = unit_eps)]
    pub eps: f64,
    /// sqrt-n or sqrt-d.
    #[arg(long, default_value = "sqrt-n")]
    pub budget: Budget,
    /// linear, poly:q or gauss:s.
    #[arg(long, default_value = "linear")]
    pub kernel: KernelSpec,
    /// explicit or estimator.
    #[arg(long = "kernel-mode", default_value = "estimator")]
    pub kernel_mode: KernelMode,
    /// Independent runs; the one with the best audited margin is kept.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub repeats: u64,
    #[command(flatten)]
    pub rounds: RoundArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct QuadArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_parser = unit_eps)]
    pub eps: f64,
    /// sqrt-n or sqrt-d.
    #[arg(long, default_value = "sqrt-n")]
    pub budget: Budget,
    #[command(flatten)]
    pub rounds: RoundArgs,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct GameArgs {
    /// Payoff matrix: a csv file or an instance spec such as `zerosum:n=12,k=4`.
    #[arg(long)]
    pub matrix: String,
    #[arg(long, value_parser = unit_eps)]
    pub eps: f64,
    /// Independent solver runs; the first eps-optimal one is kept.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,
    /// Fixed round count.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub rounds: Option<u64>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_parser = source::parse_spec)]
    pub instance: String,
    /// Falls back to $SUBLIN_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn gen(a: &GenArgs) -> Result<bool> {
    let seed = resolve_seed(a.seed)?.unwrap_or(0);
    let spec: InstanceSpec = a.instance.parse()?;
    let matrix = if matches!(spec.kind, InstanceKind::LowerZeroSum | InstanceKind::RandomAntisymmetric) {
        source::load_game_matrix(&a.instance, seed)?
    } else {
        let spec = DataArgs {
            instance: Some(a.instance.clone()),
            ..DataArgs::default()
        };
        spec.load(seed)?.x.matrix().clone()
    };
    source::write_csv(&matrix, a.out.as_deref())?;
    Ok(true)
}

fn dispatch(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train(a) => run::train(&a),
        Command::Meb(a) => run::meb(&a),
        Command::Svm(a) => run::svm(&a),
        Command::Game(a) => run::game(&a),
        Command::Bench(a) => bench::run(&a),
        Command::Verify(a) => verify::run(&a),
        Command::Gen(a) => gen(&a),
    }
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        c.is::<Usage>()
            || matches!(
                c.downcast_ref::<sublin::Error>(),
                Some(sublin::Error::Invalid(_) | sublin::Error::OutOfRange(_))
            )
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
