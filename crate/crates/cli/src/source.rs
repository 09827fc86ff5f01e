//! Where a command's data comes from, and how to rebuild it for `verify`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sublin::instance::{
    generate, read_raw, DataMatrix, Format, InstanceKind, InstanceSpec, LoadOptions, Matrix,
};
use sublin::rng::seeded;
use sublin::zerosum::GameInstance;

pub fn parse_spec(s: &str) -> Result<String, String> {
    s.parse::<InstanceSpec>().map_err(|e| e.to_string())?;
    Ok(s.to_string())
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DataArgs {
    /// Generated instance, e.g. `case2:n=64,d=8,l=3` (1-based k, l).
    #[arg(long, value_parser = parse_spec, conflicts_with = "data", required_unless_present = "data")]
    pub instance: Option<String>,
    /// Dataset file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// File format: csv or svmlight.
    #[arg(long, default_value = "csv", value_parser = ["csv", "svmlight"])]
    pub format: String,
    /// csv: the first column is a ±1 label.
    #[arg(long)]
    pub labeled: bool,
    /// svmlight: column count (inferred from the largest index otherwise).
    #[arg(long)]
    pub dim: Option<usize>,
}

/// Rows as the trainers see them, plus the unsigned points and labels the
/// kernel trainer needs.
pub struct Loaded {
    pub x: DataMatrix,
    pub points: DataMatrix,
    pub labels: Vec<f64>,
    pub kind: Option<InstanceKind>,
}

impl DataArgs {
    pub fn load(&self, seed: u64) -> Result<Loaded> {
        if let Some(text) = &self.instance {
            let spec: InstanceSpec = text.parse()?;
            let x = generate(&spec, &mut seeded(seed))?
                .into_data()
                .with_context(|| format!("instance {text}"))?;
            return Ok(Loaded {
                points: x.clone(),
                x,
                labels: Vec::new(),
                kind: Some(spec.kind),
            });
        }
        let Some(path) = &self.data else {
            bail!("one of --instance or --data is required");
        };
        let format: Format = self.format.parse()?;
        let opts = LoadOptions {
            labeled: self.labeled,
            dim: self.dim,
        };
        let raw = read_raw(path, format, &opts).with_context(|| format!("reading {}", path.display()))?;
        let x = DataMatrix::normalized(&raw.matrix, raw.labels.as_deref())?;
        let points = DataMatrix::normalized(&raw.matrix, None)?;
        Ok(Loaded {
            x,
            points,
            labels: raw.labels.unwrap_or_default(),
            kind: None,
        })
    }
}

/// A payoff matrix given as a generator spec or a csv file.
pub fn load_game_matrix(source: &str, seed: u64) -> Result<Matrix> {
    if let Ok(spec) = source.parse::<InstanceSpec>() {
        return Ok(generate(&spec, &mut seeded(seed))?.into_game()?.matrix().clone());
    }
    let path = Path::new(source);
    if !path.exists() {
        bail!("--matrix {source:?} is neither an instance spec nor a file");
    }
    let raw = read_raw(path, Format::CsvDense, &LoadOptions::default())?;
    if raw.matrix.max_abs() > 1.0 {
        bail!("payoff entries must lie in [-1, 1]");
    }
    Ok(raw.matrix)
}

/// Square antisymmetric matrices are solved directly.
pub fn as_game(m: &Matrix) -> Option<GameInstance> {
    if m.rows() == m.cols() && m.is_antisymmetric() {
        GameInstance::new(m.clone()).ok()
    } else {
        None
    }
}

pub fn write_csv(m: &Matrix, out: Option<&Path>) -> Result<()> {
    let mut text = String::new();
    for row in m.to_rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
