use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::{DataMatrix, Matrix};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    CsvDense,
    Svmlight,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "csv" | "csv-dense" => Ok(Format::CsvDense),
            "svmlight" | "libsvm" | "svmlight-sparse" => Ok(Format::Svmlight),
            other => Err(Error::Invalid(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    /// csv only: the first column holds a ±1 label.
    pub labeled: bool,
    /// svmlight only: fixed column count; inferred from the largest index if absent.
    pub dim: Option<usize>,
}

/// Rows and labels as read from disk, before normalization.
#[derive(Clone, Debug)]
pub struct RawData {
    pub matrix: Matrix,
    pub labels: Option<Vec<f64>>,
}

pub fn load_dataset(path: &Path, format: Format, opts: &LoadOptions) -> Result<DataMatrix> {
    let raw = read_raw(path, format, opts)?;
    DataMatrix::normalized(&raw.matrix, raw.labels.as_deref())
}

pub fn read_raw(path: &Path, format: Format, opts: &LoadOptions) -> Result<RawData> {
    let text = fs::read_to_string(path)?;
    parse_raw(&text, format, opts)
}

pub fn parse_raw(text: &str, format: Format, opts: &LoadOptions) -> Result<RawData> {
    match format {
        Format::CsvDense => parse_csv(text, opts.labeled),
        Format::Svmlight => parse_svmlight(text, opts.dim),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn number(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value {tok:?}"),
        });
    }
    Ok(v)
}

fn label(tok: &str, line: usize) -> Result<f64> {
    let v = number(tok, line)?;
    match v {
        1.0 => Ok(1.0),
        -1.0 | 0.0 => Ok(-1.0),
        _ => Err(Error::Parse {
            line,
            msg: format!("label must be +1 or -1, got {tok:?}"),
        }),
    }
}

fn parse_csv(text: &str, labeled: bool) -> Result<RawData> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    for (line, l) in content_lines(text) {
        let mut toks = l.split(',');
        if labeled {
            let tok = toks.next().unwrap_or("");
            labels.push(label(tok, line)?);
        }
        let row = toks.map(|t| number(t, line)).collect::<Result<Vec<f64>>>()?;
        if row.is_empty() {
            return Err(Error::Parse {
                line,
                msg: "row has no features".into(),
            });
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Dimension(format!(
                    "line {line}: {} features, expected {w}",
                    row.len()
                )))
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    Ok(RawData {
        matrix: Matrix::from_rows(&rows)?,
        labels: labeled.then_some(labels),
    })
}

fn parse_svmlight(text: &str, dim: Option<usize>) -> Result<RawData> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;
    for (line, l) in content_lines(text) {
        let l = l.split('#').next().unwrap_or("").trim();
        let mut toks = l.split_whitespace();
        let tok = toks.next().ok_or(Error::Parse {
            line,
            msg: "missing label".into(),
        })?;
        labels.push(label(tok, line)?);
        let mut row = Vec::new();
        for tok in toks {
            let (idx, val) = tok.split_once(':').ok_or(Error::Parse {
                line,
                msg: format!("expected index:value, got {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("bad index {idx:?}"),
            })?;
            if idx == 0 {
                return Err(Error::Parse {
                    line,
                    msg: "indices are 1-based".into(),
                });
            }
            max_index = max_index.max(idx);
            row.push((idx - 1, number(val, line)?));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Empty);
    }
    let d = match dim {
        Some(d) if d < max_index => {
            return Err(Error::Dimension(format!(
                "index {max_index} exceeds declared dimension {d}"
            )))
        }
        Some(d) => d,
        None => max_index.max(1),
    };
    Ok(RawData {
        matrix: Matrix::sparse(rows.len(), d, rows)?,
        labels: Some(labels),
    })
}
