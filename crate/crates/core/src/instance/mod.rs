//! Input data model, query-counted entry access, instance generators and exact
//! evaluators.

mod generate;
mod io;
mod ledger;
mod matrix;

pub use generate::{
    case1, case2, generate, lower_zerosum, random_antisymmetric, random_ball, Generated, InstanceKind,
    InstanceSpec,
};
pub use io::{load_dataset, parse_raw, read_raw, Format, LoadOptions, RawData};
pub use ledger::{Breakdown, Charge, LedgerSnapshot, QueryLedger};
pub use matrix::{Entries, Matrix};

use crate::error::{Error, Result};

pub const NORM_TOLERANCE: f64 = 1e-12;

/// The n×d input with every row in the unit ball.
#[derive(Clone, Debug, PartialEq)]
pub struct DataMatrix {
    m: Matrix,
    labels_folded: bool,
}

impl DataMatrix {
    pub fn new(m: Matrix, labels_folded: bool) -> Result<DataMatrix> {
        for i in 0..m.rows() {
            let norm = m.row_norm_sq(i).sqrt();
            if norm > 1.0 + NORM_TOLERANCE {
                return Err(Error::Invalid(format!("row {i} has norm {norm} > 1")));
            }
        }
        Ok(DataMatrix { m, labels_folded })
    }

    /// Folds ±1 labels into the rows, then divides every row by the single
    /// factor `max(1, max_i ‖X_i‖)`.
    pub fn normalized(m: &Matrix, labels: Option<&[f64]>) -> Result<DataMatrix> {
        let signed = match labels {
            Some(l) => {
                if l.len() != m.rows() {
                    return Err(Error::Dimension(format!(
                        "{} labels for {} rows",
                        l.len(),
                        m.rows()
                    )));
                }
                m.with_row_signs(l)
            }
            None => m.clone(),
        };
        let max_norm = (0..signed.rows())
            .map(|i| signed.row_norm_sq(i).sqrt())
            .fold(0.0f64, f64::max);
        let scaled = if max_norm > 1.0 {
            signed.scaled(1.0 / max_norm)
        } else {
            signed
        };
        DataMatrix::new(scaled, labels.is_some())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<DataMatrix> {
        DataMatrix::new(Matrix::from_rows(rows)?, false)
    }

    pub fn n(&self) -> usize {
        self.m.rows()
    }

    pub fn d(&self) -> usize {
        self.m.cols()
    }

    pub fn labels_folded(&self) -> bool {
        self.labels_folded
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    /// Uncharged host-side read, for evaluators and the simulation itself.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    pub fn max_row_norm(&self) -> f64 {
        (0..self.n())
            .map(|i| self.m.row_norm_sq(i).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Reads `X[i][j]` through the oracle, charging one entry query.
pub fn query_entry(x: &DataMatrix, ledger: &mut QueryLedger, i: usize, j: usize) -> Result<f64> {
    if i >= x.n() || j >= x.d() {
        return Err(Error::OutOfRange(format!(
            "entry ({i}, {j}) of a {}x{} matrix",
            x.n(),
            x.d()
        )));
    }
    let c = ledger.cost().entry_charge;
    ledger.charge(Charge::Direct, c as u128);
    Ok(x.entry(i, j))
}

/// `min_i X_i·w`, computed exactly and never charged.
pub fn exact_margin(x: &DataMatrix, w: &[f64]) -> Result<f64> {
    if w.len() != x.d() {
        return Err(Error::Dimension(format!(
            "w has {} coordinates, X has {} columns",
            w.len(),
            x.d()
        )));
    }
    Ok((0..x.n())
        .map(|i| x.m.row_dot(i, w))
        .fold(f64::INFINITY, f64::min))
}

/// The maximin margin `max_{‖w‖≤1} min_i X_i·w` to within `eps_ref`.
pub fn reference_maximin(x: &DataMatrix, eps_ref: f64) -> Result<f64> {
    Ok(crate::reference::exact_primal_dual(x, eps_ref)?.sigma)
}

/// Closed-form optima of the lower-bound instances.
pub mod optima {
    use std::f64::consts::SQRT_2;

    /// Maximin margin of Case 1.
    pub fn sigma_case1() -> f64 {
        1.0 / (4.0 + 2.0 * SQRT_2).sqrt()
    }

    /// Maximin margin of Case 2.
    pub fn sigma_case2() -> f64 {
        1.0 / SQRT_2
    }

    /// Optimal direction of Case 1 (0-based planted column `l`).
    pub fn w_case1(d: usize, l: usize) -> Vec<f64> {
        let z = (4.0 + 2.0 * SQRT_2).sqrt();
        let mut w = vec![0.0; d];
        w[0] = 1.0 / z;
        w[l] = (SQRT_2 + 1.0) / z;
        w
    }

    pub fn meb_case1() -> f64 {
        (2.0 + SQRT_2) / 4.0
    }

    pub fn meb_case2() -> f64 {
        0.5
    }

    pub fn meb_center_case1(d: usize, l: usize) -> Vec<f64> {
        let mut c = vec![0.0; d];
        c[0] = 0.5 - SQRT_2 / 4.0;
        c[l] = SQRT_2 / 4.0;
        c
    }

    pub fn meb_center_case2(d: usize, l: usize) -> Vec<f64> {
        let mut c = vec![0.0; d];
        c[l] = 1.0 / SQRT_2;
        c
    }

    pub fn svm_case2() -> f64 {
        0.5
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn query_charges_every_call() {
        let x = case2(4, 3, 1).unwrap();
        let mut l = QueryLedger::default();
        assert_eq!(query_entry(&x, &mut l, 0, 0).unwrap(), -FRAC_1_SQRT_2);
        assert_eq!(l.charged_queries(), 1);
        query_entry(&x, &mut l, 1, 2).unwrap();
        query_entry(&x, &mut l, 1, 2).unwrap();
        assert_eq!(l.charged_queries(), 3);
        assert!(query_entry(&x, &mut l, 4, 0).is_err());
        assert_eq!(l.charged_queries(), 3);
    }

    #[test]
    fn zero_row_queries_are_charged() {
        let x = DataMatrix::new(Matrix::sparse(2, 3, vec![vec![], vec![(1, 0.5)]]).unwrap(), false)
            .unwrap();
        let mut l = QueryLedger::default();
        assert_eq!(query_entry(&x, &mut l, 0, 1).unwrap(), 0.0);
        assert_eq!(l.charged_queries(), 1);
    }

    #[test]
    fn margins_at_closed_form_optima() {
        let x2 = case2(8, 4, 2).unwrap();
        let mut el = vec![0.0; 4];
        el[2] = 1.0;
        assert!((exact_margin(&x2, &el).unwrap() - optima::sigma_case2()).abs() < 1e-15);
        let x1 = case1(8, 4, 2, 2).unwrap();
        let w = optima::w_case1(4, 2);
        assert!((exact_margin(&x1, &w).unwrap() - optima::sigma_case1()).abs() < 1e-15);
        assert_eq!(exact_margin(&x1, &[0.0; 4]).unwrap(), 0.0);
        assert!(exact_margin(&x1, &[0.0; 3]).is_err());
    }

    #[test]
    fn rejects_rows_outside_ball() {
        assert!(DataMatrix::from_rows(&[vec![1.0, 1.0]]).is_err());
        assert!(DataMatrix::from_rows(&[vec![1.0 + 1e-13, 0.0]]).is_ok());
    }
}
