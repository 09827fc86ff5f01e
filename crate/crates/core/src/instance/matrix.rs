use crate::error::{Error, Result};

/// Real matrix with either dense row-major storage or sorted sparse rows.
///
/// Sparse matrices also keep a column index, since the multiplicative-weights
/// update reads one column per round.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    store: Store,
}

#[derive(Clone, Debug, PartialEq)]
enum Store {
    Dense(Vec<f64>),
    Sparse {
        rows: Vec<Vec<(usize, f64)>>,
        cols: Vec<Vec<(usize, f64)>>,
    },
}

pub enum Entries<'a> {
    Dense {
        data: &'a [f64],
        pos: usize,
        stride: usize,
        index: usize,
        len: usize,
    },
    Sparse(std::slice::Iter<'a, (usize, f64)>),
}

impl Iterator for Entries<'_> {
    type Item = (usize, f64);

    #[inline]
    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            Entries::Dense {
                data,
                pos,
                stride,
                index,
                len,
            } => {
                if *index == *len {
                    return None;
                }
                let out = (*index, data[*pos]);
                *index += 1;
                *pos += *stride;
                Some(out)
            }
            Entries::Sparse(it) => it.next().copied(),
        }
    }
}

impl Matrix {
    pub fn dense(rows: usize, cols: usize, data: Vec<f64>) -> Result<Matrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("non-finite entry {v}")));
        }
        Ok(Matrix {
            rows,
            cols,
            store: Store::Dense(data),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let d = rows[0].len();
        let mut data = Vec::with_capacity(n * d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries, expected {d}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Matrix::dense(n, d, data)
    }

    /// Builds a sparse matrix. Entries are sorted per row; explicit zeros are
    /// dropped and duplicate indices rejected.
    pub fn sparse(rows: usize, cols: usize, entries: Vec<Vec<(usize, f64)>>) -> Result<Matrix> {
        if rows == 0 || cols == 0 {
            return Err(Error::Empty);
        }
        if entries.len() != rows {
            return Err(Error::Dimension(format!(
                "{} sparse rows for {rows} declared",
                entries.len()
            )));
        }
        let mut by_row = Vec::with_capacity(rows);
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cols];
        for (i, mut row) in entries.into_iter().enumerate() {
            row.retain(|&(_, v)| v != 0.0);
            row.sort_by_key(|&(j, _)| j);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::Invalid(format!("row {i}: duplicate column {}", w[0].0)));
                }
            }
            for &(j, v) in &row {
                if j >= cols {
                    return Err(Error::OutOfRange(format!("row {i}: column {j} >= {cols}")));
                }
                if !v.is_finite() {
                    return Err(Error::Invalid(format!("row {i}: non-finite entry {v}")));
                }
                by_col[j].push((i, v));
            }
            by_row.push(row);
        }
        Ok(Matrix {
            rows,
            cols,
            store: Store::Sparse {
                rows: by_row,
                cols: by_col,
            },
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self.store, Store::Sparse { .. })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.store {
            Store::Dense(data) => data[i * self.cols + j],
            Store::Sparse { rows, .. } => {
                let row = &rows[i];
                match row.binary_search_by_key(&j, |&(c, _)| c) {
                    Ok(pos) => row[pos].1,
                    Err(_) => 0.0,
                }
            }
        }
    }

    /// Stored entries of row `i` (every entry for dense storage).
    pub fn row(&self, i: usize) -> Entries<'_> {
        match &self.store {
            Store::Dense(data) => Entries::Dense {
                data,
                pos: i * self.cols,
                stride: 1,
                index: 0,
                len: self.cols,
            },
            Store::Sparse { rows, .. } => Entries::Sparse(rows[i].iter()),
        }
    }

    /// Stored entries of column `j`.
    pub fn col(&self, j: usize) -> Entries<'_> {
        match &self.store {
            Store::Dense(data) => Entries::Dense {
                data,
                pos: j,
                stride: self.cols,
                index: 0,
                len: self.rows,
            },
            Store::Sparse { cols, .. } => Entries::Sparse(cols[j].iter()),
        }
    }

    pub fn row_dense(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (j, v) in self.row(i) {
            out[j] = v;
        }
        out
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        self.row(i).map(|(j, v)| v * w[j]).sum()
    }

    pub fn row_norm_sq(&self, i: usize) -> f64 {
        self.row(i).map(|(_, v)| v * v).sum()
    }

    /// `X w` computed exactly.
    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| self.row_dot(i, w)).collect()
    }

    /// `pᵀ X` computed exactly.
    pub fn tmul_vec(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (i, &pi) in p.iter().enumerate() {
            if pi != 0.0 {
                for (j, v) in self.row(i) {
                    out[j] += pi * v;
                }
            }
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row_dense(i)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        (0..self.rows)
            .flat_map(|i| self.row(i))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Matrix {
        let store = match &self.store {
            Store::Dense(data) => Store::Dense(data.iter().map(|v| v * factor).collect()),
            Store::Sparse { rows, cols } => Store::Sparse {
                rows: scale_lists(rows, factor),
                cols: scale_lists(cols, factor),
            },
        };
        Matrix {
            rows: self.rows,
            cols: self.cols,
            store,
        }
    }

    /// Multiplies row `i` by `signs[i]`.
    pub fn with_row_signs(&self, signs: &[f64]) -> Matrix {
        match &self.store {
            Store::Dense(data) => {
                let mut data = data.clone();
                for (i, chunk) in data.chunks_mut(self.cols).enumerate() {
                    chunk.iter_mut().for_each(|v| *v *= signs[i]);
                }
                Matrix {
                    rows: self.rows,
                    cols: self.cols,
                    store: Store::Dense(data),
                }
            }
            Store::Sparse { rows, .. } => {
                let entries = rows
                    .iter()
                    .enumerate()
                    .map(|(i, r)| r.iter().map(|&(j, v)| (j, v * signs[i])).collect())
                    .collect();
                Matrix::sparse(self.rows, self.cols, entries).expect("re-signing keeps structure")
            }
        }
    }

    pub fn is_antisymmetric(&self) -> bool {
        if self.rows != self.cols {
            return false;
        }
        (0..self.rows).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == -v))
            && (0..self.rows).all(|i| self.get(i, i) == 0.0)
    }
}

fn scale_lists(lists: &[Vec<(usize, f64)>], factor: f64) -> Vec<Vec<(usize, f64)>> {
    lists
        .iter()
        .map(|l| l.iter().map(|&(k, v)| (k, v * factor)).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_sparse_agree() {
        let d = Matrix::from_rows(&[vec![1.0, 0.0, 2.0], vec![0.0, 0.0, -1.0]]).unwrap();
        let s = Matrix::sparse(2, 3, vec![vec![(2, 2.0), (0, 1.0)], vec![(2, -1.0)]]).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(d.get(i, j), s.get(i, j));
            }
        }
        let dc: Vec<_> = d.col(2).collect();
        let sc: Vec<_> = s.col(2).collect();
        assert_eq!(dc, sc);
        assert_eq!(s.row(0).count(), 2);
        assert_eq!(d.mul_vec(&[1.0, 1.0, 1.0]), s.mul_vec(&[1.0, 1.0, 1.0]));
        assert_eq!(d.tmul_vec(&[1.0, 2.0]), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(Matrix::from_rows(&[]), Err(Error::Empty)));
        assert!(matches!(
            Matrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]),
            Err(Error::Dimension(_))
        ));
        assert!(Matrix::sparse(1, 2, vec![vec![(2, 1.0)]]).is_err());
        assert!(Matrix::sparse(1, 2, vec![vec![(1, 1.0), (1, 2.0)]]).is_err());
        assert!(Matrix::dense(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn antisymmetry_check() {
        let a = Matrix::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let b = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(a.is_antisymmetric());
        assert!(!b.is_antisymmetric());
    }
}
