use crate::instance::DataMatrix;

/// `Σ X_{i_τ}` over picked rows, with its nonzero support tracked so that
/// per-round work is proportional to the support, not to `d`.
#[derive(Clone, Debug)]
pub(crate) struct SparseSum {
    pub values: Vec<f64>,
    pub support: Vec<usize>,
    seen: Vec<bool>,
}

impl SparseSum {
    pub fn new(d: usize) -> SparseSum {
        SparseSum {
            values: vec![0.0; d],
            support: Vec::new(),
            seen: vec![false; d],
        }
    }

    pub fn add_row(&mut self, x: &DataMatrix, i: usize) {
        for (j, v) in x.matrix().row(i) {
            if v == 0.0 {
                continue;
            }
            if !self.seen[j] {
                self.seen[j] = true;
                self.support.push(j);
            }
            self.values[j] += v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.support.iter().map(|&j| self.values[j] * self.values[j]).sum()
    }

    pub fn dot_row(&self, x: &DataMatrix, i: usize) -> f64 {
        x.matrix().row(i).map(|(j, v)| v * self.values[j]).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.support.iter().all(|&j| self.values[j] == 0.0)
    }
}
