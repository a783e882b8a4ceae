//! Compressed sparse row storage for walk operators too large to keep dense.

use nalgebra::{DMatrix, DVector};

use crate::lattice::C64;
use crate::par::{self, Execution};

/// Below this many rows a parallel product costs more than it saves.
const PAR_MIN_ROWS: usize = 2048;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Build from `(row, col, value)` triplets; rows are sorted, duplicates
    /// are not merged.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, C64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        for &(r, _, _) in &entries {
            row_ptr[r + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let (cols, vals) = entries.into_iter().map(|(_, c, v)| (c, v)).unzip();
        CsrMatrix {
            n,
            row_ptr,
            cols,
            vals,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }

    pub fn mul_vec(&self, x: &DVector<C64>, exec: Execution) -> DVector<C64> {
        let exec = if self.n < PAR_MIN_ROWS {
            Execution::Sequential
        } else {
            exec
        };
        let mut out = vec![C64::new(0.0, 0.0); self.n];
        par::fill(&mut out, exec, |r| self.row(r).map(|(c, v)| v * x[c]).sum());
        DVector::from_vec(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }
}
