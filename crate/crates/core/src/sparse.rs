//! Minimal complex CSR matrices for the discretized operators.

use crate::error::{CoreError, Result};
use crate::grid::GridField;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    Hermitian,
    None,
}

/// Compressed-sparse-row complex matrix.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<C64>,
    pub symmetry: Symmetry,
}

impl SparseOperator {
    /// Assemble row by row; `row_fn` must return entries with strictly
    /// increasing column indices. Rows are generated in parallel, so the
    /// layout is deterministic regardless of thread count.
    pub fn from_rows(
        nrows: usize,
        ncols: usize,
        symmetry: Symmetry,
        row_fn: impl Fn(usize) -> Vec<(usize, C64)> + Sync,
    ) -> Self {
        use rayon::prelude::*;
        let rows: Vec<Vec<(usize, C64)>> = (0..nrows).into_par_iter().map(&row_fn).collect();
        let nnz: usize = rows.iter().map(|r| r.len()).sum();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                debug_assert!(c < ncols);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        Self { nrows, ncols, row_ptr, col_idx, values, symmetry }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    pub fn apply_slice(&self, x: &[C64], out: &mut [C64]) {
        debug_assert_eq!(x.len(), self.ncols);
        debug_assert_eq!(out.len(), self.nrows);
        use rayon::prelude::*;
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        });
    }

    pub fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.nrows];
        self.apply_slice(x, &mut out);
        out
    }

    pub fn apply(&self, field: &GridField) -> GridField {
        GridField { grid: field.grid.clone(), values: self.apply_vec(&field.values) }
    }

    /// `self − z·I`. The diagonal entry must be structurally present in
    /// every row (true for all operators assembled here).
    pub fn shift_diagonal(&self, z: C64) -> SparseOperator {
        let mut out = self.clone();
        for i in 0..self.nrows {
            let mut found = false;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    out.values[k] -= z;
                    found = true;
                    break;
                }
            }
            assert!(found, "row {i} has no diagonal entry");
        }
        out.symmetry = if z.im == 0.0 { self.symmetry } else { Symmetry::None };
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut dense = vec![vec![C64::new(0.0, 0.0); self.ncols]; self.nrows];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                dense[i][self.col_idx[k]] += self.values[k];
            }
        }
        dense
    }

    /// Verify the hermitian tag: entrywise conjugate symmetry within `tol`.
    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        if self.nrows != self.ncols {
            return Err(CoreError::DimensionMismatch("non-square operator".into()));
        }
        // Column-indexed lookup via a transposed walk.
        let mut max_err = 0.0f64;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if j < i {
                    continue;
                }
                let vij = self.values[k];
                let vji = self.entry(j, i);
                max_err = max_err.max((vij - vji.conj()).norm());
            }
        }
        if max_err > tol {
            return Err(CoreError::DimensionMismatch(format!(
                "hermitian tag violated: max asymmetry {max_err:.3e}"
            )));
        }
        Ok(())
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        for k in self.row_ptr[i]..self.row_ptr[i + 1] {
            if self.col_idx[k] == j {
                return self.values[k];
            }
        }
        C64::new(0.0, 0.0)
    }

    /// Maximum |i − j| over stored entries.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0usize;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                bw = bw.max(self.col_idx[k].abs_diff(i));
            }
        }
        bw
    }
}
