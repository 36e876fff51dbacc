//! The design/response pair every fit operates on.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, invalid, Result};

/// A design matrix (`n × p`, column-major) with its response vector.
///
/// Construction validates that both are non-empty, that the row counts
/// agree and that every entry is finite, so downstream kernels never need
/// to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    design: DMatrix<f64>,
    response: DVector<f64>,
    names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(design: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        if design.nrows() == 0 || design.ncols() == 0 {
            return invalid("dataset needs at least one row and one column");
        }
        check_len(design.nrows(), response.len())?;
        if design.iter().chain(response.iter()).any(|v| !v.is_finite()) {
            return invalid("dataset contains non-finite entries");
        }
        Ok(Self {
            design,
            response,
            names: None,
        })
    }

    /// Builds a dataset from row-major rows.
    pub fn from_rows(rows: &[Vec<f64>], response: &[f64]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            check_len(p, bad.len())?;
        }
        let design = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(design, DVector::from_column_slice(response))
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        check_len(self.p(), names.len())?;
        self.names = Some(names);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.design.nrows()
    }

    pub fn p(&self) -> usize {
        self.design.ncols()
    }

    pub fn design(&self) -> &DMatrix<f64> {
        &self.design
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    /// Column names, falling back to `x1..xp` when none were supplied.
    pub fn column_names(&self) -> Vec<String> {
        match &self.names {
            Some(n) => n.clone(),
            None => (1..=self.p()).map(|j| format!("x{j}")).collect(),
        }
    }

    /// Contiguous slice of column `j`.
    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.design.as_slice()[j * n..(j + 1) * n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.design.row(i).iter().copied().collect()
    }

    /// Sub-dataset restricted to the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        let design = self.design.select_rows(rows.iter());
        let response = self.response.select_rows(rows.iter());
        Dataset {
            design,
            response,
            names: self.names.clone(),
        }
    }

    /// Sub-dataset restricted to the given columns, in the given order. Columns
    /// keep their original names.
    pub fn select_columns(&self, cols: &[usize]) -> Dataset {
        let design = self.design.select_columns(cols.iter());
        let all = self.column_names();
        Dataset {
            design,
            response: self.response.clone(),
            names: Some(cols.iter().map(|&j| all[j].clone()).collect()),
        }
    }

    /// Writes `Xβ` into `out`, skipping zero coefficients.
    pub fn fitted_into(&self, beta: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (o, &x) in out.iter_mut().zip(self.column(j)) {
                    *o += b * x;
                }
            }
        }
    }

    pub fn fitted(&self, beta: &[f64]) -> Result<Vec<f64>> {
        check_len(self.p(), beta.len())?;
        let mut out = vec![0.0; self.n()];
        self.fitted_into(beta, &mut out);
        Ok(out)
    }

    /// Writes `Xᵀv` into `out`.
    pub fn transpose_mul_into(&self, v: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.column(j).iter().zip(v).map(|(x, y)| x * y).sum();
        }
    }
}
