//! Symmetric sparse matrices stored as the upper triangle in CSR form.

use crate::error::{invalid, Result};

/// Symmetric matrix; only entries with `row <= col` are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricSparseMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

/// Collects `(row, col, value)` contributions; duplicates are summed.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    dim: usize,
    triplets: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(dim: usize) -> Self {
        TripletBuilder { dim, triplets: Vec::new() }
    }

    /// Adds `value` at `(i, j)` of the symmetric matrix. The mirrored entry is
    /// implied, so a full element matrix should only feed one triangle.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.dim && j < self.dim);
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        self.triplets.push((r, c, value));
    }

    /// Adds the upper triangle of a dense symmetric element matrix.
    pub fn add_element(&mut self, dofs: &[usize], local: &[[f64; 4]]) {
        for a in 0..dofs.len() {
            for b in a..dofs.len() {
                self.add(dofs[a], dofs[b], local[a][b]);
            }
        }
    }

    /// Duplicates are summed in insertion order, so the result is a pure
    /// function of the contribution sequence.
    pub fn build(mut self) -> SymmetricSparseMatrix {
        self.triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; self.dim + 1];
        let mut cols = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..self.dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SymmetricSparseMatrix { dim: self.dim, row_ptr, cols, values }
    }
}

impl SymmetricSparseMatrix {
    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![1.0; dim])
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut b = TripletBuilder::new(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            b.add(i, i, d);
        }
        b.build()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Stored (upper-triangle) entries.
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Upper-triangle entries `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i <= j { (i, j) } else { (j, i) };
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match row.binary_search(&c) {
            Ok(k) => self.values[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let (c, a) = (self.cols[k], self.values[k]);
                acc += a * x[c];
                if c != r {
                    y[c] += a * x[r];
                }
            }
            y[r] += acc;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        Ok(y)
    }

    /// `vᵀ A v`.
    pub fn quadratic_form(&self, v: &[f64]) -> Result<f64> {
        self.check_len(v.len())?;
        let mut total = 0.0;
        for (r, c, a) in self.entries() {
            let t = a * v[r] * v[c];
            total += if r == c { t } else { 2.0 * t };
        }
        Ok(total)
    }

    /// `Σ_k coeff_k · A_k` for matrices of equal dimension.
    pub fn linear_combination(terms: &[(f64, &SymmetricSparseMatrix)]) -> Result<Self> {
        let dim = terms.first().map_or(0, |t| t.1.dim);
        let mut b = TripletBuilder::new(dim);
        for &(coeff, m) in terms {
            if m.dim != dim {
                return Err(invalid(format!("dimension mismatch: {} vs {}", m.dim, dim)));
            }
            for (r, c, v) in m.entries() {
                b.add(r, c, coeff * v);
            }
        }
        Ok(b.build())
    }

    /// Row sums placed on the diagonal.
    pub fn lumped(&self) -> Self {
        let ones = vec![1.0; self.dim];
        let mut sums = vec![0.0; self.dim];
        self.mul_vec_into(&ones, &mut sums);
        Self::from_diagonal(&sums)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for (r, c, v) in self.entries() {
            d[r][c] = v;
            d[c][r] = v;
        }
        d
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(invalid(format!(
                "vector of length {len} does not match matrix dimension {}",
                self.dim
            )));
        }
        Ok(())
    }
}
