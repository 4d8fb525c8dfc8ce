//! Compressed sparse row storage for the conductance matrix.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<S> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<S>,
}

impl<S: Scalar> CsrMatrix<S> {
    /// Builds from per-row `(column, value)` lists; each row must be sorted by column with no
    /// repeats.
    pub fn from_rows(rows: Vec<Vec<(usize, S)>>) -> Self {
        let n = rows.len();
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        row_ptr.push(0);
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0), "unsorted row");
            for (c, v) in row {
                debug_assert!(c < n);
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { n, row_ptr, col_idx, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, S)> + '_ {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        let span = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => S::zero(),
        }
    }

    pub fn diagonal(&self) -> Vec<S> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `out = self · x`
    pub fn mul_vec_into(&self, x: &[S], out: &mut [S]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(out.len(), self.n);
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = S::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    /// Off-diagonal entries summed in column order, then the diagonal added.
    pub fn row_sum(&self, i: usize) -> S {
        let mut off = S::zero();
        let mut diag = S::zero();
        for (j, v) in self.row(i) {
            if j == i {
                diag = v;
            } else {
                off += v;
            }
        }
        diag + off
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// Euclidean norm of column `j` (equals the row norm, by symmetry of conductance matrices).
    pub fn column_norm(&self, j: usize) -> S {
        let mut acc = S::zero();
        for i in 0..self.n {
            let v = self.get(i, j);
            acc += v * v;
        }
        acc.sqrt()
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.n * self.n];
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                out[i * self.n + j] = v;
            }
        }
        out
    }
}
