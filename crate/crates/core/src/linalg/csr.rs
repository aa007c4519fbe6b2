use alloc::vec;
use alloc::vec::Vec;

use super::DenseMatrix;

/// Accumulates `(row, col, value)` contributions. Duplicates are summed in
/// insertion order when converted, so assembly is reproducible.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    pub fn build(mut self) -> CsrMatrix {
        // stable sort keeps the insertion order of duplicates
        self.entries.sort_by_key(|a| (a.0, a.1));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

/// Compressed sparse row matrix with sorted column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut t = TripletBuilder::new(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            t.push(i, i, v);
        }
        t.build()
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut t = TripletBuilder::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != 0.0 {
                    t.push(i, j, v);
                }
            }
        }
        t.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.values[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| x[i] * self.row(i).map(|(j, v)| v * y[j]).sum::<f64>())
            .sum()
    }

    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push(j, i, v);
            }
        }
        t.build()
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = TripletBuilder::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                t.push(i, j, v);
            }
            for (j, v) in other.row(i) {
                t.push(i, j, s * v);
            }
        }
        t.build()
    }

    /// Adds `d` to the diagonal (square matrices only).
    pub fn add_diagonal(&self, d: &[f64]) -> CsrMatrix {
        self.add_scaled(1.0, &CsrMatrix::from_diagonal(d))
    }

    /// Largest `|A_ij - A_ji|`; zero means exactly symmetric.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        let mut m: f64 = 0.0;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                m = m.max((v - self.get(j, i)).abs());
            }
        }
        m
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                d[(i, j)] += v;
            }
        }
        d
    }

    /// Copy with rows and columns in `fixed` replaced by identity rows and
    /// columns. Used to pin degrees of freedom without changing the pattern
    /// of the remaining block.
    pub fn pin(&self, fixed: &[bool]) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            if fixed[i] {
                t.push(i, i, 1.0);
                continue;
            }
            for (j, v) in self.row(i) {
                if !fixed[j] {
                    t.push(i, j, v);
                }
            }
        }
        t.build()
    }

    /// Zeroes the columns flagged in `fixed` (rectangular blocks).
    pub fn drop_cols(&self, fixed: &[bool]) -> CsrMatrix {
        let mut t = TripletBuilder::new(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                if !fixed[j] {
                    t.push(i, j, v);
                }
            }
        }
        t.build()
    }

    /// Symmetric 2×2 block matrix `[[a, bᵀ], [b, c]]`.
    pub fn block_symmetric(a: &CsrMatrix, b: &CsrMatrix, c: &CsrMatrix) -> CsrMatrix {
        let n = a.nrows;
        let m = c.nrows;
        assert_eq!(b.nrows, m);
        assert_eq!(b.ncols, n);
        let mut t = TripletBuilder::new(n + m, n + m);
        for i in 0..n {
            for (j, v) in a.row(i) {
                t.push(i, j, v);
            }
        }
        for i in 0..m {
            for (j, v) in b.row(i) {
                t.push(n + i, j, v);
                t.push(j, n + i, v);
            }
            for (j, v) in c.row(i) {
                t.push(n + i, n + j, v);
            }
        }
        t.build()
    }

    pub(crate) fn pattern_neighbors(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 0, 2.0);
        t.push(0, 0, 3.0);
        let a = t.build();
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn transpose_and_matvec() {
        let mut t = TripletBuilder::new(2, 3);
        t.push(0, 2, 1.0);
        t.push(1, 0, -2.0);
        let a = t.build();
        assert_eq!(a.mul_vec(&[1.0, 1.0, 5.0]), vec![5.0, -2.0]);
        let at = a.transpose();
        assert_eq!(at.mul_vec(&[1.0, 1.0]), vec![-2.0, 0.0, 1.0]);
        assert_eq!(a.bilinear(&[1.0, 2.0], &[1.0, 0.0, 1.0]), 1.0 - 4.0);
    }

    #[test]
    fn pin_keeps_symmetry() {
        let a = CsrMatrix::from_dense(&DenseMatrix::from_rows(&[
            &[4.0, 1.0, 0.5],
            &[1.0, 3.0, 0.2],
            &[0.5, 0.2, 2.0],
        ]));
        let p = a.pin(&[false, true, false]);
        assert_eq!(p.max_asymmetry(), 0.0);
        assert_eq!(p.get(1, 1), 1.0);
        assert_eq!(p.get(0, 1), 0.0);
        assert_eq!(p.get(0, 2), 0.5);
    }
}
