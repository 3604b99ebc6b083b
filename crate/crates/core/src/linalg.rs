//! Small sparse/dense complex helpers for the propagators.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Row-compressed sparse complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
}

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            rows: vec![Vec::new(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Adds `v` at `(r, c)`, merging with an existing entry.
    pub fn add(&mut self, r: usize, c: usize, v: C64) {
        if v == ZERO {
            return;
        }
        let row = &mut self.rows[r];
        match row.iter_mut().find(|(j, _)| *j == c) {
            Some((_, x)) => *x += v,
            None => row.push((c, v)),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.rows[r]
            .iter()
            .find(|(j, _)| *j == c)
            .map_or(ZERO, |(_, v)| *v)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, row)| row.iter().map(move |&(c, v)| (r, c, v)))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn scale(&mut self, s: C64) {
        for row in &mut self.rows {
            for (_, v) in row.iter_mut() {
                *v *= s;
            }
        }
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for (r, c, v) in self.entries() {
            out.add(c, r, v.conj());
        }
        out
    }

    /// `self * other`, both sparse.
    pub fn mul(&self, other: &SparseMatrix) -> Self {
        let mut out = Self::zeros(self.dim);
        for (r, row) in self.rows.iter().enumerate() {
            for &(k, a) in row {
                for &(c, b) in &other.rows[k] {
                    out.add(r, c, a * b);
                }
            }
        }
        out
    }

    /// `y = self * x` for a vector.
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc = ZERO;
            for &(c, v) in row {
                acc += v * x[c];
            }
            y[r] = acc;
        }
    }

    /// `out = self * m` where `m` is a row-major `dim x dim` matrix.
    pub fn apply_left(&self, m: &[C64], out: &mut [C64]) {
        let n = self.dim;
        out.iter_mut().for_each(|x| *x = ZERO);
        for (r, row) in self.rows.iter().enumerate() {
            let dst = &mut out[r * n..(r + 1) * n];
            for &(k, v) in row {
                let src = &m[k * n..(k + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries() {
            m[(r, c)] += v;
        }
        m
    }

    pub fn from_dense(m: &CMatrix) -> Self {
        let mut s = Self::zeros(m.nrows());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                s.add(r, c, m[(r, c)]);
            }
        }
        s
    }
}

/// Compressed sparse row matrix with a fixed pattern and mutable values.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<C64>,
}

impl Csr {
    /// Pattern from `(row, col)` pairs; duplicates are merged. Returns the
    /// matrix and, for each input pair, its slot in `vals`.
    pub fn from_pattern(dim: usize, pairs: &[(usize, usize)]) -> (Self, Vec<usize>) {
        let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for &(r, c) in pairs {
            if !by_row[r].contains(&c) {
                by_row[r].push(c);
            }
        }
        by_row.iter_mut().for_each(|row| row.sort_unstable());
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for row in &by_row {
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let slots = pairs
            .iter()
            .map(|&(r, c)| {
                let lo = row_ptr[r];
                lo + cols[lo..row_ptr[r + 1]].binary_search(&c).expect("pattern entry")
            })
            .collect();
        let nnz = cols.len();
        (
            Self {
                dim,
                row_ptr,
                cols,
                vals: vec![ZERO; nnz],
            },
            slots,
        )
    }

    pub fn from_sparse(m: &SparseMatrix) -> Self {
        let pairs: Vec<(usize, usize)> = m.entries().map(|(r, c, _)| (r, c)).collect();
        let (mut csr, slots) = Self::from_pattern(m.dim(), &pairs);
        for ((_, _, v), k) in m.entries().zip(slots) {
            csr.vals[k] += v;
        }
        csr
    }

    pub fn dense_pattern(dim: usize) -> Self {
        let pairs: Vec<(usize, usize)> = (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .collect();
        Self::from_pattern(dim, &pairs).0
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `y = self * x`.
    #[inline]
    pub fn apply(&self, x: &[C64], y: &mut [C64]) {
        for r in 0..self.dim {
            let mut acc = ZERO;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k]];
            }
            y[r] = acc;
        }
    }

    /// `out = self * m` for a row-major square `m`.
    #[inline]
    pub fn apply_left(&self, m: &[C64], out: &mut [C64]) {
        let n = self.dim;
        for r in 0..n {
            let dst = &mut out[r * n..(r + 1) * n];
            dst.iter_mut().for_each(|x| *x = ZERO);
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let v = self.vals[k];
                let src = &m[self.cols[k] * n..(self.cols[k] + 1) * n];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += v * s;
                }
            }
        }
    }

    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] += self.vals[k];
            }
        }
        m
    }
}

/// Max-norm `||a - b||_max`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Row-major flat buffer to a dense matrix.
pub fn from_row_major(n: usize, data: &[C64]) -> CMatrix {
    CMatrix::from_fn(n, n, |r, c| data[r * n + c])
}

/// Dense matrix to a row-major flat buffer.
pub fn to_row_major(m: &CMatrix) -> Vec<C64> {
    let n = m.nrows();
    let mut out = vec![ZERO; n * m.ncols()];
    for r in 0..n {
        for c in 0..m.ncols() {
            out[r * m.ncols() + c] = m[(r, c)];
        }
    }
    out
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    herm.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparse_products_match_dense() {
        let mut a = SparseMatrix::zeros(3);
        a.add(0, 1, C64::new(1.0, 2.0));
        a.add(2, 0, C64::new(-0.5, 0.0));
        a.add(1, 1, C64::new(0.0, 3.0));
        let d = a.to_dense();
        let m = CMatrix::from_fn(3, 3, |r, c| C64::new(r as f64, c as f64 * 0.5));
        let mut out = vec![ZERO; 9];
        a.apply_left(&to_row_major(&m), &mut out);
        assert!(max_abs_diff(&from_row_major(3, &out), &(&d * &m)) < 1e-14);
        assert!(max_abs_diff(&a.mul(&a.adjoint()).to_dense(), &(&d * d.adjoint())) < 1e-14);
        assert_eq!(SparseMatrix::from_dense(&d), a);
    }

    #[test]
    fn min_eigenvalue_of_diagonal() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(0.3, 0.0),
            C64::new(-0.1, 0.0),
            C64::new(0.8, 0.0),
        ]));
        assert!((min_eigenvalue(&m) + 0.1).abs() < 1e-14);
    }
}
