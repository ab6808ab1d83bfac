//! Dense and compressed-sparse-row linear algebra used throughout the solver.
//!
//! Vectors are plain `Vec<f64>` / `&[f64]`; the helpers at the top of the
//! module cover the handful of BLAS-1 operations the Krylov and multigrid
//! code needs.

use crate::error::{Error, Result};

pub type Vector = Vec<f64>;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "dot: length mismatch");
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    assert_eq!(x.len(), y.len(), "axpy: length mismatch");
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// 64-bit linear congruential generator (Knuth's MMIX constants).
///
/// Used for every pseudorandom vector the solver itself needs, so that runs
/// are bit-reproducible from a seed.
#[derive(Debug, Clone)]
pub struct Lcg {
    state: u64,
}

impl Lcg {
    pub fn new(seed: u64) -> Self {
        Self {
            state: seed ^ 0x9E37_79B9_7F4A_7C15,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self
            .state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.state
    }

    /// Uniform sample in [-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        // top 53 bits
        let u = (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        2.0 * u - 1.0
    }

    pub fn vector(&mut self, n: usize) -> Vector {
        (0..n).map(|_| self.next_f64()).collect()
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            data: vec![0.0; nrows * ncols],
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                m.data[i * ncols + j] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        Self::from_fn(nrows, ncols, |i, j| rows[i][j])
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ncols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ncols + j] += v;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vector {
        assert_eq!(
            self.ncols,
            x.len(),
            "dense matvec: matrix has {} columns, vector has length {}",
            self.ncols,
            x.len()
        );
        self.data
            .chunks_exact(self.ncols.max(1))
            .take(self.nrows)
            .map(|row| dot(row, x))
            .collect()
    }
}

/// Symmetric `P A Pᵀ = L D Lᵀ` factorization with diagonal pivoting.
///
/// At every step the remaining diagonal entry of largest magnitude is moved
/// to the pivot position. `L` is unit lower triangular and stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct LdlFactor {
    n: usize,
    perm: Vec<usize>,
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl LdlFactor {
    /// Factorizes a symmetric matrix. `block` names the matrix in errors.
    pub fn new(a: &DenseMatrix, block: impl Into<String>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                context: "ldl factorization (square matrix required)",
                expected: n,
                got: a.ncols(),
            });
        }
        let tol = 1e-14 * a.max_abs();
        let mut w = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut diag = vec![0.0; n];

        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| w[i * n + i].abs().total_cmp(&w[j * n + j].abs()))
                .unwrap();
            if p != k {
                for c in 0..n {
                    w.swap(k * n + c, p * n + c);
                }
                for r in 0..n {
                    w.swap(r * n + k, r * n + p);
                }
                perm.swap(k, p);
            }
            let d = w[k * n + k];
            if d.abs() <= tol || !d.is_finite() {
                return Err(Error::SingularBlock {
                    block: block.into(),
                    step: k,
                    pivot: d,
                });
            }
            diag[k] = d;
            let col: Vec<f64> = (k + 1..n).map(|i| w[i * n + k]).collect();
            for (ii, &ci) in col.iter().enumerate() {
                if ci == 0.0 {
                    continue;
                }
                let i = k + 1 + ii;
                let s = ci / d;
                for (jj, &cj) in col[..=ii].iter().enumerate() {
                    w[i * n + k + 1 + jj] -= s * cj;
                }
            }
            // mirror the trailing block so later pivot swaps see both triangles
            for i in k + 1..n {
                for j in k + 1..i {
                    w[j * n + i] = w[i * n + j];
                }
                w[i * n + k] /= d;
            }
        }

        let mut lower = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..i {
                lower[i * n + j] = w[i * n + j];
            }
            lower[i * n + i] = 1.0;
        }
        Ok(Self {
            n,
            perm,
            lower,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vector {
        let mut x = vec![0.0; self.n];
        self.solve_into(b, &mut x);
        x
    }

    pub fn solve_into(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n, "ldl solve: rhs length {} vs dimension {n}", b.len());
        assert_eq!(x.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            y[i] -= dot(row, &y[..i]);
        }
        for (yi, d) in y.iter_mut().zip(&self.diag) {
            *yi /= d;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in i + 1..n {
                s -= self.lower[j * n + i] * y[j];
            }
            y[i] = s;
        }
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
    }
}

/// Compressed sparse row matrix with strictly increasing column indices per
/// row and no duplicate entries. Explicit zeros are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    ///
    /// The result is bit-identical for any permutation of the input: entries
    /// are sorted by `(row, col, value)` before the duplicates are summed.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if let Some(&(row, col, _)) = triplets.iter().find(|t| t.0 >= nrows || t.1 >= ncols) {
            return Err(Error::IndexOutOfRange {
                row,
                col,
                nrows,
                ncols,
            });
        }
        let mut sorted = triplets.to_vec();
        sorted.sort_unstable_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.total_cmp(&b.2))
        });

        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for &(r, c, v) in &sorted {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m.get(i, j);
                if v != 0.0 {
                    t.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t).expect("indices in range")
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

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.col_idx[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        cols.binary_search(&j).map_or(0.0, |k| vals[k])
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.nrows == other.nrows
            && self.ncols == other.ncols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.values)
    }

    pub fn diagonal(&self) -> Vector {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn spmv(&self, x: &[f64]) -> Vector {
        let mut y = vec![0.0; self.nrows];
        self.spmv_into(x, &mut y);
        y
    }

    /// `y = A x`
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(
            self.ncols,
            x.len(),
            "spmv: matrix is {}x{} but x has length {}",
            self.nrows,
            self.ncols,
            x.len()
        );
        assert_eq!(self.nrows, y.len(), "spmv: output length mismatch");
        for (i, yi) in y.iter_mut().enumerate() {
            let r = self.row_ptr[i]..self.row_ptr[i + 1];
            *yi = self.col_idx[r.clone()]
                .iter()
                .zip(&self.values[r])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    /// `y = Aᵀ x`
    pub fn spmv_transpose(&self, x: &[f64]) -> Vector {
        assert_eq!(
            self.nrows,
            x.len(),
            "spmv_transpose: matrix is {}x{} but x has length {}",
            self.nrows,
            self.ncols,
            x.len()
        );
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                y[j] += a * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let k = next[j];
                col_idx[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        CsrMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Largest `|A_ij - A_ji|` over the stored pattern of both triangles.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Dense copy of the principal submatrix `A[idx, idx]`.
    ///
    /// `scratch` must have length `ncols` and be filled with `usize::MAX`; it
    /// is restored before returning.
    pub fn principal_submatrix(&self, idx: &[usize], scratch: &mut [usize]) -> DenseMatrix {
        for (local, &g) in idx.iter().enumerate() {
            scratch[g] = local;
        }
        let n = idx.len();
        let mut m = DenseMatrix::zeros(n, n);
        for (li, &gi) in idx.iter().enumerate() {
            let (cols, vals) = self.row(gi);
            for (&gj, &v) in cols.iter().zip(vals) {
                let lj = scratch[gj];
                if lj != usize::MAX {
                    m.set(li, lj, v);
                }
            }
        }
        for &g in idx {
            scratch[g] = usize::MAX;
        }
        m
    }
}
