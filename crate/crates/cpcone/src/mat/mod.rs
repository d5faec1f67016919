//! Small dense linear algebra over floats and exact rationals.
//!
//! Everything here is sized for matrices of dimension at most a few dozen:
//! symmetric eigenvalues go through cyclic Jacobi rotations, determinants
//! through LU with partial pivoting on the float path and fraction-free
//! Bareiss elimination on the exact path. There is no attempt at blocking,
//! SIMD or sparsity; the point is exactness of the contracts, not speed on
//! large inputs.

mod io;
mod jacobi;
mod lu;
mod rational;

pub use io::{read_sym_text, write_sym_text};
pub use jacobi::singular_values;
pub(crate) use rational::rat_to_f64;
pub use rational::{
    nearest_rational, RationalFactorMatrix, RationalSymMatrix, SQRT2,
};

use crate::{Error, Result};

/// Dense row-major rectangular matrix. Used for factor iterates, Jacobians
/// and other places where no symmetry or sign structure is guaranteed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_data(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Dense { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Dense { rows: r, cols: c, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Dense::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    /// self * other
    pub fn matmul(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.rows, "matmul shape");
        let mut out = Dense::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let aik = self.data[i * self.cols + k];
                if aik == 0.0 {
                    continue;
                }
                let lhs = &other.data[k * other.cols..(k + 1) * other.cols];
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(lhs) {
                    *d += aik * b;
                }
            }
        }
        out
    }

    /// self * other^T
    pub fn matmul_transpose(&self, other: &Dense) -> Dense {
        assert_eq!(self.cols, other.cols, "matmul_transpose shape");
        let mut out = Dense::zeros(self.rows, other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                let mut acc = 0.0;
                for k in 0..self.cols {
                    acc += self.data[i * self.cols + k] * other.data[j * other.cols + k];
                }
                out.data[i * other.rows + j] = acc;
            }
        }
        out
    }

    pub fn transpose(&self) -> Dense {
        let mut out = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&self, t: f64) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| t * v).collect(),
        }
    }

    /// Solve self * X = rhs for square self; fails on (numerical) rank deficiency.
    pub fn solve(&self, rhs: &Dense) -> Result<Dense> {
        lu::solve(self, rhs)
    }
}

/// Dense real symmetric matrix. Symmetry is exact by construction: the
/// constructors copy the upper triangle to the lower one, they never average.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

/// Relative asymmetry beyond this is rejected at construction.
const SYMMETRY_TOL: f64 = 1e-12;

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut m = SymMatrix::zeros(dim);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    /// Build from full rows. Asymmetric input beyond `1e-12` relative to the
    /// largest entry is rejected; within the tolerance the upper triangle wins.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        let max_abs = rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = SYMMETRY_TOL * max_abs;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let delta = (rows[i][j] - rows[j][i]).abs();
                if delta > tol {
                    return Err(Error::NotSymmetric { i, j, delta });
                }
            }
        }
        Ok(Self::from_upper(dim, |i, j| rows[i][j]))
    }

    /// Build from a callback over the upper triangle (i <= j).
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = SymMatrix::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v;
            }
        }
        m
    }

    pub fn from_data(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|i| data[i * dim..(i + 1) * dim].to_vec())
            .collect();
        Self::from_rows(&rows)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_dense(&self) -> Dense {
        Dense {
            rows: self.dim,
            cols: self.dim,
            data: self.data.clone(),
        }
    }

    /// Entrywise (Hadamard) product.
    pub fn hadamard(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(SymMatrix::from_upper(self.dim, |i, j| {
            self.get(i, j) * other.get(i, j)
        }))
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Frobenius distance ||self - other||_F.
    pub fn frob_dist(&self, other: &SymMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = a - b;
            acc += d * d;
        }
        Ok(acc.sqrt())
    }

    pub fn min_entry(&self) -> f64 {
        self.data.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// trace(self * other), the Frobenius inner product.
    pub fn inner(&self, other: &SymMatrix) -> Result<f64> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    /// All eigenvalues, ascending, by cyclic Jacobi rotations.
    pub fn eigenvalues(&self) -> Vec<f64> {
        jacobi::eigenvalues(self)
    }

    /// Smallest eigenvalue.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        lu::det(&self.to_dense())
    }

    /// self + t * other.
    pub fn add_scaled(&self, t: f64, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(SymMatrix::from_upper(self.dim, |i, j| {
            self.get(i, j) + t * other.get(i, j)
        }))
    }

    pub fn scale(&self, t: f64) -> SymMatrix {
        SymMatrix {
            dim: self.dim,
            data: self.data.iter().map(|v| t * v).collect(),
        }
    }

    /// Conjugation P A P^T by the permutation matrix of `sigma`, i.e.
    /// result[i][j] = a[sigma(i)][sigma(j)].
    pub fn permute(&self, sigma: &[usize]) -> Result<SymMatrix> {
        if sigma.len() != self.dim {
            return Err(Error::InvalidPermutation(sigma.to_vec()));
        }
        let mut seen = vec![false; self.dim];
        for &s in sigma {
            if s >= self.dim || seen[s] {
                return Err(Error::InvalidPermutation(sigma.to_vec()));
            }
            seen[s] = true;
        }
        Ok(SymMatrix::from_upper(self.dim, |i, j| {
            self.get(sigma[i], sigma[j])
        }))
    }
}

/// Weighted vectorization of a symmetric matrix: diagonal entries first with
/// weight 1, then the strict upper triangle in row-major order with weight
/// sqrt(2). The Euclidean inner product of two images equals trace(A B), so
/// the map is an isometry onto R^(n(n+1)/2). The coordinate order is fixed so
/// serialized normal vectors are reproducible.
pub fn sym_to_vec(a: &SymMatrix) -> Vec<f64> {
    let n = a.dim();
    let mut v = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        v.push(a.get(i, i));
    }
    for i in 0..n {
        for j in (i + 1)..n {
            v.push(SQRT2 * a.get(i, j));
        }
    }
    v
}

/// Inverse of [`sym_to_vec`]. Exact up to one ulp on the off-diagonal
/// entries (the sqrt(2) scaling is not bitwise invertible).
pub fn vec_to_sym(dim: usize, v: &[f64]) -> Result<SymMatrix> {
    let expected = dim * (dim + 1) / 2;
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: v.len(),
        });
    }
    let mut m = SymMatrix::zeros(dim);
    for i in 0..dim {
        m.data[i * dim + i] = v[i];
    }
    let mut k = dim;
    for i in 0..dim {
        for j in (i + 1)..dim {
            let x = v[k] / SQRT2;
            m.data[i * dim + j] = x;
            m.data[j * dim + i] = x;
            k += 1;
        }
    }
    Ok(m)
}

/// Nonnegative factor matrix B together with its sparsity support. Entries
/// outside the support are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    support: Vec<bool>,
}

impl FactorMatrix {
    /// Build from entries; the support is the set of nonzero positions.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        for (k, &v) in data.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::NegativeEntry(k, v));
            }
        }
        let support = data.iter().map(|&v| v != 0.0).collect();
        Ok(FactorMatrix {
            rows,
            cols,
            data,
            support,
        })
    }

    /// Build with an explicit support mask; entries outside the mask must be
    /// exactly zero.
    pub fn with_support(
        rows: usize,
        cols: usize,
        data: Vec<f64>,
        support: Vec<bool>,
    ) -> Result<Self> {
        if data.len() != rows * cols || support.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len().max(support.len()),
            });
        }
        for (k, &v) in data.iter().enumerate() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::NegativeEntry(k, v));
            }
            if !support[k] && v != 0.0 {
                return Err(Error::SupportViolation {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(FactorMatrix {
            rows,
            cols,
            data,
            support,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = Dense::from_rows(rows)?;
        Self::new(d.rows, d.cols, d.data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_dense(&self) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            data: self.data.clone(),
        }
    }

    pub fn frob_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Number of structural zeros.
    pub fn zero_count(&self) -> usize {
        self.support.iter().filter(|&&s| !s).count()
    }

    /// Gram product B B^T, symmetric positive semidefinite.
    pub fn gram(&self) -> SymMatrix {
        let n = self.rows;
        SymMatrix::from_upper(n, |i, j| {
            let mut acc = 0.0;
            for k in 0..self.cols {
                acc += self.data[i * self.cols + k] * self.data[j * self.cols + k];
            }
            acc
        })
    }

    /// B scaled on the left and right by diagonal matrices.
    pub fn diag_scale(&self, left: &[f64], right: &[f64]) -> Result<FactorMatrix> {
        if left.len() != self.rows || right.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.rows,
                got: left.len(),
            });
        }
        let mut data = self.data.clone();
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[i * self.cols + j] *= left[i] * right[j];
            }
        }
        FactorMatrix::with_support(self.rows, self.cols, data, self.support.clone())
    }
}
