//! Exact rational matrices for certified boundary points.
//!
//! Entries are arbitrary-precision rationals; determinants run through
//! fraction-free Bareiss elimination over the integers after clearing
//! denominators row by row, so every intermediate division is exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::SymMatrix;
use crate::{Error, Result};

pub const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Exact-rational symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSymMatrix {
    dim: usize,
    data: Vec<BigRational>,
}

impl RationalSymMatrix {
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> BigRational) -> Self {
        let mut data = vec![BigRational::zero(); dim * dim];
        for i in 0..dim {
            for j in i..dim {
                let v = f(i, j);
                data[i * dim + j] = v.clone();
                data[j * dim + i] = v;
            }
        }
        RationalSymMatrix { dim, data }
    }

    pub fn from_integer_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if rows[i][j] != rows[j][i] {
                    return Err(Error::NotSymmetric {
                        i,
                        j,
                        delta: (rows[i][j] - rows[j][i]) as f64,
                    });
                }
            }
        }
        Ok(Self::from_upper(dim, |i, j| {
            BigRational::from_integer(BigInt::from(rows[i][j]))
        }))
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.dim + j]
    }

    pub fn hadamard(&self, other: &RationalSymMatrix) -> Result<RationalSymMatrix> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            });
        }
        Ok(RationalSymMatrix::from_upper(self.dim, |i, j| {
            self.get(i, j) * other.get(i, j)
        }))
    }

    pub fn matvec(&self, v: &[BigRational]) -> Result<Vec<BigRational>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        Ok((0..self.dim)
            .map(|i| {
                let mut acc = BigRational::zero();
                for j in 0..self.dim {
                    acc += self.get(i, j) * &v[j];
                }
                acc
            })
            .collect())
    }

    /// Exact determinant by Bareiss elimination.
    pub fn det_exact(&self) -> BigRational {
        det_bareiss(self.dim, &self.data)
    }

    pub fn to_float(&self) -> SymMatrix {
        SymMatrix::from_upper(self.dim, |i, j| rat_to_f64(self.get(i, j)))
    }

    /// Max-norm distance to a float matrix of the same dimension.
    pub fn max_dist_to(&self, a: &SymMatrix) -> Result<f64> {
        if self.dim != a.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: a.dim(),
            });
        }
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((rat_to_f64(self.get(i, j)) - a.get(i, j)).abs());
            }
        }
        Ok(worst)
    }
}

/// Exact-rational nonnegative factor matrix with its sparsity support.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFactorMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
    support: Vec<bool>,
}

impl RationalFactorMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<BigRational>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        for (k, v) in data.iter().enumerate() {
            if v.is_negative() {
                return Err(Error::NegativeEntry(k, rat_to_f64(v)));
            }
        }
        let support = data.iter().map(|v| !v.is_zero()).collect();
        Ok(RationalFactorMatrix {
            rows,
            cols,
            data,
            support,
        })
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
    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn support(&self) -> &[bool] {
        &self.support
    }

    pub fn column(&self, j: usize) -> Vec<BigRational> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    /// Exact Gram product B B^T.
    pub fn gram(&self) -> RationalSymMatrix {
        RationalSymMatrix::from_upper(self.rows, |i, j| {
            let mut acc = BigRational::zero();
            for k in 0..self.cols {
                acc += self.get(i, k) * self.get(j, k);
            }
            acc
        })
    }

    pub fn to_float(&self) -> Result<super::FactorMatrix> {
        let data = self.data.iter().map(rat_to_f64).collect();
        super::FactorMatrix::with_support(self.rows, self.cols, data, self.support.clone())
    }

    pub fn max_dist_to(&self, b: &super::FactorMatrix) -> Result<f64> {
        if self.rows != b.rows() || self.cols != b.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.rows * self.cols,
                got: b.rows() * b.cols(),
            });
        }
        let mut worst = 0.0f64;
        for (v, w) in self.data.iter().zip(b.data()) {
            worst = worst.max((rat_to_f64(v) - w).abs());
        }
        Ok(worst)
    }
}

pub(crate) fn rat_to_f64(v: &BigRational) -> f64 {
    v.to_f64().unwrap_or(f64::NAN)
}

/// Best rational approximation p/q with q <= max_denominator, by the
/// continued-fraction expansion of the exact dyadic value of x. The error
/// is never worse than rounding x max_denominator (at most
/// 1/(2 max_denominator)) and is typically of order 1/max_denominator^2,
/// which keeps the entry solved from a locus equation from drifting.
pub fn nearest_rational(x: f64, max_denominator: u64) -> BigRational {
    assert!(max_denominator >= 1, "max_denominator must be positive");
    assert!(x.is_finite(), "cannot rationalize a non-finite value");
    let exact = BigRational::from_float(x).unwrap_or_else(BigRational::zero);
    let limit = BigInt::from(max_denominator);
    if exact.denom() <= &limit {
        return exact;
    }

    // Stern-Brocot style: run the continued fraction until the denominator
    // would overshoot, then compare the last convergent with the best
    // semiconvergent.
    let (mut n, mut d) = (exact.numer().clone(), exact.denom().clone());
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    loop {
        let a = n.div_floor(&d);
        let q2 = &q0 + &a * &q1;
        if q2 > limit {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let r = &n - &a * &d;
        n = std::mem::replace(&mut d, r);
        if d.is_zero() {
            break;
        }
    }
    let convergent = BigRational::new(p1.clone(), q1.clone());
    if d.is_zero() {
        return convergent;
    }
    let k = (&limit - &q0) / &q1;
    let semiconvergent = BigRational::new(&p0 + &k * &p1, &q0 + &k * &q1);
    if (&semiconvergent - &exact).abs() < (&convergent - &exact).abs() {
        semiconvergent
    } else {
        convergent
    }
}

/// Fraction-free Bareiss determinant. Denominators are cleared per row, the
/// integer elimination divides exactly by the previous pivot at every step.
fn det_bareiss(n: usize, data: &[BigRational]) -> BigRational {
    if n == 0 {
        return BigRational::one();
    }
    let mut scale = BigInt::one();
    let mut m: Vec<BigInt> = Vec::with_capacity(n * n);
    for i in 0..n {
        let mut lcm = BigInt::one();
        for j in 0..n {
            lcm = lcm.lcm(data[i * n + j].denom());
        }
        for j in 0..n {
            let v = &data[i * n + j];
            m.push(v.numer() * (&lcm / v.denom()));
        }
        scale *= lcm;
    }

    let mut sign = 1i32;
    let mut prev = BigInt::one();
    for k in 0..n.saturating_sub(1) {
        if m[k * n + k].is_zero() {
            let Some(piv) = ((k + 1)..n).find(|&i| !m[i * n + k].is_zero()) else {
                return BigRational::zero();
            };
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            sign = -sign;
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                let num = &m[i * n + j] * &m[k * n + k] - &m[i * n + k] * &m[k * n + j];
                m[i * n + j] = num / &prev; // exact by the Bareiss identity
            }
            m[i * n + k] = BigInt::zero();
        }
        prev = m[k * n + k].clone();
    }
    let det_int = m[(n - 1) * n + (n - 1)].clone() * BigInt::from(sign);
    BigRational::new(det_int, scale)
}
