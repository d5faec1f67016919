//! LU factorization with partial pivoting: determinants and linear solves
//! for small square systems.

use super::Dense;
use crate::{Error, Result};

/// Determinant of a square matrix. Returns 0 on an exactly singular pivot.
pub(crate) fn det(a: &Dense) -> f64 {
    assert_eq!(a.rows(), a.cols(), "det needs a square matrix");
    let n = a.rows();
    let mut m = a.data().to_vec();
    let mut sign = 1.0;
    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if m[i * n + k].abs() > m[piv * n + k].abs() {
                piv = i;
            }
        }
        if m[piv * n + k] == 0.0 {
            return 0.0;
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            sign = -sign;
        }
        let pivot = m[k * n + k];
        for i in (k + 1)..n {
            let f = m[i * n + k] / pivot;
            m[i * n + k] = 0.0;
            for j in (k + 1)..n {
                m[i * n + j] -= f * m[k * n + j];
            }
        }
    }
    sign * (0..n).map(|i| m[i * n + i]).product::<f64>()
}

/// Solve A X = B. Fails with [`Error::RankDeficient`] when a pivot falls
/// below 1e-12 times the largest entry of A.
pub(crate) fn solve(a: &Dense, rhs: &Dense) -> Result<Dense> {
    assert_eq!(a.rows(), a.cols(), "solve needs a square matrix");
    let n = a.rows();
    if rhs.rows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: rhs.rows(),
        });
    }
    let k_cols = rhs.cols();
    let mut m = a.data().to_vec();
    let mut x = rhs.data().to_vec();
    let scale = a.data().iter().fold(0.0f64, |s, v| s.max(v.abs()));
    let tol = 1e-12 * scale;

    for k in 0..n {
        let mut piv = k;
        for i in (k + 1)..n {
            if m[i * n + k].abs() > m[piv * n + k].abs() {
                piv = i;
            }
        }
        if m[piv * n + k].abs() <= tol {
            return Err(Error::RankDeficient);
        }
        if piv != k {
            for j in 0..n {
                m.swap(k * n + j, piv * n + j);
            }
            for j in 0..k_cols {
                x.swap(k * k_cols + j, piv * k_cols + j);
            }
        }
        let pivot = m[k * n + k];
        for i in (k + 1)..n {
            let f = m[i * n + k] / pivot;
            if f == 0.0 {
                continue;
            }
            for j in (k + 1)..n {
                m[i * n + j] -= f * m[k * n + j];
            }
            for j in 0..k_cols {
                x[i * k_cols + j] -= f * x[k * k_cols + j];
            }
        }
    }
    for k in (0..n).rev() {
        for j in 0..k_cols {
            let mut acc = x[k * k_cols + j];
            for i in (k + 1)..n {
                acc -= m[k * n + i] * x[i * k_cols + j];
            }
            x[k * k_cols + j] = acc / m[k * n + k];
        }
    }
    Dense::from_data(n, k_cols, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn det_frozen_case() {
        let a = Dense::from_rows(&[
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![2.0, 3.0, 0.0, 2.0, 4.0],
            vec![3.0, 0.0, 2.0, 1.0, 3.0],
            vec![4.0, 2.0, 1.0, 1.0, 2.0],
            vec![5.0, 4.0, 3.0, 2.0, 1.0],
        ])
        .unwrap();
        assert_relative_eq!(det(&a), 84.0, max_relative = 1e-12);
    }

    #[test]
    fn det_singular() {
        let a = Dense::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert_eq!(det(&a), 0.0);
    }

    #[test]
    fn solve_round_trip() {
        let a = Dense::from_rows(&[
            vec![4.0, 1.0, 0.0],
            vec![1.0, 3.0, 1.0],
            vec![0.0, 1.0, 2.0],
        ])
        .unwrap();
        let x_true = Dense::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5], vec![3.0, 0.0]]).unwrap();
        let b = a.matmul(&x_true);
        let x = solve(&a, &b).unwrap();
        for (got, want) in x.data().iter().zip(x_true.data()) {
            assert_relative_eq!(got, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn solve_rank_deficient() {
        let a = Dense::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        let b = Dense::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(solve(&a, &b), Err(Error::RankDeficient)));
    }
}
