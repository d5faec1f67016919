//! Cyclic Jacobi eigensolver for small symmetric matrices.
//!
//! Sweeps over all off-diagonal pairs and annihilates each with a plane
//! rotation until the off-diagonal mass drops below 1e-14 times the
//! Frobenius norm of the input, with at most 100 sweeps. All matrices in
//! this crate have dimension at most ~15, where Jacobi is both simple and
//! accurate; see Numerical Recipes sec. 11.1 for the rotation formulas.

use super::{Dense, SymMatrix};

const OFF_TOL: f64 = 1e-14;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues of `a`, ascending. Eigenvectors are not accumulated.
pub(crate) fn eigenvalues(a: &SymMatrix) -> Vec<f64> {
    let n = a.dim();
    if n == 1 {
        return vec![a.get(0, 0)];
    }
    let mut m = a.data().to_vec();
    let norm = a.frob_norm();
    let tol = OFF_TOL * norm;

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * m[i * n + j] * m[i * n + j];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = 0.5 * (aqq - app) / apq;
                // smaller root of t^2 + 2 t theta - 1 = 0, for a rotation
                // angle below pi/4
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                m[p * n + p] = app - t * apq;
                m[q * n + q] = aqq + t * apq;
                m[p * n + q] = 0.0;
                m[q * n + p] = 0.0;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    let new_p = c * akp - s * akq;
                    let new_q = s * akp + c * akq;
                    m[k * n + p] = new_p;
                    m[p * n + k] = new_p;
                    m[k * n + q] = new_q;
                    m[q * n + k] = new_q;
                }
            }
        }
    }

    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
    eig
}

/// Singular values of a rectangular matrix, descending, by one-sided
/// (Hestenes) Jacobi rotations: columns are orthogonalized pairwise and the
/// singular values read off as the final column norms. Unlike going through
/// A^T A this keeps high relative accuracy on the small singular values,
/// which the rank tests on chart Jacobians depend on.
pub fn singular_values(a: &Dense) -> Vec<f64> {
    let tall = a.rows() >= a.cols();
    let work = if tall { a.clone() } else { a.transpose() };
    let (m, n) = (work.rows(), work.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.column(j)).collect();

    for _ in 0..MAX_SWEEPS {
        let mut converged = true;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for k in 0..m {
                    alpha += cols[p][k] * cols[p][k];
                    beta += cols[q][k] * cols[q][k];
                    gamma += cols[p][k] * cols[q][k];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                converged = false;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for k in 0..m {
                    let vp = cols[p][k];
                    let vq = cols[q][k];
                    cols[p][k] = c * vp - s * vq;
                    cols[q][k] = s * vp + c * vq;
                }
            }
        }
        if converged {
            break;
        }
    }

    let mut sv: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::SymMatrix;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_matrix() {
        let d = SymMatrix::from_diag(&[3.0, 2.0, 0.0, -1.0, 5.0]);
        let eig = eigenvalues(&d);
        assert_eq!(eig, vec![-1.0, 0.0, 2.0, 3.0, 5.0]);
    }

    #[test]
    fn fixed_5x5_against_reference() {
        // Reference eigenvalues computed with an independent LAPACK-backed
        // solver for this frozen matrix.
        let a = SymMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![2.0, 3.0, 0.0, 2.0, 4.0],
            vec![3.0, 0.0, 2.0, 1.0, 3.0],
            vec![4.0, 2.0, 1.0, 1.0, 2.0],
            vec![5.0, 4.0, 3.0, 2.0, 1.0],
        ])
        .unwrap();
        let eig = eigenvalues(&a);
        let want = [
            -4.861158430649138,
            -2.485704750172629,
            0.2073336609414627,
            2.694072690168129,
            12.44545682971212,
        ];
        for (e, w) in eig.iter().zip(want) {
            assert_relative_eq!(e, &w, max_relative = 1e-12);
        }
    }

    #[test]
    fn singular_values_of_diag_and_rank_deficient() {
        let a = Dense::from_rows(&[vec![3.0, 0.0], vec![0.0, -2.0], vec![0.0, 0.0]]).unwrap();
        let sv = singular_values(&a);
        assert_relative_eq!(sv[0], 3.0, max_relative = 1e-14);
        assert_relative_eq!(sv[1], 2.0, max_relative = 1e-14);

        // rank-1 outer product: second singular value at relative machine level
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, 1.5];
        let a = Dense::from_rows(
            &u.iter()
                .map(|&x| v.iter().map(|&y| x * y).collect())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let sv = singular_values(&a);
        assert!(sv[1] <= 1e-14 * sv[0], "{:e}", sv[1] / sv[0]);
    }

    #[test]
    fn rank_one_matrix() {
        // vv^T with v = (1,2,3,4,5): single nonzero eigenvalue 55
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        let a = SymMatrix::from_upper(5, |i, j| v[i] * v[j]);
        let eig = eigenvalues(&a);
        assert_relative_eq!(eig[4], 55.0, max_relative = 1e-13);
        for e in &eig[..4] {
            assert!(e.abs() <= 1e-12 * 55.0);
        }
    }
}
