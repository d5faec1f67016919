//! Exact rational points on the boundary loci.
//!
//! Rational matrices are dense in the nontrivial boundary, and the defining
//! equations make that constructive: round all entries but one to rationals,
//! then solve the remaining entry exactly from the equation. The Horn route
//! solves a diagonal entry of A from det(H o A) = 0, which is affine in any
//! single diagonal entry; the Hildebrand route solves one factor entry from
//! the binomial equation on the W pattern.

use num_rational::BigRational;
use num_traits::Zero;

use super::{horn_matrix, monomial_residual, w_mask, ANTIBAND};
use crate::mat::{
    nearest_rational, FactorMatrix, RationalFactorMatrix, RationalSymMatrix, SymMatrix,
};
use crate::{Error, Result};

/// Gate for "near the locus" checks, relative.
const LOCUS_GATE: f64 = 1e-6;

/// Rationalize a matrix near the Horn locus, solving the (0,0) entry. See
/// [`rationalize_horn_at`].
pub fn rationalize_horn(a: &SymMatrix, max_denominator: u64) -> Result<RationalSymMatrix> {
    rationalize_horn_at(a, max_denominator, 0)
}

/// Round all entries of A except the chosen diagonal one to rationals with
/// denominator at most `max_denominator`, then solve that diagonal entry
/// exactly from det(H o A~) = 0. The equation is affine in the entry; a
/// vanishing cofactor is reported as an error, in which case another
/// diagonal index can be tried.
///
/// The input must be near the locus already: |det(H o A)| <= 1e-6 ||A||^5.
pub fn rationalize_horn_at(
    a: &SymMatrix,
    max_denominator: u64,
    diag_index: usize,
) -> Result<RationalSymMatrix> {
    if a.dim() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            got: a.dim(),
        });
    }
    if diag_index >= 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            got: diag_index,
        });
    }
    let h = horn_matrix();
    let norm = a.frob_norm();
    let gate = LOCUS_GATE * norm.powi(5);
    let residual = h.hadamard(a)?.det().abs();
    if residual > gate {
        return Err(Error::NotNearLocus { residual, gate });
    }

    let rounded = RationalSymMatrix::from_upper(5, |i, j| {
        if i == diag_index && j == diag_index {
            BigRational::zero()
        } else {
            nearest_rational(a.get(i, j), max_denominator)
        }
    });
    let h_exact = RationalSymMatrix::from_integer_rows(&h_rows_i64())?;

    // det(H o A~) is affine in the solved entry; evaluate at 0 and 1 to get
    // the constant term and the cofactor.
    let at = |v: BigRational| -> BigRational {
        let trial = RationalSymMatrix::from_upper(5, |i, j| {
            if i == diag_index && j == diag_index {
                v.clone()
            } else {
                rounded.get(i, j).clone()
            }
        });
        h_exact.hadamard(&trial).expect("dims match").det_exact()
    };
    let det0 = at(BigRational::zero());
    let det1 = at(BigRational::from_integer(1.into()));
    let cofactor = &det1 - &det0;
    if cofactor.is_zero() {
        return Err(Error::DegenerateRationalization);
    }
    let solved = -det0 / cofactor;
    Ok(RationalSymMatrix::from_upper(5, |i, j| {
        if i == diag_index && j == diag_index {
            solved.clone()
        } else {
            rounded.get(i, j).clone()
        }
    }))
}

/// Round all W-pattern entries of a factor near the Hildebrand variety
/// except y11, then set y11 = y13 y24 y35 y41 y52 / (y22 y33 y44 y55)
/// exactly, so the binomial equation holds exactly for the result.
pub fn rationalize_hildebrand(
    b: &FactorMatrix,
    max_denominator: u64,
) -> Result<RationalFactorMatrix> {
    if b.rows() != 5 || b.cols() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 25,
            got: b.rows() * b.cols(),
        });
    }
    if b.support() != w_mask() {
        let k = b
            .support()
            .iter()
            .zip(w_mask())
            .position(|(&s, w)| s != w)
            .unwrap_or(0);
        return Err(Error::SupportViolation {
            row: k / 5,
            col: k % 5,
        });
    }
    let residual = monomial_residual(b)?;
    if residual > LOCUS_GATE {
        return Err(Error::NotNearLocus {
            residual,
            gate: LOCUS_GATE,
        });
    }
    let mut data = vec![BigRational::zero(); 25];
    for i in 0..5 {
        for j in 0..5 {
            if super::W_PATTERN[i][j] && (i, j) != (0, 0) {
                data[i * 5 + j] = nearest_rational(b.get(i, j), max_denominator);
            }
        }
    }
    let mut denom = BigRational::from_integer(1.into());
    for i in 1..5 {
        denom *= &data[i * 5 + i];
    }
    if denom.is_zero() {
        return Err(Error::ZeroMonomialDenominator);
    }
    let mut numer = BigRational::from_integer(1.into());
    for &(r, c) in ANTIBAND.iter() {
        numer *= &data[r * 5 + c];
    }
    data[0] = numer / denom;
    RationalFactorMatrix::new(5, 5, data)
}

/// Exact Horn-locus factor diag(x) M(y) diag(z) over the rationals; used to
/// certify the locus identities in exact arithmetic.
pub fn horn_factor_exact(
    x: &[BigRational; 5],
    y: &[BigRational; 5],
    z: &[BigRational; 5],
) -> Result<RationalFactorMatrix> {
    for arr in [x, y, z] {
        for v in arr.iter() {
            if v <= &BigRational::zero() {
                return Err(Error::NonPositiveParameter {
                    name: "params",
                    value: crate::mat::rat_to_f64(v),
                });
            }
        }
    }
    let one = BigRational::from_integer(1.into());
    let mut data = vec![BigRational::zero(); 25];
    for c in 0..5 {
        data[c * 5 + c] = &x[c] * &z[c];
        data[((c + 1) % 5) * 5 + c] = &x[(c + 1) % 5] * (&one + &y[c]) * &z[c];
        data[((c + 2) % 5) * 5 + c] = &x[(c + 2) % 5] * &y[c] * &z[c];
    }
    RationalFactorMatrix::new(5, 5, data)
}

fn h_rows_i64() -> Vec<Vec<i64>> {
    vec![
        vec![1, -1, 1, 1, -1],
        vec![-1, 1, -1, 1, 1],
        vec![1, -1, 1, -1, 1],
        vec![1, 1, -1, 1, -1],
        vec![-1, 1, 1, -1, 1],
    ]
}
