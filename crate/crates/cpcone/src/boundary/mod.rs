//! Generators and exact certificates for the boundary of the completely
//! positive 5x5 cone inside the interior of the doubly nonnegative cone.
//!
//! The nontrivial part of that boundary splits into two loci: matrices
//! orthogonal to a diagonal scaling of the Horn matrix, and matrices
//! orthogonal to a diagonal scaling of a Hildebrand matrix T(Theta). Both
//! loci are parametrized through factor matrices supported on a fixed banded
//! pattern (the W pattern below): the Horn locus by a banded matrix in
//! fifteen positive parameters, the Hildebrand locus by diagonal scalings of
//! the sine matrix S(Theta). The trivial boundary parts are covered by
//! rank-deficient and zero-entry samplers.
//!
//! Certificates report an orthogonality residual against the scaled
//! copositive witness together with an algebraic residual (a determinant for
//! the Horn locus, a binomial in the factor entries for the Hildebrand
//! locus). The rationalization routines in this module's companion produce
//! exact rational points on either locus.

mod rationalize;

pub use rationalize::{
    horn_factor_exact, rationalize_hildebrand, rationalize_horn, rationalize_horn_at,
};

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::mat::{FactorMatrix, RationalFactorMatrix, SymMatrix};
use crate::{Error, Result};

/// The banded sparsity pattern shared by all boundary factor matrices,
/// row-major over a 5x5 grid.
pub const W_PATTERN: [[bool; 5]; 5] = [
    [true, false, false, true, true],
    [true, true, false, false, true],
    [true, true, true, false, false],
    [false, true, true, true, false],
    [false, false, true, true, true],
];

/// Positions of the antidiagonal band, in the order used by the defining
/// binomial: these are the entries y13, y24, y35, y41, y52 of the W pattern
/// display. The index convention is y_{column,row}, so y41 sits in row 1,
/// column 4 of the display (0-indexed (0,3) here). The pattern display never
/// names its entries row-first; this convention is fixed once here and used
/// everywhere.
pub const ANTIBAND: [(usize, usize); 5] = [(2, 0), (3, 1), (4, 2), (0, 3), (1, 4)];

pub(crate) fn w_mask() -> Vec<bool> {
    W_PATTERN.iter().flatten().copied().collect()
}

/// Parameters of the Horn-locus factor: B = diag(x) M(y) diag(z) with M(y)
/// the banded matrix of [`horn_band_matrix`]. All fifteen entries must be
/// strictly positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HornParams {
    pub x: [f64; 5],
    pub y: [f64; 5],
    pub z: [f64; 5],
}

impl HornParams {
    pub fn new(x: [f64; 5], y: [f64; 5], z: [f64; 5]) -> Result<Self> {
        let p = HornParams { x, y, z };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, arr) in [("x", &self.x), ("y", &self.y), ("z", &self.z)] {
            for &v in arr.iter() {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::NonPositiveParameter { name, value: v });
                }
            }
        }
        Ok(())
    }

    /// Random parameters, each uniform in (0.1, 1.1). The lower cutoff keeps
    /// the generated boundary matrices away from badly scaled corners.
    pub fn sample(rng: &mut impl Rng) -> Self {
        let mut draw = || std::array::from_fn(|_| rng.gen_range(0.1..1.1));
        HornParams {
            x: draw(),
            y: draw(),
            z: draw(),
        }
    }
}

/// Parameters of the Hildebrand-locus factor: B = diag(d1) S(theta) diag(d2)
/// with theta strictly positive and summing to strictly less than pi.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HildebrandParams {
    pub d1: [f64; 5],
    pub theta: [f64; 5],
    pub d2: [f64; 5],
}

impl HildebrandParams {
    pub fn new(d1: [f64; 5], theta: [f64; 5], d2: [f64; 5]) -> Result<Self> {
        let p = HildebrandParams { d1, theta, d2 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, arr) in [("d1", &self.d1), ("theta", &self.theta), ("d2", &self.d2)] {
            for &v in arr.iter() {
                if !(v > 0.0) || !v.is_finite() {
                    return Err(Error::NonPositiveParameter { name, value: v });
                }
            }
        }
        let sum: f64 = self.theta.iter().sum();
        if sum >= std::f64::consts::PI {
            return Err(Error::ThetaSumOutOfRange { sum });
        }
        Ok(())
    }

    /// Random parameters: diagonal scalings uniform in (0.1, 1.1), angles
    /// drawn uniform and rescaled so their sum is a uniform fraction in
    /// (0.3, 0.9) of pi.
    pub fn sample(rng: &mut impl Rng) -> Self {
        let d1 = std::array::from_fn(|_| rng.gen_range(0.1..1.1));
        let d2 = std::array::from_fn(|_| rng.gen_range(0.1..1.1));
        let raw: [f64; 5] = std::array::from_fn(|_| rng.gen_range(0.1..1.0));
        let total: f64 = raw.iter().sum();
        let target = std::f64::consts::PI * rng.gen_range(0.3..0.9);
        let theta = raw.map(|v| v * target / total);
        HildebrandParams { d1, theta, d2 }
    }
}

/// Which part of the boundary a certificate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocusTag {
    #[serde(rename = "HORN")]
    Horn,
    #[serde(rename = "HILDEBRAND")]
    Hildebrand,
    #[serde(rename = "RANK4")]
    Rank4,
    #[serde(rename = "ZERO")]
    Zero,
}

/// A boundary membership certificate: the copositive witness M with
/// <A, M> = 0 on the locus, the observed orthogonality residual, and the
/// residual of the algebraic equation cutting out the locus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryCertificate {
    pub locus: LocusTag,
    pub witness: SymMatrix,
    pub orthogonality_residual: f64,
    pub algebraic_residual: f64,
    /// Max norm of (H o A) (1/x); reported for the Horn locus only, where
    /// the scaled all-ones contraction vanishes identically on the locus.
    pub kernel_residual: Option<f64>,
}

/// The Horn matrix, the classical extreme copositive 5x5 matrix with +-1
/// entries.
pub fn horn_matrix() -> SymMatrix {
    let rows = [
        [1.0, -1.0, 1.0, 1.0, -1.0],
        [-1.0, 1.0, -1.0, 1.0, 1.0],
        [1.0, -1.0, 1.0, -1.0, 1.0],
        [1.0, 1.0, -1.0, 1.0, -1.0],
        [-1.0, 1.0, 1.0, -1.0, 1.0],
    ];
    SymMatrix::from_upper(5, |i, j| rows[i][j])
}

/// The banded middle matrix M(y) of the Horn-locus factorization. Column c
/// equals (e_c + e_{c+1}) + y_c (e_{c+1} + e_{c+2}) with indices mod 5, so
/// every column lies in one of the zero cones of the Horn form.
pub fn horn_band_matrix(y: &[f64; 5]) -> Result<FactorMatrix> {
    for &v in y.iter() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveParameter {
                name: "y",
                value: v,
            });
        }
    }
    let mut data = vec![0.0; 25];
    for c in 0..5 {
        data[c * 5 + c] = 1.0;
        data[((c + 1) % 5) * 5 + c] = 1.0 + y[c];
        data[((c + 2) % 5) * 5 + c] = y[c];
    }
    FactorMatrix::with_support(5, 5, data, w_mask())
}

/// Horn-locus factor diag(x) M(y) diag(z); its Gram matrix lies on the Horn
/// locus.
pub fn horn_factor(p: &HornParams) -> Result<FactorMatrix> {
    p.validate()?;
    horn_band_matrix(&p.y)?.diag_scale(&p.x, &p.z)
}

/// Membership test for the union of the five zero cones of the Horn form:
/// support contained in a cyclic index window {i, i+1, i+2} with
/// v[i+1] = v[i] + v[i+2], within 1e-10 ||v|| on the float path.
pub fn in_horn_zero_cones(v: &[f64; 5]) -> Result<bool> {
    for (k, &x) in v.iter().enumerate() {
        if x < 0.0 {
            return Err(Error::NegativeEntry(k, x));
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-10 * norm;
    Ok((0..5).any(|i| {
        let (a, m, b) = (v[i], v[(i + 1) % 5], v[(i + 2) % 5]);
        let off_window = (0..5)
            .filter(|&j| j != i && j != (i + 1) % 5 && j != (i + 2) % 5)
            .all(|j| v[j].abs() <= tol);
        off_window && (m - a - b).abs() <= tol
    }))
}

/// Exact-rational variant of [`in_horn_zero_cones`].
pub fn in_horn_zero_cones_exact(v: &[BigRational; 5]) -> Result<bool> {
    for (k, x) in v.iter().enumerate() {
        if x.is_negative() {
            return Err(Error::NegativeEntry(k, crate::mat::rat_to_f64(x)));
        }
    }
    Ok((0..5).any(|i| {
        let off_window = (0..5)
            .filter(|&j| j != i && j != (i + 1) % 5 && j != (i + 2) % 5)
            .all(|j| v[j].is_zero());
        off_window && v[(i + 1) % 5] == &v[i] + &v[(i + 2) % 5]
    }))
}

/// Horn-locus certificate for A with diagonal scaling x: the witness is
/// diag(1/x) H diag(1/x), the algebraic residual is |det(H o A)|, and the
/// kernel residual is the max norm of (H o A)(1/x), which vanishes
/// identically on the locus.
pub fn horn_certificate(a: &SymMatrix, x: &[f64; 5]) -> Result<BoundaryCertificate> {
    if a.dim() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            got: a.dim(),
        });
    }
    for &v in x.iter() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveParameter {
                name: "x",
                value: v,
            });
        }
    }
    let h = horn_matrix();
    let witness = SymMatrix::from_upper(5, |i, j| h.get(i, j) / (x[i] * x[j]));
    let orthogonality_residual = a.inner(&witness)?.abs();
    let ha = h.hadamard(a)?;
    let algebraic_residual = ha.det().abs();
    let kernel_residual = (0..5)
        .map(|i| {
            (0..5)
                .map(|j| ha.get(i, j) / x[j])
                .sum::<f64>()
                .abs()
        })
        .fold(0.0f64, f64::max);
    Ok(BoundaryCertificate {
        locus: LocusTag::Horn,
        witness,
        orthogonality_residual,
        algebraic_residual,
        kernel_residual: Some(kernel_residual),
    })
}

/// The Hildebrand matrix T(Theta): unit diagonal, -cos(theta_i) on the first
/// cyclic off-band and cos(theta_i + theta_j) on the second.
pub fn hildebrand_t(theta: &[f64; 5]) -> Result<SymMatrix> {
    validate_theta(theta)?;
    let [t1, t2, t3, t4, t5] = *theta;
    let c = f64::cos;
    let rows = [
        [1.0, -c(t1), c(t1 + t2), c(t4 + t5), -c(t5)],
        [0.0, 1.0, -c(t2), c(t2 + t3), c(t5 + t1)],
        [0.0, 0.0, 1.0, -c(t3), c(t3 + t4)],
        [0.0, 0.0, 0.0, 1.0, -c(t4)],
        [0.0, 0.0, 0.0, 0.0, 1.0],
    ];
    Ok(SymMatrix::from_upper(5, |i, j| rows[i][j]))
}

/// The sine matrix S(Theta) collecting the zeros of the quadratic form of
/// T(Theta): column c is supported on the cyclic window {c, c+1, c+2} and is
/// the kernel vector (sin b, sin(a+b), sin a) of the corresponding 3x3
/// principal block of T, with a = theta_c and b = theta_{c+1}. Every
/// structurally nonzero entry is strictly positive and the support is the
/// W pattern.
pub fn hildebrand_s(theta: &[f64; 5]) -> Result<FactorMatrix> {
    validate_theta(theta)?;
    let mut data = vec![0.0; 25];
    for c in 0..5 {
        let a = theta[c];
        let b = theta[(c + 1) % 5];
        data[c * 5 + c] = b.sin();
        data[((c + 1) % 5) * 5 + c] = (a + b).sin();
        data[((c + 2) % 5) * 5 + c] = a.sin();
    }
    FactorMatrix::with_support(5, 5, data, w_mask())
}

/// Hildebrand-locus factor diag(d1) S(theta) diag(d2).
pub fn hildebrand_factor(p: &HildebrandParams) -> Result<FactorMatrix> {
    p.validate()?;
    hildebrand_s(&p.theta)?.diag_scale(&p.d1, &p.d2)
}

/// Hildebrand-locus certificate: witness diag(1/d1) T(theta) diag(1/d1),
/// orthogonality residual against A, and the binomial residual of the
/// parametrized factor as the algebraic part.
pub fn hildebrand_certificate(a: &SymMatrix, p: &HildebrandParams) -> Result<BoundaryCertificate> {
    if a.dim() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 5,
            got: a.dim(),
        });
    }
    p.validate()?;
    let t = hildebrand_t(&p.theta)?;
    let witness = SymMatrix::from_upper(5, |i, j| t.get(i, j) / (p.d1[i] * p.d1[j]));
    let orthogonality_residual = a.inner(&witness)?.abs();
    let algebraic_residual = monomial_residual(&hildebrand_factor(p)?)?;
    Ok(BoundaryCertificate {
        locus: LocusTag::Hildebrand,
        witness,
        orthogonality_residual,
        algebraic_residual,
        kernel_residual: None,
    })
}

fn validate_theta(theta: &[f64; 5]) -> Result<()> {
    for &v in theta.iter() {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::NonPositiveParameter {
                name: "theta",
                value: v,
            });
        }
    }
    let sum: f64 = theta.iter().sum();
    if sum >= std::f64::consts::PI {
        return Err(Error::ThetaSumOutOfRange { sum });
    }
    Ok(())
}

/// Residual of the binomial equation cutting out the Hildebrand factor
/// variety inside W: the product of the five diagonal entries minus the
/// product of the five antiband entries, scaled by the geometric mean of the
/// two monomials so the value is relative. A factor off the W pattern is
/// rejected.
pub fn monomial_residual(y: &FactorMatrix) -> Result<f64> {
    check_w_support(y)?;
    let diag: f64 = (0..5).map(|i| y.get(i, i)).product();
    let anti: f64 = ANTIBAND.iter().map(|&(r, c)| y.get(r, c)).product();
    let scale = (diag.abs() * anti.abs()).sqrt();
    if scale > 0.0 {
        Ok((diag - anti).abs() / scale)
    } else {
        Ok((diag - anti).abs())
    }
}

/// Exact binomial difference (diagonal product minus antiband product) for a
/// rational factor; zero exactly on the Hildebrand factor variety.
pub fn monomial_difference_exact(y: &RationalFactorMatrix) -> Result<BigRational> {
    if y.rows() != 5 || y.cols() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 25,
            got: y.rows() * y.cols(),
        });
    }
    for i in 0..5 {
        for j in 0..5 {
            if y.support()[i * 5 + j] && !W_PATTERN[i][j] {
                return Err(Error::SupportViolation { row: i, col: j });
            }
        }
    }
    let mut diag = BigRational::from_integer(1.into());
    let mut anti = BigRational::from_integer(1.into());
    for i in 0..5 {
        diag *= y.get(i, i);
    }
    for &(r, c) in ANTIBAND.iter() {
        anti *= y.get(r, c);
    }
    Ok(diag - anti)
}

fn check_w_support(y: &FactorMatrix) -> Result<()> {
    if y.rows() != 5 || y.cols() != 5 {
        return Err(Error::DimensionMismatch {
            expected: 25,
            got: y.rows() * y.cols(),
        });
    }
    for i in 0..5 {
        for j in 0..5 {
            if y.support()[i * 5 + j] && !W_PATTERN[i][j] {
                return Err(Error::SupportViolation { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Random point of the rank-deficient boundary part: the Gram matrix of a
/// 5x4 factor with uniform (0,1) entries.
pub fn rank4_sample(rng: &mut impl Rng) -> SymMatrix {
    let data: Vec<f64> = (0..20).map(|_| rng.gen::<f64>()).collect();
    FactorMatrix::new(5, 4, data)
        .expect("uniform entries are nonnegative")
        .gram()
}

/// Random point of the zero-entry boundary part: the Gram matrix of a 5x5
/// uniform factor after two rows are given disjoint column supports, which
/// forces one off-diagonal Gram entry to be exactly zero.
pub fn zero_locus_sample(rng: &mut impl Rng) -> SymMatrix {
    let mut data: Vec<f64> = (0..25).map(|_| rng.gen::<f64>()).collect();
    let i = rng.gen_range(0..5usize);
    let j = (i + 1 + rng.gen_range(0..4usize)) % 5;
    let split = rng.gen_range(1..5usize);
    for c in 0..5 {
        if c < split {
            data[j * 5 + c] = 0.0;
        } else {
            data[i * 5 + c] = 0.0;
        }
    }
    FactorMatrix::new(5, 5, data)
        .expect("uniform entries are nonnegative")
        .gram()
}
