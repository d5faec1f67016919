//! Differential geometry of the boundary loci: explicit charts, analytic
//! Jacobians of the factor-to-Gram map, normal directions orthogonal to the
//! tangent space in the trace inner product, and outward perturbations used
//! to manufacture doubly nonnegative matrices with no completely positive
//! factorization.
//!
//! Both loci are 14-dimensional hypersurfaces in the 15-dimensional space of
//! symmetric 5x5 matrices. The Hildebrand chart uses the 14 free entries of
//! the W pattern with y52 solved from the binomial equation, giving a
//! Jacobian with 14 independent columns; the Horn chart keeps its 15 raw
//! parameters, whose Jacobian is rank-deficient by one. Either way the
//! normal spans the orthogonal complement of the column space after the
//! symmetric matrices are vectorized isometrically (diagonal weight 1,
//! off-diagonal weight sqrt 2), so trace-orthogonality is Euclidean
//! orthogonality in coordinates.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::boundary::{
    horn_factor, hildebrand_factor, HildebrandParams, HornParams, ANTIBAND, W_PATTERN,
};
use crate::mat::{sym_to_vec, vec_to_sym, Dense, FactorMatrix, SymMatrix};
use crate::solver::{classify, factorize_all, match_columns, SolveOptions, Verdict};
use crate::{Error, Result};

/// Which locus a chart parametrizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChartLocus {
    #[serde(rename = "HORN")]
    Horn,
    #[serde(rename = "HILDEBRAND")]
    Hildebrand,
}

/// Dependent W-pattern entry of the Hildebrand chart (y52 in the
/// column-row naming, row 1 column 4 here).
const DEPENDENT: (usize, usize) = (1, 4);

/// Free coordinates of the Hildebrand chart: the W pattern without the
/// dependent entry, diagonal first, then the remaining antiband, then the
/// lower band.
const HILDEBRAND_FREE: [(usize, usize); 14] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (3, 3),
    (4, 4),
    (2, 0),
    (3, 1),
    (4, 2),
    (0, 3),
    (1, 0),
    (2, 1),
    (3, 2),
    (4, 3),
    (0, 4),
];

/// A local parametrization of one boundary locus around a base factor.
#[derive(Debug, Clone)]
pub struct BoundaryChart {
    locus: ChartLocus,
    params: Vec<f64>,
    base: FactorMatrix,
}

impl BoundaryChart {
    /// Horn chart at the 15 raw parameters (x, y, z).
    pub fn horn(p: &HornParams) -> Result<Self> {
        let base = horn_factor(p)?;
        let mut params = Vec::with_capacity(15);
        params.extend_from_slice(&p.x);
        params.extend_from_slice(&p.y);
        params.extend_from_slice(&p.z);
        Ok(BoundaryChart {
            locus: ChartLocus::Horn,
            params,
            base,
        })
    }

    /// Hildebrand chart at a W-pattern factor; the stored dependent entry
    /// must agree with the binomial equation to 1e-12 relative.
    pub fn hildebrand(factor: &FactorMatrix) -> Result<Self> {
        let params: Vec<f64> = HILDEBRAND_FREE
            .iter()
            .map(|&(i, j)| factor.get(i, j))
            .collect();
        let chart = BoundaryChart {
            locus: ChartLocus::Hildebrand,
            params,
            base: factor.clone(),
        };
        let rebuilt = chart.factor()?;
        let stored = factor.get(DEPENDENT.0, DEPENDENT.1);
        let solved = rebuilt.get(DEPENDENT.0, DEPENDENT.1);
        let residual = (stored - solved).abs();
        let gate = 1e-12 * (1.0 + stored.abs());
        if residual > gate {
            return Err(Error::NotNearLocus { residual, gate });
        }
        Ok(chart)
    }

    pub fn hildebrand_from_params(p: &HildebrandParams) -> Result<Self> {
        Self::hildebrand(&hildebrand_factor(p)?)
    }

    pub fn locus(&self) -> ChartLocus {
        self.locus
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn base_factor(&self) -> &FactorMatrix {
        &self.base
    }

    /// The factor matrix at the chart's parameters.
    pub fn factor(&self) -> Result<FactorMatrix> {
        factor_at(self.locus, &self.params)
    }
}

fn factor_at(locus: ChartLocus, params: &[f64]) -> Result<FactorMatrix> {
    match locus {
        ChartLocus::Horn => {
            let x: [f64; 5] = params[0..5].try_into().expect("slice length");
            let y: [f64; 5] = params[5..10].try_into().expect("slice length");
            let z: [f64; 5] = params[10..15].try_into().expect("slice length");
            horn_factor(&HornParams::new(x, y, z)?)
        }
        ChartLocus::Hildebrand => {
            let mut data = vec![0.0; 25];
            for (k, &(i, j)) in HILDEBRAND_FREE.iter().enumerate() {
                data[i * 5 + j] = params[k];
            }
            let numer: f64 = (0..5).map(|i| data[i * 5 + i]).product();
            let denom: f64 = ANTIBAND
                .iter()
                .filter(|&&p| p != DEPENDENT)
                .map(|&(i, j)| data[i * 5 + j])
                .product();
            if denom == 0.0 {
                return Err(Error::ChartSingularity);
            }
            data[DEPENDENT.0 * 5 + DEPENDENT.1] = numer / denom;
            let mask: Vec<bool> = W_PATTERN.iter().flatten().copied().collect();
            FactorMatrix::with_support(5, 5, data, mask)
        }
    }
}

/// Evaluate the chart: the Gram matrix of its factor.
pub fn chart_eval(chart: &BoundaryChart) -> Result<SymMatrix> {
    Ok(chart.factor()?.gram())
}

/// Analytic Jacobian of the parameters-to-Gram map in the isometric
/// vectorization: a 15 x k matrix whose column k is sym_to_vec of
/// dX X^T + X dX^T, with the Hildebrand columns carrying the chain-rule
/// term through the dependent entry.
pub fn chart_jacobian(chart: &BoundaryChart) -> Result<Dense> {
    let x = chart.factor()?;
    let k = chart.params.len();
    let mut jac = Dense::zeros(15, k);
    for (col, dx) in param_derivatives(chart, &x)?.into_iter().enumerate() {
        let da = SymMatrix::from_upper(5, |i, j| {
            let mut acc = 0.0;
            for m in 0..5 {
                acc += dx.get(i, m) * x.get(j, m) + x.get(i, m) * dx.get(j, m);
            }
            acc
        });
        for (row, v) in sym_to_vec(&da).into_iter().enumerate() {
            jac.set(row, col, v);
        }
    }
    Ok(jac)
}

/// Sparse derivative dX/dparam_k of the factor for every parameter.
fn param_derivatives(chart: &BoundaryChart, x: &FactorMatrix) -> Result<Vec<Dense>> {
    match chart.locus {
        ChartLocus::Horn => {
            let p = &chart.params;
            let mut out = Vec::with_capacity(15);
            for i in 0..5 {
                // row scaling: dX/dx_i = row i of X divided by x_i
                let mut dx = Dense::zeros(5, 5);
                for c in 0..5 {
                    dx.set(i, c, x.get(i, c) / p[i]);
                }
                out.push(dx);
            }
            for c in 0..5 {
                // band entry y_c appears twice in column c
                let mut dx = Dense::zeros(5, 5);
                let z_c = p[10 + c];
                dx.set((c + 1) % 5, c, p[(c + 1) % 5] * z_c);
                dx.set((c + 2) % 5, c, p[(c + 2) % 5] * z_c);
                out.push(dx);
            }
            for c in 0..5 {
                // column scaling: dX/dz_c = column c of X divided by z_c
                let mut dx = Dense::zeros(5, 5);
                for i in 0..5 {
                    dx.set(i, c, x.get(i, c) / p[10 + c]);
                }
                out.push(dx);
            }
            Ok(out)
        }
        ChartLocus::Hildebrand => {
            let dep = x.get(DEPENDENT.0, DEPENDENT.1);
            let mut out = Vec::with_capacity(14);
            for &(i, j) in HILDEBRAND_FREE.iter() {
                let mut dx = Dense::zeros(5, 5);
                dx.set(i, j, 1.0);
                let chain = if i == j {
                    dep / x.get(i, j)
                } else if ANTIBAND.contains(&(i, j)) {
                    -dep / x.get(i, j)
                } else {
                    0.0
                };
                if chain != 0.0 {
                    dx.set(DEPENDENT.0, DEPENDENT.1, chain);
                }
                out.push(dx);
            }
            Ok(out)
        }
    }
}

/// A unit normal to the boundary at a chart point, oriented outward (leaving
/// the completely positive cone).
#[derive(Debug, Clone)]
pub struct NormalData {
    pub normal: SymMatrix,
    pub point: SymMatrix,
    pub max_tangent_overlap: f64,
}

/// Numerical rank threshold relative to the largest singular value.
const RANK_TOL: f64 = 1e-9;
/// Probe distance and restart count for fixing the outward sign.
const SIGN_PROBE_STEP: f64 = 1e-3;
const SIGN_PROBE_RESTARTS: usize = 5;

/// Compute the outward unit normal at the chart point. The Jacobian must
/// have numerical rank exactly 14; its column space is orthonormalized and
/// the normal is the residual direction of the best-surviving coordinate
/// axis. The sign is fixed by a short classification probe at distance 1e-3:
/// if the probe still factorizes, the direction points inward and is
/// flipped.
pub fn normal_direction(chart: &BoundaryChart, opts: &SolveOptions) -> Result<NormalData> {
    let jac = chart_jacobian(chart)?;
    let k = jac.cols();

    let sv = crate::mat::singular_values(&jac);
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * sv[0]).count();
    if rank != 14 {
        return Err(Error::DegenerateChartPoint { rank });
    }

    // orthonormal basis of the column space: modified Gram-Schmidt with
    // pivoting on the largest remaining norm, reorthogonalized once
    let mut cols: Vec<Vec<f64>> = (0..k).map(|j| jac.column(j)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(14);
    for _ in 0..14 {
        let (piv, piv_norm) = cols
            .iter()
            .enumerate()
            .map(|(i, c)| (i, norm(c)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("columns remain");
        if piv_norm <= RANK_TOL * sv[0] {
            return Err(Error::DegenerateChartPoint { rank: basis.len() });
        }
        let mut q = cols.swap_remove(piv);
        for _ in 0..2 {
            for b in &basis {
                let proj = dot(&q, b);
                for (qi, bi) in q.iter_mut().zip(b) {
                    *qi -= proj * bi;
                }
            }
        }
        let qn = norm(&q);
        q.iter_mut().for_each(|v| *v /= qn);
        for c in cols.iter_mut() {
            let proj = dot(c, &q);
            for (ci, qi) in c.iter_mut().zip(&q) {
                *ci -= proj * qi;
            }
        }
        basis.push(q);
    }

    // complement: the coordinate axis with the largest residual after
    // projection, reprojected twice
    let mut best: Option<Vec<f64>> = None;
    let mut best_norm = -1.0;
    for axis in 0..15 {
        let mut v = vec![0.0; 15];
        v[axis] = 1.0;
        for b in &basis {
            let proj = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let n = norm(&v);
        if n > best_norm {
            best_norm = n;
            best = Some(v);
        }
    }
    let mut v = best.expect("at least one axis");
    for _ in 0..2 {
        for b in &basis {
            let proj = dot(&v, b);
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
    }
    let vn = norm(&v);
    v.iter_mut().for_each(|x| *x /= vn);

    let mut overlap = 0.0f64;
    for j in 0..k {
        let col = jac.column(j);
        let cn = norm(&col);
        if cn > 0.0 {
            overlap = overlap.max(dot(&v, &col).abs() / cn);
        }
    }

    let point = chart_eval(chart)?;
    let mut normal = vec_to_sym(5, &v)?;
    let probe_opts = SolveOptions {
        restarts: SIGN_PROBE_RESTARTS,
        ..opts.clone()
    };
    let probe = point.add_scaled(SIGN_PROBE_STEP, &normal)?;
    if classify(&probe, &probe_opts)?.verdict != Verdict::NotCp {
        normal = normal.scale(-1.0);
    }
    Ok(NormalData {
        normal,
        point,
        max_tangent_overlap: overlap,
    })
}

/// The perturbed matrix A + t N together with a flag telling whether it is
/// still numerically doubly nonnegative (eigenvalues and entries above
/// -1e-12 at the matrix scale).
pub fn perturb_outward(nd: &NormalData, t: f64) -> Result<(SymMatrix, bool)> {
    let p = nd.point.add_scaled(t, &nd.normal)?;
    let dnn = p.min_eigenvalue() >= -1e-12 * p.frob_norm() && p.min_entry() >= -1e-12;
    Ok((p, dnn))
}

/// Outcome of one nearest-point trial at distance t.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NearestCpOutcome {
    /// Some restart reconstructed the foot point A to within 1e-6.
    pub any_success: bool,
    /// Some restart recovered the chart's base factor to within 1e-3 under
    /// column matching.
    pub original_success: bool,
    /// Best Frobenius residual against the perturbed matrix across restarts.
    pub best_residual: f64,
}

const NEAREST_MATRIX_TOL: f64 = 1e-6;
const NEAREST_FACTOR_TOL: f64 = 1e-3;

/// Factorize A + t N at rank 5 with all restarts and score the outcome
/// against the foot point A and the chart's base factor. Since the cone is
/// convex and N is the outward unit normal, A is the nearest completely
/// positive matrix to the perturbed point for small t.
pub fn nearest_cp_experiment(
    chart: &BoundaryChart,
    nd: &NormalData,
    t: f64,
    opts: &SolveOptions,
) -> Result<NearestCpOutcome> {
    let perturbed = nd.point.add_scaled(t, &nd.normal)?;
    let reports = factorize_all(&perturbed, 5, opts)?;
    let base = chart.base_factor();
    let mut any_success = false;
    let mut original_success = false;
    let mut best_residual = f64::INFINITY;
    for rep in &reports {
        let gram = rep.b.gram();
        if nd.point.frob_dist(&gram)? < NEAREST_MATRIX_TOL {
            any_success = true;
        }
        if match_columns(&rep.b, base)? < NEAREST_FACTOR_TOL {
            original_success = true;
        }
        best_residual = best_residual.min(rep.residual);
    }
    Ok(NearestCpOutcome {
        any_success,
        original_success,
        best_residual,
    })
}

#[derive(Serialize, Deserialize)]
struct NormalDataRepr {
    dim: usize,
    point: Vec<f64>,
    normal: Vec<f64>,
    max_tangent_overlap: f64,
}

impl Serialize for NormalData {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NormalDataRepr {
            dim: self.point.dim(),
            point: sym_to_vec(&self.point),
            normal: sym_to_vec(&self.normal),
            max_tangent_overlap: self.max_tangent_overlap,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormalData {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = NormalDataRepr::deserialize(d)?;
        Ok(NormalData {
            point: vec_to_sym(repr.dim, &repr.point).map_err(D::Error::custom)?,
            normal: vec_to_sym(repr.dim, &repr.normal).map_err(D::Error::custom)?,
            max_tangent_overlap: repr.max_tangent_overlap,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::monomial_residual;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_hildebrand_chart(rng: &mut impl Rng) -> BoundaryChart {
        let p = HildebrandParams::sample(rng);
        BoundaryChart::hildebrand_from_params(&p).unwrap()
    }

    fn fd_jacobian(chart: &BoundaryChart, h: f64) -> Dense {
        let k = chart.params.len();
        let mut jac = Dense::zeros(15, k);
        for col in 0..k {
            let mut plus = chart.clone();
            plus.params[col] += h;
            let mut minus = chart.clone();
            minus.params[col] -= h;
            let ap = sym_to_vec(&chart_eval(&plus).unwrap());
            let am = sym_to_vec(&chart_eval(&minus).unwrap());
            for row in 0..15 {
                jac.set(row, col, (ap[row] - am[row]) / (2.0 * h));
            }
        }
        jac
    }

    #[test]
    fn hildebrand_chart_reproduces_factor() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let p = HildebrandParams::sample(&mut rng);
            let b = hildebrand_factor(&p).unwrap();
            let chart = BoundaryChart::hildebrand(&b).unwrap();
            let rebuilt = chart.factor().unwrap();
            for k in 0..25 {
                assert!((rebuilt.data()[k] - b.data()[k]).abs() <= 1e-12 * (1.0 + b.data()[k]));
            }
            assert!(monomial_residual(&rebuilt).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn horn_chart_reproduces_integer_example() {
        let p = HornParams::new([1.0; 5], [1.0, 2.0, 3.0, 4.0, 5.0], [1.0; 5]).unwrap();
        let chart = BoundaryChart::horn(&p).unwrap();
        let a = chart_eval(&chart).unwrap();
        assert_eq!(a.get(0, 0), 53.0);
        assert_eq!(a.get(0, 1), 32.0);
        assert_eq!(a.get(0, 4), 26.0);
    }

    #[test]
    fn rejects_factor_off_the_variety() {
        let mask: Vec<bool> = W_PATTERN.iter().flatten().copied().collect();
        let data: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
        let mut off = data.clone();
        off[DEPENDENT.0 * 5 + DEPENDENT.1] = 2.0; // breaks the binomial equation
        let b = FactorMatrix::with_support(5, 5, off, mask).unwrap();
        assert!(matches!(
            BoundaryChart::hildebrand(&b),
            Err(Error::NotNearLocus { .. })
        ));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for trial in 0..20 {
            let chart = if trial % 2 == 0 {
                sample_hildebrand_chart(&mut rng)
            } else {
                BoundaryChart::horn(&HornParams::sample(&mut rng)).unwrap()
            };
            let jac = chart_jacobian(&chart).unwrap();
            let fd = fd_jacobian(&chart, 1e-6);
            for col in 0..jac.cols() {
                let mut num = 0.0f64;
                let mut den = 0.0f64;
                for row in 0..15 {
                    num += (jac.get(row, col) - fd.get(row, col)).powi(2);
                    den += fd.get(row, col).powi(2);
                }
                assert!(
                    num.sqrt() <= 1e-6 * den.sqrt().max(1.0),
                    "trial {trial} col {col}: {:e} vs {:e}",
                    num.sqrt(),
                    den.sqrt()
                );
            }
        }
    }

    #[test]
    fn horn_jacobian_is_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let chart = BoundaryChart::horn(&HornParams::sample(&mut rng)).unwrap();
            let jac = chart_jacobian(&chart).unwrap();
            let sv = crate::mat::singular_values(&jac);
            assert!(sv[14] <= 1e-9 * sv[0], "sigma15/sigma1 = {:e}", sv[14] / sv[0]);
            assert!(sv[13] > 1e-9 * sv[0]);
        }
    }

    #[test]
    fn euler_directions() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        // Hildebrand: scaling every free parameter scales the factor, so
        // J p = 2 vec(A)
        let chart = sample_hildebrand_chart(&mut rng);
        let jac = chart_jacobian(&chart).unwrap();
        let a_vec = sym_to_vec(&chart_eval(&chart).unwrap());
        for row in 0..15 {
            let jp: f64 = (0..14).map(|c| jac.get(row, c) * chart.params[c]).sum();
            assert_relative_eq!(jp, 2.0 * a_vec[row], max_relative = 1e-10);
        }
        // Horn: scaling z alone scales the factor
        let chart = BoundaryChart::horn(&HornParams::sample(&mut rng)).unwrap();
        let jac = chart_jacobian(&chart).unwrap();
        let a_vec = sym_to_vec(&chart_eval(&chart).unwrap());
        for row in 0..15 {
            let jp: f64 = (0..5).map(|c| jac.get(row, 10 + c) * chart.params[10 + c]).sum();
            assert_relative_eq!(jp, 2.0 * a_vec[row], max_relative = 1e-10);
        }
    }

    #[test]
    fn normal_is_unit_and_tangent_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let opts = SolveOptions {
            seed: 5,
            ..SolveOptions::default()
        };
        for _ in 0..3 {
            let chart = sample_hildebrand_chart(&mut rng);
            let nd = normal_direction(&chart, &opts).unwrap();
            assert!((nd.normal.frob_norm() - 1.0).abs() <= 1e-12);
            assert!(nd.max_tangent_overlap <= 1e-9, "{:e}", nd.max_tangent_overlap);

            let (p, dnn) = perturb_outward(&nd, 1e-5).unwrap();
            assert!(dnn, "tiny outward step should stay doubly nonnegative");
            assert_relative_eq!(nd.point.frob_dist(&p).unwrap(), 1e-5, max_relative = 1e-9);

            let (same, flag) = perturb_outward(&nd, 0.0).unwrap();
            assert_eq!(same, nd.point);
            assert!(flag);
        }
    }

    #[test]
    fn outward_probe_leaves_the_cone() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let opts = SolveOptions {
            seed: 7,
            ..SolveOptions::default()
        };
        let chart = sample_hildebrand_chart(&mut rng);
        let nd = normal_direction(&chart, &opts).unwrap();
        let (p, _) = perturb_outward(&nd, 1e-2).unwrap();
        let verdict = classify(&p, &opts).unwrap().verdict;
        assert_eq!(verdict, Verdict::NotCp);
    }

    #[test]
    fn nearest_at_zero_distance_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let opts = SolveOptions {
            seed: 11,
            ..SolveOptions::default()
        };
        let chart = sample_hildebrand_chart(&mut rng);
        let nd = normal_direction(&chart, &opts).unwrap();
        let out = nearest_cp_experiment(&chart, &nd, 0.0, &opts).unwrap();
        assert!(out.any_success);
        assert!(out.best_residual < 1e-6);
    }

    #[test]
    fn normal_data_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let opts = SolveOptions {
            seed: 3,
            ..SolveOptions::default()
        };
        let chart = sample_hildebrand_chart(&mut rng);
        let nd = normal_direction(&chart, &opts).unwrap();
        let json = serde_json::to_string(&nd).unwrap();
        let back: NormalData = serde_json::from_str(&json).unwrap();
        assert!(back.point.frob_dist(&nd.point).unwrap() <= 1e-15);
        assert!(back.normal.frob_dist(&nd.normal).unwrap() <= 1e-15);
    }
}
