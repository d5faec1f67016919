//! Trust-region iteration with a Steihaug truncated-CG subproblem solver.
//!
//! Standard constants: accept a step when the reduction ratio exceeds 0.1,
//! double the radius after a ratio above 0.75 on a boundary-hitting step,
//! quarter it after a rejection. Curvature enters only through
//! Hessian-vector products approximated by central differences of the
//! gradient with step h = fd_step (1 + ||C||) / (1 + ||V||), applied to the
//! normalized direction and scaled back, so the perturbation magnitude does
//! not degenerate for short CG directions.
//!
//! The predicted reduction is tracked inside CG through the identity
//! m(z_{k+1}) - m(z_k) = -alpha_k r_k^T r_k / 2, which keeps it consistent
//! with the curvature CG actually saw; re-evaluating p^T H p at the returned
//! step would inject enough differencing noise near a minimizer to flip its
//! sign and stall the outer loop.
//!
//! Zero detection: a factor entry that belongs to the zero pattern of the
//! solution approaches zero only geometrically under the squaring
//! parametrization (the objective is quartic in that entry, so its gradient
//! scales with the cube). The main loop therefore ends with a short polish
//! phase that snaps near-zero entries to exact zeros and re-optimizes on
//! the induced pattern, keeping the result only when the residual improves.

use super::{SolveOptions, Workspace};
use crate::mat::{Dense, FactorMatrix, SymMatrix};
use crate::{Error, Result};

const ACCEPT_RATIO: f64 = 0.1;
const EXPAND_RATIO: f64 = 0.75;
const EXPAND_FACTOR: f64 = 2.0;
const SHRINK_FACTOR: f64 = 0.25;
const MAX_RADIUS: f64 = 1e8;
// radius collapse: steps this small cannot change the iterate meaningfully
const MIN_RADIUS_REL: f64 = 1e-13;
// zero detection: snap entries below this relative size, polish briefly
const SNAP_REL: f64 = 1e-3;
const SNAP_BUDGET: usize = 60;
const SNAP_ROUNDS: usize = 3;

/// Minimize g from the starting point `c0`, stopping at gradient norm
/// `grad_tol` or after `max_iter` trust-region steps, followed by the
/// zero-detection polish. The support of the starting point is preserved
/// exactly by every iterate. A non-finite objective value aborts the run
/// with `converged = false`.
///
/// Internally the problem is diagonally equilibrated: A = B B^T holds with
/// nonnegative B exactly when D A D = (D B)(D B)^T does for a positive
/// diagonal D, and running the iteration on D A D with unit diagonal keeps
/// the curvature balanced when the input has a wide diagonal range. The
/// returned iterate and factor are mapped back to the original scaling.
pub fn trust_region_solve(
    a: &SymMatrix,
    rank: usize,
    c0: Dense,
    opts: &SolveOptions,
) -> Result<super::SolveReport> {
    opts.validate()?;
    let n = a.dim();
    if c0.rows() != n || c0.cols() != rank {
        return Err(Error::DimensionMismatch {
            expected: n * rank,
            got: c0.rows() * c0.cols(),
        });
    }

    // equilibrate: d_i = 1/sqrt(a_ii), rows of C scaled by sqrt(d_i)
    let d: Vec<f64> = (0..n)
        .map(|i| {
            let aii = a.get(i, i);
            if aii > 0.0 {
                1.0 / aii.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scaled_a = SymMatrix::from_upper(n, |i, j| a.get(i, j) * d[i] * d[j]);
    let mut scaled_c0 = c0.data().to_vec();
    for i in 0..n {
        let s = d[i].sqrt();
        for j in 0..rank {
            scaled_c0[i * rank + j] *= s;
        }
    }

    let mut ws = Workspace::new(n, rank);
    let mut state = LoopState::fresh(&mut ws, scaled_a.data(), scaled_c0, opts);
    let mut iterations = run_loop(&mut ws, scaled_a.data(), &mut state, opts.max_iter, opts);
    if !state.aborted {
        iterations += snap_and_flex(&mut ws, &scaled_a, &mut state, opts);
    }

    // The equilibrated problem minimizes a weighted distance whose optimum
    // can sit measurably away from the unweighted one whenever the target
    // lies outside the cone. Finish in the original metric from the point
    // the scaled phase found; for targets inside the cone this is a cheap
    // no-op because both problems share their zero-residual optima.
    let mut c_back = state.c;
    for i in 0..n {
        let s = d[i].sqrt();
        for j in 0..rank {
            c_back[i * rank + j] /= s;
        }
    }
    let mut orig = LoopState::fresh(&mut ws, a.data(), c_back, opts);
    orig.aborted |= state.aborted;
    if !orig.aborted {
        iterations += run_loop(&mut ws, a.data(), &mut orig, SNAP_BUDGET, opts);
    }
    let mut stationary = !orig.aborted && orig.grad_norm <= opts.grad_tol;
    if !orig.aborted {
        iterations += snap_and_flex(&mut ws, a, &mut orig, opts);
        stationary = stationary || orig.grad_norm <= opts.grad_tol;
    }

    let c_out = orig.c;
    let b_data: Vec<f64> = c_out.iter().map(|&v| v * v).collect();
    let b_support: Vec<bool> = b_data.iter().map(|&v| v != 0.0).collect();
    let b = FactorMatrix::with_support(n, rank, b_data, b_support)?;
    let residual = a.frob_dist(&b.gram())?;
    Ok(super::SolveReport {
        c_final: Dense::from_data(n, rank, c_out)?,
        b,
        residual,
        grad_norm: orig.grad_norm,
        iterations,
        converged: !orig.aborted && (stationary || orig.grad_norm <= opts.grad_tol),
        restart_index: 0,
    })
}

/// Zero-detection snaps plus the budget-bounded continuation past the
/// gradient test; mutates the state only when the residual improves. The
/// continuation is needed because factorizations with zeros are reached
/// only tangentially: an entry headed for zero and the residual flexes of
/// the final pattern both have gradients that die faster than the residual
/// itself (the factorizations are not infinitesimally rigid), so the
/// gradient test fires early.
fn snap_and_flex(
    ws: &mut Workspace,
    a: &SymMatrix,
    state: &mut LoopState,
    opts: &SolveOptions,
) -> usize {
    let (n, rank) = (ws.n, ws.r);
    let a_flat = a.data();
    let polish_opts = SolveOptions {
        grad_tol: f64::MIN_POSITIVE,
        ..opts.clone()
    };
    let mut used_total = 0;
    for _ in 0..SNAP_ROUNDS {
        let Some(snapped) = snap_candidates(&state.c, a, n, rank) else {
            break;
        };
        let mut fork = LoopState::fresh(ws, a_flat, snapped, opts);
        if fork.aborted {
            break;
        }
        used_total += run_loop(ws, a_flat, &mut fork, SNAP_BUDGET, &polish_opts);
        if residual_of(&fork.c, a, n, rank) < residual_of(&state.c, a, n, rank) {
            *state = fork;
        } else {
            break;
        }
    }
    let flex_trigger = 1e-10 * (1.0 + a.frob_norm());
    if residual_of(&state.c, a, n, rank) > flex_trigger {
        let mut fork = LoopState::fresh(ws, a_flat, state.c.clone(), opts);
        used_total += run_loop(ws, a_flat, &mut fork, SNAP_BUDGET, &polish_opts);
        if residual_of(&fork.c, a, n, rank) < residual_of(&state.c, a, n, rank) {
            *state = fork;
        }
    }
    used_total
}

struct LoopState {
    c: Vec<f64>,
    g_val: f64,
    grad: Vec<f64>,
    grad_norm: f64,
    delta: f64,
    aborted: bool,
}

impl LoopState {
    fn fresh(ws: &mut Workspace, a_flat: &[f64], c: Vec<f64>, opts: &SolveOptions) -> Self {
        let g_val = ws.objective(a_flat, &c);
        let mut grad = vec![0.0; c.len()];
        ws.gradient(a_flat, &c, &mut grad);
        let grad_norm = norm(&grad);
        LoopState {
            aborted: !g_val.is_finite(),
            c,
            g_val,
            grad,
            grad_norm,
            delta: opts.tr_radius_init,
        }
    }
}

fn run_loop(
    ws: &mut Workspace,
    a_flat: &[f64],
    state: &mut LoopState,
    budget: usize,
    opts: &SolveOptions,
) -> usize {
    let dim = state.c.len();
    let support: Vec<bool> = state.c.iter().map(|&v| v != 0.0).collect();
    let mut step = vec![0.0; dim];
    let mut trial = vec![0.0; dim];
    let mut cg = CgBuffers::new(dim);
    let mut used = 0;

    while !state.aborted && state.grad_norm > opts.grad_tol && used < budget {
        let c_norm = norm(&state.c);
        if state.delta < MIN_RADIUS_REL * (1.0 + c_norm) {
            break;
        }
        let (hit_boundary, model_decrease) = steihaug(
            ws,
            a_flat,
            &state.c,
            &state.grad,
            state.grad_norm,
            state.delta,
            opts.fd_step,
            &mut cg,
            &mut step,
        );
        let predicted = -model_decrease;

        for k in 0..dim {
            trial[k] = state.c[k] + step[k];
        }
        let g_trial = ws.objective(a_flat, &trial);
        if !g_trial.is_finite() {
            state.aborted = true;
            break;
        }
        let actual = state.g_val - g_trial;
        let ratio = if predicted > 0.0 {
            actual / predicted
        } else {
            -1.0
        };

        if ratio > ACCEPT_RATIO {
            // accepted steps never increase the objective
            assert!(
                g_trial <= state.g_val,
                "monotonicity violated: {g_trial} > {}",
                state.g_val
            );
            state.c.copy_from_slice(&trial);
            state.g_val = g_trial;
            ws.gradient(a_flat, &state.c, &mut state.grad);
            state.grad_norm = norm(&state.grad);
            debug_assert!(state
                .c
                .iter()
                .zip(&support)
                .all(|(&v, &s)| s || v == 0.0));
        }
        if ratio > EXPAND_RATIO && hit_boundary {
            state.delta = (state.delta * EXPAND_FACTOR).min(MAX_RADIUS);
        } else if ratio < ACCEPT_RATIO {
            state.delta *= SHRINK_FACTOR;
        }
        used += 1;
    }
    used
}

/// Entries below SNAP_REL (1 + ||C||) set to exact zero, provided there is
/// something to snap and no row of a positive-diagonal target dies.
fn snap_candidates(c: &[f64], a: &SymMatrix, n: usize, rank: usize) -> Option<Vec<f64>> {
    let scale = SNAP_REL * (1.0 + norm(c));
    let mut snapped = c.to_vec();
    let mut any = false;
    for v in snapped.iter_mut() {
        if *v != 0.0 && v.abs() <= scale {
            *v = 0.0;
            any = true;
        }
    }
    if !any {
        return None;
    }
    for i in 0..n {
        let row_dead = (0..rank).all(|j| snapped[i * rank + j] == 0.0);
        if row_dead && a.get(i, i) > 0.0 {
            return None;
        }
    }
    Some(snapped)
}

fn residual_of(c: &[f64], a: &SymMatrix, n: usize, rank: usize) -> f64 {
    let b: Vec<f64> = c.iter().map(|&v| v * v).collect();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..rank {
                s += b[i * rank + k] * b[j * rank + k];
            }
            let d = a.get(i, j) - s;
            acc += d * d;
        }
    }
    acc.sqrt()
}

struct CgBuffers {
    z: Vec<f64>,
    r: Vec<f64>,
    d: Vec<f64>,
    hd: Vec<f64>,
}

impl CgBuffers {
    fn new(dim: usize) -> Self {
        CgBuffers {
            z: vec![0.0; dim],
            r: vec![0.0; dim],
            d: vec![0.0; dim],
            hd: vec![0.0; dim],
        }
    }
}

/// Steihaug truncated CG: stop at the model minimizer (inner residual below
/// min(0.1, sqrt(||g||)) ||g||), at the trust-region boundary, or at the
/// first direction of nonpositive curvature. Writes the step into `step`
/// and returns (hit_boundary, model decrease m(step) <= 0).
#[allow(clippy::too_many_arguments)]
fn steihaug(
    ws: &mut Workspace,
    a: &[f64],
    c: &[f64],
    grad: &[f64],
    grad_norm: f64,
    delta: f64,
    fd_step: f64,
    buf: &mut CgBuffers,
    step: &mut [f64],
) -> (bool, f64) {
    let dim = grad.len();
    let tol = grad_norm.sqrt().min(0.1) * grad_norm;

    buf.z.iter_mut().for_each(|v| *v = 0.0);
    buf.r.copy_from_slice(grad);
    for k in 0..dim {
        buf.d[k] = -grad[k];
    }
    let mut rr = grad_norm * grad_norm;
    let mut model = 0.0;

    for _ in 0..dim {
        hess_vec(ws, a, c, &buf.d, fd_step, &mut buf.hd);
        let dhd = dot(&buf.d, &buf.hd);
        if dhd <= 0.0 {
            let tau = boundary_tau(&buf.z, &buf.d, delta);
            for k in 0..dim {
                step[k] = buf.z[k] + tau * buf.d[k];
            }
            // r^T d = -r^T r on every CG iteration
            model += -tau * rr + 0.5 * tau * tau * dhd;
            return (true, model);
        }
        let alpha = rr / dhd;
        let mut znorm2 = 0.0;
        for k in 0..dim {
            let v = buf.z[k] + alpha * buf.d[k];
            znorm2 += v * v;
        }
        if znorm2.sqrt() >= delta {
            let tau = boundary_tau(&buf.z, &buf.d, delta);
            for k in 0..dim {
                step[k] = buf.z[k] + tau * buf.d[k];
            }
            model += -tau * rr + 0.5 * tau * tau * dhd;
            return (true, model);
        }
        model -= 0.5 * alpha * rr;
        for k in 0..dim {
            buf.z[k] += alpha * buf.d[k];
            buf.r[k] += alpha * buf.hd[k];
        }
        let rr_next = dot(&buf.r, &buf.r);
        if rr_next.sqrt() <= tol {
            break;
        }
        let beta = rr_next / rr;
        rr = rr_next;
        for k in 0..dim {
            buf.d[k] = -buf.r[k] + beta * buf.d[k];
        }
    }
    step.copy_from_slice(&buf.z);
    (false, model)
}

/// Positive root of ||z + tau d|| = delta.
fn boundary_tau(z: &[f64], d: &[f64], delta: f64) -> f64 {
    let dd = dot(d, d);
    if dd == 0.0 {
        return 0.0;
    }
    let zd = dot(z, d);
    let zz = dot(z, z);
    let disc = (zd * zd + dd * (delta * delta - zz)).max(0.0);
    (-zd + disc.sqrt()) / dd
}

/// Central-difference Hessian-vector product. The direction is normalized
/// first and the product scaled back, so the actual perturbation of C has
/// magnitude fd_step (1 + ||C||) / 2 independent of ||v||.
fn hess_vec(ws: &mut Workspace, a: &[f64], c: &[f64], v: &[f64], fd_step: f64, out: &mut [f64]) {
    let dim = c.len();
    let v_norm = norm(v);
    if v_norm == 0.0 {
        out.iter_mut().for_each(|x| *x = 0.0);
        return;
    }
    // h per the unit direction u = v / ||v||
    let h = fd_step * (1.0 + norm(c)) / 2.0;
    let scale = h / v_norm;
    let mut shifted = std::mem::take(&mut ws.fd_shift);
    let mut g_plus = std::mem::take(&mut ws.fd_gplus);
    for k in 0..dim {
        shifted[k] = c[k] + scale * v[k];
    }
    ws.gradient(a, &shifted, &mut g_plus);
    for k in 0..dim {
        shifted[k] = c[k] - scale * v[k];
    }
    ws.gradient(a, &shifted, out);
    let back = v_norm / (2.0 * h);
    for k in 0..dim {
        out[k] = (g_plus[k] - out[k]) * back;
    }
    ws.fd_shift = shifted;
    ws.fd_gplus = g_plus;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}
