//! Reduced-order LQR design, gain lift-back, functional gains and
//! closed-loop simulation of the full-order DAE.

use faer::prelude::*;
use faer::Side;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dense_solve, solution_is_regular, symmetrize, RMat, SparseLu, SparseMatrix};
use crate::reduction::ReducedModel;
use crate::system::{Index2System, SchurData};
use crate::testbed::grid::{Component, GridGeometry};
use crate::transfer::pencil_poles;

/// Reduced LQR problem with state weight `CrᵀCr` and input weight `R`.
#[derive(Clone, Debug)]
pub struct LqrProblem {
    pub rom: ReducedModel,
    pub r: RMat,
}

#[derive(Clone, Debug)]
pub struct LqrResult {
    /// Riccati solution (symmetric positive semidefinite).
    pub p: RMat,
    /// `K̃ = R⁻¹ B̃ᵀ P Ẽ`.
    pub k_reduced: RMat,
    /// `K = K̃ Vᵀ`.
    pub k_full: RMat,
    /// Frobenius norm of the generalized Riccati residual.
    pub residual_norm: f64,
    /// `‖ÃᵀPẼ‖_F + ‖C̃ᵀC̃‖_F`, the scale the residual is measured against.
    pub residual_scale: f64,
    /// Largest real part of the reduced closed-loop poles.
    pub closed_loop_abscissa: f64,
}

const SIGN_TOL: f64 = 1e-13;
const SIGN_MAX_ITER: usize = 100;

fn inverse(a: &RMat) -> Result<RMat> {
    let n = a.nrows();
    dense_solve(a.as_ref(), RMat::identity(n, n).as_ref())
}

/// `|det a|^(1/n)` from an LU factorization.
fn det_scale(a: &RMat) -> f64 {
    let n = a.nrows();
    let lu = a.partial_piv_lu();
    let u = lu.U();
    let logdet: f64 = (0..n).map(|i| u[(i, i)].abs().ln()).sum();
    let c = (logdet / n as f64).exp();
    if c.is_finite() && c > 0.0 {
        c
    } else {
        1.0
    }
}

/// Matrix sign function by the determinant-scaled Newton iteration.
fn matrix_sign(z0: &RMat) -> Result<RMat> {
    let mut z = z0.clone();
    for _ in 0..SIGN_MAX_ITER {
        let zi = inverse(&z)
            .map_err(|_| Error::NoStabilizingSolution("eigenvalues on the imaginary axis".into()))?;
        let c = det_scale(&z);
        let next = (&z * Scale(0.5 / c)) + (&zi * Scale(0.5 * c));
        let diff = (&next - &z).norm_l2();
        z = next;
        if diff <= SIGN_TOL * z.norm_l2() {
            return Ok(z);
        }
    }
    Err(Error::NoStabilizingSolution(
        "sign iteration did not converge (eigenvalues near the imaginary axis)".into(),
    ))
}

/// Solves `Fᵀ X + X F + M = 0` for stable `F` with the sign iteration on
/// `[[F, 0], [M, −Fᵀ]]`.
fn lyapunov(f: &RMat, m: &RMat) -> Result<RMat> {
    let mut a = f.clone();
    let mut c = m.clone();
    for _ in 0..SIGN_MAX_ITER {
        let ai = inverse(&a).map_err(|_| Error::NoStabilizingSolution("singular Lyapunov operator".into()))?;
        let s = det_scale(&a);
        let next_a = (&a * Scale(0.5 / s)) + (&ai * Scale(0.5 * s));
        let next_c = (&c * Scale(0.5 / s)) + (ai.transpose() * &c * &ai) * Scale(0.5 * s);
        let diff = (&next_a - &a).norm_l2();
        a = next_a;
        c = next_c;
        if diff <= SIGN_TOL * a.norm_l2() {
            return Ok(symmetrize((&c * Scale(0.5)).as_ref()));
        }
    }
    Err(Error::NoStabilizingSolution("Lyapunov iteration did not converge".into()))
}

fn care_residual(a: &RMat, g: &RMat, q: &RMat, x: &RMat) -> RMat {
    a.transpose() * x + x * a - x * g * x + q
}

/// Stabilizing solution of `AᵀX + XA − X G X + Q = 0`.
pub fn solve_care(a: &RMat, g: &RMat, q: &RMat) -> Result<RMat> {
    let n = a.nrows();
    let mut h = RMat::zeros(2 * n, 2 * n);
    h.as_mut().submatrix_mut(0, 0, n, n).copy_from(a);
    h.as_mut().submatrix_mut(0, n, n, n).copy_from(-g);
    h.as_mut().submatrix_mut(n, 0, n, n).copy_from(-q);
    h.as_mut().submatrix_mut(n, n, n, n).copy_from(-a.transpose());
    let w = matrix_sign(&h)?;
    let eye = RMat::identity(n, n);
    let mut lhs = RMat::zeros(2 * n, n);
    lhs.as_mut().subrows_mut(0, n).copy_from(w.as_ref().submatrix(0, n, n, n));
    lhs.as_mut()
        .subrows_mut(n, n)
        .copy_from(w.as_ref().submatrix(n, n, n, n) + &eye);
    let mut rhs = RMat::zeros(2 * n, n);
    rhs.as_mut()
        .subrows_mut(0, n)
        .copy_from(-(w.as_ref().submatrix(0, 0, n, n) + &eye));
    rhs.as_mut().subrows_mut(n, n).copy_from(-w.as_ref().submatrix(n, 0, n, n));
    let qr = lhs.qr();
    let x = qr.solve_lstsq(rhs.as_ref());
    if !x.is_all_finite() {
        return Err(Error::NoStabilizingSolution("stable subspace is not a graph".into()));
    }
    let mut x = symmetrize(x.as_ref());
    // Newton-Kleinman refinement
    let mut res = care_residual(a, g, q, &x).norm_l2();
    for _ in 0..6 {
        let scale = (a.transpose() * &x).norm_l2() + q.norm_l2();
        if res <= 1e-15 * scale || res == 0.0 {
            break;
        }
        let f = a - g * &x;
        let m = q + &x * g * &x;
        let Ok(next) = lyapunov(&f, &m) else { break };
        let next_res = care_residual(a, g, q, &next).norm_l2();
        if next_res >= res {
            break;
        }
        x = next;
        res = next_res;
    }
    Ok(x)
}

fn check_weight(r: &RMat, m: usize) -> Result<()> {
    if r.nrows() != m || r.ncols() != m {
        return Err(Error::DimensionMismatch(format!("R must be {m} x {m}")));
    }
    let asym = (r - r.transpose()).norm_l2();
    if !r.is_all_finite() || asym > 1e-12 * r.norm_l2() || r.llt(Side::Lower).is_err() {
        return Err(Error::IndefiniteWeight);
    }
    Ok(())
}

/// Solves `ÃᵀPẼ + ẼᵀPÃ − ẼᵀPB̃R⁻¹B̃ᵀPẼ + C̃ᵀC̃ = 0` for the stabilizing `P`
/// and forms the reduced and lifted gains.
pub fn solve_lqr(prob: &LqrProblem) -> Result<LqrResult> {
    let rom = &prob.rom;
    let m = rom.inputs();
    check_weight(&prob.r, m)?;
    let (e, a, b, c) = (rom.er(), rom.ar(), rom.br(), rom.cr());
    let singular_e = |_| Error::DegenerateOperator("reduced E is singular".into());
    let a_hat = dense_solve(e.as_ref(), a.as_ref()).map_err(singular_e)?;
    let b_hat = dense_solve(e.as_ref(), b.as_ref()).map_err(singular_e)?;
    let r_inv_bt = dense_solve(prob.r.as_ref(), b_hat.transpose()).map_err(|_| Error::IndefiniteWeight)?;
    let g = symmetrize((&b_hat * &r_inv_bt).as_ref());
    let q = c.transpose() * c;
    let x = solve_care(&a_hat, &g, &q)?;
    let k_reduced = &r_inv_bt * &x;

    // P = Ẽ⁻ᵀ X Ẽ⁻¹
    let et_inv_x = dense_solve(e.transpose(), x.as_ref()).map_err(singular_e)?;
    let p = dense_solve(e.transpose(), et_inv_x.transpose()).map_err(singular_e)?;
    let p = symmetrize(p.as_ref());

    let r_inv_bt_raw = dense_solve(prob.r.as_ref(), b.transpose()).map_err(|_| Error::IndefiniteWeight)?;
    let at_p_e = a.transpose() * &p * e;
    let et_p_b = e.transpose() * &p * b;
    let residual = &at_p_e + at_p_e.transpose() - &et_p_b * &r_inv_bt_raw * (&p * e) + &q;
    let residual_norm = residual.norm_l2();
    let residual_scale = at_p_e.norm_l2() + q.norm_l2();

    let closed = &a_hat - &b_hat * &k_reduced;
    let poles = pencil_poles(&closed, &RMat::identity(closed.nrows(), closed.nrows()))?;
    let closed_loop_abscissa = poles.spectral_abscissa();
    if closed_loop_abscissa.is_nan() || closed_loop_abscissa >= 0.0 {
        return Err(Error::NoStabilizingSolution(format!(
            "closed-loop spectral abscissa {closed_loop_abscissa:e} is not negative"
        )));
    }
    let k_full = lift_gain(&k_reduced, rom)?;
    Ok(LqrResult {
        p,
        k_reduced,
        k_full,
        residual_norm,
        residual_scale,
        closed_loop_abscissa,
    })
}

/// `K = K̃ Vᵀ`.
pub fn lift_gain(k_reduced: &RMat, rom: &ReducedModel) -> Result<RMat> {
    if k_reduced.ncols() != rom.order() {
        return Err(Error::DimensionMismatch("gain columns must equal the reduced order".into()));
    }
    Ok(k_reduced * rom.v().transpose())
}

/// One gain sample per velocity unknown and input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GainSample {
    pub input: usize,
    pub component: Component,
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
    pub gain: f64,
}

/// Gain fields `h = E11⁻¹ Kᵀ` for the lumped mass `E11 = hx·hy·I`, so that
/// `Σ h·x·hx·hy = K x`.
pub fn functional_gains(k_full: &RMat, geom: &GridGeometry) -> Result<Vec<GainSample>> {
    if k_full.ncols() != geom.n_velocity() {
        return Err(Error::DimensionMismatch(format!(
            "gain has {} columns, grid has {} velocity unknowns",
            k_full.ncols(),
            geom.n_velocity()
        )));
    }
    let w = 1.0 / (geom.hx() * geom.hy());
    let mut out = Vec::with_capacity(k_full.nrows() * k_full.ncols());
    for input in 0..k_full.nrows() {
        for (k, d) in geom.dofs().iter().enumerate() {
            out.push(GainSample {
                input,
                component: d.component,
                i: d.i,
                j: d.j,
                x: d.x,
                y: d.y,
                gain: w * k_full[(input, k)],
            });
        }
    }
    Ok(out)
}

/// E11-orthogonal projection onto `ker(A21)`:
/// `x − E11⁻¹A21ᵀ S⁻¹ A21 x`.
pub fn consistent_initial_state(sys: &Index2System, x: &RMat) -> Result<RMat> {
    if x.nrows() != sys.n1() {
        return Err(Error::DimensionMismatch("initial state length".into()));
    }
    if sys.n2() == 0 {
        return Ok(x.clone());
    }
    let schur = SchurData::new(sys)?;
    let a21x = sys.a21().mul(x.as_ref());
    let y = dense_solve(schur.s.as_ref(), a21x.as_ref()).map_err(|_| Error::SingularSchurComplement)?;
    Ok(x - &schur.e_inv_a21t * y)
}

/// Implicit-Euler trajectory. States are not stored; norms, inputs, outputs
/// and constraint residuals are recorded at every step.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x_norm: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
    /// `‖A21 x(t_k)‖ / ‖x(t_k)‖`.
    pub constraint_residual: Vec<f64>,
    pub x_final: RMat,
}

fn norm(x: &RMat) -> f64 {
    x.norm_l2()
}

fn relative_constraint(sys: &Index2System, x: &RMat) -> f64 {
    let nx = norm(x);
    let r = sys.a21().mul(x.as_ref()).norm_l2();
    if nx == 0.0 {
        r
    } else {
        r / nx
    }
}

/// Largest relative constraint residual accepted for an initial state.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Closed loop `E11 x' = (A11 − B1K) x + A21ᵀ x2`, `0 = A21 x`,
/// `u = −K x`, integrated by implicit Euler. Each step solves the saddle
/// system `[[E11 − dt(A11 − B1K), A21ᵀ], [A21, 0]]` through a sparse LU of the
/// open-loop step matrix and a Woodbury correction for `B1K`.
pub fn simulate_closed_loop(
    sys: &Index2System,
    k_full: &RMat,
    x0: &RMat,
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    let n1 = sys.n1();
    let n2 = sys.n2();
    let m = sys.inputs();
    if sys.b2().norm_max() != 0.0 {
        return Err(Error::Unsupported("closed-loop simulation requires B2 = 0".into()));
    }
    if k_full.nrows() != m || k_full.ncols() != n1 || x0.nrows() != n1 || x0.ncols() != 1 {
        return Err(Error::DimensionMismatch("gain or initial state".into()));
    }
    if !(dt > 0.0 && dt.is_finite() && t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::Config("need dt > 0 and a finite T >= 0".into()));
    }
    let rel0 = relative_constraint(sys, x0);
    if rel0 > CONSISTENCY_TOL {
        return Err(Error::InconsistentInitialState(rel0));
    }
    let steps = (t_final / dt).round() as usize;
    let n = n1 + n2;

    let mut trips: Vec<(usize, usize, f64)> = Vec::new();
    trips.extend(sys.e11().entries().iter().copied());
    trips.extend(sys.a11().entries().iter().map(|&(i, j, v)| (i, j, -dt * v)));
    for &(k, j, v) in sys.a21().entries() {
        trips.push((n1 + k, j, v));
        trips.push((j, n1 + k, v));
    }
    let lu = SparseLu::factor(n, &trips, |v: &f64| v.abs()).map_err(|_| Error::SingularPencil)?;

    // Woodbury data: M = M0 + U Vᵀ with U = [dt B1; 0], Vᵀ = [K, 0]
    let mut u_mat = RMat::zeros(n, m);
    u_mat.as_mut().subrows_mut(0, n1).copy_from(sys.b1() * Scale(dt));
    let y_mat = lu.solve(u_mat.as_ref());
    if !solution_is_regular(y_mat.as_ref(), u_mat.as_ref(), lu.norm_inf()) {
        return Err(Error::SingularPencil);
    }
    let cap = RMat::identity(m, m) + k_full * y_mat.as_ref().subrows(0, n1);
    let cap_lu = cap.partial_piv_lu();

    let c_full = |x: &RMat, x2: Option<&RMat>, u: &RMat| -> Vec<f64> {
        let mut y = sys.c1() * x + sys.d() * u;
        if let Some(p) = x2 {
            y += sys.c2() * p;
        }
        (0..y.nrows()).map(|i| y[(i, 0)]).collect()
    };
    let has_c2 = sys.c2().norm_max() != 0.0;

    let mut traj = Trajectory {
        t: Vec::with_capacity(steps + 1),
        x_norm: Vec::with_capacity(steps + 1),
        u: Vec::with_capacity(steps + 1),
        y: Vec::with_capacity(steps + 1),
        constraint_residual: Vec::with_capacity(steps + 1),
        x_final: x0.clone(),
    };
    let mut x = x0.clone();
    let u0 = -(k_full * &x);
    // algebraic variable at t = 0 from the hidden constraint
    let x2_0 = if has_c2 && n2 > 0 {
        let schur = SchurData::new(sys)?;
        let f = sys.a11().mul(x.as_ref()) + sys.b1() * &u0;
        let e_inv_f = schur.e11_lu.solve(f.as_ref());
        let rhs = sys.a21().mul(e_inv_f.as_ref());
        Some(-dense_solve(schur.s.as_ref(), rhs.as_ref()).map_err(|_| Error::SingularSchurComplement)?)
    } else {
        None
    };
    traj.t.push(0.0);
    traj.x_norm.push(norm(&x));
    traj.y.push(c_full(&x, x2_0.as_ref(), &u0));
    traj.u.push((0..m).map(|i| u0[(i, 0)]).collect());
    traj.constraint_residual.push(rel0);

    let mut rhs = RMat::zeros(n, 1);
    for k in 1..=steps {
        rhs.as_mut().subrows_mut(0, n1).copy_from(sys.e11().mul(x.as_ref()));
        let z0 = lu.solve(rhs.as_ref());
        let corr = cap_lu.solve(k_full * z0.as_ref().subrows(0, n1));
        let z = &z0 - &y_mat * corr;
        if !z.is_all_finite() {
            return Err(Error::SingularPencil);
        }
        x = z.as_ref().subrows(0, n1).to_owned();
        let x2 = z.as_ref().subrows(n1, n2) * Scale(-1.0 / dt);
        let u = -(k_full * &x);
        traj.t.push(k as f64 * dt);
        traj.x_norm.push(norm(&x));
        traj.y.push(c_full(&x, has_c2.then_some(&x2), &u));
        traj.u.push((0..m).map(|i| u[(i, 0)]).collect());
        traj.constraint_residual.push(relative_constraint(sys, &x));
    }
    traj.x_final = x;
    Ok(traj)
}

/// Full-order closed-loop system with `A11 ← A11 − B1 K`.
pub fn closed_loop_system(sys: &Index2System, k_full: &RMat) -> Result<Index2System> {
    if k_full.nrows() != sys.inputs() || k_full.ncols() != sys.n1() {
        return Err(Error::DimensionMismatch("gain".into()));
    }
    let mut a = sys.a11().to_dense();
    a -= sys.b1() * k_full;
    sys.with_a11(SparseMatrix::from_dense(a.as_ref()))
}
