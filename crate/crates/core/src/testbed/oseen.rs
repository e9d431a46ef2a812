//! Finite-difference Oseen operator on the staggered grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RMat, SparseMatrix};
use crate::system::Index2System;
use crate::testbed::grid::{Component, GridGeometry};

/// Base flow `v̄` about which the equations are linearized.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BaseFlow {
    Zero,
    /// `v̄ = (U0, 0)`.
    Uniform { speed: f64 },
    /// `v̄ = (4 U0 y (ly − y) / ly², 0)`.
    Parabolic { peak: f64 },
}

/// Axis-aligned rectangle in physical coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    /// Open rectangle, so patches sharing an edge stay disjoint.
    fn contains(&self, x: f64, y: f64) -> bool {
        let tol = 1e-12 * (1.0 + self.x1.abs().max(self.y1.abs()));
        x > self.x0 + tol && x < self.x1 - tol && y > self.y0 + tol && y < self.y1 - tol
    }
}

/// Value of a stencil neighbor: an unknown, or `self_coef·u + wall·u_control`.
enum Nb {
    Dof(usize),
    Val { self_coef: f64, wall: f64 },
}

const ZERO: Nb = Nb::Val {
    self_coef: 0.0,
    wall: 0.0,
};

struct Row {
    row: usize,
    coefs: Vec<(usize, f64)>,
    input: f64,
}

impl Row {
    fn add(&mut self, nb: &Nb, c: f64) {
        match *nb {
            Nb::Dof(k) => self.coefs.push((k, c)),
            Nb::Val { self_coef, wall } => {
                if self_coef != 0.0 {
                    self.coefs.push((self.row, c * self_coef));
                }
                self.input += c * wall;
            }
        }
    }
}

fn dof_or_zero(d: Option<usize>) -> Nb {
    d.map_or(ZERO, Nb::Dof)
}

/// Tangential neighbor: unknown, zero on a surface face, or a ghost value
/// `2·u_wall − u` behind a wall.
fn tangential(d: Option<usize>, on_surface: bool, wall: f64) -> Nb {
    match d {
        Some(k) => Nb::Dof(k),
        None if on_surface => ZERO,
        None => Nb::Val {
            self_coef: -1.0,
            wall: 2.0 * wall,
        },
    }
}

/// Linearized incompressible flow on the MAC grid.
///
/// Unknown velocities live on faces between fluid cells; every boundary is
/// no-slip except the obstacle, whose surface moves tangentially with unit
/// counter-clockwise rotation scaled by the input. Rows are multiplied by the
/// cell area, so `E11 = hx·hy·I`.
pub fn generate_oseen(
    geom: &GridGeometry,
    reynolds: f64,
    base_flow: BaseFlow,
    patches: &[Rect],
) -> Result<Index2System> {
    if !reynolds.is_finite() || reynolds <= 0.0 || reynolds > 1e12 {
        return Err(Error::DegenerateOperator(format!(
            "Reynolds number {reynolds} gives a degenerate diffusion operator"
        )));
    }
    let n1 = geom.n_velocity();
    let n2 = geom.n_pressure();
    let (hx, hy) = (geom.hx(), geom.hy());
    let ly = geom.spec().ly;
    let (nx, ny) = (geom.nx() as isize, geom.ny() as isize);
    let area = hx * hy;
    let nu = 1.0 / reynolds;
    let (xc, yc) = geom.obstacle_center().map_or((0.0, 0.0), |(x, y, _)| (x, y));
    let (speed, peak) = match base_flow {
        BaseFlow::Zero => (0.0, 0.0),
        BaseFlow::Uniform { speed } => (speed, 0.0),
        BaseFlow::Parabolic { peak } => (0.0, peak),
    };
    if !speed.is_finite() || !peak.is_finite() {
        return Err(Error::DegenerateOperator("base flow must be finite".into()));
    }
    let profile = |y: f64| speed + 4.0 * peak * y * (ly - y) / (ly * ly);
    let shear = |y: f64| 4.0 * peak * (ly - 2.0 * y) / (ly * ly);

    let mut rows: Vec<Row> = Vec::with_capacity(n1);
    for (k, dof) in geom.dofs().iter().enumerate() {
        let (i, j) = (dof.i as isize, dof.j as isize);
        let mut row = Row {
            row: k,
            coefs: vec![(k, -2.0 * nu / (hx * hx) - 2.0 * nu / (hy * hy))],
            input: 0.0,
        };
        let ub = profile(dof.y);
        match dof.component {
            Component::U => {
                let e = dof_or_zero(geom.u_dof(i + 1, j));
                let w = dof_or_zero(geom.u_dof(i - 1, j));
                let n_wall = if j + 1 < ny { -(((j + 1) as f64) * hy - yc) } else { 0.0 };
                let s_wall = if j > 0 { -((j as f64) * hy - yc) } else { 0.0 };
                let n = tangential(
                    geom.u_dof(i, j + 1),
                    geom.is_fluid(i - 1, j + 1) || geom.is_fluid(i, j + 1),
                    n_wall,
                );
                let s = tangential(
                    geom.u_dof(i, j - 1),
                    geom.is_fluid(i - 1, j - 1) || geom.is_fluid(i, j - 1),
                    s_wall,
                );
                row.add(&e, nu / (hx * hx) - ub / (2.0 * hx));
                row.add(&w, nu / (hx * hx) + ub / (2.0 * hx));
                row.add(&n, nu / (hy * hy));
                row.add(&s, nu / (hy * hy));
                let du = shear(dof.y);
                if du != 0.0 {
                    for (a, b) in [(i - 1, j), (i, j), (i - 1, j + 1), (i, j + 1)] {
                        row.add(&dof_or_zero(geom.v_dof(a, b)), -0.25 * du);
                    }
                }
            }
            Component::V => {
                let n = dof_or_zero(geom.v_dof(i, j + 1));
                let s = dof_or_zero(geom.v_dof(i, j - 1));
                let e_wall = if i + 1 < nx { ((i + 1) as f64) * hx - xc } else { 0.0 };
                let w_wall = if i > 0 { (i as f64) * hx - xc } else { 0.0 };
                let e = tangential(
                    geom.v_dof(i + 1, j),
                    geom.is_fluid(i + 1, j - 1) || geom.is_fluid(i + 1, j),
                    e_wall,
                );
                let w = tangential(
                    geom.v_dof(i - 1, j),
                    geom.is_fluid(i - 1, j - 1) || geom.is_fluid(i - 1, j),
                    w_wall,
                );
                row.add(&n, nu / (hy * hy));
                row.add(&s, nu / (hy * hy));
                row.add(&e, nu / (hx * hx) - ub / (2.0 * hx));
                row.add(&w, nu / (hx * hx) + ub / (2.0 * hx));
            }
        }
        rows.push(row);
    }

    let mut a = Vec::new();
    let mut b1 = RMat::zeros(n1, 1);
    for r in rows {
        for (c, v) in r.coefs {
            a.push((r.row, c, area * v));
        }
        b1[(r.row, 0)] = area * r.input;
    }
    let a11 = SparseMatrix::from_triplets(n1, n1, a)?;
    let e11 = SparseMatrix::from_triplets(n1, n1, (0..n1).map(|k| (k, k, area)).collect())?;

    let mut div = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let Some(row) = geom.p_dof(i as usize, j as usize) else {
                continue;
            };
            for (d, c) in [
                (geom.u_dof(i + 1, j), hy),
                (geom.u_dof(i, j), -hy),
                (geom.v_dof(i, j + 1), hx),
                (geom.v_dof(i, j), -hx),
            ] {
                if let Some(col) = d {
                    div.push((row, col, c));
                }
            }
        }
    }
    let a21 = SparseMatrix::from_triplets(n2, n1, div)?;
    let c1 = generate_output_patches(geom, patches)?;
    Index2System::new(e11, a11, a21, b1, c1)
}

/// Patch-averaged velocity outputs: two rows (u, v) per patch, each row the
/// mean over the unknowns of that component inside the patch.
pub fn generate_output_patches(geom: &GridGeometry, patches: &[Rect]) -> Result<RMat> {
    let spec = geom.spec();
    let mut c = RMat::zeros(2 * patches.len(), geom.n_velocity());
    for (k, p) in patches.iter().enumerate() {
        let inside = p.x0 < p.x1 && p.y0 < p.y1 && p.x0 >= 0.0 && p.y0 >= 0.0 && p.x1 <= spec.lx && p.y1 <= spec.ly;
        if !inside {
            return Err(Error::Geometry(format!("patch {k} is not a rectangle inside the domain")));
        }
        for (off, comp) in [(0, Component::U), (1, Component::V)] {
            let members: Vec<usize> = geom
                .dofs()
                .iter()
                .enumerate()
                .filter(|(_, d)| d.component == comp && p.contains(d.x, d.y))
                .map(|(i, _)| i)
                .collect();
            if members.is_empty() {
                return Err(Error::EmptyPatch(k));
            }
            let w = 1.0 / members.len() as f64;
            for col in members {
                c[(2 * k + off, col)] = w;
            }
        }
    }
    Ok(c)
}

/// Six downstream patches, three above and three below the obstacle
/// centerline, each `1.5 d` long and `2 d` tall.
pub fn toy_patches(geom: &GridGeometry) -> Result<Vec<Rect>> {
    let (xc, yc, d) = geom
        .obstacle_center()
        .ok_or_else(|| Error::Geometry("patch layout requires an obstacle".into()))?;
    let mut out = Vec::with_capacity(6);
    for (y0, y1) in [(yc, yc + 2.0 * d), (yc - 2.0 * d, yc)] {
        for k in 0..3 {
            let x0 = xc + d + 1.5 * d * k as f64;
            out.push(Rect {
                x0,
                x1: x0 + 1.5 * d,
                y0,
                y1,
            });
        }
    }
    Ok(out)
}

/// Whole-domain patch.
pub fn full_domain_patch(geom: &GridGeometry) -> Rect {
    Rect {
        x0: 0.0,
        x1: geom.spec().lx,
        y0: 0.0,
        y1: geom.spec().ly,
    }
}
