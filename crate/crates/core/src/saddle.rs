//! Shifted saddle-point systems `[[σE11 − A11, A21ᵀ], [A21, 0]]`.

use faer::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{cmat_norm_inf, solution_is_regular, CMat, SparseLu};
use crate::system::Index2System;

/// Relative residual above which one step of iterative refinement is taken.
const REFINE_TOL: f64 = 1e-13;

/// Sparse LU of the shifted saddle matrix at a fixed `σ`. The left system
/// matrix is the plain transpose, so one factorization serves both sides.
pub struct ShiftedSaddle {
    lu: SparseLu<c64>,
    triplets: Vec<(usize, usize, c64)>,
    n1: usize,
    sigma: c64,
}

impl ShiftedSaddle {
    pub fn new(sys: &Index2System, sigma: c64) -> Result<Self> {
        let n1 = sys.n1();
        let n = n1 + sys.n2();
        let mut triplets: Vec<(usize, usize, c64)> =
            Vec::with_capacity(sys.e11().nnz() + sys.a11().nnz() + 2 * sys.a21().nnz());
        for &(i, j, v) in sys.e11().entries() {
            triplets.push((i, j, sigma * v));
        }
        for &(i, j, v) in sys.a11().entries() {
            triplets.push((i, j, c64::new(-v, 0.0)));
        }
        for &(k, j, v) in sys.a21().entries() {
            triplets.push((n1 + k, j, c64::new(v, 0.0)));
            triplets.push((j, n1 + k, c64::new(v, 0.0)));
        }
        let singular = || Error::SingularShift {
            re: sigma.re,
            im: sigma.im,
        };
        let lu = SparseLu::factor(n, &triplets, |z: &c64| z.norm()).map_err(|_| singular())?;
        Ok(Self {
            lu,
            triplets,
            n1,
            sigma,
        })
    }

    pub fn sigma(&self) -> c64 {
        self.sigma
    }

    fn apply(&self, x: MatRef<'_, c64>, transpose: bool) -> CMat {
        let mut y = CMat::zeros(x.nrows(), x.ncols());
        for &(i, j, v) in &self.triplets {
            let (r, c) = if transpose { (j, i) } else { (i, j) };
            for k in 0..x.ncols() {
                y[(r, k)] += v * x[(c, k)];
            }
        }
        y
    }

    fn solve_checked(&self, rhs: CMat, transpose: bool) -> Result<CMat> {
        let solve = |b: MatRef<'_, c64>| {
            if transpose {
                self.lu.solve_transpose(b)
            } else {
                self.lu.solve(b)
            }
        };
        let singular = Error::SingularShift {
            re: self.sigma.re,
            im: self.sigma.im,
        };
        let mut x = solve(rhs.as_ref());
        if !solution_is_regular(x.as_ref(), rhs.as_ref(), self.lu.norm_inf()) {
            return Err(singular);
        }
        let res = &rhs - self.apply(x.as_ref(), transpose);
        let scale = self.lu.norm_inf() * cmat_norm_inf(x.as_ref()) + cmat_norm_inf(rhs.as_ref());
        if scale > 0.0 && cmat_norm_inf(res.as_ref()) > REFINE_TOL * scale {
            x += solve(res.as_ref());
            if !x.is_all_finite() {
                return Err(singular);
            }
        }
        Ok(x)
    }

    /// Full solution `[v; z]` of `K [v; z] = [f; 0]`.
    pub fn solve_right_full(&self, f: MatRef<'_, c64>) -> Result<CMat> {
        let mut rhs = CMat::zeros(self.lu.dim(), f.ncols());
        rhs.as_mut().subrows_mut(0, self.n1).copy_from(f);
        self.solve_checked(rhs, false)
    }

    /// Full solution `[w; q]` of `Kᵀ [w; q] = [g; 0]`.
    pub fn solve_left_full(&self, g: MatRef<'_, c64>) -> Result<CMat> {
        let mut rhs = CMat::zeros(self.lu.dim(), g.ncols());
        rhs.as_mut().subrows_mut(0, self.n1).copy_from(g);
        self.solve_checked(rhs, true)
    }

    /// Velocity block `v` of the right solve.
    pub fn solve_right(&self, f: MatRef<'_, c64>) -> Result<CMat> {
        Ok(self.solve_right_full(f)?.subrows(0, self.n1).to_owned())
    }

    /// Velocity block `w` of the left solve.
    pub fn solve_left(&self, g: MatRef<'_, c64>) -> Result<CMat> {
        Ok(self.solve_left_full(g)?.subrows(0, self.n1).to_owned())
    }

    /// Relative residual `‖K x − r‖ / (‖K‖‖x‖ + ‖r‖)` in the ∞-norm.
    pub fn relative_residual(&self, x: MatRef<'_, c64>, rhs: MatRef<'_, c64>, transpose: bool) -> f64 {
        let res = rhs - self.apply(x, transpose);
        let scale = self.lu.norm_inf() * cmat_norm_inf(x) + cmat_norm_inf(rhs);
        if scale == 0.0 {
            0.0
        } else {
            cmat_norm_inf(res.as_ref()) / scale
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::to_complex;
    use crate::system::tests::toy;

    #[test]
    fn right_solve_satisfies_constraint() {
        let sys = toy();
        let k = ShiftedSaddle::new(&sys, c64::new(0.0, 0.0)).unwrap();
        let f = to_complex(sys.b1().as_ref());
        let x = k.solve_right_full(f.as_ref()).unwrap();
        assert_eq!((x[(0, 0)] + x[(1, 0)]).norm(), 0.0);
        let mut rhs = CMat::zeros(3, 1);
        rhs[(0, 0)] = c64::new(1.0, 0.0);
        assert!(k.relative_residual(x.as_ref(), rhs.as_ref(), false) <= 1e-10);
    }

    #[test]
    fn left_solve_residual() {
        let sys = toy();
        let k = ShiftedSaddle::new(&sys, c64::new(0.0, 0.0)).unwrap();
        let g = to_complex(sys.c1().transpose());
        let x = k.solve_left_full(g.as_ref()).unwrap();
        let mut rhs = CMat::zeros(3, 1);
        rhs[(0, 0)] = c64::new(1.0, 0.0);
        assert!(k.relative_residual(x.as_ref(), rhs.as_ref(), true) <= 1e-10);
        assert!((x[(0, 0)] + x[(1, 0)]).norm() < 1e-15);
    }

    #[test]
    fn pole_is_singular_shift() {
        // finite pole of the toy system is −1.5
        let sys = toy();
        let k = ShiftedSaddle::new(&sys, c64::new(-1.5, 0.0));
        let err = match k {
            Err(e) => e,
            Ok(k) => k
                .solve_right(to_complex(sys.b1().as_ref()).as_ref())
                .unwrap_err(),
        };
        assert!(matches!(err, Error::SingularShift { .. }));
    }
}
