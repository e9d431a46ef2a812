//! Descriptor-system types, index-2 structural validation and the explicit
//! spectral projectors used as a small-scale oracle.

use std::sync::OnceLock;

use faer::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{
    dense_csolve, dense_solve, hcat, numerical_rank, range_basis, singular_values, to_complex,
    vcat, RMat, SparseLu, SparseMatrix,
};

/// Relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;

/// Stokes-type descriptor system of index 2:
///
/// ```text
/// E11 x1' = A11 x1 + A21ᵀ x2 + B1 u
///       0 = A21 x1           + B2 u
///       y = C1 x1 + C2 x2 + D u
/// ```
#[derive(Debug)]
pub struct Index2System {
    e11: SparseMatrix,
    a11: SparseMatrix,
    a21: SparseMatrix,
    b1: RMat,
    b2: RMat,
    c1: RMat,
    c2: RMat,
    d: RMat,
    parts: OnceLock<StructuredParts>,
}

impl Clone for Index2System {
    fn clone(&self) -> Self {
        Self {
            e11: self.e11.clone(),
            a11: self.a11.clone(),
            a21: self.a21.clone(),
            b1: self.b1.clone(),
            b2: self.b2.clone(),
            c1: self.c1.clone(),
            c2: self.c2.clone(),
            d: self.d.clone(),
            parts: OnceLock::new(),
        }
    }
}

/// Quantities derived from the constraint structure that the projector-free
/// path needs: the output map acting on divergence-free velocities, the
/// effective input map, and the constant polynomial part.
#[derive(Clone, Debug)]
pub struct StructuredParts {
    /// `C1 − C2 S⁻¹ A21 E11⁻¹ A11`.
    pub c_eff: RMat,
    /// `B1 + A11 F` with the particular solution `F = −E11⁻¹ A21ᵀ S⁻¹ B2`.
    pub b_eff: RMat,
    /// Polynomial (constant) part of the transfer function.
    pub feedthrough: RMat,
}

impl Index2System {
    /// Builds a system with `B2 = 0`, `C2 = 0` and `D = 0`; use the `with_*`
    /// methods for the optional blocks.
    pub fn new(
        e11: SparseMatrix,
        a11: SparseMatrix,
        a21: SparseMatrix,
        b1: RMat,
        c1: RMat,
    ) -> Result<Self> {
        let n1 = e11.nrows();
        let n2 = a21.nrows();
        let m = b1.ncols();
        let p = c1.nrows();
        let check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::DimensionMismatch(what.to_string()))
            }
        };
        check(e11.ncols() == n1, "E11 must be square")?;
        check(a11.nrows() == n1 && a11.ncols() == n1, "A11 must be n1 x n1")?;
        check(a21.ncols() == n1, "A21 must have n1 columns")?;
        check(b1.nrows() == n1, "B1 must have n1 rows")?;
        check(c1.ncols() == n1, "C1 must have n1 columns")?;
        Ok(Self {
            e11,
            a11,
            a21,
            b1,
            b2: RMat::zeros(n2, m),
            c1,
            c2: RMat::zeros(p, n2),
            d: RMat::zeros(p, m),
            parts: OnceLock::new(),
        })
    }

    pub fn with_b2(mut self, b2: RMat) -> Result<Self> {
        if b2.nrows() != self.n2() || b2.ncols() != self.inputs() {
            return Err(Error::DimensionMismatch("B2 must be n2 x m".into()));
        }
        self.b2 = b2;
        self.parts = OnceLock::new();
        Ok(self)
    }

    pub fn with_c2(mut self, c2: RMat) -> Result<Self> {
        if c2.nrows() != self.outputs() || c2.ncols() != self.n2() {
            return Err(Error::DimensionMismatch("C2 must be p x n2".into()));
        }
        self.c2 = c2;
        self.parts = OnceLock::new();
        Ok(self)
    }

    pub fn with_d(mut self, d: RMat) -> Result<Self> {
        if d.nrows() != self.outputs() || d.ncols() != self.inputs() {
            return Err(Error::DimensionMismatch("D must be p x m".into()));
        }
        self.d = d;
        self.parts = OnceLock::new();
        Ok(self)
    }

    pub fn n1(&self) -> usize {
        self.e11.nrows()
    }
    pub fn n2(&self) -> usize {
        self.a21.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b1.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c1.nrows()
    }
    pub fn e11(&self) -> &SparseMatrix {
        &self.e11
    }
    pub fn a11(&self) -> &SparseMatrix {
        &self.a11
    }
    pub fn a21(&self) -> &SparseMatrix {
        &self.a21
    }
    pub fn b1(&self) -> &RMat {
        &self.b1
    }
    pub fn b2(&self) -> &RMat {
        &self.b2
    }
    pub fn c1(&self) -> &RMat {
        &self.c1
    }
    pub fn c2(&self) -> &RMat {
        &self.c2
    }
    pub fn d(&self) -> &RMat {
        &self.d
    }

    fn b2_is_zero(&self) -> bool {
        self.b2.norm_max() == 0.0
    }

    fn c2_is_zero(&self) -> bool {
        self.c2.norm_max() == 0.0
    }

    /// Same system with `A11` replaced; used for closed-loop operators.
    pub fn with_a11(&self, a11: SparseMatrix) -> Result<Self> {
        if a11.nrows() != self.n1() || a11.ncols() != self.n1() {
            return Err(Error::DimensionMismatch("A11 must be n1 x n1".into()));
        }
        let mut out = self.clone();
        out.a11 = a11;
        Ok(out)
    }

    /// Derived maps for the projector-free reduction, computed once.
    pub fn structured_parts(&self) -> Result<&StructuredParts> {
        if let Some(p) = self.parts.get() {
            return Ok(p);
        }
        let parts = self.compute_parts()?;
        Ok(self.parts.get_or_init(|| parts))
    }

    fn compute_parts(&self) -> Result<StructuredParts> {
        if self.b2_is_zero() && self.c2_is_zero() {
            return Ok(StructuredParts {
                c_eff: self.c1.clone(),
                b_eff: self.b1.clone(),
                feedthrough: self.d.clone(),
            });
        }
        let schur = SchurData::new(self)?;
        // F = −E11⁻¹ A21ᵀ S⁻¹ B2
        let f = if self.b2_is_zero() {
            RMat::zeros(self.n1(), self.inputs())
        } else {
            let s_inv_b2 = dense_solve(schur.s.as_ref(), self.b2.as_ref())
                .map_err(|_| Error::SingularSchurComplement)?;
            -(&schur.e_inv_a21t * &s_inv_b2)
        };
        let b_eff = &self.b1 + self.a11.mul(f.as_ref());
        if self.c2_is_zero() {
            return Ok(StructuredParts {
                c_eff: self.c1.clone(),
                feedthrough: &self.d + &self.c1 * &f,
                b_eff,
            });
        }
        // Y = C2 S⁻¹
        let y = dense_solve(schur.s.transpose(), self.c2.transpose())
            .map_err(|_| Error::SingularSchurComplement)?
            .transpose()
            .to_owned();
        if !self.b2_is_zero() {
            let lead = &y * &self.b2;
            if lead.norm_l2() > 1e-10 * y.norm_l2() * self.b2.norm_l2() {
                return Err(Error::PolynomialDegree);
            }
        }
        // L = Y A21 E11⁻¹, computed as (E11⁻ᵀ (Y A21)ᵀ)ᵀ
        let ya21_t = self.a21.tmul(y.transpose());
        let l_t = schur.e11_lu.solve_transpose(ya21_t.as_ref());
        let l = l_t.transpose().to_owned();
        let c_eff = &self.c1 - self.a11.tmul(l_t.as_ref()).transpose();
        let feedthrough = &self.d + &self.c1 * &f - &l * &b_eff;
        Ok(StructuredParts {
            c_eff,
            b_eff,
            feedthrough,
        })
    }
}

/// Factorization of `E11` and the dense Schur complement `S = A21 E11⁻¹ A21ᵀ`.
pub(crate) struct SchurData {
    pub e11_lu: SparseLu<f64>,
    pub e_inv_a21t: RMat,
    pub s: RMat,
}

impl SchurData {
    pub fn new(sys: &Index2System) -> Result<Self> {
        let n1 = sys.n1();
        let e11_lu = SparseLu::factor(n1, sys.e11.entries(), |v: &f64| v.abs())
            .map_err(|_| Error::SingularMass)?;
        let a21t = sys.a21.transpose().to_dense();
        let e_inv_a21t = e11_lu.solve(a21t.as_ref());
        if !e_inv_a21t.is_all_finite() {
            return Err(Error::SingularMass);
        }
        let s = sys.a21.mul(e_inv_a21t.as_ref());
        Ok(Self {
            e11_lu,
            e_inv_a21t,
            s,
        })
    }
}

/// Outcome of [`validate_index2`].
#[derive(Clone, Debug, serde::Serialize)]
pub struct ValidationReport {
    pub n1: usize,
    pub n2: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// 2-norm condition number of `E11`.
    pub mass_condition: f64,
    pub constraint_rank: usize,
    /// 2-norm condition number of `A21` (ratio of extreme singular values).
    pub constraint_condition: f64,
    /// 2-norm condition number of the Schur complement.
    pub schur_condition: f64,
    /// The Schur complement `A21 E11⁻¹ A21ᵀ` (dense, n2 x n2).
    #[serde(skip)]
    pub schur: RMat,
}

fn condition(sv: &[f64]) -> f64 {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if sv.is_empty() {
        1.0
    } else if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Checks the index-2 hypotheses: nonsingular `E11`, full row rank `A21` and a
/// nonsingular Schur complement.
pub fn validate_index2(sys: &Index2System) -> Result<ValidationReport> {
    let n1 = sys.n1();
    let n2 = sys.n2();
    let e_sv = singular_values(sys.e11.to_dense().as_ref())?;
    if n1 == 0 || numerical_rank(&e_sv, RANK_TOL) < n1 {
        return Err(Error::SingularMass);
    }
    let a_sv = singular_values(sys.a21.to_dense().as_ref())?;
    let rank = numerical_rank(&a_sv, RANK_TOL);
    if n2 > n1 || rank < n2 {
        return Err(Error::RankDeficientConstraint { rank, rows: n2 });
    }
    let schur = SchurData::new(sys)?;
    let s_sv = singular_values(schur.s.as_ref())?;
    if numerical_rank(&s_sv, RANK_TOL) < n2 {
        return Err(Error::SingularSchurComplement);
    }
    Ok(ValidationReport {
        n1,
        n2,
        inputs: sys.inputs(),
        outputs: sys.outputs(),
        mass_condition: condition(&e_sv),
        constraint_rank: rank,
        constraint_condition: condition(&a_sv),
        schur_condition: condition(&s_sv),
        schur: schur.s,
    })
}

/// General descriptor system `E x' = A x + B u`, `y = C x + D u` with dense
/// storage (oracle scale).
#[derive(Clone, Debug)]
pub struct DescriptorSystem {
    pub(crate) e: RMat,
    pub(crate) a: RMat,
    pub(crate) b: RMat,
    pub(crate) c: RMat,
    pub(crate) d: RMat,
}

impl DescriptorSystem {
    /// Validates dimensions and probes the pencil for regularity.
    pub fn new(e: RMat, a: RMat, b: RMat, c: RMat, d: RMat) -> Result<Self> {
        let n = e.nrows();
        let ok = e.ncols() == n
            && a.nrows() == n
            && a.ncols() == n
            && b.nrows() == n
            && c.ncols() == n
            && d.nrows() == c.nrows()
            && d.ncols() == b.ncols();
        if !ok {
            return Err(Error::DimensionMismatch("descriptor system blocks".into()));
        }
        let sys = Self { e, a, b, c, d };
        if n > 0 && !sys.probe_regular() {
            return Err(Error::SingularPencil);
        }
        Ok(sys)
    }

    fn probe_regular(&self) -> bool {
        let scale = {
            let ea = self.e.norm_l2();
            let aa = self.a.norm_l2();
            if ea > 0.0 && aa > 0.0 {
                aa / ea
            } else {
                1.0
            }
        };
        let n = self.e.nrows();
        let rhs = crate::linalg::CMat::from_fn(n, 1, |i, _| c64::new(1.0 + (i % 7) as f64, 0.0));
        [c64::new(0.6180339887, 1.3247179572), c64::new(-0.2718281828, 0.3141592653)]
            .iter()
            .any(|&probe| {
                let s = probe * scale;
                let pencil = to_complex(self.e.as_ref()) * faer::Scale(s) - to_complex(self.a.as_ref());
                dense_csolve(pencil.as_ref(), rhs.as_ref()).is_ok()
            })
    }

    pub fn order(&self) -> usize {
        self.e.nrows()
    }
    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }
    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }
    pub fn e(&self) -> &RMat {
        &self.e
    }
    pub fn a(&self) -> &RMat {
        &self.a
    }
    pub fn b(&self) -> &RMat {
        &self.b
    }
    pub fn c(&self) -> &RMat {
        &self.c
    }
    pub fn d(&self) -> &RMat {
        &self.d
    }
}

/// Assembles the full pencil `E = diag(E11, 0)`, `A = [[A11, A21ᵀ], [A21, 0]]`,
/// `B = [B1; B2]`, `C = [C1, C2]`.
pub fn embed_index2(sys: &Index2System) -> Result<DescriptorSystem> {
    let n1 = sys.n1();
    let n2 = sys.n2();
    let n = n1 + n2;
    let mut e = RMat::zeros(n, n);
    e.as_mut().submatrix_mut(0, 0, n1, n1).copy_from(sys.e11.to_dense());
    let mut a = RMat::zeros(n, n);
    a.as_mut().submatrix_mut(0, 0, n1, n1).copy_from(sys.a11.to_dense());
    let a21 = sys.a21.to_dense();
    a.as_mut().submatrix_mut(n1, 0, n2, n1).copy_from(&a21);
    a.as_mut().submatrix_mut(0, n1, n1, n2).copy_from(a21.transpose());
    let b = vcat(&[sys.b1.as_ref(), sys.b2.as_ref()]);
    let c = hcat(&[sys.c1.as_ref(), sys.c2.as_ref()]);
    DescriptorSystem::new(e, a, b, c, sys.d.clone())
}

/// Spectral projectors onto the finite deflating subspaces of `λE − A`
/// together with bases of the deflating subspaces at infinity.
#[derive(Clone, Debug)]
pub struct SpectralProjectors {
    /// Left projector: `Pl A = A Pr`, `Pl E = E Pr`.
    pub pl: RMat,
    /// Right projector onto the finite right deflating subspace.
    pub pr: RMat,
    /// Orthonormal basis of `range(I − Pr)`.
    pub v_inf: RMat,
    /// Orthonormal basis of `range((I − Pl)ᵀ)`.
    pub w_inf: RMat,
}

/// Explicit projectors for the embedded index-2 pencil (dense; oracle use only).
///
/// With `Π = I − E11⁻¹A21ᵀS⁻¹A21` and `Πl = I − A21ᵀS⁻¹A21E11⁻¹`:
///
/// ```text
/// Pr = [[Π, 0], [−S⁻¹A21E11⁻¹A11Π, 0]]
/// Pl = [[Πl, −Πl A11 E11⁻¹A21ᵀS⁻¹], [0, 0]]
/// ```
pub fn projectors_index2(sys: &Index2System) -> Result<SpectralProjectors> {
    let n1 = sys.n1();
    let n2 = sys.n2();
    let n = n1 + n2;
    if n2 == 0 {
        return Ok(SpectralProjectors {
            pl: RMat::identity(n, n),
            pr: RMat::identity(n, n),
            v_inf: RMat::zeros(n, 0),
            w_inf: RMat::zeros(n, 0),
        });
    }
    let e11 = sys.e11.to_dense();
    let a11 = sys.a11.to_dense();
    let a21 = sys.a21.to_dense();
    let eye = RMat::identity(n1, n1);
    let e_inv_a21t = dense_solve(e11.as_ref(), a21.transpose()).map_err(|_| Error::SingularMass)?;
    let s = &a21 * &e_inv_a21t;
    // S⁻¹ A21 and S⁻¹ A21 E11⁻¹
    let s_inv_a21 = dense_solve(s.as_ref(), a21.as_ref()).map_err(|_| Error::SingularSchurComplement)?;
    let e_inv_t = dense_solve(e11.transpose(), s_inv_a21.transpose()).map_err(|_| Error::SingularMass)?;
    let s_inv_a21_e_inv = e_inv_t.transpose().to_owned();
    let pi = &eye - &e_inv_a21t * &s_inv_a21;
    let pi_l = &eye - a21.transpose() * &s_inv_a21_e_inv;

    let mut pr = RMat::zeros(n, n);
    pr.as_mut().submatrix_mut(0, 0, n1, n1).copy_from(&pi);
    let lower = -(&s_inv_a21_e_inv * &a11 * &pi);
    pr.as_mut().submatrix_mut(n1, 0, n2, n1).copy_from(&lower);

    let e_inv_a21t_s_inv = dense_solve(s.transpose(), e_inv_a21t.transpose())
        .map_err(|_| Error::SingularSchurComplement)?
        .transpose()
        .to_owned();
    let mut pl = RMat::zeros(n, n);
    pl.as_mut().submatrix_mut(0, 0, n1, n1).copy_from(&pi_l);
    let upper = -(&pi_l * &a11 * &e_inv_a21t_s_inv);
    pl.as_mut().submatrix_mut(0, n1, n1, n2).copy_from(&upper);

    let eye_n = RMat::identity(n, n);
    let v_inf = range_basis((&eye_n - &pr).as_ref(), RANK_TOL)?;
    let w_inf = range_basis((&eye_n - &pl).transpose(), RANK_TOL)?;
    Ok(SpectralProjectors {
        pl,
        pr,
        v_inf,
        w_inf,
    })
}

/// Constant polynomial part of the transfer function,
/// `D − C2 S⁻¹ A21 E11⁻¹ B1` when `B2 = 0` (with the particular-solution
/// correction when `B2 ≠ 0`).
pub fn polynomial_part(sys: &Index2System) -> Result<RMat> {
    Ok(sys.structured_parts()?.feedthrough.clone())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// E11 = I₂, A11 = diag(−1, −2), A21 = [1 1], B1 = [1; 0], C1 = [1 0].
    pub fn toy() -> Index2System {
        Index2System::new(
            SparseMatrix::identity(2),
            SparseMatrix::from_triplets(2, 2, vec![(0, 0, -1.0), (1, 1, -2.0)]).unwrap(),
            SparseMatrix::from_triplets(1, 2, vec![(0, 0, 1.0), (0, 1, 1.0)]).unwrap(),
            RMat::from_fn(2, 1, |i, _| if i == 0 { 1.0 } else { 0.0 }),
            RMat::from_fn(1, 2, |_, j| if j == 0 { 1.0 } else { 0.0 }),
        )
        .unwrap()
    }

    #[test]
    fn toy_is_valid_with_unit_schur_of_two() {
        let rep = validate_index2(&toy()).unwrap();
        assert_eq!(rep.constraint_rank, 1);
        assert!((rep.schur[(0, 0)] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_constraint_row_is_rank_deficient() {
        let sys = Index2System::new(
            SparseMatrix::identity(2),
            SparseMatrix::identity(2),
            SparseMatrix::zeros(1, 2),
            RMat::zeros(2, 1),
            RMat::zeros(1, 2),
        )
        .unwrap();
        assert!(matches!(
            validate_index2(&sys),
            Err(Error::RankDeficientConstraint { rank: 0, rows: 1 })
        ));
    }

    #[test]
    fn zero_mass_is_singular() {
        let sys = Index2System::new(
            SparseMatrix::zeros(2, 2),
            SparseMatrix::identity(2),
            SparseMatrix::from_triplets(1, 2, vec![(0, 0, 1.0)]).unwrap(),
            RMat::zeros(2, 1),
            RMat::zeros(1, 2),
        )
        .unwrap();
        assert!(matches!(validate_index2(&sys), Err(Error::SingularMass)));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let err = Index2System::new(
            SparseMatrix::identity(2),
            SparseMatrix::identity(3),
            SparseMatrix::zeros(1, 2),
            RMat::zeros(2, 1),
            RMat::zeros(1, 2),
        );
        assert!(matches!(err, Err(Error::DimensionMismatch(_))));
        assert!(toy().with_c2(RMat::zeros(1, 2)).is_err());
    }

    #[test]
    fn embedding_places_blocks() {
        let sys = toy();
        let full = embed_index2(&sys).unwrap();
        assert_eq!(full.order(), 3);
        assert_eq!(full.e()[(2, 2)], 0.0);
        assert_eq!(full.e()[(0, 0)], 1.0);
        assert_eq!(full.a()[(2, 0)], 1.0);
        assert_eq!(full.a()[(0, 2)], 1.0);
        assert_eq!(full.b()[(2, 0)], 0.0);
    }

    #[test]
    fn embedding_without_constraints_is_an_ode() {
        let sys = Index2System::new(
            SparseMatrix::identity(2),
            SparseMatrix::identity(2),
            SparseMatrix::zeros(0, 2),
            RMat::zeros(2, 1),
            RMat::zeros(1, 2),
        )
        .unwrap();
        let full = embed_index2(&sys).unwrap();
        assert_eq!(full.e(), &RMat::identity(2, 2));
        let p = projectors_index2(&sys).unwrap();
        assert_eq!(p.pr, RMat::identity(2, 2));
        assert_eq!(p.pl, RMat::identity(2, 2));
    }

    #[test]
    fn toy_projectors() {
        let sys = toy();
        let p = projectors_index2(&sys).unwrap();
        let pv = p.pr.as_ref().submatrix(0, 0, 2, 2);
        assert!((pv[(0, 0)] + pv[(1, 1)] - 1.0).abs() < 1e-14);
        let a21 = sys.a21().to_dense();
        assert!((&a21 * pv).norm_l2() < 1e-12);
        for proj in [&p.pl, &p.pr] {
            assert!((proj * proj - proj).norm_l2() <= 1e-10 * proj.norm_l2());
        }
        assert_eq!(p.v_inf.ncols(), 2);
        assert_eq!(p.w_inf.ncols(), 2);
    }

    #[test]
    fn polynomial_part_cases() {
        assert_eq!(polynomial_part(&toy()).unwrap()[(0, 0)], 0.0);
        let d = RMat::from_fn(1, 1, |_, _| 3.5);
        assert_eq!(polynomial_part(&toy().with_d(d).unwrap()).unwrap()[(0, 0)], 3.5);
        let c2 = RMat::from_fn(1, 1, |_, _| 1.0);
        let p = polynomial_part(&toy().with_c2(c2).unwrap()).unwrap();
        assert!((p[(0, 0)] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn degree_one_polynomial_part_is_rejected() {
        let one = RMat::from_fn(1, 1, |_, _| 1.0);
        let sys = toy().with_c2(one.clone()).unwrap().with_b2(one).unwrap();
        assert!(matches!(polynomial_part(&sys), Err(Error::PolynomialDegree)));
    }
}
