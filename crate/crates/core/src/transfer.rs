//! Transfer-function evaluation, frequency sweeps and finite poles.

use faer::prelude::*;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    dense_csolve, dense_solve, max_singular_value_c, null_space_basis, singular_values, to_complex, CMat,
    RMat,
};
use crate::reduction::ReducedModel;
use crate::saddle::ShiftedSaddle;
use crate::system::{DescriptorSystem, Index2System, RANK_TOL};

/// Eigenvalues with `|β|·‖A‖ ≤ ε_inf·|α|·‖E‖` are treated as infinite.
pub const EPS_INF: f64 = 1e-8;

/// Reciprocal condition number above which `E` is inverted directly.
const WELL_CONDITIONED: f64 = 1e-8;

/// A linear time-invariant model with a transfer function and a pencil.
pub trait LtiModel: Sync {
    fn inputs(&self) -> usize;
    fn outputs(&self) -> usize;
    /// `G(s)` as a dense `p × m` matrix.
    fn transfer(&self, s: c64) -> Result<CMat>;
    /// Pair `(A, E)` whose finite generalized eigenvalues are the poles.
    fn pole_pencil(&self) -> Result<(RMat, RMat)>;
}

impl LtiModel for Index2System {
    fn inputs(&self) -> usize {
        Index2System::inputs(self)
    }
    fn outputs(&self) -> usize {
        Index2System::outputs(self)
    }
    /// One saddle factorization, one solve per input column, plus the
    /// polynomial part.
    fn transfer(&self, s: c64) -> Result<CMat> {
        let parts = self.structured_parts()?;
        let k = ShiftedSaddle::new(self, s)?;
        let v = k.solve_right(to_complex(parts.b_eff.as_ref()).as_ref())?;
        Ok(to_complex(parts.c_eff.as_ref()) * v + to_complex(parts.feedthrough.as_ref()))
    }
    /// Restriction to `ker(A21)`: `(ZᵀA11Z, ZᵀE11Z)` with orthonormal `Z`.
    fn pole_pencil(&self) -> Result<(RMat, RMat)> {
        let z = null_space_basis(self.a21().to_dense().as_ref(), RANK_TOL)?;
        let a = z.transpose() * self.a11().mul(z.as_ref());
        let e = z.transpose() * self.e11().mul(z.as_ref());
        Ok((a, e))
    }
}

impl LtiModel for DescriptorSystem {
    fn inputs(&self) -> usize {
        DescriptorSystem::inputs(self)
    }
    fn outputs(&self) -> usize {
        DescriptorSystem::outputs(self)
    }
    fn transfer(&self, s: c64) -> Result<CMat> {
        let pencil = to_complex(self.e().as_ref()) * Scale(s) - to_complex(self.a().as_ref());
        let x = dense_csolve(pencil.as_ref(), to_complex(self.b().as_ref()).as_ref())
            .map_err(|_| Error::SingularShift { re: s.re, im: s.im })?;
        Ok(to_complex(self.c().as_ref()) * x + to_complex(self.d().as_ref()))
    }
    fn pole_pencil(&self) -> Result<(RMat, RMat)> {
        Ok((self.a().clone(), self.e().clone()))
    }
}

impl LtiModel for ReducedModel {
    fn inputs(&self) -> usize {
        ReducedModel::inputs(self)
    }
    fn outputs(&self) -> usize {
        ReducedModel::outputs(self)
    }
    fn transfer(&self, s: c64) -> Result<CMat> {
        self.eval(s)
    }
    fn pole_pencil(&self) -> Result<(RMat, RMat)> {
        Ok((self.ar().clone(), self.er().clone()))
    }
}

/// `G(s) = C (sE − A)⁻¹ B + D` in the block form appropriate to the model.
pub fn eval_transfer<M: LtiModel + ?Sized>(sys: &M, s: c64) -> Result<CMat> {
    sys.transfer(s)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Sampled frequency response. Entries for frequencies where evaluation
/// failed are `None` and the reason is kept in `failures`.
#[derive(Clone, Debug)]
pub struct FrequencyResponse {
    pub omegas: Vec<f64>,
    pub values: Vec<Option<CMat>>,
    /// Largest singular value of `G(iω)`.
    pub norms: Vec<Option<f64>>,
    pub failures: Vec<(usize, String)>,
}

pub fn frequency_grid(omega_min: f64, omega_max: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(omega_min > 0.0 && omega_max > omega_min && omega_max.is_finite()) {
        return Err(Error::Config("sweep requires 0 < omega_min < omega_max".into()));
    }
    if count < 2 {
        return Err(Error::Config("sweep requires at least two points".into()));
    }
    let t = |k: usize| k as f64 / (count - 1) as f64;
    Ok((0..count)
        .map(|k| match spacing {
            Spacing::Log => {
                let (a, b) = (omega_min.log10(), omega_max.log10());
                10f64.powf(a + t(k) * (b - a))
            }
            Spacing::Linear => omega_min + t(k) * (omega_max - omega_min),
        })
        .collect())
}

/// Evaluates `G(iω)` on the given frequencies.
pub fn sweep_at<M: LtiModel + ?Sized>(sys: &M, omegas: &[f64]) -> FrequencyResponse {
    let results: Vec<Result<CMat>> = omegas
        .par_iter()
        .map(|&w| sys.transfer(c64::new(0.0, w)))
        .collect();
    let mut values = Vec::with_capacity(omegas.len());
    let mut norms = Vec::with_capacity(omegas.len());
    let mut failures = Vec::new();
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(g) => {
                norms.push(Some(max_singular_value_c(g.as_ref())));
                values.push(Some(g));
            }
            Err(e) => {
                failures.push((k, e.to_string()));
                norms.push(None);
                values.push(None);
            }
        }
    }
    FrequencyResponse {
        omegas: omegas.to_vec(),
        values,
        norms,
        failures,
    }
}

pub fn sigma_sweep<M: LtiModel + ?Sized>(
    sys: &M,
    omega_min: f64,
    omega_max: f64,
    count: usize,
    spacing: Spacing,
) -> Result<FrequencyResponse> {
    Ok(sweep_at(sys, &frequency_grid(omega_min, omega_max, count, spacing)?))
}

/// Finite generalized eigenvalues of a model.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PoleReport {
    /// Sorted by real part, then imaginary part; each entry is `[re, im]`.
    pub finite_poles: Vec<c64>,
    pub unstable_count: usize,
    /// Eigenvalues discarded as infinite.
    pub infinite_count: usize,
}

impl PoleReport {
    pub fn spectral_abscissa(&self) -> f64 {
        self.finite_poles
            .iter()
            .map(|z| z.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// QZ eigenvalue pairs `(α, β)` of `(A, E)`, read from the diagonal blocks of
/// the generalized real Schur form.
fn generalized_eigenvalues(a: &RMat, e: &RMat) -> Result<Vec<(c64, f64)>> {
    use faer::dyn_stack::{MemBuffer, MemStack, StackReq};
    use faer::linalg::evd::ComputeEigenvectors;
    use faer::linalg::gevd;

    let n = a.nrows();
    let mut a = a.clone();
    let mut e = e.clone();
    let mut s_re = faer::diag::Diag::<f64>::zeros(n);
    let mut s_im = faer::diag::Diag::<f64>::zeros(n);
    let mut beta = faer::diag::Diag::<f64>::zeros(n);
    // the blocked QZ path with aggressive early deflation is not robust;
    // force the unblocked double-shift sweep
    let mut params: gevd::GevdParams = <gevd::GevdParams as faer::Auto<f64>>::auto();
    params.schur.blocking_threshold = usize::MAX;
    let params = faer::Spec::new(params);
    let req = gevd::gevd_scratch::<f64>(
        n,
        ComputeEigenvectors::No,
        ComputeEigenvectors::Yes,
        Par::Seq,
        params,
    )
    .and(StackReq::new::<f64>(16 * n + 256));
    let mut u = RMat::zeros(n, n);
    let mut buf = MemBuffer::new(req);
    gevd::gevd_real(
        a.as_mut(),
        e.as_mut(),
        s_re.as_mut(),
        s_im.as_mut(),
        beta.as_mut(),
        None,
        Some(u.as_mut()),
        Par::Seq,
        MemStack::new(&mut buf),
        params,
    )
    .map_err(|err| Error::Eigensolver(format!("{err:?}")))?;
    // faer's 2x2 standardization can return a non-conjugate pair, so
    // complex blocks are solved here
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    while k < n {
        if k + 1 < n && a[(k + 1, k)] != 0.0 {
            let (s11, s12, s21, s22) = (a[(k, k)], a[(k, k + 1)], a[(k + 1, k)], a[(k + 1, k + 1)]);
            let (t11, t12, t22) = (e[(k, k)], e[(k, k + 1)], e[(k + 1, k + 1)]);
            let qa = t11 * t22;
            let qb = s21 * t12 - s11 * t22 - s22 * t11;
            let qc = s11 * s22 - s12 * s21;
            if qa != 0.0 {
                let disc = c64::new(qb * qb - 4.0 * qa * qc, 0.0).sqrt();
                for sign in [1.0, -1.0] {
                    out.push(((-qb + sign * disc) / (2.0 * qa), 1.0));
                }
            } else {
                out.push((c64::new(s_re[k], s_im[k]), beta[k]));
                out.push((c64::new(s_re[k + 1], s_im[k + 1]), beta[k + 1]));
            }
            k += 2;
        } else {
            out.push((c64::new(a[(k, k)], 0.0), e[(k, k)]));
            k += 1;
        }
    }
    Ok(out)
}

fn report(mut poles: Vec<c64>, infinite_count: usize) -> PoleReport {
    poles.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    let unstable_count = poles.iter().filter(|z| z.re > 0.0).count();
    PoleReport {
        finite_poles: poles,
        unstable_count,
        infinite_count,
    }
}

/// Finite generalized eigenvalues of `(A, E)`: standard eigenvalues of
/// `E⁻¹A` when `E` is well conditioned, QZ otherwise.
pub fn pencil_poles(a: &RMat, e: &RMat) -> Result<PoleReport> {
    let n = a.nrows();
    if n == 0 {
        return Ok(report(Vec::new(), 0));
    }
    let sv = singular_values(e.as_ref())?;
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin > WELL_CONDITIONED * smax {
        let ea = dense_solve(e.as_ref(), a.as_ref())?;
        let poles = ea
            .eigenvalues()
            .map_err(|err| Error::Eigensolver(format!("{err:?}")))?;
        return Ok(report(poles, 0));
    }
    let pairs = generalized_eigenvalues(a, e)?;
    let na = a.norm_l2().max(f64::MIN_POSITIVE);
    let ne = e.norm_l2();
    let mut poles = Vec::with_capacity(n);
    let mut infinite = 0;
    for (alpha, beta) in pairs {
        let beta = c64::new(beta, 0.0);
        if !(alpha.re.is_finite() && alpha.im.is_finite() && beta.re.is_finite() && beta.im.is_finite()) {
            return Err(Error::Eigensolver("non-finite generalized eigenvalue".into()));
        }
        if alpha.norm() == 0.0 && beta.norm() == 0.0 {
            return Err(Error::SingularPencil);
        }
        if beta.norm() * na <= EPS_INF * alpha.norm() * ne {
            infinite += 1;
        } else {
            poles.push(alpha / beta);
        }
    }
    Ok(report(poles, infinite))
}

pub fn finite_poles<M: LtiModel + ?Sized>(sys: &M) -> Result<PoleReport> {
    let (a, e) = sys.pole_pencil()?;
    pencil_poles(&a, &e)
}
