//! Dense and sparse linear-algebra helpers shared by the whole crate.
//!
//! Dense work goes through `faer::Mat`; structured blocks are held in the
//! coordinate-list [`SparseMatrix`] and factored with faer's sparse LU.

use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::traits::ComplexField;

use crate::error::{Error, Result};

pub type RMat = Mat<f64>;
pub type CMat = Mat<c64>;

/// Solutions whose `‖x‖·‖A‖/‖b‖` exceeds this bound are treated as coming
/// from a numerically singular matrix.
pub const SINGULAR_GROWTH: f64 = 1e13;

/// Real sparse matrix in sorted, duplicate-free coordinate form (row-major order).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    /// Builds a matrix from triplets; duplicate coordinates are summed and exact
    /// zeros are dropped.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        if let Some(&(i, j, _)) = triplets.iter().find(|&&(i, j, _)| i >= nrows || j >= ncols) {
            return Err(Error::DimensionMismatch(format!(
                "entry ({i}, {j}) outside a {nrows}x{ncols} matrix"
            )));
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut entries: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            match entries.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += v,
                _ => entries.push((i, j, v)),
            }
        }
        entries.retain(|e| e.2 != 0.0);
        Ok(Self {
            nrows,
            ncols,
            entries,
        })
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            entries: (0..n).map(|i| (i, i, 1.0)).collect(),
        }
    }

    pub fn from_dense(a: MatRef<'_, f64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                let v = a[(i, j)];
                if v != 0.0 {
                    entries.push((i, j, v));
                }
            }
        }
        Self {
            nrows: a.nrows(),
            ncols: a.ncols(),
            entries,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> RMat {
        let mut out = RMat::zeros(self.nrows, self.ncols);
        for &(i, j, v) in &self.entries {
            out[(i, j)] = v;
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut entries: Vec<_> = self.entries.iter().map(|&(i, j, v)| (j, i, v)).collect();
        entries.sort_by_key(|t| (t.0, t.1));
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            entries,
        }
    }

    pub fn norm_fro(&self) -> f64 {
        self.entries.iter().map(|e| e.2 * e.2).sum::<f64>().sqrt()
    }

    pub fn norm_inf(&self) -> f64 {
        let mut rows = vec![0.0; self.nrows];
        for &(i, _, v) in &self.entries {
            rows[i] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        if self.nrows != self.ncols {
            return false;
        }
        let t = self.transpose();
        let scale = self.norm_fro().max(f64::MIN_POSITIVE);
        sparse_diff_fro(self, &t) <= tol * scale
    }

    /// `self * x` for a dense right-hand side with any scalar type.
    pub fn mul<T>(&self, x: MatRef<'_, T>) -> Mat<T>
    where
        T: ComplexField + Copy + From<f64> + std::ops::Mul<Output = T> + std::ops::AddAssign,
    {
        assert_eq!(self.ncols, x.nrows(), "sparse product dimension mismatch");
        let mut out = Mat::<T>::zeros(self.nrows, x.ncols());
        for &(i, j, v) in &self.entries {
            let v = T::from(v);
            for k in 0..x.ncols() {
                out[(i, k)] += v * x[(j, k)];
            }
        }
        out
    }

    /// `selfᵀ * x`.
    pub fn tmul<T>(&self, x: MatRef<'_, T>) -> Mat<T>
    where
        T: ComplexField + Copy + From<f64> + std::ops::Mul<Output = T> + std::ops::AddAssign,
    {
        assert_eq!(self.nrows, x.nrows(), "sparse product dimension mismatch");
        let mut out = Mat::<T>::zeros(self.ncols, x.ncols());
        for &(i, j, v) in &self.entries {
            let v = T::from(v);
            for k in 0..x.ncols() {
                out[(j, k)] += v * x[(i, k)];
            }
        }
        out
    }
}

fn sparse_diff_fro(a: &SparseMatrix, b: &SparseMatrix) -> f64 {
    let mut diff: Vec<(usize, usize, f64)> = a.entries.clone();
    diff.extend(b.entries.iter().map(|&(i, j, v)| (i, j, -v)));
    SparseMatrix::from_triplets(a.nrows, a.ncols, diff)
        .map(|d| d.norm_fro())
        .unwrap_or(f64::INFINITY)
}

/// Sparse LU factorization (faer, fill-reducing ordering, partial pivoting).
pub struct SparseLu<T: ComplexField> {
    lu: Lu<usize, T>,
    n: usize,
    norm_inf: f64,
}

impl<T> SparseLu<T>
where
    T: ComplexField + Copy,
{
    pub fn factor(n: usize, triplets: &[(usize, usize, T)], norm: impl Fn(&T) -> f64) -> Result<Self> {
        let trips: Vec<Triplet<usize, usize, T>> =
            triplets.iter().map(|&(i, j, v)| Triplet::new(i, j, v)).collect();
        let mut rows = vec![0.0; n];
        for (i, _, v) in triplets {
            rows[*i] += norm(v);
        }
        let norm_inf = rows.into_iter().fold(0.0, f64::max);
        let mat = SparseColMat::<usize, T>::try_new_from_triplets(n, n, &trips)
            .map_err(|e| Error::DimensionMismatch(format!("sparse assembly failed: {e:?}")))?;
        let lu = mat.sp_lu().map_err(|_| Error::SingularPencil)?;
        Ok(Self { lu, n, norm_inf })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn norm_inf(&self) -> f64 {
        self.norm_inf
    }

    pub fn solve(&self, rhs: MatRef<'_, T>) -> Mat<T> {
        self.lu.solve(rhs)
    }

    pub fn solve_transpose(&self, rhs: MatRef<'_, T>) -> Mat<T> {
        let mut out = rhs.to_owned();
        self.lu.solve_transpose_in_place(&mut out);
        out
    }
}

/// Returns `false` when `x` is non-finite or its growth relative to `rhs`
/// indicates a numerically singular system.
pub fn solution_is_regular<T: ComplexField>(
    x: MatRef<'_, T>,
    rhs: MatRef<'_, T>,
    norm_a: f64,
) -> bool
where
    T::Real: Into<f64>,
{
    if !x.is_all_finite() {
        return false;
    }
    let xn: f64 = x.norm_max().into();
    let bn: f64 = rhs.norm_max().into();
    if bn == 0.0 {
        return true;
    }
    xn * norm_a <= SINGULAR_GROWTH * bn
}

pub fn to_complex(a: MatRef<'_, f64>) -> CMat {
    CMat::from_fn(a.nrows(), a.ncols(), |i, j| c64::new(a[(i, j)], 0.0))
}

pub fn real_part(a: MatRef<'_, c64>) -> RMat {
    RMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].re)
}

pub fn imag_part(a: MatRef<'_, c64>) -> RMat {
    RMat::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)].im)
}

pub fn col_vector(v: &[c64]) -> CMat {
    CMat::from_fn(v.len(), 1, |i, _| v[i])
}

pub fn mat_norm_inf(a: MatRef<'_, f64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn cmat_norm_inf(a: MatRef<'_, c64>) -> f64 {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Solves `a x = b` by dense LU with partial pivoting, rejecting singular `a`.
pub fn dense_solve(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> Result<RMat> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch("dense solve".into()));
    }
    let lu = a.partial_piv_lu();
    let x = lu.solve(b);
    if !solution_is_regular(x.as_ref(), b, mat_norm_inf(a)) || !pivots_regular_real(a, &lu) {
        return Err(Error::SingularPencil);
    }
    Ok(x)
}

fn pivots_regular_real(a: MatRef<'_, f64>, lu: &faer::linalg::solvers::PartialPivLu<f64>) -> bool {
    let n = a.nrows();
    let scale = mat_norm_inf(a);
    let u = lu.U();
    (0..n).all(|i| u[(i, i)].abs() > n.max(1) as f64 * f64::EPSILON * scale)
}

/// Complex counterpart of [`dense_solve`].
pub fn dense_csolve(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<CMat> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::DimensionMismatch("dense solve".into()));
    }
    let lu = a.partial_piv_lu();
    let x = lu.solve(b);
    let scale = cmat_norm_inf(a);
    let n = a.nrows();
    let u = lu.U();
    let pivots_ok = (0..n).all(|i| u[(i, i)].norm() > n.max(1) as f64 * f64::EPSILON * scale);
    if !pivots_ok || !solution_is_regular(x.as_ref(), b, scale) {
        return Err(Error::SingularPencil);
    }
    Ok(x)
}

/// Transposed complex solve `aᵀ x = b`.
pub fn dense_csolve_transpose(a: MatRef<'_, c64>, b: MatRef<'_, c64>) -> Result<CMat> {
    dense_csolve(a.transpose(), b)
}

pub fn singular_values(a: MatRef<'_, f64>) -> Result<Vec<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(Vec::new());
    }
    a.singular_values().map_err(|_| Error::Svd)
}

/// Number of singular values above `rel_tol * σ_max`.
pub fn numerical_rank(sv: &[f64], rel_tol: f64) -> usize {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

/// Orthonormal basis of `range(a)` truncated at `rel_tol` relative to the
/// largest singular value.
pub fn range_basis(a: MatRef<'_, f64>, rel_tol: f64) -> Result<RMat> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(RMat::zeros(a.nrows(), 0));
    }
    let svd = a.thin_svd().map_err(|_| Error::Svd)?;
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let k = numerical_rank(&s, rel_tol);
    Ok(svd.U().subcols(0, k).to_owned())
}

/// Orthonormal basis of `ker(a)`.
pub fn null_space_basis(a: MatRef<'_, f64>, rel_tol: f64) -> Result<RMat> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return Ok(RMat::identity(n, n));
    }
    let svd = a.svd().map_err(|_| Error::Svd)?;
    let s: Vec<f64> = svd.S().column_vector().iter().copied().collect();
    let k = numerical_rank(&s, rel_tol);
    Ok(svd.V().subcols(k, n - k).to_owned())
}

pub fn max_singular_value_c(a: MatRef<'_, c64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    if a.ncols() == 1 || a.nrows() == 1 {
        return a.norm_l2();
    }
    a.singular_values()
        .map(|s| s.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Spectral norm of a real matrix.
pub fn norm2(a: MatRef<'_, f64>) -> f64 {
    singular_values(a)
        .map(|s| s.into_iter().fold(0.0, f64::max))
        .unwrap_or(f64::NAN)
}

/// Horizontal concatenation.
pub fn hcat(blocks: &[MatRef<'_, f64>]) -> RMat {
    let nrows = blocks.first().map_or(0, |b| b.nrows());
    let ncols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = RMat::zeros(nrows, ncols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.nrows(), nrows);
        out.as_mut().subcols_mut(off, b.ncols()).copy_from(b);
        off += b.ncols();
    }
    out
}

/// Vertical concatenation.
pub fn vcat(blocks: &[MatRef<'_, f64>]) -> RMat {
    let ncols = blocks.first().map_or(0, |b| b.ncols());
    let nrows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = RMat::zeros(nrows, ncols);
    let mut off = 0;
    for b in blocks {
        assert_eq!(b.ncols(), ncols);
        out.as_mut().subrows_mut(off, b.nrows()).copy_from(b);
        off += b.nrows();
    }
    out
}

pub fn frob_diff(a: MatRef<'_, f64>, b: MatRef<'_, f64>) -> f64 {
    (a - b).norm_l2()
}

pub fn symmetrize(a: MatRef<'_, f64>) -> RMat {
    RMat::from_fn(a.nrows(), a.ncols(), |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}
