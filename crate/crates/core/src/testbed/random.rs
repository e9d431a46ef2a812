//! Randomized well-posed index-2 systems.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RMat, SparseMatrix};
use crate::system::Index2System;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct RandomSpec {
    pub n1: usize,
    pub n2: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Nonzero pressure output block `C2`.
    pub with_c2: bool,
    /// Nonzero feed-through `D`.
    pub with_d: bool,
    /// Off-diagonal entries per row of the sparse blocks.
    pub row_nnz: usize,
}

impl Default for RandomSpec {
    fn default() -> Self {
        Self {
            n1: 20,
            n2: 6,
            inputs: 2,
            outputs: 2,
            with_c2: false,
            with_d: false,
            row_nnz: 4,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn dense(rng: &mut ChaCha8Rng, r: usize, c: usize) -> RMat {
    RMat::from_fn(r, c, |_, _| normal(rng))
}

/// `E11` SPD tridiagonal, `A11` = skew-symmetric part minus a positive
/// diagonal (so its symmetric part is negative definite), sparse random
/// `A21` with a guaranteed full-rank pattern, dense random `B1`, `C1`.
pub fn generate_random(spec: &RandomSpec, seed: u64) -> Result<Index2System> {
    let RandomSpec { n1, n2, .. } = *spec;
    if n1 == 0 || n2 >= n1 || spec.inputs == 0 || spec.outputs == 0 {
        return Err(Error::Config(format!(
            "random system needs 0 <= n2 < n1 and m, p > 0 (got n1 = {n1}, n2 = {n2})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut e = Vec::new();
    for i in 0..n1 {
        e.push((i, i, 2.0 + rng.random::<f64>()));
        if i + 1 < n1 {
            let off = -0.5 * rng.random::<f64>();
            e.push((i, i + 1, off));
            e.push((i + 1, i, off));
        }
    }
    let e11 = SparseMatrix::from_triplets(n1, n1, e)?;

    let mut a = Vec::new();
    for i in 0..n1 {
        a.push((i, i, -(0.5 + 4.5 * rng.random::<f64>())));
        for _ in 0..spec.row_nnz {
            let j = rng.random_range(0..n1);
            if j != i {
                let v = normal(&mut rng);
                a.push((i, j, v));
                a.push((j, i, -v));
            }
        }
    }
    let a11 = SparseMatrix::from_triplets(n1, n1, a)?;

    let mut c = Vec::new();
    for k in 0..n2 {
        c.push((k, k * n1 / n2, 2.0 + rng.random::<f64>()));
        for _ in 0..spec.row_nnz {
            c.push((k, rng.random_range(0..n1), 0.5 * normal(&mut rng)));
        }
    }
    let a21 = SparseMatrix::from_triplets(n2, n1, c)?;

    let b1 = dense(&mut rng, n1, spec.inputs);
    let c1 = dense(&mut rng, spec.outputs, n1);
    let mut sys = Index2System::new(e11, a11, a21, b1, c1)?;
    if spec.with_c2 {
        sys = sys.with_c2(dense(&mut rng, spec.outputs, n2))?;
    }
    if spec.with_d {
        sys = sys.with_d(dense(&mut rng, spec.outputs, spec.inputs))?;
    }
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::validate_index2;

    #[test]
    fn random_systems_validate() {
        for seed in 0..5 {
            let spec = RandomSpec {
                n1: 40,
                n2: 10,
                with_c2: true,
                with_d: true,
                ..Default::default()
            };
            let sys = generate_random(&spec, seed).unwrap();
            validate_index2(&sys).unwrap();
            assert!(sys.c2().norm_max() > 0.0);
        }
    }

    #[test]
    fn same_seed_same_system() {
        let a = generate_random(&RandomSpec::default(), 9).unwrap();
        let b = generate_random(&RandomSpec::default(), 9).unwrap();
        assert_eq!(a.a11(), b.a11());
        assert_eq!(a.b1(), b.b1());
    }

    #[test]
    fn infeasible_sizes() {
        let spec = RandomSpec {
            n1: 4,
            n2: 4,
            ..Default::default()
        };
        assert!(generate_random(&spec, 0).is_err());
    }
}
