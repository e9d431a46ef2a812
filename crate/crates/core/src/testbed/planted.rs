//! Index-2 systems with a prescribed part of the finite spectrum.

use faer::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{RMat, SparseMatrix};
use crate::system::Index2System;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct PlantedOptions {
    pub inputs: usize,
    pub outputs: usize,
    pub seed: u64,
}

impl Default for PlantedOptions {
    fn default() -> Self {
        Self {
            inputs: 1,
            outputs: 2,
            seed: 0,
        }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> RMat {
    let g = RMat::from_fn(n, n, |_, _| normal(rng));
    g.qr().compute_Q()
}

/// Finite spectrum = `poles` ∪ random stable values (count `n1 − n2`).
///
/// In canonical coordinates `A21 = [0 | R]`, `E11 = I` and the leading
/// `(n1−n2)` block of `A11` is `U T Uᵀ` with `T` block diagonal; a random
/// orthogonal similarity then mixes all velocity coordinates.
pub fn generate_planted(n1: usize, n2: usize, poles: &[c64], opts: &PlantedOptions) -> Result<Index2System> {
    if n2 >= n1 || opts.inputs == 0 || opts.outputs == 0 {
        return Err(Error::Config(format!("infeasible planted sizes n1 = {n1}, n2 = {n2}")));
    }
    let q = n1 - n2;
    if poles.len() > q {
        return Err(Error::Config(format!(
            "{} planted poles exceed the {q} finite poles available",
            poles.len()
        )));
    }
    if poles.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Config("planted poles must be finite".into()));
    }
    // pair up conjugates
    let mut blocks: Vec<(f64, f64)> = Vec::new();
    let mut used = vec![false; poles.len()];
    for i in 0..poles.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = poles[i];
        if z.im == 0.0 {
            blocks.push((z.re, 0.0));
            continue;
        }
        let j = (0..poles.len())
            .find(|&j| !used[j] && poles[j] == z.conj())
            .ok_or_else(|| Error::Config(format!("planted pole {z} lacks its conjugate")))?;
        used[j] = true;
        blocks.push((z.re, z.im.abs()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut filled: usize = blocks.iter().map(|b| if b.1 == 0.0 { 1 } else { 2 }).sum();
    while filled < q {
        if q - filled >= 2 && rng.random::<f64>() < 0.4 {
            blocks.push((-0.1 - 3.9 * rng.random::<f64>(), 0.2 + 3.8 * rng.random::<f64>()));
            filled += 2;
        } else {
            blocks.push((-0.1 - 5.9 * rng.random::<f64>(), 0.0));
            filled += 1;
        }
    }

    let mut t = RMat::zeros(q, q);
    let mut k = 0;
    for &(a, b) in &blocks {
        t[(k, k)] = a;
        if b != 0.0 {
            t[(k + 1, k + 1)] = a;
            t[(k, k + 1)] = b;
            t[(k + 1, k)] = -b;
            k += 2;
        } else {
            k += 1;
        }
    }
    let u = random_orthogonal(&mut rng, q);
    let m = &u * &t * u.transpose();

    let scale = 0.3 / (n1 as f64).sqrt();
    let mut ac = RMat::zeros(n1, n1);
    ac.as_mut().submatrix_mut(0, 0, q, q).copy_from(&m);
    for i in 0..n1 {
        for j in 0..n1 {
            if i >= q || j >= q {
                ac[(i, j)] = scale * normal(&mut rng);
            }
        }
    }
    for i in q..n1 {
        ac[(i, i)] -= 2.0;
    }
    let mut a21c = RMat::zeros(n2, n1);
    for i in 0..n2 {
        a21c[(i, q + i)] = 1.0 + rng.random::<f64>();
        for j in (i + 1)..n2 {
            a21c[(i, q + j)] = 0.2 * normal(&mut rng) / (n2 as f64).sqrt();
        }
    }
    let qm = random_orthogonal(&mut rng, n1);
    let a11 = &qm * &ac * qm.transpose();
    let a21 = &a21c * qm.transpose();
    let b1 = RMat::from_fn(n1, opts.inputs, |_, _| normal(&mut rng));
    let c1 = RMat::from_fn(opts.outputs, n1, |_, _| normal(&mut rng));
    Index2System::new(
        SparseMatrix::identity(n1),
        SparseMatrix::from_dense(a11.as_ref()),
        SparseMatrix::from_dense(a21.as_ref()),
        b1,
        c1,
    )
}

/// Unstable pair used by the demo configuration.
pub fn demo_poles() -> Vec<c64> {
    vec![c64::new(5.2480e-2, 7.6720e-1), c64::new(5.2480e-2, -7.6720e-1)]
}
