//! Interpolation points and tangential directions.

use faer::c64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Points `σᵢ` with right directions `bᵢ ∈ ℂᵐ` and left directions `cᵢ ∈ ℂᵖ`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationData {
    points: Vec<c64>,
    right_dirs: Vec<Vec<c64>>,
    left_dirs: Vec<Vec<c64>>,
    conjugate_closed: bool,
}

const CONJ_TOL: f64 = 1e-14;

fn close(a: c64, b: c64) -> bool {
    (a - b).norm() <= CONJ_TOL * a.norm().max(b.norm()).max(1.0)
}

fn close_conj(a: &[c64], b: &[c64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| close(*x, y.conj()))
}

impl InterpolationData {
    pub fn new(points: Vec<c64>, right_dirs: Vec<Vec<c64>>, left_dirs: Vec<Vec<c64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInterpolationData("no interpolation points".into()));
        }
        if right_dirs.len() != points.len() || left_dirs.len() != points.len() {
            return Err(Error::InvalidInterpolationData(
                "one right and one left direction per point required".into(),
            ));
        }
        let m = right_dirs[0].len();
        let p = left_dirs[0].len();
        if right_dirs.iter().any(|b| b.len() != m) || left_dirs.iter().any(|c| c.len() != p) {
            return Err(Error::InvalidInterpolationData("direction lengths differ".into()));
        }
        let finite = |z: &c64| z.re.is_finite() && z.im.is_finite();
        if !points.iter().all(finite)
            || !right_dirs.iter().flatten().all(finite)
            || !left_dirs.iter().flatten().all(finite)
        {
            return Err(Error::InvalidInterpolationData("non-finite value".into()));
        }
        if right_dirs.iter().any(|b| b.iter().all(|z| z.norm() == 0.0)) {
            return Err(Error::InvalidInterpolationData("zero right direction".into()));
        }
        if left_dirs.iter().any(|c| c.iter().all(|z| z.norm() == 0.0)) {
            return Err(Error::InvalidInterpolationData("zero left direction".into()));
        }
        let mut data = Self {
            points,
            right_dirs,
            left_dirs,
            conjugate_closed: false,
        };
        data.conjugate_closed = data.check_conjugate_closed();
        Ok(data)
    }

    /// Directions cycle through unit coordinate vectors, `e_{k mod m}` and
    /// `e_{k mod p}` for the k-th point that is not the conjugate of an
    /// earlier one. Conjugate partners share their directions.
    pub fn with_unit_directions(points: Vec<c64>, m: usize, p: usize) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::InvalidInterpolationData("m and p must be positive".into()));
        }
        let unit = |k: usize, n: usize| {
            let mut e = vec![c64::new(0.0, 0.0); n];
            e[k % n] = c64::new(1.0, 0.0);
            e
        };
        let mut right: Vec<Vec<c64>> = Vec::with_capacity(points.len());
        let mut left: Vec<Vec<c64>> = Vec::with_capacity(points.len());
        let mut k = 0;
        for (i, &s) in points.iter().enumerate() {
            if let Some(j) = (0..i).find(|&j| close(points[j], s.conj()) && s.im != 0.0) {
                right.push(right[j].clone());
                left.push(left[j].clone());
                continue;
            }
            right.push(unit(k, m));
            left.push(unit(k, p));
            k += 1;
        }
        Self::new(points, right, left)
    }

    /// Real standard-normal directions from a seeded generator. Conjugate
    /// partners share their directions, so closure is preserved.
    pub fn with_random_directions(points: Vec<c64>, m: usize, p: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut right: Vec<Vec<c64>> = Vec::with_capacity(points.len());
        let mut left: Vec<Vec<c64>> = Vec::with_capacity(points.len());
        for (i, &s) in points.iter().enumerate() {
            if let Some(j) = (0..i).find(|&j| close(points[j], s.conj()) && s.im != 0.0) {
                right.push(right[j].clone());
                left.push(left[j].clone());
                continue;
            }
            let mut draw = |n: usize| -> Vec<c64> {
                (0..n)
                    .map(|_| c64::new(StandardNormal.sample(&mut rng), 0.0))
                    .collect()
            };
            right.push(draw(m));
            left.push(draw(p));
        }
        Self::new(points, right, left)
    }

    /// `count` pairs `±iω` with `ω` log-spaced on `[omega_min, omega_max]`.
    pub fn log_spaced_pairs(omega_min: f64, omega_max: f64, count: usize) -> Result<Vec<c64>> {
        if !(omega_min > 0.0 && omega_max >= omega_min && omega_max.is_finite()) || count == 0 {
            return Err(Error::InvalidInterpolationData("invalid frequency range".into()));
        }
        let (a, b) = (omega_min.log10(), omega_max.log10());
        let mut out = Vec::with_capacity(2 * count);
        for k in 0..count {
            let t = if count == 1 { 0.0 } else { k as f64 / (count - 1) as f64 };
            let w = 10f64.powf(a + t * (b - a));
            out.push(c64::new(0.0, w));
            out.push(c64::new(0.0, -w));
        }
        Ok(out)
    }

    fn check_conjugate_closed(&self) -> bool {
        (0..self.len()).all(|i| self.partner(i).is_some())
    }

    /// Index of the conjugate partner of entry `i` (itself when the point
    /// and directions are real).
    pub fn partner(&self, i: usize) -> Option<usize> {
        (0..self.len()).find(|&j| {
            close(self.points[j], self.points[i].conj())
                && close_conj(&self.right_dirs[j], &self.right_dirs[i])
                && close_conj(&self.left_dirs[j], &self.left_dirs[i])
        })
    }

    /// Appends the missing conjugate partners and marks the set as closed.
    pub fn conjugate_closure(mut self) -> Self {
        let n = self.len();
        for i in 0..n {
            if self.partner(i).is_none() {
                self.points.push(self.points[i].conj());
                self.right_dirs.push(self.right_dirs[i].iter().map(|z| z.conj()).collect());
                self.left_dirs.push(self.left_dirs[i].iter().map(|z| z.conj()).collect());
            }
        }
        self.conjugate_closed = true;
        self
    }

    /// Entries whose solves span the whole set after realification: the
    /// second member of every conjugate pair is skipped.
    pub fn representatives(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| match self.partner(i) {
                Some(j) => j >= i,
                None => true,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[c64] {
        &self.points
    }

    pub fn right_dirs(&self) -> &[Vec<c64>] {
        &self.right_dirs
    }

    pub fn left_dirs(&self) -> &[Vec<c64>] {
        &self.left_dirs
    }

    pub fn conjugate_closed(&self) -> bool {
        self.conjugate_closed
    }

    pub fn inputs(&self) -> usize {
        self.right_dirs[0].len()
    }

    pub fn outputs(&self) -> usize {
        self.left_dirs[0].len()
    }

    pub(crate) fn check_dims(&self, m: usize, p: usize) -> Result<()> {
        if self.inputs() != m || self.outputs() != p {
            return Err(Error::DimensionMismatch(format!(
                "directions are {}/{} but system has m = {m}, p = {p}",
                self.inputs(),
                self.outputs()
            )));
        }
        Ok(())
    }
}
