//! Run configuration with defaults, overrides and a resolved echo.

use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpolation::InterpolationData;
use crate::reduction::{ReductionMode, ReductionOptions};
use crate::system::Index2System;
use crate::testbed::planted::demo_poles;
use crate::testbed::{
    generate_oseen, generate_planted, generate_random, toy_patches, BaseFlow, GridGeometry, GridSpec,
    PlantedOptions, RandomSpec, Rect,
};
use crate::transfer::Spacing;

/// Complex number as `[re, im]`.
pub type Point = [f64; 2];

fn to_c(p: &Point) -> c64 {
    c64::new(p[0], p[1])
}

fn from_c(z: c64) -> Point {
    [z.re, z.im]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorConfig {
    Planted {
        n1: usize,
        n2: usize,
        poles: Vec<Point>,
        inputs: usize,
        outputs: usize,
    },
    Oseen {
        grid: GridSpec,
        reynolds: f64,
        base_flow: BaseFlow,
        /// Output patches; the six downstream toy patches when absent.
        #[serde(default)]
        patches: Option<Vec<Rect>>,
    },
    Random(RandomSpec),
}

impl GeneratorConfig {
    pub fn demo() -> Self {
        GeneratorConfig::Planted {
            n1: 120,
            n2: 30,
            poles: demo_poles().into_iter().map(from_c).collect(),
            inputs: 1,
            outputs: 2,
        }
    }

    /// 24×12 channel, parabolic inflow profile, Re = 12.
    pub fn toy_oseen() -> Self {
        GeneratorConfig::Oseen {
            grid: GridSpec::toy_channel(),
            reynolds: 12.0,
            base_flow: BaseFlow::Parabolic { peak: 1.0 },
            patches: None,
        }
    }

    /// Builds the system and, for grid-based generators, its geometry.
    pub fn build(&self, seed: u64) -> Result<(Index2System, Option<GridGeometry>)> {
        match self {
            GeneratorConfig::Planted {
                n1,
                n2,
                poles,
                inputs,
                outputs,
            } => {
                let poles: Vec<c64> = poles.iter().map(to_c).collect();
                let opts = PlantedOptions {
                    inputs: *inputs,
                    outputs: *outputs,
                    seed,
                };
                Ok((generate_planted(*n1, *n2, &poles, &opts)?, None))
            }
            GeneratorConfig::Oseen {
                grid,
                reynolds,
                base_flow,
                patches,
            } => {
                let geom = GridGeometry::new(grid.clone())?;
                let patches = match patches {
                    Some(p) => p.clone(),
                    None => toy_patches(&geom)?,
                };
                let sys = generate_oseen(&geom, *reynolds, *base_flow, &patches)?;
                Ok((sys, Some(geom)))
            }
            GeneratorConfig::Random(spec) => Ok((generate_random(spec, seed)?, None)),
        }
    }
}

/// `count` conjugate pairs `±iω`, `ω` log-spaced on `[omega_min, omega_max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogPairs {
    pub omega_min: f64,
    pub omega_max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DirectionConfig {
    /// Cycling unit coordinate vectors.
    Unit,
    /// Seeded standard-normal directions; the run seed when absent.
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
    /// One direction per point.
    User { right: Vec<Vec<Point>>, left: Vec<Vec<Point>> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub count: usize,
    pub spacing: Spacing,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            omega_min: 1e-2,
            omega_max: 1e2,
            count: 200,
            spacing: Spacing::Log,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Seed of the random initial field (projected onto `ker A21`); the run
    /// seed when absent.
    pub initial_seed: Option<u64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_final: 100.0,
            initial_seed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub generator: GeneratorConfig,
    /// Expanded into `points` ahead of the explicit entries.
    pub log_pairs: Option<LogPairs>,
    pub points: Vec<Point>,
    /// Conjugates appended to close the point set.
    pub conjugates_added: Vec<Point>,
    pub directions: DirectionConfig,
    pub mode: ReductionMode,
    pub svd_tol: f64,
    /// Input weight `R = lqr_weight · I`.
    pub lqr_weight: f64,
    pub sweep: SweepConfig,
    pub simulation: SimulationConfig,
}

impl Default for RunConfig {
    /// The planted-pole demo.
    fn default() -> Self {
        Self {
            seed: 0,
            generator: GeneratorConfig::demo(),
            log_pairs: Some(LogPairs {
                omega_min: 1e-2,
                omega_max: 1e2,
                count: 10,
            }),
            points: vec![[0.0, 0.5], [0.0, 0.77], [0.0, 1.0]],
            conjugates_added: Vec::new(),
            directions: DirectionConfig::Unit,
            mode: ReductionMode::PetrovGalerkin,
            svd_tol: 1e-10,
            lqr_weight: 1.0,
            sweep: SweepConfig::default(),
            simulation: SimulationConfig::default(),
        }
    }
}

fn has_partner(points: &[c64], z: c64) -> bool {
    z.im == 0.0 || points.iter().any(|&w| w == z.conj())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Pretty JSON with a trailing newline; field order is fixed.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Expands log pairs, closes the point set under conjugation, fills
    /// default seeds and validates. Resolving a resolved config is a no-op.
    pub fn resolve(mut self) -> Result<Self> {
        if !(self.svd_tol > 0.0 && self.svd_tol < 1.0) {
            return Err(Error::Config("svd_tol must lie in (0, 1)".into()));
        }
        if !(self.lqr_weight > 0.0 && self.lqr_weight.is_finite()) {
            return Err(Error::Config("lqr_weight must be positive".into()));
        }
        if let Some(lp) = self.log_pairs.take() {
            let mut pts: Vec<Point> = InterpolationData::log_spaced_pairs(lp.omega_min, lp.omega_max, lp.count)?
                .into_iter()
                .map(from_c)
                .collect();
            pts.append(&mut self.points);
            self.points = pts;
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Config("interpolation points must be finite".into()));
        }
        match &mut self.directions {
            DirectionConfig::User { right, left } => {
                if right.len() != self.points.len() || left.len() != self.points.len() {
                    return Err(Error::Config("user directions need one entry per point".into()));
                }
                let n = self.points.len();
                let data = self.user_data()?.conjugate_closure();
                for k in n..data.len() {
                    let z = data.points()[k];
                    self.points.push(from_c(z));
                    self.conjugates_added.push(from_c(z));
                    let cv = |v: &[c64]| v.iter().map(|&z| from_c(z)).collect::<Vec<_>>();
                    if let DirectionConfig::User { right, left } = &mut self.directions {
                        right.push(cv(&data.right_dirs()[k]));
                        left.push(cv(&data.left_dirs()[k]));
                    }
                }
            }
            DirectionConfig::Random { seed } => {
                seed.get_or_insert(self.seed);
                self.close_points();
            }
            DirectionConfig::Unit => self.close_points(),
        }
        self.simulation.initial_seed.get_or_insert(self.seed);
        if self.points.is_empty() {
            return Err(Error::Config("no interpolation points".into()));
        }
        Ok(self)
    }

    fn close_points(&mut self) {
        let mut pts: Vec<c64> = self.points.iter().map(to_c).collect();
        for k in 0..pts.len() {
            if !has_partner(&pts, pts[k]) {
                let z = pts[k].conj();
                pts.push(z);
                self.points.push(from_c(z));
                self.conjugates_added.push(from_c(z));
            }
        }
    }

    fn user_data(&self) -> Result<InterpolationData> {
        let DirectionConfig::User { right, left } = &self.directions else {
            unreachable!()
        };
        let conv = |d: &Vec<Vec<Point>>| d.iter().map(|v| v.iter().map(to_c).collect()).collect();
        InterpolationData::new(self.points.iter().map(to_c).collect(), conv(right), conv(left))
    }

    /// Interpolation data for a system with `m` inputs and `p` outputs.
    pub fn interpolation_data(&self, m: usize, p: usize) -> Result<InterpolationData> {
        let points: Vec<c64> = self.points.iter().map(to_c).collect();
        match &self.directions {
            DirectionConfig::Unit => InterpolationData::with_unit_directions(points, m, p),
            DirectionConfig::Random { seed } => {
                InterpolationData::with_random_directions(points, m, p, seed.unwrap_or(self.seed))
            }
            DirectionConfig::User { .. } => self.user_data(),
        }
    }

    pub fn reduction_options(&self) -> ReductionOptions {
        ReductionOptions {
            mode: self.mode,
            svd_tol: self.svd_tol,
        }
    }
}
