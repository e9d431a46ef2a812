//! Staggered (MAC) grid on a rectangular channel with an optional
//! rectangular obstacle made of whole cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inclusive cell-index rectangle `[i0, i1] × [j0, j1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellRect {
    pub i0: usize,
    pub i1: usize,
    pub j0: usize,
    pub j1: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    pub obstacle: Option<CellRect>,
}

impl GridSpec {
    /// 24×12 channel of size 4×2 with a 2×2-cell square centered at (1, 1).
    pub fn toy_channel() -> Self {
        Self {
            nx: 24,
            ny: 12,
            lx: 4.0,
            ly: 2.0,
            obstacle: Some(CellRect {
                i0: 5,
                i1: 6,
                j0: 5,
                j1: 6,
            }),
        }
    }
}

/// Velocity component of an unknown.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    /// Horizontal velocity on vertical faces.
    U,
    /// Vertical velocity on horizontal faces.
    V,
}

/// A velocity unknown: face `(i, j)` of the given component.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityDof {
    pub component: Component,
    pub i: usize,
    pub j: usize,
    pub x: f64,
    pub y: f64,
}

/// Grid with index maps. Velocity unknowns are the faces between two fluid
/// cells (u-faces first, row by row, then v-faces); pressure unknowns are the
/// fluid cells except the first, whose value is pinned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct GridGeometry {
    spec: GridSpec,
    solid: Vec<bool>,
    u_index: Vec<Option<usize>>,
    v_index: Vec<Option<usize>>,
    p_index: Vec<Option<usize>>,
    dofs: Vec<VelocityDof>,
    n_u: usize,
    n_p: usize,
}

impl TryFrom<GridSpec> for GridGeometry {
    type Error = Error;
    fn try_from(spec: GridSpec) -> Result<Self> {
        Self::new(spec)
    }
}

impl From<GridGeometry> for GridSpec {
    fn from(g: GridGeometry) -> Self {
        g.spec
    }
}

impl GridGeometry {
    pub fn new(spec: GridSpec) -> Result<Self> {
        let GridSpec { nx, ny, lx, ly, obstacle } = spec;
        if nx < 2 || ny < 2 {
            return Err(Error::Geometry(format!("grid {nx}x{ny} is too small")));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(Error::Geometry("domain extents must be positive".into()));
        }
        let mut solid = vec![false; nx * ny];
        if let Some(r) = obstacle {
            if r.i0 > r.i1 || r.j0 > r.j1 || r.i0 == 0 || r.j0 == 0 || r.i1 + 1 >= nx || r.j1 + 1 >= ny {
                return Err(Error::Geometry(
                    "obstacle must be a nonempty cell block strictly inside the grid".into(),
                ));
            }
            for j in r.j0..=r.j1 {
                for i in r.i0..=r.i1 {
                    solid[j * nx + i] = true;
                }
            }
        }
        let hx = lx / nx as f64;
        let hy = ly / ny as f64;
        let fluid = |i: isize, j: isize| {
            i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && !solid[j as usize * nx + i as usize]
        };
        let mut dofs = Vec::new();
        let mut u_index = vec![None; (nx + 1) * ny];
        for j in 0..ny {
            for i in 0..=nx {
                if fluid(i as isize - 1, j as isize) && fluid(i as isize, j as isize) {
                    u_index[j * (nx + 1) + i] = Some(dofs.len());
                    dofs.push(VelocityDof {
                        component: Component::U,
                        i,
                        j,
                        x: i as f64 * hx,
                        y: (j as f64 + 0.5) * hy,
                    });
                }
            }
        }
        let n_u = dofs.len();
        let mut v_index = vec![None; nx * (ny + 1)];
        for j in 0..=ny {
            for i in 0..nx {
                if fluid(i as isize, j as isize - 1) && fluid(i as isize, j as isize) {
                    v_index[j * nx + i] = Some(dofs.len());
                    dofs.push(VelocityDof {
                        component: Component::V,
                        i,
                        j,
                        x: (i as f64 + 0.5) * hx,
                        y: j as f64 * hy,
                    });
                }
            }
        }
        let mut p_index = vec![None; nx * ny];
        let mut n_p = 0;
        let mut pinned = false;
        for (c, s) in solid.iter().enumerate() {
            if *s {
                continue;
            }
            if !pinned {
                pinned = true;
                continue;
            }
            p_index[c] = Some(n_p);
            n_p += 1;
        }
        Ok(Self {
            spec,
            solid,
            u_index,
            v_index,
            p_index,
            dofs,
            n_u,
            n_p,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }
    pub fn nx(&self) -> usize {
        self.spec.nx
    }
    pub fn ny(&self) -> usize {
        self.spec.ny
    }
    pub fn hx(&self) -> f64 {
        self.spec.lx / self.spec.nx as f64
    }
    pub fn hy(&self) -> f64 {
        self.spec.ly / self.spec.ny as f64
    }
    pub fn n_velocity(&self) -> usize {
        self.dofs.len()
    }
    pub fn n_u(&self) -> usize {
        self.n_u
    }
    pub fn n_pressure(&self) -> usize {
        self.n_p
    }
    pub fn dofs(&self) -> &[VelocityDof] {
        &self.dofs
    }

    /// Whether cell `(i, j)` is fluid; cells outside the grid are not.
    pub fn is_fluid(&self, i: isize, j: isize) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.spec.nx
            && (j as usize) < self.spec.ny
            && !self.solid[j as usize * self.spec.nx + i as usize]
    }

    pub fn u_dof(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize > self.spec.nx || j as usize >= self.spec.ny {
            return None;
        }
        self.u_index[j as usize * (self.spec.nx + 1) + i as usize]
    }

    pub fn v_dof(&self, i: isize, j: isize) -> Option<usize> {
        if i < 0 || j < 0 || i as usize >= self.spec.nx || j as usize > self.spec.ny {
            return None;
        }
        self.v_index[j as usize * self.spec.nx + i as usize]
    }

    /// Pressure unknown of cell `(i, j)`; `None` for solid or pinned cells.
    pub fn p_dof(&self, i: usize, j: usize) -> Option<usize> {
        self.p_index[j * self.spec.nx + i]
    }

    /// Obstacle center and side length, if any.
    pub fn obstacle_center(&self) -> Option<(f64, f64, f64)> {
        self.spec.obstacle.map(|r| {
            let x0 = r.i0 as f64 * self.hx();
            let x1 = (r.i1 + 1) as f64 * self.hx();
            let y0 = r.j0 as f64 * self.hy();
            let y1 = (r.j1 + 1) as f64 * self.hy();
            (0.5 * (x0 + x1), 0.5 * (y0 + y1), x1 - x0)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open(nx: usize, ny: usize) -> GridGeometry {
        GridGeometry::new(GridSpec {
            nx,
            ny,
            lx: 1.0,
            ly: 1.0,
            obstacle: None,
        })
        .unwrap()
    }

    #[test]
    fn open_grid_counts() {
        let g = open(8, 8);
        assert_eq!(g.n_velocity(), 7 * 8 + 8 * 7);
        assert_eq!(g.n_pressure(), 63);
    }

    #[test]
    fn index_maps_are_bijective() {
        let g = GridGeometry::new(GridSpec::toy_channel()).unwrap();
        let mut seen = vec![false; g.n_velocity()];
        for j in 0..g.ny() as isize + 1 {
            for i in 0..g.nx() as isize + 1 {
                for k in [g.u_dof(i, j), g.v_dof(i, j)].into_iter().flatten() {
                    assert!(!seen[k]);
                    seen[k] = true;
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
        let fluid_cells = 24 * 12 - 4;
        assert_eq!(g.n_pressure(), fluid_cells - 1);
    }

    #[test]
    fn obstacle_center_of_toy() {
        let g = GridGeometry::new(GridSpec::toy_channel()).unwrap();
        let (xc, yc, d) = g.obstacle_center().unwrap();
        assert!((xc - 1.0).abs() < 1e-15 && (yc - 1.0).abs() < 1e-15);
        assert!((d - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn bad_geometry() {
        let mut spec = GridSpec::toy_channel();
        spec.obstacle = Some(CellRect {
            i0: 0,
            i1: 2,
            j0: 3,
            j1: 4,
        });
        assert!(GridGeometry::new(spec).is_err());
        let mut spec = GridSpec::toy_channel();
        spec.lx = -1.0;
        assert!(GridGeometry::new(spec).is_err());
    }

    #[test]
    fn serde_round_trip() {
        let g = GridGeometry::new(GridSpec::toy_channel()).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: GridGeometry = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }
}
