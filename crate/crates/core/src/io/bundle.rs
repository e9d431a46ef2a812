//! Directory bundles: full-order systems, reduced models and LQR results.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::matrix::{read_dense, read_matrix, write_dense, write_matrix};
use crate::linalg::RMat;
use crate::lqr::LqrResult;
use crate::reduction::{ReducedModel, ReductionMode};
use crate::system::Index2System;
use crate::testbed::GridGeometry;

pub const MANIFEST: &str = "manifest.json";
pub const GEOMETRY: &str = "geometry.json";

/// Serializes with a fixed field order and a trailing newline.
pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryFlags {
    pub e11: bool,
    pub a11: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemManifest {
    pub kind: String,
    pub n1: usize,
    pub n2: usize,
    pub inputs: usize,
    pub outputs: usize,
    /// Blocks present as files; absent optional blocks are zero.
    pub blocks: Vec<String>,
    pub symmetric: SymmetryFlags,
    /// Generator configuration that produced the system, if any.
    pub generator: Option<serde_json::Value>,
    pub seed: Option<u64>,
}

const SYSTEM_KIND: &str = "index2-system";
const ROM_KIND: &str = "reduced-model";

/// Writes `E11, A11, A21, B1, C1` and the nonzero optional blocks.
pub fn write_system(
    dir: impl AsRef<Path>,
    sys: &Index2System,
    generator: Option<serde_json::Value>,
    seed: Option<u64>,
    geometry: Option<&GridGeometry>,
) -> Result<SystemManifest> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    let mut blocks = vec!["E11", "A11", "A21", "B1", "C1"];
    write_matrix(dir.join("E11.mtx"), sys.e11())?;
    write_matrix(dir.join("A11.mtx"), sys.a11())?;
    write_matrix(dir.join("A21.mtx"), sys.a21())?;
    write_dense(dir.join("B1.mtx"), sys.b1())?;
    write_dense(dir.join("C1.mtx"), sys.c1())?;
    for (name, m) in [("B2", sys.b2()), ("C2", sys.c2()), ("D", sys.d())] {
        if m.norm_max() != 0.0 {
            write_dense(dir.join(format!("{name}.mtx")), m)?;
            blocks.push(name);
        }
    }
    let manifest = SystemManifest {
        kind: SYSTEM_KIND.into(),
        n1: sys.n1(),
        n2: sys.n2(),
        inputs: sys.inputs(),
        outputs: sys.outputs(),
        blocks: blocks.into_iter().map(String::from).collect(),
        symmetric: SymmetryFlags {
            e11: sys.e11().is_symmetric(0.0),
            a11: sys.a11().is_symmetric(0.0),
        },
        generator,
        seed,
    };
    write_json(dir.join(MANIFEST), &manifest)?;
    if let Some(g) = geometry {
        write_json(dir.join(GEOMETRY), g)?;
    }
    Ok(manifest)
}

fn check_shape(name: &str, got: (usize, usize), want: (usize, usize)) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{name} is {}x{}, manifest implies {}x{}",
            got.0, got.1, want.0, want.1
        )));
    }
    Ok(())
}

pub struct SystemBundle {
    pub system: Index2System,
    pub manifest: SystemManifest,
    pub geometry: Option<GridGeometry>,
}

pub fn read_system(dir: impl AsRef<Path>) -> Result<SystemBundle> {
    let dir = dir.as_ref();
    let manifest: SystemManifest = read_json(dir.join(MANIFEST))?;
    if manifest.kind != SYSTEM_KIND {
        return Err(Error::Config(format!("{} is not a system bundle", dir.display())));
    }
    let SystemManifest {
        n1, n2, inputs: m, outputs: p, ..
    } = manifest;
    let has = |b: &str| manifest.blocks.iter().any(|x| x == b);
    for required in ["E11", "A11", "A21", "B1", "C1"] {
        if !has(required) {
            return Err(Error::Config(format!("bundle lacks block {required}")));
        }
    }
    let e11 = read_matrix(dir.join("E11.mtx"))?;
    let a11 = read_matrix(dir.join("A11.mtx"))?;
    let a21 = read_matrix(dir.join("A21.mtx"))?;
    let b1 = read_dense(dir.join("B1.mtx"))?;
    let c1 = read_dense(dir.join("C1.mtx"))?;
    check_shape("E11", (e11.nrows(), e11.ncols()), (n1, n1))?;
    check_shape("A11", (a11.nrows(), a11.ncols()), (n1, n1))?;
    check_shape("A21", (a21.nrows(), a21.ncols()), (n2, n1))?;
    check_shape("B1", (b1.nrows(), b1.ncols()), (n1, m))?;
    check_shape("C1", (c1.nrows(), c1.ncols()), (p, n1))?;
    let mut sys = Index2System::new(e11, a11, a21, b1, c1)?;
    if has("B2") {
        let b2 = read_dense(dir.join("B2.mtx"))?;
        check_shape("B2", (b2.nrows(), b2.ncols()), (n2, m))?;
        sys = sys.with_b2(b2)?;
    }
    if has("C2") {
        let c2 = read_dense(dir.join("C2.mtx"))?;
        check_shape("C2", (c2.nrows(), c2.ncols()), (p, n2))?;
        sys = sys.with_c2(c2)?;
    }
    if has("D") {
        let d = read_dense(dir.join("D.mtx"))?;
        check_shape("D", (d.nrows(), d.ncols()), (p, m))?;
        sys = sys.with_d(d)?;
    }
    let geom_path = dir.join(GEOMETRY);
    let geometry = if geom_path.exists() {
        let g: GridGeometry = read_json(&geom_path)?;
        if g.n_velocity() != n1 {
            return Err(Error::Geometry(format!(
                "geometry has {} velocity unknowns, system has {n1}",
                g.n_velocity()
            )));
        }
        Some(g)
    } else {
        None
    };
    Ok(SystemBundle {
        system: sys,
        manifest,
        geometry,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RomManifest {
    pub kind: String,
    pub order: usize,
    pub n1: usize,
    pub inputs: usize,
    pub outputs: usize,
    pub mode: ReductionMode,
}

pub fn write_rom(dir: impl AsRef<Path>, rom: &ReducedModel) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    for (name, m) in [
        ("Er", rom.er()),
        ("Ar", rom.ar()),
        ("Br", rom.br()),
        ("Cr", rom.cr()),
        ("Dr", rom.dr()),
        ("V", rom.v()),
        ("W", rom.w()),
    ] {
        write_dense(dir.join(format!("{name}.mtx")), m)?;
    }
    write_json(
        dir.join(MANIFEST),
        &RomManifest {
            kind: ROM_KIND.into(),
            order: rom.order(),
            n1: rom.v().nrows(),
            inputs: rom.inputs(),
            outputs: rom.outputs(),
            mode: rom.mode(),
        },
    )
}

pub fn read_rom(dir: impl AsRef<Path>) -> Result<ReducedModel> {
    let dir = dir.as_ref();
    let man: RomManifest = read_json(dir.join(MANIFEST))?;
    if man.kind != ROM_KIND {
        return Err(Error::Config(format!("{} is not a reduced-model bundle", dir.display())));
    }
    let (r, n, m, p) = (man.order, man.n1, man.inputs, man.outputs);
    let load = |name: &str, shape: (usize, usize)| -> Result<RMat> {
        let a = read_dense(dir.join(format!("{name}.mtx")))?;
        check_shape(name, (a.nrows(), a.ncols()), shape)?;
        Ok(a)
    };
    ReducedModel::new(
        load("Er", (r, r))?,
        load("Ar", (r, r))?,
        load("Br", (r, m))?,
        load("Cr", (p, r))?,
        load("Dr", (p, m))?,
        load("V", (n, r))?,
        load("W", (n, r))?,
        man.mode,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LqrSummary {
    pub order: usize,
    pub inputs: usize,
    pub n1: usize,
    pub residual_norm: f64,
    pub residual_scale: f64,
    pub closed_loop_abscissa: f64,
}

pub const LQR_SUMMARY: &str = "lqr.json";

pub fn write_lqr(dir: impl AsRef<Path>, res: &LqrResult) -> Result<()> {
    let dir = dir.as_ref();
    ensure_dir(dir)?;
    write_dense(dir.join("P.mtx"), &res.p)?;
    write_dense(dir.join("K_reduced.mtx"), &res.k_reduced)?;
    write_dense(dir.join("K_full.mtx"), &res.k_full)?;
    write_json(
        dir.join(LQR_SUMMARY),
        &LqrSummary {
            order: res.p.nrows(),
            inputs: res.k_reduced.nrows(),
            n1: res.k_full.ncols(),
            residual_norm: res.residual_norm,
            residual_scale: res.residual_scale,
            closed_loop_abscissa: res.closed_loop_abscissa,
        },
    )
}

/// Full-order gain from an LQR bundle directory or a matrix file.
pub fn read_gain(path: impl AsRef<Path>) -> Result<RMat> {
    let path = path.as_ref();
    let file: PathBuf = if path.is_dir() {
        path.join("K_full.mtx")
    } else {
        path.to_path_buf()
    };
    read_dense(file)
}
