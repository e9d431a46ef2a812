//! Command-line pipeline: generate, reduce, sigma, poles, lqr, simulate,
//! verify.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::bundle::{read_gain, read_json, write_json, write_lqr, SystemBundle};
use crate::io::csv_out::{write_gains, write_sigma, write_trajectory};
use crate::io::{read_rom, read_system, write_rom, write_system, RunConfig};
use crate::linalg::RMat;
use crate::lqr::{consistent_initial_state, functional_gains, simulate_closed_loop, solve_lqr, LqrProblem};
use crate::reduction::{reduce_index2, verify_interpolation, ReductionMode};
use crate::transfer::{finite_poles, sigma_sweep};

pub const CONFIG_ECHO: &str = "config.resolved.json";
pub const REPORT: &str = "interpolation_report.json";
pub const THREADS_ENV: &str = "DAEMOR_THREADS";

#[derive(Parser, Debug)]
#[command(name = "daemor", version, about = "Interpolatory reduction and LQR design for index-2 DAEs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a test system bundle.
    Generate(CommonArgs),
    /// Reduce a system and write the reduced model and interpolation report.
    Reduce(CommonArgs),
    /// Sigma plot data for a full and/or reduced model.
    Sigma(CommonArgs),
    /// Finite poles of a full and/or reduced model.
    Poles(CommonArgs),
    /// LQR design on a reduced model and lift of the gain.
    Lqr(CommonArgs),
    /// Closed-loop implicit-Euler simulation of the full model.
    Simulate(CommonArgs),
    /// Interpolation residuals of a reduced model against its full model.
    Verify(CommonArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Run configuration (JSON); built-in demo defaults when absent.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Full-order system bundle; generated from the config when absent.
    #[arg(long)]
    pub bundle: Option<PathBuf>,
    /// Reduced-model bundle.
    #[arg(long)]
    pub rom: Option<PathBuf>,
    /// Gain: an LQR output directory or a matrix file.
    #[arg(long)]
    pub gain: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the run seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the reduction mode (petrov_galerkin | galerkin).
    #[arg(long)]
    pub mode: Option<ReductionMode>,
}

/// Error payload written to stderr.
#[derive(Serialize)]
pub struct ErrorReport<'a> {
    pub code: &'a str,
    pub message: String,
}

/// Configures the global thread pool from `DAEMOR_THREADS`.
pub fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Config(format!("{THREADS_ENV} must be positive")));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    Ok(())
}

fn load_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::read(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    cfg.resolve()
}

fn prepare_out(args: &CommonArgs, cfg: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let path = args.out.join(CONFIG_ECHO);
    std::fs::write(&path, cfg.to_json()).map_err(|e| Error::io(&path, e))
}

fn system(args: &CommonArgs, cfg: &RunConfig) -> Result<SystemBundle> {
    match &args.bundle {
        Some(dir) => read_system(dir),
        None => {
            let (system, geometry) = cfg.generator.build(cfg.seed)?;
            let manifest = write_system(
                args.out.join("system"),
                &system,
                Some(serde_json::to_value(&cfg.generator)?),
                Some(cfg.seed),
                geometry.as_ref(),
            )?;
            Ok(SystemBundle {
                system,
                manifest,
                geometry,
            })
        }
    }
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref().ok_or_else(|| Error::Config(format!("--{flag} is required")))
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate(a) => generate(&a),
        Command::Reduce(a) => reduce(&a),
        Command::Sigma(a) => sigma(&a),
        Command::Poles(a) => poles(&a),
        Command::Lqr(a) => lqr(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Verify(a) => verify(&a),
    }
}

fn generate(a: &CommonArgs) -> Result<()> {
    let cfg = load_config(a)?;
    prepare_out(a, &cfg)?;
    let (sys, geom) = cfg.generator.build(cfg.seed)?;
    write_system(
        &a.out,
        &sys,
        Some(serde_json::to_value(&cfg.generator)?),
        Some(cfg.seed),
        geom.as_ref(),
    )?;
    Ok(())
}

fn reduce(a: &CommonArgs) -> Result<()> {
    let cfg = load_config(a)?;
    prepare_out(a, &cfg)?;
    let sys = system(a, &cfg)?.system;
    let data = cfg.interpolation_data(sys.inputs(), sys.outputs())?;
    let rom = reduce_index2(&sys, &data, &cfg.reduction_options())?;
    write_rom(a.out.join("rom"), &rom)?;
    let report = verify_interpolation(&sys, &rom, &data)?;
    write_json(a.out.join(REPORT), &report)
}

fn verify(a: &CommonArgs) -> Result<()> {
    let cfg = load_config(a)?;
    prepare_out(a, &cfg)?;
    let rom = read_rom(require(&a.rom, "rom")?)?;
    let sys = system(a, &cfg)?.system;
    let data = cfg.interpolation_data(sys.inputs(), sys.outputs())?;
    let report = verify_interpolation(&sys, &rom, &data)?;
    write_json(a.out.join(REPORT), &report)
}

fn sigma(a: &CommonArgs) -> Result<()> {
    let cfg = load_config(a)?;
    if a.bundle.is_none() && a.rom.is_none() {
        return Err(Error::Config("sigma needs --bundle and/or --rom".into()));
    }
    prepare_out(a, &cfg)?;
    let s = &cfg.sweep;
    if let Some(dir) = &a.bundle {
        let sys = read_system(dir)?.system;
        let resp = sigma_sweep(&sys, s.omega_min, s.omega_max, s.count, s.spacing)?;
        write_sigma(a.out.join("sigma_full.csv"), &resp)?;
    }
    if let Some(dir) = &a.rom {
        let rom = read_rom(dir)?;
        let resp = sigma_sweep(&rom, s.omega_min, s.omega_max, s.count, s.spacing)?;
        write_sigma(a.out.join("sigma_reduced.csv"), &resp)?;
    }
    Ok(())
}

fn poles(a: &CommonArgs) -> Result<()> {
    if a.bundle.is_none() && a.rom.is_none() {
        return Err(Error::Config("poles needs --bundle and/or --rom".into()));
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    if let Some(dir) = &a.bundle {
        let sys = read_system(dir)?.system;
        write_json(a.out.join("poles_full.json"), &finite_poles(&sys)?)?;
    }
    if let Some(dir) = &a.rom {
        let rom = read_rom(dir)?;
        write_json(a.out.join("poles_reduced.json"), &finite_poles(&rom)?)?;
    }
    Ok(())
}

fn lqr(a: &CommonArgs) -> Result<()> {
    let cfg = load_config(a)?;
    prepare_out(a, &cfg)?;
    let rom = read_rom(require(&a.rom, "rom")?)?;
    let m = rom.inputs();
    let prob = LqrProblem {
        rom,
        r: RMat::identity(m, m) * faer::Scale(cfg.lqr_weight),
    };
    let res = solve_lqr(&prob)?;
    write_lqr(a.out.join("lqr"), &res)?;
    if let Some(dir) = &a.bundle {
        if let Some(geom) = read_system(dir)?.geometry {
            write_gains(a.out.join("functional_gains.csv"), &functional_gains(&res.k_full, &geom)?)?;
        }
    }
    Ok(())
}

/// Summary written next to the trajectory.
#[derive(Serialize, serde::Deserialize, Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub steps: usize,
    pub dt: f64,
    pub t_final: f64,
    pub closed_loop: bool,
    pub x_norm_initial: f64,
    pub x_norm_final: f64,
    pub max_constraint_residual: f64,
}

/// Seeded standard-normal field projected onto `ker A21`.
pub fn random_initial_state(sys: &crate::system::Index2System, seed: u64) -> Result<RMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = RMat::from_fn(sys.n1(), 1, |_, _| StandardNormal.sample(&mut rng));
    consistent_initial_state(sys, &x)
}

fn simulate(a: &CommonArgs) -> Result<()> {
    let cfg = load_config(a)?;
    prepare_out(a, &cfg)?;
    let sys = system(a, &cfg)?.system;
    let (k, closed_loop) = match &a.gain {
        Some(p) => (read_gain(p)?, true),
        None => (RMat::zeros(sys.inputs(), sys.n1()), false),
    };
    let x0 = random_initial_state(&sys, cfg.simulation.initial_seed.unwrap_or(cfg.seed))?;
    let tr = simulate_closed_loop(&sys, &k, &x0, cfg.simulation.dt, cfg.simulation.t_final)?;
    write_trajectory(a.out.join("trajectory.csv"), &tr)?;
    write_json(
        a.out.join("simulation.json"),
        &SimulationSummary {
            steps: tr.t.len() - 1,
            dt: cfg.simulation.dt,
            t_final: cfg.simulation.t_final,
            closed_loop,
            x_norm_initial: tr.x_norm[0],
            x_norm_final: *tr.x_norm.last().unwrap_or(&0.0),
            max_constraint_residual: tr.constraint_residual.iter().copied().fold(0.0, f64::max),
        },
    )
}

/// Reads a previously written simulation summary.
pub fn read_summary(path: impl AsRef<Path>) -> Result<SimulationSummary> {
    read_json(path)
}
