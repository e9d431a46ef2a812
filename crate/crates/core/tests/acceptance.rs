//! Acceptance suite. Runs every criterion at its pinned tolerance, prints one
//! PASS/FAIL line per criterion and exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use daemor::interpolation::InterpolationData;
use daemor::io::config::GeneratorConfig;
use daemor::io::matrix::{format_matrix, parse_matrix};
use daemor::io::{read_rom, write_rom, RunConfig};
use daemor::linalg::{max_singular_value_c, to_complex, RMat, SparseMatrix};
use daemor::lqr::{
    closed_loop_system, consistent_initial_state, simulate_closed_loop, solve_lqr, LqrProblem,
};
use daemor::reduction::{
    reduce_index2, reduce_via_projectors, verify_interpolation, ReducedModel, ReductionMode,
    ReductionOptions,
};
use daemor::system::{embed_index2, polynomial_part, projectors_index2, Index2System};
use daemor::testbed::planted::demo_poles;
use daemor::testbed::{generate_random, RandomSpec};
use daemor::transfer::{eval_transfer, finite_poles, frequency_grid, pencil_poles, sweep_at, Spacing};
use faer::prelude::*;
use num_complex::Complex64 as c64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// `count` random conjugate pairs in the right half plane.
fn random_pairs(rng: &mut ChaCha8Rng, count: usize) -> Vec<c64> {
    let mut pts = Vec::with_capacity(2 * count);
    for _ in 0..count {
        let z = c64::new(rng.random_range(0.05..3.0), rng.random_range(0.1..5.0));
        pts.push(z);
        pts.push(z.conj());
    }
    pts
}

fn rel_err(a: &daemor::linalg::CMat, b: &daemor::linalg::CMat) -> f64 {
    max_singular_value_c((a - b).as_ref()) / max_singular_value_c(a.as_ref())
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..25 {
        let n1 = rng.random_range(30..=300);
        let spec = RandomSpec {
            n1,
            n2: n1 / 4,
            inputs: rng.random_range(1..=3),
            outputs: rng.random_range(1..=3),
            with_c2: k % 2 == 1,
            with_d: k % 3 == 0,
            row_nnz: 4,
        };
        let pts = random_pairs(&mut rng, 5);
        let run = || -> daemor::Result<f64> {
            let sys = generate_random(&spec, 1000 + k)?;
            let data = InterpolationData::with_random_directions(pts, spec.inputs, spec.outputs, k)?;
            let rom = reduce_index2(&sys, &data, &ReductionOptions::default())?;
            let rep = verify_interpolation(&sys, &rom, &data)?;
            Ok(rep.max_left.max(rep.max_right).max(rep.max_hermite.unwrap_or(f64::INFINITY)))
        };
        match run() {
            Ok(r) => {
                worst = worst.max(r);
                if r > 1e-8 {
                    failures.push(format!("system {k} (n1 = {n1}) residual {r:.2e}"));
                }
            }
            Err(e) => failures.push(format!("system {k}: {e}")),
        }
    }
    let dt = t0.elapsed();
    let pass = failures.is_empty() && dt < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "25 systems, max residual {worst:.2e} (tol 1e-8), {:.1} s (limit 60 s){}",
            dt.as_secs_f64(),
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let probes = frequency_grid(1e-2, 1e2, 20, Spacing::Log).unwrap();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for k in 0..10u64 {
        let n1 = rng.random_range(20..=200);
        let spec = RandomSpec {
            n1,
            n2: n1 / 4,
            inputs: 2,
            outputs: 2,
            with_c2: k % 2 == 1,
            with_d: k % 2 == 0,
            row_nnz: 4,
        };
        let pts = random_pairs(&mut rng, 3);
        let run = || -> daemor::Result<f64> {
            let sys = generate_random(&spec, 2000 + k)?;
            let data = InterpolationData::with_random_directions(pts.clone(), 2, 2, k)?;
            let rom2 = reduce_index2(&sys, &data, &ReductionOptions::default())?;
            let emb = embed_index2(&sys)?;
            let projs = projectors_index2(&sys)?;
            let rom1 = reduce_via_projectors(&emb, &projs, &data, 1e-10)?;
            let mut w: f64 = 0.0;
            for &om in &probes {
                let s = c64::new(0.0, om);
                w = w.max(rel_err(&eval_transfer(&rom1, s)?, &eval_transfer(&rom2, s)?));
            }
            Ok(w)
        };
        match run() {
            Ok(r) => {
                worst = worst.max(r);
                if r > 1e-8 {
                    failures.push(format!("system {k} (n1 = {n1}) gap {r:.2e}"));
                }
            }
            Err(e) => failures.push(format!("system {k}: {e}")),
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "10 systems x 20 probes, max relative gap {worst:.2e} (tol 1e-8){}",
            if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
        ),
    )
}

fn criterion_3() -> Outcome {
    let run = || -> daemor::Result<Outcome> {
        let spec = RandomSpec {
            n1: 80,
            n2: 20,
            inputs: 2,
            outputs: 3,
            with_c2: true,
            with_d: true,
            row_nnz: 4,
        };
        let sys = generate_random(&spec, 303)?;
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        let data = InterpolationData::with_random_directions(random_pairs(&mut rng, 3), 2, 3, 3)?;
        let rom = reduce_index2(&sys, &data, &ReductionOptions::default())?;
        let dt = to_complex(rom.dr().as_ref());
        let dnorm = max_singular_value_c(dt.as_ref());
        let errs: Vec<f64> = [1e4, 1e6, 1e8]
            .iter()
            .map(|&s| {
                let s = c64::new(s, 0.0);
                Ok(max_singular_value_c((eval_transfer(&sys, s)? - eval_transfer(&rom, s)?).as_ref()))
            })
            .collect::<daemor::Result<_>>()?;
        let monotone = errs[0] > errs[1] && errs[1] > errs[2];
        let tail = max_singular_value_c((eval_transfer(&rom, c64::new(1e8, 0.0))? - &dt).as_ref()) / dnorm;
        let poly = polynomial_part(&sys)?;
        let dmatch = (rom.dr() - &poly).norm_l2() / poly.norm_l2();
        // independent oracle: Richardson limit of the dense embedded G(s)
        let emb = embed_index2(&sys)?;
        let (g1, g2) = (eval_transfer(&emb, c64::new(1e5, 0.0))?, eval_transfer(&emb, c64::new(2e5, 0.0))?);
        let limit = &g2 * Scale(c64::new(2.0, 0.0)) - &g1;
        let oracle = max_singular_value_c((&limit - &dt).as_ref()) / dnorm;
        let pass = monotone
            && tail <= 1e-6
            && dmatch <= 1e-12
            && oracle <= 1e-8
            && sys.c2().norm_max() > 0.0
            && sys.d().norm_max() > 0.0;
        Ok(outcome(
            pass,
            format!(
                "||G-Gr|| at 1e4/1e6/1e8 = {:.2e}/{:.2e}/{:.2e} (monotone: {monotone}), ||Gr(1e8)-D~||/||D~|| = {tail:.2e} (tol 1e-6), D~ vs polynomial part {dmatch:.2e} (tol 1e-12), D~ vs dense extrapolated limit {oracle:.2e} (tol 1e-8)",
                errs[0], errs[1], errs[2]
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let run = || -> daemor::Result<Outcome> {
        let (sys, _) = GeneratorConfig::toy_oseen().build(0)?;
        let pts = InterpolationData::log_spaced_pairs(1e-2, 1e2, 10)?;
        let data = InterpolationData::with_unit_directions(pts, sys.inputs(), sys.outputs())?;
        let rom = reduce_index2(&sys, &data, &ReductionOptions::new(ReductionMode::Galerkin))?;
        let omegas = frequency_grid(1e-2, 1e2, 400, Spacing::Log)?;
        let full = sweep_at(&sys, &omegas);
        let red = sweep_at(&rom, &omegas);
        let mut worst: f64 = 0.0;
        let mut worst_sigma: f64 = 0.0;
        let mut missing = full.failures.len() + red.failures.len();
        for k in 0..omegas.len() {
            match (&full.values[k], &red.values[k]) {
                (Some(g), Some(gr)) => {
                    worst = worst.max(rel_err(g, gr));
                    let (a, b) = (full.norms[k].unwrap(), red.norms[k].unwrap());
                    worst_sigma = worst_sigma.max((a - b).abs() / a);
                }
                _ => missing += 1,
            }
        }
        let dt = t0.elapsed();
        let pass = rom.order() <= 20 && missing == 0 && worst <= 1e-3 && dt < Duration::from_secs(120);
        Ok(outcome(
            pass,
            format!(
                "n1 = {}, r = {} (limit 20), max ||G-Gr||/||G|| over 400 frequencies = {worst:.2e} (tol 1e-3; sigma-curve error {worst_sigma:.2e}), {:.1} s (limit 120 s)",
                sys.n1(),
                rom.order(),
                dt.as_secs_f64()
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

fn demo() -> daemor::Result<(Index2System, ReducedModel)> {
    let cfg = RunConfig::default().resolve()?;
    let (sys, _) = cfg.generator.build(cfg.seed)?;
    let data = cfg.interpolation_data(sys.inputs(), sys.outputs())?;
    let rom = reduce_index2(&sys, &data, &cfg.reduction_options())?;
    Ok((sys, rom))
}

fn criterion_5() -> Outcome {
    let run = || -> daemor::Result<Outcome> {
        let (sys, rom) = demo()?;
        let rep = finite_poles(&rom)?;
        let planted = demo_poles();
        let unstable: Vec<c64> = rep.finite_poles.iter().copied().filter(|z| z.re > 0.0).collect();
        let mut worst: f64 = 0.0;
        for p in &planted {
            let d = unstable.iter().map(|z| (z - p).norm() / p.norm()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
        // dense oracle: the planted values are eigenvalues of the full pencil
        let emb = embed_index2(&sys)?;
        let mut oracle: f64 = 0.0;
        for p in &planted {
            let pencil = to_complex(emb.e().as_ref()) * Scale(*p) - to_complex(emb.a().as_ref());
            let sv = pencil.as_ref().singular_values().map_err(|_| daemor::Error::Svd)?;
            oracle = oracle.max(sv[sv.len() - 1] / sv[0]);
        }
        let pass = rep.unstable_count == 2 && worst <= 1e-4 && oracle <= 1e-10;
        Ok(outcome(
            pass,
            format!(
                "r = {}, unstable_count = {}, max relative pole error {worst:.2e} (tol 1e-4), full-pencil sigma_min/sigma_max at planted poles {oracle:.2e}",
                rom.order(),
                rep.unstable_count
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

fn criterion_6() -> Outcome {
    let run = || -> daemor::Result<Outcome> {
        let one = |v: f64| RMat::from_fn(1, 1, |_, _| v);
        let scalar = ReducedModel::new(
            one(1.0),
            one(1.0),
            one(1.0),
            one(1.0),
            one(0.0),
            one(1.0),
            one(1.0),
            ReductionMode::PetrovGalerkin,
        )?;
        let s = solve_lqr(&LqrProblem { rom: scalar, r: one(1.0) })?;
        let exact = 1.0 + 2f64.sqrt();
        let scalar_err = (s.p[(0, 0)] - exact).abs() / exact;

        let (sys, rom) = demo()?;
        let mut worst_res = s.residual_norm / s.residual_scale;
        let mut reduced_abscissa = s.closed_loop_abscissa;
        let mut full_abscissa = f64::NEG_INFINITY;
        let mut qz_abscissa = f64::NEG_INFINITY;
        for w in [1.0, 10.0] {
            let res = solve_lqr(&LqrProblem {
                rom: rom.clone(),
                r: one(w),
            })?;
            worst_res = worst_res.max(res.residual_norm / res.residual_scale);
            reduced_abscissa = reduced_abscissa.max(res.closed_loop_abscissa);
            let cl = closed_loop_system(&sys, &res.k_full)?;
            full_abscissa = full_abscissa.max(finite_poles(&cl)?.spectral_abscissa());
            // dense oracle: QZ on the embedded closed-loop pencil
            let emb = embed_index2(&cl)?;
            qz_abscissa = qz_abscissa.max(pencil_poles(emb.a(), emb.e())?.spectral_abscissa());
        }
        let pass = scalar_err <= 1e-12 && worst_res <= 1e-8 && reduced_abscissa < 0.0 && full_abscissa < 0.0 && qz_abscissa < 0.0;
        Ok(outcome(
            pass,
            format!(
                "scalar P error {scalar_err:.2e} (tol 1e-12), max relative Riccati residual {worst_res:.2e} (tol 1e-8), reduced abscissa {reduced_abscissa:.3e}, full-order abscissa {full_abscissa:.3e} (QZ oracle {qz_abscissa:.3e})"
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

fn criterion_7() -> Outcome {
    let run = || -> daemor::Result<Outcome> {
        let (sys, rom) = demo()?;
        let res = solve_lqr(&LqrProblem {
            rom,
            r: RMat::identity(1, 1),
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(707);
        let x = RMat::from_fn(sys.n1(), 1, |_, _| StandardNormal.sample(&mut rng));
        let x0 = consistent_initial_state(&sys, &x)?;
        let (dt, t_final) = (0.05, 100.0);
        let open = simulate_closed_loop(&sys, &RMat::zeros(1, sys.n1()), &x0, dt, t_final)?;
        let closed = simulate_closed_loop(&sys, &res.k_full, &x0, dt, t_final)?;
        let max_res = open
            .constraint_residual
            .iter()
            .chain(closed.constraint_residual.iter())
            .copied()
            .fold(0.0, f64::max);
        let growth = open.x_norm.last().unwrap() / open.x_norm[0];
        let decay = closed.x_norm.last().unwrap() / closed.x_norm[0];
        let pass = max_res <= 1e-9 && growth > 1.0 && decay <= 1e-3;
        Ok(outcome(
            pass,
            format!(
                "{} steps, max constraint residual {max_res:.2e} (tol 1e-9), open loop ||x(T)||/||x(0)|| = {growth:.3e} (> 1), closed loop = {decay:.3e} (tol 1e-3)",
                closed.t.len() - 1
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

fn files(dir: &Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_8() -> Outcome {
    let run = || -> Result<Outcome, String> {
        let bin = env!("CARGO_BIN_EXE_daemor");
        let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
        let a = tmp.path().join("a");
        let b = tmp.path().join("b");
        let status = |args: &[&str]| -> Result<(), String> {
            let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
            if out.status.success() {
                Ok(())
            } else {
                Err(String::from_utf8_lossy(&out.stderr).into_owned())
            }
        };
        status(&["reduce", "--out", a.to_str().unwrap()])?;
        let echo = a.join("config.resolved.json");
        status(&["reduce", "--config", echo.to_str().unwrap(), "--out", b.to_str().unwrap()])?;
        let fa = files(&a);
        let mut differing = Vec::new();
        if fa != files(&b) {
            differing.push("file sets".to_string());
        }
        for f in &fa {
            if std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() {
                differing.push(f.display().to_string());
            }
        }
        let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/demo_interpolation_report.json");
        let golden_match = std::fs::read(&golden).ok() == std::fs::read(a.join("interpolation_report.json")).ok();

        // value-exact matrix round trips
        let mut rng = ChaCha8Rng::seed_from_u64(808);
        let mut exact = true;
        for _ in 0..20 {
            let (r, c) = (rng.random_range(1..12), rng.random_range(1..12));
            let m = RMat::from_fn(r, c, |_, _| {
                let v: f64 = StandardNormal.sample(&mut rng);
                v * 10f64.powi(rng.random_range(-300..300))
            });
            let back = parse_matrix(&format_matrix(&SparseMatrix::from_dense(m.as_ref())))
                .map_err(|e| e.to_string())?
                .to_dense();
            exact &= (0..r).all(|i| (0..c).all(|j| m[(i, j)].to_bits() == back[(i, j)].to_bits()));
        }
        let rom = read_rom(a.join("rom")).map_err(|e| e.to_string())?;
        let again = tmp.path().join("rom2");
        write_rom(&again, &rom).map_err(|e| e.to_string())?;
        let rom2 = read_rom(&again).map_err(|e| e.to_string())?;
        exact &= rom2.ar() == rom.ar() && rom2.v() == rom.v() && rom2.dr() == rom.dr();
        let pass = differing.is_empty() && golden_match && exact;
        Ok(outcome(
            pass,
            format!(
                "{} output files byte-identical on re-run from echoed config: {}, golden report identical: {golden_match}, matrix round trips value-exact: {exact}",
                fa.len(),
                if differing.is_empty() { "yes".to_string() } else { format!("no ({})", differing.join(", ")) }
            ),
        ))
    };
    run().unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    // `cargo test -- --list` and filtered runs probe the harness
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let criteria: [Criterion; 8] = [
        ("bitangential Hermite interpolation", criterion_1),
        ("projector and saddle reductions agree", criterion_2),
        ("polynomial part preserved", criterion_3),
        ("toy Oseen Galerkin recipe", criterion_4),
        ("unstable pole capture", criterion_5),
        ("LQR correctness and full-order stabilization", criterion_6),
        ("closed-loop simulation", criterion_7),
        ("determinism and I/O", criterion_8),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t0 = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} [{name}]: {verdict} ({}; {:.1} s)",
            k + 1,
            o.detail,
            t0.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
