//! Acceptance suite at the reference resolution: n = 256, L = 2π,
//! y_levels = 256, Y = 2L, band limit 32, seed 42. Prints one PASS/FAIL line
//! per criterion and exits non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dtn_lab::cli::{run_experiment, Experiment, ExperimentConfig};
use dtn_lab::commutator::{
    calderon_commutator, dtn_hilbert_form, ensemble_sweep, frequency_scan, paper_literal_form,
    SweepConfig,
};
use dtn_lab::geometry::{build_map, extension_lemma21, smooth_sawtooth, verify_map, C0Policy, GraphDomain};
use dtn_lab::identities::{
    dahlberg_identity_check, key_identity_check, pressure_identity_check, refinement_study, TestField,
};
use dtn_lab::kernels::{fundamental_solution, kernel_residual, w_laplacian, SurfaceMesh};
use dtn_lab::measures::{carleson_norm, gradient_density, pressure_density, sample_solution, square_bound_report, GradedGrid};
use dtn_lab::spectral::{lipschitz_norm, random_band_limited, BoundaryField, BoundaryGrid, BumpSpec, ExtensionKind};
use dtn_lab::stokes::{apply_dtn, dtn_energy_check, dtn_symbol, residual_stokes, solve_stream};
use dtn_lab::Result;

const N: usize = 256;
const LEVELS: usize = 256;
const BAND: usize = 32;
const SEED: u64 = 42;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(checks: &[(&str, f64, &str, f64)]) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for &(name, value, rel, tol) in checks {
        let ok = match rel {
            "<=" => value <= tol,
            ">=" => value >= tol,
            "==" => value == tol,
            "finite" => value.is_finite(),
            _ => false,
        };
        pass &= ok;
        let bound = if rel == "finite" { "finite".to_string() } else { format!("{rel} {tol:e}") };
        parts.push(format!("{name}={value:.3e} ({bound}){}", if ok { "" } else { " FAILED" }));
    }
    Verdict {
        pass,
        detail: parts.join("; "),
    }
}

fn rng(stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(SEED);
    r.set_stream(stream);
    r
}

fn boundary() -> BoundaryGrid {
    BoundaryGrid::standard(N).unwrap()
}

fn grid() -> GradedGrid {
    GradedGrid::with_defaults(boundary(), LEVELS).unwrap()
}

fn relative_drift(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

fn solver_exactness() -> Result<Verdict> {
    let f = random_band_limited(boundary(), &mut rng(1), BAND, 2, true)?;
    let sol = solve_stream(&f)?;
    let points: Vec<(f64, f64)> = [0.01, 0.1, 0.5, 1.0, 4.0]
        .iter()
        .flat_map(|&y| (0..16).map(move |i| (TAU * i as f64 / 16.0 + 0.01, y)))
        .collect();
    let residual = residual_stokes(&sol, &points)?.relative();
    let trace = sol.eval_fields(0.0)?;
    let trace_err =
        trace.u1.max_abs_diff(&f.extract(0))?.max(trace.u2.max_abs_diff(&f.extract(1))?) / f.sup_norm();
    Ok(verdict(&[("stokes_residual", residual, "<=", 1e-10), ("trace_error", trace_err, "<=", 1e-10)]))
}

fn dtn_symbol_checks() -> Result<Verdict> {
    let zero = dtn_symbol(0.0).iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    // eigenvectors (1, i sgn k) for |k| and (1, −i sgn k) for 3|k|
    let mut eig_err = 0.0f64;
    let mut herm_err = 0.0f64;
    for k in (-128i32..=128).filter(|&k| k != 0) {
        let kappa = f64::from(k);
        let m = dtn_symbol(kappa);
        herm_err = herm_err.max((m[0][1] - m[1][0].conj()).norm() + m[0][0].im.abs() + m[1][1].im.abs());
        for (s, lambda) in [(1.0, kappa.abs()), (-1.0, 3.0 * kappa.abs())] {
            let v = [Complex64::new(1.0, 0.0), Complex64::new(0.0, s * kappa.signum())];
            for row in 0..2 {
                let mv = m[row][0] * v[0] + m[row][1] * v[1];
                eig_err = eig_err.max((mv - v[row] * lambda).norm() / kappa.abs());
            }
        }
    }
    let mut energy = 0.0f64;
    for trial in 0..20 {
        let f = random_band_limited(boundary(), &mut rng(100 + trial), BAND, 2, false)?;
        energy = energy.max(dtn_energy_check(&f)?.relative_gap());
    }
    let cosine = BoundaryField::vector_from_fn(boundary(), |x| [x.cos(), 0.0]);
    let c = dtn_energy_check(&cosine)?;
    Ok(verdict(&[
        ("M(0)", zero, "==", 0.0),
        ("hermitian_defect", herm_err, "<=", 1e-12),
        ("eigen_residual", eig_err, "<=", 1e-12),
        ("energy_gap", energy, "<=", 1e-10),
        ("cos_pairing_err", (c.boundary_pairing - TAU).abs(), "<=", 1e-10),
        ("cos_energy_err", (c.volume_energy - TAU).abs(), "<=", 1e-10),
    ]))
}

fn hilbert_equivalence() -> Result<Verdict> {
    let (mut same, mut literal) = (0.0f64, f64::INFINITY);
    for trial in 0..20 {
        let f = random_band_limited(boundary(), &mut rng(200 + trial), BAND, 2, true)?;
        let reference = apply_dtn(&f)?;
        let scale = reference.sup_norm();
        same = same.max(dtn_hilbert_form(&f)?.max_abs_diff(&reference)? / scale);
        literal = literal.min(paper_literal_form(&f)?.max_abs_diff(&reference)? / scale);
    }
    Ok(verdict(&[("hilbert_form_gap", same, "<=", 1e-12), ("literal_form_gap", literal, ">=", 1e-3)]))
}

fn commutator_boundedness() -> Result<Verdict> {
    let cfg = SweepConfig {
        seed: SEED,
        trials: 100,
        band_limit: BAND,
        n: N,
        ..SweepConfig::default()
    };
    let coarse = ensemble_sweep(&cfg)?;
    let fine = ensemble_sweep(&SweepConfig { n: 2 * N, ..cfg })?;
    let eta = BoundaryField::from_fn(boundary(), f64::cos);
    let scan = frequency_scan(&eta, 64)?;
    Ok(verdict(&[
        ("max_ratio", coarse.max, "finite", 0.0),
        ("n_drift", relative_drift(coarse.max, fine.max), "<=", 0.1),
        ("plateau", scan.plateau, "<=", 1.5),
    ]))
}

fn calderon() -> Result<Verdict> {
    let b = boundary();
    let eta = BoundaryField::from_fn(b, f64::cos);
    let ratios = (1..=64)
        .map(|k| calderon_commutator(&eta, &BoundaryField::from_fn(b, |x| (k as f64 * x).cos())).map(|c| c.ratio))
        .collect::<Result<Vec<_>>>()?;
    let upper = ratios[32..].iter().copied().fold(0.0, f64::max);
    let lower = ratios[..32].iter().copied().fold(0.0, f64::max);
    let constant = BoundaryField::from_fn(b, |_| -1.3);
    let g = random_band_limited(b, &mut rng(300), BAND, 1, true)?;
    Ok(verdict(&[
        ("max_ratio", upper.max(lower), "finite", 0.0),
        ("plateau", upper / lower, "<=", 1.5),
        ("constant_eta_ratio", calderon_commutator(&constant, &g)?.ratio, "==", 0.0),
    ]))
}

fn identity_inputs(trial: u64) -> Result<[BoundaryField; 3]> {
    let mut r = rng(400 + trial);
    Ok([
        random_band_limited(boundary(), &mut r, BAND, 2, false)?,
        random_band_limited(boundary(), &mut r, BAND, 2, false)?,
        random_band_limited(boundary(), &mut r, BAND, 1, true)?,
    ])
}

fn key_identity() -> Result<Verdict> {
    let grid = grid();
    let mut worst = 0.0f64;
    for trial in 0..10 {
        let [f, g, eta] = identity_inputs(trial)?;
        for kind in [ExtensionKind::Harmonic, ExtensionKind::mollifier()] {
            worst = worst.max(key_identity_check(&f, &g, &eta, &kind, &grid)?.relative);
        }
    }
    let [f, g, eta] = identity_inputs(0)?;
    let start = GradedGrid::with_defaults(boundary(), LEVELS / 8)?;
    let steps = refinement_study(&start, 4, |gr| key_identity_check(&f, &g, &eta, &ExtensionKind::Harmonic, gr))?;
    let order = steps.iter().filter_map(|s| s.order).fold(f64::INFINITY, f64::min);
    Ok(verdict(&[("max_relative", worst, "<=", 1e-6), ("min_order", order, ">=", 2.0)]))
}

fn pressure_and_dahlberg() -> Result<Verdict> {
    let grid = grid();
    let (mut pressure, mut dahlberg) = (0.0f64, 0.0f64);
    for trial in 0..10 {
        let [f, g, eta] = identity_inputs(trial)?;
        for kind in [ExtensionKind::Harmonic, ExtensionKind::mollifier()] {
            pressure = pressure.max(pressure_identity_check(&f, &g, &eta, &kind, &grid)?.relative);
            let v = TestField::gradient_times(&eta, kind, &g)?;
            dahlberg = dahlberg.max(dahlberg_identity_check(&g, &v, &grid)?.relative);
        }
    }
    let [f, g, _] = identity_inputs(0)?;
    let one = BoundaryField::from_fn(boundary(), |_| 1.0);
    let p = pressure_identity_check(&f, &g, &one, &ExtensionKind::Harmonic, &grid)?;
    let d = dahlberg_identity_check(&g, &TestField::zero(N), &grid)?;
    let trivial = p.lhs.abs() + p.rhs().abs() + d.lhs.abs() + d.rhs().abs();
    Ok(verdict(&[
        ("pressure_relative", pressure, "<=", 1e-6),
        ("dahlberg_relative", dahlberg, "<=", 1e-6),
        ("trivial_cases", trivial, "==", 0.0),
    ]))
}

fn square_functions() -> Result<Verdict> {
    let grid = grid();
    let cosine = BoundaryField::vector_from_fn(boundary(), |x| [x.cos(), 0.0]);
    let r = square_bound_report(&cosine, &grid, 2.0)?;
    let mut chain = 0.0f64;
    for trial in 0..20 {
        let f = random_band_limited(boundary(), &mut rng(500 + trial), BAND, 2, true)?;
        chain = chain.max(square_bound_report(&f, &grid, 2.0)?.pressure_chain());
    }
    Ok(verdict(&[
        ("grad_u_t_rel_err", (r.grad_u_t - PI).abs() / PI, "<=", 5e-3),
        ("q_t_rel_err", (r.q_t - PI).abs() / PI, "<=", 5e-3),
        ("max_grad_q_t3_over_q_t", chain, "<=", 1.0),
    ]))
}

fn carleson() -> Result<Verdict> {
    let coarse = grid();
    let fine = GradedGrid::new(BoundaryGrid::standard(2 * N)?, coarse.y_min(), coarse.y_max(), 2 * LEVELS)?;
    let f = random_band_limited(boundary(), &mut rng(600), BAND, 2, true)?;
    let norms = |grid: &GradedGrid| -> Result<(f64, f64)> {
        let slices = sample_solution(grid, &solve_stream(&f.resampled(*grid.boundary())?)?)?;
        Ok((
            carleson_norm(grid, &gradient_density(grid, &slices))?.norm,
            carleson_norm(grid, &pressure_density(grid, &slices))?.norm,
        ))
    };
    let (a, b) = (norms(&coarse)?, norms(&fine)?);
    let eta = random_band_limited(boundary(), &mut rng(601), BAND, 1, true)?;
    let eta = eta.scaled(1.0 / lipschitz_norm(&eta)?);
    let bump = BumpSpec::standard();
    let one = extension_lemma21(&eta, &bump, &coarse)?;
    let three = extension_lemma21(&eta.scaled(3.0), &bump, &coarse)?;
    let lin = (three.carleson_linear - 3.0 * one.carleson_linear).abs() / (3.0 * one.carleson_linear);
    let quad = (three.carleson_quadratic.sqrt() - 3.0 * one.carleson_quadratic.sqrt()).abs()
        / (3.0 * one.carleson_quadratic.sqrt());
    Ok(verdict(&[
        ("grad_u_norm", a.0, "finite", 0.0),
        ("q_norm", a.1, "finite", 0.0),
        ("grad_u_drift", relative_drift(a.0, b.0), "<=", 0.1),
        ("q_drift", relative_drift(a.1, b.1), "<=", 0.1),
        ("lemma_linear_homogeneity", lin, "<=", 1e-10),
        ("lemma_sqrt_quadratic_homogeneity", quad, "<=", 1e-10),
    ]))
}

fn kenig_stein() -> Result<Verdict> {
    let coarse = grid();
    let b2 = BoundaryGrid::standard(2 * N)?;
    let fine = GradedGrid::new(b2, coarse.y_min(), coarse.y_max(), LEVELS)?;
    let (mut min_phi_t, mut drift, mut largest) = (f64::INFINITY, 0.0f64, 0.0f64);
    for amplitude in [0.25, 0.5, 1.0] {
        let mut build = |b: BoundaryGrid, grid: &GradedGrid| -> Result<f64> {
            let domain = GraphDomain::new(smooth_sawtooth(b, amplitude, BAND))?;
            let map = build_map(domain, BumpSpec::standard(), C0Policy::Auto, grid)?;
            let rep = verify_map(&map, grid)?;
            min_phi_t = min_phi_t.min(rep.min_phi_t);
            Ok(rep.carleson)
        };
        let (a, b) = (build(boundary(), &coarse)?, build(b2, &fine)?);
        drift = drift.max(relative_drift(a, b));
        largest = largest.max(a);
    }
    let flat = build_map(
        GraphDomain::new(BoundaryField::zeros(boundary(), 1))?,
        BumpSpec::standard(),
        C0Policy::Auto,
        &coarse,
    )?;
    let mut flat_hessian = verify_map(&flat, &coarse)?.carleson;
    for t in [1e-3, 0.1, 1.0] {
        for d in flat.slice(t)? {
            flat_hessian = flat_hessian.max(d.hessian_norm());
        }
    }
    Ok(verdict(&[
        ("min_phi_t", min_phi_t, ">=", 0.125),
        ("hessian_carleson", largest, "finite", 0.0),
        ("carleson_drift", drift, "<=", 0.1),
        ("flat_hessian", flat_hessian, "==", 0.0),
    ]))
}

fn stokeslet() -> Result<Verdict> {
    let (g, _) = fundamental_solution(&[1.0, 0.0, 0.0])?;
    let x = [0.6, -0.5, 0.8];
    let worst = |h: f64| kernel_residual(&x, h).map(|r| r.momentum.max(r.divergence));
    let order = (worst(0.02)? / worst(0.01)?).log2().min((worst(0.01)? / worst(0.005)?).log2());
    let lap = |level: u32, h: f64| -> Result<f64> {
        let mesh = SurfaceMesh::icosphere(level);
        let density: Vec<[f64; 3]> = mesh.panels.iter().map(|p| [p.centroid[1], 1.0, p.centroid[0] * p.centroid[2]]).collect();
        Ok(w_laplacian(&mesh, &density, [0.0, 2.0, 0.0], h)?.iter().fold(0.0, |m: f64, v| m.max(v.abs())))
    };
    Ok(verdict(&[
        ("pde_order", order, ">=", 1.9),
        ("gamma11_err", (g[0][0] - 1.0 / (4.0 * PI)).abs(), "<=", 1e-12),
        ("laplacian_w_reduction", lap(3, 0.02)? / lap(4, 0.01)?, ">=", 3.0),
    ]))
}

fn determinism() -> Result<Verdict> {
    let mut mismatches = 0.0;
    for experiment in Experiment::ALL {
        let cfg = ExperimentConfig::defaults(experiment);
        let run = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool")
                .install(|| run_experiment(&cfg).tables.iter().map(|t| t.to_csv()).collect::<Result<Vec<_>>>())
        };
        if run(1)? != run(3)? {
            mismatches += 1.0;
        }
    }
    Ok(verdict(&[("experiments_with_differing_csv", mismatches, "==", 0.0)]))
}

type Criterion = (&'static str, fn() -> Result<Verdict>);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("solver exactness", solver_exactness),
        ("DtN symbol and energy identity", dtn_symbol_checks),
        ("Hilbert-form equivalence", hilbert_equivalence),
        ("commutator boundedness", commutator_boundedness),
        ("Calderón commutator", calderon),
        ("key identity", key_identity),
        ("pressure and Dahlberg identities", pressure_and_dahlberg),
        ("square-function closed forms and chain", square_functions),
        ("Carleson checks", carleson),
        ("Kenig-Stein map", kenig_stein),
        ("Stokeslet", stokeslet),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = check().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        if !v.pass {
            failures += 1;
        }
        println!(
            "criterion {:>2} {} {name} [{:.1} s]: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64(),
            v.detail
        );
    }
    println!(
        "acceptance: {} of 12 criteria pass in {:.1} s",
        12 - failures,
        start.elapsed().as_secs_f64()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
