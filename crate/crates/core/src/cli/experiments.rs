use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Experiment, ExperimentConfig};
use super::report::{num, CheckRecord, Plot, Table};
use crate::commutator::{
    calderon_commutator, dtn_hilbert_form, ensemble_sweep, frequency_scan, paper_literal_form, SweepConfig,
};
use crate::error::Result;
use crate::geometry::{build_map, extension_lemma21, smooth_sawtooth, verify_map, GraphDomain};
use crate::identities::{
    dahlberg_identity_check, key_identity_check, pressure_identity_check, refinement_study, IdentityReport, TestField,
};
use crate::kernels::{fundamental_solution, kernel_residual, w_field, w_laplacian, SurfaceMesh};
use crate::measures::{carleson_norm, gradient_density, pressure_density, sample_solution, square_bound_report, GradedGrid};
use crate::spectral::{
    apply_multiplier, lipschitz_norm, random_band_limited, BoundaryField, BoundaryGrid, BumpSpec, ExtensionKind,
    SymbolMatrix,
};
use crate::stokes::{
    apply_dtn, dtn_multiplier, dtn_symbol, paper_literal_multiplier, paper_literal_symbol, residual_stokes,
    solve_stream,
};

/// Records, tables and plots accumulated by one experiment.
#[derive(Default)]
pub(crate) struct Collected {
    pub records: Vec<CheckRecord>,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
}

impl Collected {
    /// Runs one group of checks; if the computation fails, the group is
    /// recorded as a single failed check carrying the error.
    fn section(&mut self, name: &str, body: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = body(self) {
            self.records.push(CheckRecord::failed(name, &e));
        }
    }

    fn check(&mut self, record: CheckRecord) {
        self.records.push(record);
    }
}

pub(crate) fn dispatch(cfg: &ExperimentConfig) -> Collected {
    let mut out = Collected::default();
    match cfg.experiment {
        Experiment::DtnVerify => dtn_verify(cfg, &mut out),
        Experiment::CommutatorSweep => commutator_sweep(cfg, &mut out),
        Experiment::IdentityCheck => identity_check(cfg, &mut out),
        Experiment::SquareReport => square_report(cfg, &mut out),
        Experiment::CarlesonReport => carleson_report(cfg, &mut out),
        Experiment::KenigSteinCheck => kenig_stein_check(cfg, &mut out),
        Experiment::KernelCheck => kernel_check(cfg, &mut out),
    }
    out
}

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn boundary(cfg: &ExperimentConfig) -> Result<BoundaryGrid> {
    BoundaryGrid::new(cfg.n, cfg.period)
}

fn graded(cfg: &ExperimentConfig, b: BoundaryGrid, panels: usize) -> Result<GradedGrid> {
    GradedGrid::new(b, cfg.period / (4.0 * cfg.n as f64), cfg.y_max, panels)
}

fn relative_drift(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs())
}

/// Largest absolute-value entry of a slice; NaN propagates.
fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |m: f64, x| if x.is_nan() || m.is_nan() { f64::NAN } else { m.max(x) })
}

/// Upper-half maximum over lower-half maximum of a sequence indexed 1..=len.
fn plateau(ratios: &[f64]) -> f64 {
    let half = ratios.len() / 2;
    max_of(ratios[half..].iter().copied()) / max_of(ratios[..half].iter().copied())
}

fn eigenvalues(m: &SymbolMatrix) -> [Complex64; 2] {
    let tr = (m[0][0] + m[1][1]) * 0.5;
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = (tr * tr - det).sqrt();
    let (a, b) = (tr - disc, tr + disc);
    if a.re <= b.re {
        [a, b]
    } else {
        [b, a]
    }
}

fn dtn_verify(cfg: &ExperimentConfig, out: &mut Collected) {
    let symbol = if cfg.paper_literal_symbol { paper_literal_symbol } else { dtn_symbol };
    let multiplier = if cfg.paper_literal_symbol { paper_literal_multiplier() } else { dtn_multiplier() };
    out.section("symbol", |out| {
        let b = boundary(cfg)?;
        let zero = symbol(0.0);
        out.check(CheckRecord::at_most(
            "symbol_at_zero",
            max_of(zero.iter().flatten().map(|z| z.norm())),
            0.0,
        ));
        let k_max = 128.min(cfg.n as i64 / 2 - 1);
        let mut table = Table::new("symbol", &["k", "kappa", "lambda_min", "lambda_max", "hermitian_defect"]);
        let (mut herm, mut eig) = (0.0f64, 0.0f64);
        let mut small = Vec::new();
        let mut large = Vec::new();
        for k in (-k_max..=k_max).filter(|&k| k != 0) {
            let kappa = b.wavenumber(k);
            let m = symbol(kappa);
            let defect = ((m[0][1] - m[1][0].conj()).norm() + m[0][0].im.abs() + m[1][1].im.abs()) / kappa.abs();
            let [lo, hi] = eigenvalues(&m);
            let err = ((lo - kappa.abs()).norm() + (hi - 3.0 * kappa.abs()).norm()) / kappa.abs();
            herm = herm.max(defect);
            eig = eig.max(err);
            table.push(vec![k.to_string(), num(kappa), num(lo.re), num(hi.re), num(defect)]);
            if k > 0 {
                small.push((k as f64, lo.norm()));
                large.push((k as f64, hi.norm()));
            }
        }
        out.check(CheckRecord::at_most("symbol_hermitian_defect", herm, 1e-12));
        out.check(CheckRecord::at_most("symbol_eigenvalue_error", eig, 1e-12));
        out.tables.push(table);
        out.plots.push(Plot {
            name: "eigenvalues".into(),
            title: "symbol eigenvalues".into(),
            x_label: "k".into(),
            y_label: "|λ|".into(),
            log_y: false,
            series: vec![("λ_min".into(), small), ("λ_max".into(), large)],
        });
        Ok(())
    });
    out.section("energy_identity", |out| {
        let b = boundary(cfg)?;
        let mut table = Table::new("energy", &["trial", "boundary_pairing", "volume_energy", "relative_gap"]);
        let mut worst = 0.0f64;
        for trial in 0..20u64 {
            let f = random_band_limited(b, &mut rng(cfg.seed, trial), cfg.band_limit, 2, false)?;
            let pairing = apply_multiplier(&multiplier, &f)?.pairing(&f)?;
            let energy = solve_stream(&f)?.closed_form_velocity_gradient(0);
            let gap = (pairing - energy).abs() / pairing.abs().max(energy.abs());
            worst = worst.max(gap);
            table.push(vec![trial.to_string(), num(pairing), num(energy), num(gap)]);
        }
        out.check(CheckRecord::at_most("energy_identity_max_relative", worst, 1e-10));
        out.tables.push(table);
        let w = 2.0 * PI / cfg.period;
        let f = BoundaryField::vector_from_fn(b, |x| [(w * x).cos(), 0.0]);
        let pairing = apply_multiplier(&multiplier, &f)?.pairing(&f)?;
        let energy = solve_stream(&f)?.closed_form_velocity_gradient(0);
        out.check(CheckRecord::at_most("cosine_pairing_error", (pairing - 2.0 * PI).abs(), 1e-10));
        out.check(CheckRecord::at_most("cosine_energy_error", (energy - 2.0 * PI).abs(), 1e-10));
        Ok(())
    });
    out.section("solver", |out| {
        let b = boundary(cfg)?;
        let f = random_band_limited(b, &mut rng(cfg.seed, 1000), cfg.band_limit, 2, true)?;
        let sol = solve_stream(&f)?;
        let l = cfg.period;
        let points: Vec<(f64, f64)> = [l / 64.0, l / 8.0, l / 2.0, l]
            .iter()
            .flat_map(|&y| (0..8).map(move |i| (l * i as f64 / 8.0, y)))
            .collect();
        out.check(CheckRecord::at_most(
            "stokes_residual_relative",
            residual_stokes(&sol, &points)?.relative(),
            1e-10,
        ));
        let trace = sol.eval_fields(0.0)?;
        let err = trace.u1.max_abs_diff(&f.extract(0))?.max(trace.u2.max_abs_diff(&f.extract(1))?) / f.sup_norm();
        out.check(CheckRecord::at_most("boundary_trace_relative", err, 1e-10));
        Ok(())
    });
    out.section("hilbert_form", |out| {
        let b = boundary(cfg)?;
        let (mut same, mut literal) = (0.0f64, f64::INFINITY);
        for trial in 0..20u64 {
            let f = random_band_limited(b, &mut rng(cfg.seed, 2000 + trial), cfg.band_limit, 2, true)?;
            let reference = apply_dtn(&f)?;
            let scale = reference.sup_norm();
            same = same.max(dtn_hilbert_form(&f)?.max_abs_diff(&reference)? / scale);
            literal = literal.min(paper_literal_form(&f)?.max_abs_diff(&reference)? / scale);
        }
        out.check(CheckRecord::at_most("hilbert_form_relative", same, 1e-12));
        out.check(CheckRecord::at_least("literal_form_disagreement", literal, 1e-3));
        Ok(())
    });
}

fn commutator_sweep(cfg: &ExperimentConfig, out: &mut Collected) {
    out.section("sweep", |out| {
        let sweep = SweepConfig {
            seed: cfg.seed,
            trials: cfg.trials,
            band_limit: cfg.band_limit,
            n: cfg.n,
            period: cfg.period,
            p: cfg.p,
            eta_scale: 1.0,
            paper_literal: cfg.paper_literal_symbol,
        };
        let coarse = ensemble_sweep(&sweep)?;
        let fine = ensemble_sweep(&SweepConfig { n: 2 * cfg.n, ..sweep })?;
        let mut table = Table::new("trials", &["trial", "ratio", "ratio_refined"]);
        for (i, (a, b)) in coarse.ratios.iter().zip(&fine.ratios).enumerate() {
            table.push(vec![i.to_string(), num(*a), num(*b)]);
        }
        out.tables.push(table);
        let mut q = Table::new("quantiles", &["level", "value", "value_refined"]);
        for (a, b) in coarse.quantiles.iter().zip(&fine.quantiles) {
            q.push(vec![num(a.level), num(a.value), num(b.value)]);
        }
        out.tables.push(q);
        out.check(CheckRecord::finite("max_ratio", coarse.max));
        out.check(CheckRecord::at_most("max_ratio_refinement_drift", relative_drift(coarse.max, fine.max), 0.1));
        Ok(())
    });
    out.section("frequency_scan", |out| {
        let b = boundary(cfg)?;
        let w = 2.0 * PI / cfg.period;
        let k_max = 64.min(cfg.n / 4);
        let eta = BoundaryField::from_fn(b, |x| (w * x).cos());
        let scan = frequency_scan(&eta, k_max)?;
        let calderon = (1..=k_max)
            .map(|k| {
                let g = BoundaryField::from_fn(b, |x| (w * k as f64 * x).cos());
                calderon_commutator(&eta, &g).map(|c| c.ratio)
            })
            .collect::<Result<Vec<f64>>>()?;
        let constant = BoundaryField::from_fn(b, |_| 0.75);
        let g = BoundaryField::from_fn(b, |x| (3.0 * w * x).cos());
        out.check(CheckRecord::at_most("dtn_plateau", scan.plateau, 1.5));
        out.check(CheckRecord::finite("calderon_max_ratio", max_of(calderon.iter().copied())));
        out.check(CheckRecord::at_most("calderon_plateau", plateau(&calderon), 1.5));
        out.check(CheckRecord::at_most("calderon_constant_eta", calderon_commutator(&constant, &g)?.ratio, 0.0));
        let mut table = Table::new("frequency", &["k", "dtn_ratio", "calderon_ratio"]);
        for (i, (a, c)) in scan.ratios.iter().zip(&calderon).enumerate() {
            table.push(vec![(i + 1).to_string(), num(*a), num(*c)]);
        }
        out.tables.push(table);
        let series = |v: &[f64]| v.iter().enumerate().map(|(i, r)| ((i + 1) as f64, *r)).collect();
        out.plots.push(Plot {
            name: "ratio_vs_k".into(),
            title: "commutator ratio for pure modes".into(),
            x_label: "k".into(),
            y_label: "ratio".into(),
            log_y: false,
            series: vec![("[Λ, cos x]".into(), series(&scan.ratios)), ("Calderón".into(), series(&calderon))],
        });
        Ok(())
    });
}

fn identity_check(cfg: &ExperimentConfig, out: &mut Collected) {
    let band = cfg.band_limit.min(cfg.n / 8);
    let kinds = [ExtensionKind::Harmonic, ExtensionKind::mollifier()];
    let inputs = |trial: u64| -> Result<[BoundaryField; 3]> {
        let b = boundary(cfg)?;
        let mut r = rng(cfg.seed, trial);
        Ok([
            random_band_limited(b, &mut r, band, 2, false)?,
            random_band_limited(b, &mut r, band, 2, false)?,
            random_band_limited(b, &mut r, band, 1, true)?,
        ])
    };
    out.section("identities", |out| {
        let grid = graded(cfg, boundary(cfg)?, cfg.y_levels)?;
        let mut table = Table::new(
            "trials",
            &["trial", "identity", "extension", "lhs", "rhs", "residual", "relative"],
        );
        let mut worst = [0.0f64; 3];
        let mut row = |trial: u64, slot: usize, kind: &ExtensionKind, r: &IdentityReport| {
            worst[slot] = worst[slot].max(r.relative);
            let id = ["key", "pressure", "dahlberg"][slot];
            table.push(vec![
                trial.to_string(),
                id.into(),
                kind.label().into(),
                num(r.lhs),
                num(r.rhs()),
                num(r.residual),
                num(r.relative),
            ]);
        };
        for trial in 0..cfg.trials.min(10) as u64 {
            let [f, g, eta] = inputs(trial)?;
            for kind in &kinds {
                row(trial, 0, kind, &key_identity_check(&f, &g, &eta, kind, &grid)?);
                row(trial, 1, kind, &pressure_identity_check(&f, &g, &eta, kind, &grid)?);
                let v = TestField::gradient_times(&eta, kind.clone(), &g)?;
                row(trial, 2, kind, &dahlberg_identity_check(&g, &v, &grid)?);
            }
        }
        out.check(CheckRecord::at_most("key_identity_max_relative", worst[0], 1e-6));
        out.check(CheckRecord::at_most("pressure_identity_max_relative", worst[1], 1e-6));
        out.check(CheckRecord::at_most("dahlberg_identity_max_relative", worst[2], 1e-6));
        out.tables.push(table);
        Ok(())
    });
    out.section("trivial_cases", |out| {
        let b = boundary(cfg)?;
        let grid = graded(cfg, b, cfg.y_levels)?;
        let [f, g, _] = inputs(0)?;
        let one = BoundaryField::from_fn(b, |_| 1.0);
        let size = |r: &IdentityReport| r.lhs.abs() + r.terms.iter().map(|t| t.value.abs()).sum::<f64>();
        let key = size(&key_identity_check(&f, &g, &one, &ExtensionKind::Harmonic, &grid)?);
        let pressure = size(&pressure_identity_check(&f, &g, &one, &ExtensionKind::Harmonic, &grid)?);
        let dahlberg = size(&dahlberg_identity_check(&g, &TestField::zero(cfg.n), &grid)?);
        out.check(CheckRecord::at_most("key_identity_constant_eta", key, 0.0));
        out.check(CheckRecord::at_most("pressure_identity_constant_eta", pressure, 0.0));
        out.check(CheckRecord::at_most("dahlberg_identity_zero_field", dahlberg, 0.0));
        Ok(())
    });
    out.section("refinement", |out| {
        let b = boundary(cfg)?;
        let start = (cfg.y_levels / 8).max(4) / 4 * 4;
        let levels = 1 + (cfg.y_levels / start).trailing_zeros() as usize;
        let grid = graded(cfg, b, start)?;
        let [f, g, eta] = inputs(0)?;
        let steps = refinement_study(&grid, levels, |gr| {
            key_identity_check(&f, &g, &eta, &ExtensionKind::Harmonic, gr)
        })?;
        let mut table = Table::new("refinement", &["y_levels", "residual", "relative", "order"]);
        for s in &steps {
            table.push(vec![
                s.panels.to_string(),
                num(s.residual),
                num(s.relative),
                s.order.map(num).unwrap_or_default(),
            ]);
        }
        let order = steps.last().and_then(|s| s.order).unwrap_or(f64::NAN);
        out.check(CheckRecord::at_least("key_identity_refinement_order", order, 2.0));
        out.plots.push(Plot {
            name: "residual_vs_refinement".into(),
            title: "key identity residual under t-grid refinement".into(),
            x_label: "y_levels".into(),
            y_label: "relative residual".into(),
            log_y: true,
            series: vec![(
                "harmonic extension".into(),
                steps.iter().map(|s| (s.panels as f64, s.relative)).collect(),
            )],
        });
        out.tables.push(table);
        Ok(())
    });
}

fn square_report(cfg: &ExperimentConfig, out: &mut Collected) {
    out.section("closed_forms", |out| {
        let b = boundary(cfg)?;
        let grid = graded(cfg, b, cfg.y_levels)?;
        let w = 2.0 * PI / cfg.period;
        let f = BoundaryField::vector_from_fn(b, |x| [(w * x).cos(), 0.0]);
        let r = square_bound_report(&f, &grid, cfg.aperture)?;
        let exact = cfg.period / 2.0;
        out.check(CheckRecord::at_most("cosine_grad_u_t_relative", (r.grad_u_t - exact).abs() / exact, 5e-3));
        out.check(CheckRecord::at_most("cosine_q_t_relative", (r.q_t - exact).abs() / exact, 5e-3));
        Ok(())
    });
    out.section("chain", |out| {
        let b = boundary(cfg)?;
        let grid = graded(cfg, b, cfg.y_levels)?;
        let mut table = Table::new(
            "trials",
            &["trial", "grad_u_t", "ntmax_u_sq", "grad_q_t3", "q_t", "boundary_u_sq", "chain_ratio"],
        );
        let (mut chain, mut g2m, mut p2b) = (0.0f64, 0.0f64, 0.0f64);
        for trial in 0..20u64 {
            let f = random_band_limited(b, &mut rng(cfg.seed, trial), cfg.band_limit, 2, true)?;
            let r = square_bound_report(&f, &grid, cfg.aperture)?;
            chain = chain.max(r.pressure_chain());
            g2m = g2m.max(r.gradient_to_maximal());
            p2b = p2b.max(r.pressure_to_boundary());
            table.push(vec![
                trial.to_string(),
                num(r.grad_u_t),
                num(r.ntmax_u_sq),
                num(r.grad_q_t3),
                num(r.q_t),
                num(r.boundary_u_sq),
                num(r.pressure_chain()),
            ]);
        }
        out.check(CheckRecord::finite("gradient_to_maximal_max", g2m));
        out.check(CheckRecord::finite("pressure_to_boundary_max", p2b));
        out.check(CheckRecord::at_most("pressure_chain_max", chain, 1.0));
        out.tables.push(table);
        Ok(())
    });
}

fn carleson_report(cfg: &ExperimentConfig, out: &mut Collected) {
    out.section("solution_carleson", |out| {
        let b = boundary(cfg)?;
        let coarse = graded(cfg, b, cfg.y_levels)?;
        let fine = GradedGrid::new(b.with_n(2 * cfg.n)?, coarse.y_min(), coarse.y_max(), 2 * cfg.y_levels)?;
        let mut table = Table::new("tents", &["density", "level", "index", "side", "mass", "ratio"]);
        let mut summary = Table::new("norms", &["trial", "gradient", "gradient_refined", "pressure", "pressure_refined"]);
        let (mut grad_drift, mut pres_drift, mut largest) = (0.0f64, 0.0f64, 0.0f64);
        for trial in 0..cfg.trials.min(3) as u64 {
            let f = random_band_limited(b, &mut rng(cfg.seed, trial), cfg.band_limit, 2, true)?;
            let mut norms = Vec::new();
            for grid in [&coarse, &fine] {
                let f = f.resampled(*grid.boundary())?;
                let slices = sample_solution(grid, &solve_stream(&f)?)?;
                let gr = carleson_norm(grid, &gradient_density(grid, &slices))?;
                let pr = carleson_norm(grid, &pressure_density(grid, &slices))?;
                if trial == 0 && std::ptr::eq(grid, &coarse) {
                    for (label, rep) in [("gradient", &gr), ("pressure", &pr)] {
                        for t in &rep.table {
                            table.push(vec![
                                label.into(),
                                t.interval.level.to_string(),
                                t.interval.index.to_string(),
                                num(t.interval.side),
                                num(t.mass),
                                num(t.ratio),
                            ]);
                        }
                    }
                }
                norms.push((gr.norm, pr.norm));
            }
            grad_drift = grad_drift.max(relative_drift(norms[0].0, norms[1].0));
            pres_drift = pres_drift.max(relative_drift(norms[0].1, norms[1].1));
            largest = largest.max(norms[0].0).max(norms[0].1);
            summary.push(vec![
                trial.to_string(),
                num(norms[0].0),
                num(norms[1].0),
                num(norms[0].1),
                num(norms[1].1),
            ]);
        }
        out.check(CheckRecord::finite("solution_carleson_max", largest));
        out.check(CheckRecord::at_most("gradient_carleson_drift", grad_drift, 0.1));
        out.check(CheckRecord::at_most("pressure_carleson_drift", pres_drift, 0.1));
        out.tables.push(summary);
        out.tables.push(table);
        Ok(())
    });
    out.section("extension_homogeneity", |out| {
        let b = boundary(cfg)?;
        let grid = graded(cfg, b, cfg.y_levels)?;
        let eta = random_band_limited(b, &mut rng(cfg.seed, 500), cfg.band_limit.min(cfg.n / 8), 1, true)?;
        let eta = eta.scaled(1.0 / lipschitz_norm(&eta)?);
        let bump = BumpSpec::standard();
        let one = extension_lemma21(&eta, &bump, &grid)?;
        let two = extension_lemma21(&eta.scaled(2.0), &bump, &grid)?;
        let lin = (two.carleson_linear - 2.0 * one.carleson_linear).abs() / (2.0 * one.carleson_linear);
        let quad = (two.carleson_quadratic.sqrt() - 2.0 * one.carleson_quadratic.sqrt()).abs()
            / (2.0 * one.carleson_quadratic.sqrt());
        out.check(CheckRecord::finite("extension_carleson_linear", one.carleson_linear));
        out.check(CheckRecord::at_most("extension_linear_homogeneity", lin, 1e-10));
        out.check(CheckRecord::at_most("extension_quadratic_sqrt_homogeneity", quad, 1e-10));
        out.check(CheckRecord::finite("extension_gradient_ratio", one.grad_ratio));
        Ok(())
    });
}

fn kenig_stein_check(cfg: &ExperimentConfig, out: &mut Collected) {
    out.section("maps", |out| {
        let b = boundary(cfg)?;
        let coarse = graded(cfg, b, cfg.y_levels)?;
        let b2 = b.with_n(2 * cfg.n)?;
        let fine = GradedGrid::new(b2, coarse.y_min(), coarse.y_max(), cfg.y_levels)?;
        let band = cfg.band_limit.min(cfg.n / 8);
        let mut graphs: Vec<(String, BoundaryField, BoundaryField)> = [0.25, 0.5, 1.0]
            .iter()
            .map(|&a| (format!("sawtooth {a}"), smooth_sawtooth(b, a, band), smooth_sawtooth(b2, a, band)))
            .collect();
        let random = random_band_limited(b, &mut rng(cfg.seed, 700), band, 1, false)?;
        let random = random.scaled(1.0 / GraphDomain::new(random.clone())?.lipschitz());
        let random_fine = random.resampled(b2)?;
        graphs.push(("random".into(), random, random_fine));
        let mut table = Table::new(
            "graphs",
            &["graph", "lipschitz", "c0", "doublings", "min_phi_t", "lower_bound", "upper_bound", "carleson", "carleson_refined"],
        );
        let (mut min_phi_t, mut drift, mut largest) = (f64::INFINITY, 0.0f64, 0.0f64);
        for (name, psi, psi_fine) in graphs {
            let domain = GraphDomain::new(psi)?;
            let lip = domain.lipschitz();
            let map = build_map(domain, BumpSpec::standard(), cfg.c0_policy, &coarse)?;
            let rep = verify_map(&map, &coarse)?;
            let map_fine = build_map(GraphDomain::new(psi_fine)?, BumpSpec::standard(), cfg.c0_policy, &fine)?;
            let rep_fine = verify_map(&map_fine, &fine)?;
            min_phi_t = min_phi_t.min(rep.min_phi_t);
            drift = drift.max(relative_drift(rep.carleson, rep_fine.carleson));
            largest = largest.max(rep.carleson);
            table.push(vec![
                name,
                num(lip),
                num(map.c0()),
                map.doublings().to_string(),
                num(rep.min_phi_t),
                num(rep.lower_bound),
                num(rep.upper_bound),
                num(rep.carleson),
                num(rep_fine.carleson),
            ]);
        }
        out.check(CheckRecord::at_least("min_vertical_derivative", min_phi_t, 0.125));
        out.check(CheckRecord::finite("hessian_carleson_max", largest));
        out.check(CheckRecord::at_most("hessian_carleson_drift", drift, 0.1));
        out.tables.push(table);
        Ok(())
    });
    out.section("flat_graph", |out| {
        let b = boundary(cfg)?;
        let grid = graded(cfg, b, cfg.y_levels)?;
        let map = build_map(
            GraphDomain::new(BoundaryField::zeros(b, 1))?,
            BumpSpec::standard(),
            cfg.c0_policy,
            &grid,
        )?;
        let rep = verify_map(&map, &grid)?;
        let hess = max_of(
            grid.heights()
                .iter()
                .step_by(16)
                .map(|&t| map.slice(t).map(|s| max_of(s.iter().map(|d| d.hessian_norm()))))
                .collect::<Result<Vec<_>>>()?,
        );
        out.check(CheckRecord::at_most("flat_hessian_norm", hess, 0.0));
        out.check(CheckRecord::at_most("flat_hessian_carleson", rep.carleson, 0.0));
        Ok(())
    });
}

fn kernel_check(_cfg: &ExperimentConfig, out: &mut Collected) {
    out.section("stokeslet", |out| {
        let (g, pi) = fundamental_solution(&[1.0, 0.0, 0.0])?;
        out.check(CheckRecord::at_most("gamma11_error", (g[0][0] - 1.0 / (4.0 * PI)).abs(), 1e-12));
        out.check(CheckRecord::at_most("gamma22_error", (g[1][1] - 1.0 / (8.0 * PI)).abs(), 1e-12));
        out.check(CheckRecord::at_most("pi1_error", (pi[0] - 1.0 / (4.0 * PI)).abs(), 1e-12));
        let r = kernel_residual(&[1.0, 0.0, 0.0], 1e-3)?;
        out.check(CheckRecord::at_most("pde_residual_h1e-3", r.momentum.max(r.divergence), 1e-4));
        let x = [0.6, -0.5, 0.8];
        let mut table = Table::new("stencil", &["h", "momentum", "divergence", "order"]);
        let mut prev: Option<f64> = None;
        let mut order = f64::INFINITY;
        for h in [0.04, 0.02, 0.01, 0.005] {
            let r = kernel_residual(&x, h)?;
            let worst = r.momentum.max(r.divergence);
            let o = prev.map(|p| (p / worst).log2());
            if let Some(o) = o {
                order = order.min(o);
            }
            table.push(vec![num(h), num(r.momentum), num(r.divergence), o.map(num).unwrap_or_default()]);
            prev = Some(worst);
        }
        out.check(CheckRecord::at_least("pde_residual_order", order, 1.9));
        out.tables.push(table);
        Ok(())
    });
    out.section("double_layer", |out| {
        let phi = [0.3, -1.0, 0.5];
        let mesh = SurfaceMesh::icosphere(4);
        let density = vec![phi; mesh.panels.len()];
        // unit ball: W_k(x) = −|B| φ_j ∂_k(x_j / (4π|x|³))
        let x = [0.0, 3.0, 4.0];
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let xp: f64 = x.iter().zip(phi).map(|(a, b)| a * b).sum();
        let exact: Vec<f64> = (0..3)
            .map(|k| -(phi[k] - 3.0 * x[k] * xp / r2) / (3.0 * r2 * r2.sqrt()))
            .collect();
        let w = w_field(&mesh, &density, x)?;
        let scale = max_of(exact.iter().map(|v| v.abs()));
        let err = max_of((0..3).map(|k| (w.w[k] - exact[k]).abs())) / scale;
        out.check(CheckRecord::at_most("sphere_w_relative", err, 1e-2));
        let mag = |r: f64| -> Result<f64> {
            let w = w_field(&mesh, &density, [r, 0.0, 0.0])?.w;
            Ok(w.iter().map(|v| v * v).sum::<f64>().sqrt())
        };
        let slope = (mag(20.0)? / mag(10.0)?).ln() / 2f64.ln();
        out.check(CheckRecord::at_most("far_field_exponent_error", (slope + 3.0).abs() / 3.0, 0.1));
        let mut table = Table::new("mesh", &["level", "panels", "h", "laplacian_residual"]);
        let mut residuals = Vec::new();
        for (level, h) in [(2u32, 0.04), (3, 0.02), (4, 0.01)] {
            let mesh = SurfaceMesh::icosphere(level);
            let density: Vec<[f64; 3]> = mesh
                .panels
                .iter()
                .map(|p| [1.0 + p.centroid[2], p.centroid[0], -0.5])
                .collect();
            let lap = w_laplacian(&mesh, &density, [2.0, 0.0, 0.0], h)?;
            let r = max_of(lap.iter().map(|v| v.abs()));
            table.push(vec![level.to_string(), mesh.panels.len().to_string(), num(h), num(r)]);
            residuals.push(r);
        }
        let last = residuals[residuals.len() - 1];
        out.check(CheckRecord::at_most("w_laplacian_residual", last, 1e-3));
        out.check(CheckRecord::at_least(
            "w_laplacian_refinement_factor",
            residuals[residuals.len() - 2] / last,
            3.0,
        ));
        out.tables.push(table);
        Ok(())
    });
}
