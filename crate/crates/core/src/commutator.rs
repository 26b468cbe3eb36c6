//! Commutators of the DtN map with multiplication operators and harnesses
//! that measure their operator-norm ratios.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{DtnError, Result};
use crate::spectral::{
    apply_multiplier, hilbert_transform, lipschitz_norm, random_band_limited, tangential_derivative, BoundaryField, BoundaryGrid,
    FourierMultiplier,
};
use crate::stokes::{dtn_multiplier, paper_literal_multiplier};

/// Λ(ηf) − ηΛ(f).
pub fn commutator_apply(eta: &BoundaryField, f: &BoundaryField) -> Result<BoundaryField> {
    commutator_with(&dtn_multiplier(), eta, f)
}

/// [M, η]f for an arbitrary multiplier M.
pub fn commutator_with(m: &FourierMultiplier, eta: &BoundaryField, f: &BoundaryField) -> Result<BoundaryField> {
    eta.require_components(1)?;
    f.require_components(m.dim())?;
    f.require_same_grid(eta)?;
    if eta.band_limit() == 0 {
        return Ok(BoundaryField::zeros(*f.grid(), m.dim()));
    }
    let left = apply_multiplier(m, &f.multiply_by(eta)?)?;
    let right = apply_multiplier(m, f)?.multiply_by(eta)?;
    left.sub(&right)
}

/// Λ written with the Hilbert transform H and tangential derivative ∂:
/// (2H∂f¹ + ∂f², −∂f¹ + 2H∂f²).
pub fn dtn_hilbert_form(f: &BoundaryField) -> Result<BoundaryField> {
    f.require_components(2)?;
    let d1 = tangential_derivative(&f.extract(0))?;
    let d2 = tangential_derivative(&f.extract(1))?;
    let hd1 = hilbert_transform(&d1)?;
    let hd2 = hilbert_transform(&d2)?;
    let first = hd1.combine(2.0, &d2, 1.0)?;
    let second = d1.combine(-1.0, &hd2, 2.0)?;
    BoundaryField::stack(&first, &second)
}

/// The operator obtained from the literal printed symbol, for side-by-side
/// comparison with [`dtn_hilbert_form`].
pub fn paper_literal_form(f: &BoundaryField) -> Result<BoundaryField> {
    f.require_components(2)?;
    apply_multiplier(&paper_literal_multiplier(), f)
}

#[derive(Debug, Clone)]
pub struct CalderonCommutator {
    /// H(∂(ηg)) − ηH(∂g)
    pub field: BoundaryField,
    /// H((∂η)g)
    pub derivative_part: BoundaryField,
    /// H(η∂g) − ηH(∂g), the pointwise form of H((η − η(x))∂g)
    pub difference_part: BoundaryField,
    pub ratio: f64,
}

pub fn calderon_commutator(eta: &BoundaryField, g: &BoundaryField) -> Result<CalderonCommutator> {
    eta.require_components(1)?;
    g.require_components(1)?;
    let g_norm = g.l2_norm();
    if g_norm == 0.0 {
        return Err(DtnError::UndefinedRatio("‖g‖₂ = 0".into()));
    }
    g.require_same_grid(eta)?;
    if eta.band_limit() == 0 {
        let zero = BoundaryField::zeros(*g.grid(), 1);
        return Ok(CalderonCommutator {
            field: zero.clone(),
            derivative_part: zero.clone(),
            difference_part: zero,
            ratio: 0.0,
        });
    }
    let h_of_d = |v: &BoundaryField| -> Result<BoundaryField> { hilbert_transform(&tangential_derivative(v)?) };
    let field = h_of_d(&g.multiply_by(eta)?)?.sub(&h_of_d(g)?.multiply_by(eta)?)?;
    let derivative_part = hilbert_transform(&g.multiply_by(&tangential_derivative(eta)?)?)?;
    let dg = tangential_derivative(g)?;
    let difference_part = hilbert_transform(&dg.multiply_by(eta)?)?.sub(&hilbert_transform(&dg)?.multiply_by(eta)?)?;
    let lip = lipschitz_norm(eta)?;
    let num = field.l2_norm();
    let ratio = if num == 0.0 { 0.0 } else { num / (lip * g_norm) };
    Ok(CalderonCommutator {
        field,
        derivative_part,
        difference_part,
        ratio,
    })
}

fn check_exponent(p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(DtnError::Domain(format!("exponent p must lie in (1, ∞) (got {p})")))
    }
}

/// ‖[Λ,η]f‖_p / (‖η‖_{C^{0,1}} ‖f‖_p).
pub fn commutator_ratio(eta: &BoundaryField, f: &BoundaryField, p: f64) -> Result<f64> {
    commutator_ratio_with(&dtn_multiplier(), eta, f, p)
}

pub fn commutator_ratio_with(m: &FourierMultiplier, eta: &BoundaryField, f: &BoundaryField, p: f64) -> Result<f64> {
    check_exponent(p)?;
    let den = lipschitz_norm(eta)? * f.lp_norm(p);
    if den == 0.0 {
        return Err(DtnError::UndefinedRatio("‖η‖_{C^{0,1}}‖f‖_p = 0".into()));
    }
    Ok(commutator_with(m, eta, f)?.lp_norm(p) / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub seed: u64,
    pub trials: usize,
    pub band_limit: usize,
    pub n: usize,
    pub period: f64,
    pub p: f64,
    /// Multiplies every normalized η; ratios do not depend on it.
    pub eta_scale: f64,
    pub paper_literal: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            trials: 100,
            band_limit: 16,
            n: 256,
            period: std::f64::consts::TAU,
            p: 2.0,
            eta_scale: 1.0,
            paper_literal: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<BoundaryGrid> {
        let grid = BoundaryGrid::new(self.n, self.period)?;
        if self.trials == 0 {
            return Err(DtnError::Config("trials must be ≥ 1".into()));
        }
        check_exponent(self.p).map_err(|e| DtnError::Config(e.to_string()))?;
        if self.band_limit == 0 || self.band_limit > self.n / 4 {
            return Err(DtnError::Config(format!(
                "band_limit must lie in 1..={} (got {})",
                self.n / 4,
                self.band_limit
            )));
        }
        if !(self.eta_scale.is_finite() && self.eta_scale != 0.0) {
            return Err(DtnError::Config("eta_scale must be finite and nonzero".into()));
        }
        Ok(grid)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub level: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub ratios: Vec<f64>,
    pub max: f64,
    pub mean: f64,
    pub quantiles: Vec<Quantile>,
}

/// The (η, f) pair of one trial; depends only on (seed, trial, band).
pub fn trial_inputs(grid: BoundaryGrid, seed: u64, trial: u64, band: usize) -> Result<(BoundaryField, BoundaryField)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    let eta = random_band_limited(grid, &mut rng, band, 1, true)?;
    let eta = eta.scaled(1.0 / lipschitz_norm(&eta)?);
    let f = random_band_limited(grid, &mut rng, band, 2, false)?;
    let f = f.scaled(1.0 / f.l2_norm());
    Ok((eta, f))
}

fn quantile(sorted: &[f64], level: f64) -> f64 {
    let pos = level * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn ensemble_sweep(cfg: &SweepConfig) -> Result<SweepReport> {
    let grid = cfg.validate()?;
    let m = if cfg.paper_literal { paper_literal_multiplier() } else { dtn_multiplier() };
    let ratios = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let (eta, f) = trial_inputs(grid, cfg.seed, trial, cfg.band_limit)?;
            commutator_ratio_with(&m, &eta.scaled(cfg.eta_scale), &f, cfg.p)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let quantiles = [0.5, 0.9, 0.99]
        .into_iter()
        .map(|level| Quantile {
            level,
            value: quantile(&sorted, level),
        })
        .collect();
    Ok(SweepReport {
        config: cfg.clone(),
        max: *sorted.last().expect("trials ≥ 1"),
        mean: ratios.iter().sum::<f64>() / ratios.len() as f64,
        ratios,
        quantiles,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyScan {
    pub ratios: Vec<f64>,
    /// max over the upper half of k divided by max over the lower half
    pub plateau: f64,
}

/// Commutator ratios (p = 2) for f = (cos kx, 0), k = 1..=k_max.
pub fn frequency_scan(eta: &BoundaryField, k_max: usize) -> Result<FrequencyScan> {
    eta.require_components(1)?;
    let grid = *eta.grid();
    if k_max == 0 || k_max > grid.n() / 4 {
        return Err(DtnError::Config(format!(
            "k_max must lie in 1..={} (got {k_max})",
            grid.n() / 4
        )));
    }
    let w = std::f64::consts::TAU / grid.period();
    let ratios = (1..=k_max)
        .into_par_iter()
        .map(|k| {
            let f = BoundaryField::vector_from_fn(grid, |x| [(w * k as f64 * x).cos(), 0.0]);
            commutator_ratio(eta, &f, 2.0)
        })
        .collect::<Result<Vec<f64>>>()?;
    let split = k_max / 2;
    let lower = ratios[..split.max(1)].iter().cloned().fold(0.0, f64::max);
    let upper = ratios[split.max(1).min(k_max - 1)..].iter().cloned().fold(0.0, f64::max);
    let plateau = if lower == 0.0 { if upper == 0.0 { 0.0 } else { f64::INFINITY } } else { upper / lower };
    Ok(FrequencyScan { ratios, plateau })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stokes::{apply_dtn, dtn_symbol};
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn grid(n: usize) -> BoundaryGrid {
        BoundaryGrid::standard(n).unwrap()
    }

    /// Λ as a dense 2n×2n real matrix assembled from direct DFT sums.
    fn dense_dtn(n: usize) -> Vec<Vec<f64>> {
        let h = 2.0 * PI / n as f64;
        let half = n as i64 / 2;
        let mut m = vec![vec![0.0; 2 * n]; 2 * n];
        for j in 0..n {
            for l in 0..n {
                let mut acc = [[Complex64::new(0.0, 0.0); 2]; 2];
                for k in (1 - half)..half {
                    let kappa = k as f64;
                    let phase = Complex64::from_polar(1.0, kappa * (j as f64 - l as f64) * h);
                    let s = dtn_symbol(kappa);
                    for a in 0..2 {
                        for b in 0..2 {
                            acc[a][b] += s[a][b] * phase;
                        }
                    }
                }
                for a in 0..2 {
                    for b in 0..2 {
                        m[a * n + j][b * n + l] = acc[a][b].re / n as f64;
                    }
                }
            }
        }
        m
    }

    fn matvec(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
        m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    #[test]
    fn constant_eta_commutes() {
        let g = grid(64);
        let f = BoundaryField::vector_from_fn(g, |x| [(3.0 * x).sin(), x.cos() + 0.5]);
        let one = BoundaryField::from_fn(g, |_| 1.0);
        assert!(commutator_apply(&one, &f).unwrap().sup_norm() < 1e-12);
        assert!(commutator_ratio(&one, &f, 2.0).unwrap() < 1e-12);
    }

    #[test]
    fn dense_matrix_oracle() {
        for (n, eta_fn) in [
            (32usize, Box::new(|x: f64| x.cos()) as Box<dyn Fn(f64) -> f64>),
            (64, Box::new(|x: f64| 0.3 + (2.0 * x).sin() - 0.4 * (5.0 * x).cos())),
        ] {
            let g = grid(n);
            let eta = BoundaryField::from_fn(g, &eta_fn);
            let f = BoundaryField::vector_from_fn(g, |x| [x.cos() + 0.2 * (4.0 * x).sin(), 0.7 * (3.0 * x).cos()]);
            let dense = dense_dtn(n);
            let flat: Vec<f64> = f.components().concat();
            let etas = eta.component(0);
            let eta_f: Vec<f64> = (0..2 * n).map(|i| etas[i % n] * flat[i]).collect();
            let lf = matvec(&dense, &flat);
            let expect: Vec<f64> = matvec(&dense, &eta_f)
                .iter()
                .enumerate()
                .map(|(i, v)| v - etas[i % n] * lf[i])
                .collect();
            let got = commutator_apply(&eta, &f).unwrap().components().concat();
            let err = got.iter().zip(&expect).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-11, "n={n} err={err:e}");
        }
    }

    #[test]
    fn cosine_commutator_closed_form() {
        let g = grid(128);
        let eta = BoundaryField::from_fn(g, f64::cos);
        for k in [1.0, 2.0, 7.0, 32.0] {
            let f = BoundaryField::vector_from_fn(g, |x| [(k * x).cos(), 0.0]);
            let expect = BoundaryField::vector_from_fn(g, |x| [-2.0 * x.sin() * (k * x).sin(), x.sin() * (k * x).cos()]);
            let got = commutator_apply(&eta, &f).unwrap();
            assert!(got.max_abs_diff(&expect).unwrap() < 1e-11, "k={k}");
        }
    }

    #[test]
    fn constant_shift_and_linearity() {
        let g = grid(64);
        let eta = BoundaryField::from_fn(g, |x| (2.0 * x).sin() + 0.3 * x.cos());
        let f1 = BoundaryField::vector_from_fn(g, |x| [(3.0 * x).cos(), x.sin()]);
        let f2 = BoundaryField::vector_from_fn(g, |x| [(5.0 * x).sin(), 0.2 - (2.0 * x).cos()]);
        let base = commutator_apply(&eta, &f1).unwrap();
        let shifted = commutator_apply(&eta.offset(3.7), &f1).unwrap();
        assert!(base.max_abs_diff(&shifted).unwrap() < 1e-11);
        let sum = commutator_apply(&eta, &f1.combine(1.0, &f2, 1.0).unwrap()).unwrap();
        let parts = base.combine(1.0, &commutator_apply(&eta, &f2).unwrap(), 1.0).unwrap();
        assert!(sum.max_abs_diff(&parts).unwrap() < 1e-12);
    }

    #[test]
    fn leibniz_rule() {
        let g = grid(64);
        let e1 = BoundaryField::from_fn(g, |x| x.cos() + 0.5 * (2.0 * x).sin());
        let e2 = BoundaryField::from_fn(g, |x| 1.0 + (3.0 * x).cos());
        let f = BoundaryField::vector_from_fn(g, |x| [(4.0 * x).sin(), (2.0 * x).cos()]);
        let lhs = commutator_apply(&e2.multiply_by(&e1).unwrap(), &f).unwrap();
        let a = commutator_apply(&e1, &f.multiply_by(&e2).unwrap()).unwrap();
        let b = commutator_apply(&e2, &f).unwrap().multiply_by(&e1).unwrap();
        assert!(lhs.max_abs_diff(&a.combine(1.0, &b, 1.0).unwrap()).unwrap() < 1e-11);
    }

    #[test]
    fn hilbert_form_matches_dtn() {
        let g = grid(64);
        let f = BoundaryField::vector_from_fn(g, |x| [x.cos(), 0.0]);
        let expect = BoundaryField::vector_from_fn(g, |x| [2.0 * x.cos(), x.sin()]);
        assert!(dtn_hilbert_form(&f).unwrap().max_abs_diff(&expect).unwrap() < 1e-12);
        let c = BoundaryField::vector_from_fn(g, |_| [1.5, -2.0]);
        assert!(dtn_hilbert_form(&c).unwrap().sup_norm() < 1e-12);
        let (_, r) = trial_inputs(g, 9, 3, 16).unwrap();
        let dev = dtn_hilbert_form(&r).unwrap().max_abs_diff(&apply_dtn(&r).unwrap()).unwrap();
        assert!(dev < 1e-12, "{dev:e}");
        assert!(paper_literal_form(&f).unwrap().max_abs_diff(&expect).unwrap() > 0.5);
    }

    #[test]
    fn calderon_closed_form_and_decomposition() {
        let g = grid(128);
        let eta = BoundaryField::from_fn(g, f64::cos);
        let mut ratios = Vec::new();
        for k in 1..=32 {
            let kf = k as f64;
            let gk = BoundaryField::from_fn(g, |x| (kf * x).cos());
            let c = calderon_commutator(&eta, &gk).unwrap();
            let expect = BoundaryField::from_fn(g, |x| -x.sin() * (kf * x).sin());
            assert!(c.field.max_abs_diff(&expect).unwrap() < 1e-11, "k={k}");
            let sum = c.derivative_part.combine(1.0, &c.difference_part, 1.0).unwrap();
            assert!(c.field.max_abs_diff(&sum).unwrap() < 1e-11);
            ratios.push(c.ratio);
        }
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(max < 1.0);
        let constant = BoundaryField::from_fn(g, |_| 2.0);
        let g1 = BoundaryField::from_fn(g, f64::sin);
        let c = calderon_commutator(&constant, &g1).unwrap();
        assert!(c.field.sup_norm() < 1e-12);
        assert!(c.ratio < 1e-12);
        let zero = BoundaryField::from_fn(g, |_| 0.0);
        assert!(matches!(calderon_commutator(&eta, &zero), Err(DtnError::UndefinedRatio(_))));
    }

    #[test]
    fn ratio_norm_oracle_and_invariances() {
        let g = grid(64);
        let eta = BoundaryField::from_fn(g, |x| (2.0 * x).cos());
        let f = BoundaryField::vector_from_fn(g, |x| [x.sin(), (3.0 * x).cos()]);
        let comm = commutator_apply(&eta, &f).unwrap();
        let h = g.spacing();
        let num: f64 = (0..64)
            .map(|j| comm.component(0)[j].powi(2) + comm.component(1)[j].powi(2))
            .sum::<f64>()
            * h;
        let den_f: f64 = (0..64).map(|j| f.component(0)[j].powi(2) + f.component(1)[j].powi(2)).sum::<f64>() * h;
        let expect = num.sqrt() / (lipschitz_norm(&eta).unwrap() * den_f.sqrt());
        let r = commutator_ratio(&eta, &f, 2.0).unwrap();
        assert!((r - expect).abs() < 1e-13);
        assert!((commutator_ratio(&eta, &f.scaled(-4.0), 2.0).unwrap() - r).abs() < 1e-12);
        for p in [1.5, 3.0, 4.0] {
            let a = commutator_ratio(&eta, &f, p).unwrap();
            let b = commutator_ratio(&eta.offset(0.0), &f.scaled(7.0), p).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        assert!(commutator_ratio(&eta, &f, 1.0).is_err());
        let zero = BoundaryField::vector_from_fn(g, |_| [0.0, 0.0]);
        assert!(matches!(commutator_ratio(&eta, &zero, 2.0), Err(DtnError::UndefinedRatio(_))));
    }

    #[test]
    fn sweep_is_deterministic_and_scale_free() {
        let cfg = SweepConfig {
            trials: 8,
            n: 64,
            band_limit: 8,
            seed: 11,
            ..SweepConfig::default()
        };
        let a = ensemble_sweep(&cfg).unwrap();
        let b = ensemble_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        let scaled = ensemble_sweep(&SweepConfig { eta_scale: 10.0, ..cfg.clone() }).unwrap();
        for (x, y) in a.ratios.iter().zip(&scaled.ratios) {
            assert!((x - y).abs() < 1e-10);
        }
        let fine = ensemble_sweep(&SweepConfig { n: 128, ..cfg.clone() }).unwrap();
        assert!((fine.max - a.max).abs() <= 0.1 * a.max);
        assert!(a.ratios.iter().all(|r| r.is_finite() && *r >= 0.0));
    }

    #[test]
    fn sweep_validation() {
        let base = SweepConfig { n: 64, ..SweepConfig::default() };
        assert!(ensemble_sweep(&SweepConfig { trials: 0, ..base.clone() }).is_err());
        assert!(ensemble_sweep(&SweepConfig { p: 1.0, ..base.clone() }).is_err());
        assert!(ensemble_sweep(&SweepConfig { band_limit: 17, ..base.clone() }).is_err());
        assert!(ensemble_sweep(&SweepConfig { n: 48, ..base }).is_err());
    }

    #[test]
    fn frequency_scan_behaviour() {
        let g = grid(128);
        let constant = BoundaryField::from_fn(g, |_| 0.4);
        let s = frequency_scan(&constant, 32).unwrap();
        assert!(s.ratios.iter().all(|r| *r < 1e-12));
        let eta = BoundaryField::from_fn(g, f64::cos);
        let s = frequency_scan(&eta, 32).unwrap();
        assert!(s.plateau <= 1.5, "{}", s.plateau);
        let fine = frequency_scan(&BoundaryField::from_fn(grid(256), f64::cos), 64).unwrap();
        let (a, b) = (s.ratios[31], fine.ratios[63]);
        assert!((a / b - 1.0).abs() < 0.1);
        assert!(frequency_scan(&eta, 33).is_err());
    }
}
