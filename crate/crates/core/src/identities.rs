//! Integration-by-parts identities between boundary pairings and half-plane
//! volume integrals, checked by quadrature on a [`GradedGrid`].
//!
//! Every volume integrand is a product of band-limited factors, so the
//! x-sums are exact and the reported residual measures the t-quadrature
//! alone. Indices follow the convention α = 1 ↔ x, α = 2 ↔ t.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commutator::commutator_apply;
use crate::error::{DtnError, Result};
use crate::measures::{nontangential_max, weighted_integral, GradedGrid, LevelField};
use crate::spectral::{extension_slice, lipschitz_norm, BoundaryField, ExtensionKind, ExtensionSlice};
use crate::stokes::{solve_stream, SolutionSlice, StreamSolution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub lhs: f64,
    pub terms: Vec<Term>,
    pub residual: f64,
    pub relative: f64,
    pub n: usize,
    pub panels: usize,
    pub y_max: f64,
    pub tail_bound: f64,
}

impl IdentityReport {
    fn assemble(name: &str, grid: &GradedGrid, lhs: f64, terms: Vec<Term>, means: &[&BoundaryField]) -> Self {
        let sum: f64 = terms.iter().map(|t| t.value).sum();
        let scale = terms.iter().map(|t| t.value.abs()).sum::<f64>().max(lhs.abs()).max(f64::MIN_POSITIVE);
        let residual = (lhs - sum).abs();
        Self {
            name: name.to_string(),
            lhs,
            terms,
            residual,
            relative: residual / scale,
            n: grid.boundary().n(),
            panels: grid.panels(),
            y_max: grid.y_max(),
            tail_bound: tail_bound(grid, means),
        }
    }

    pub fn rhs(&self) -> f64 {
        self.terms.iter().map(|t| t.value).sum()
    }

    pub fn term(&self, label: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.label == label).map(|t| t.value)
    }
}

/// A nonzero mean leaves one factor of the integrand without decay, so the
/// truncated tail is only e^{−κ_min Y} instead of e^{−2κ_min Y}.
fn tail_bound(grid: &GradedGrid, fields: &[&BoundaryField]) -> f64 {
    let has_mean = fields
        .iter()
        .any(|f| (0..f.n_components()).any(|c| f.mean(c).abs() > 1e-14 * f.sup_norm().max(1.0)));
    if has_mean {
        grid.tail_bound().sqrt()
    } else {
        grid.tail_bound()
    }
}

fn check_dealiasing(eta: &BoundaryField, fields: &[&BoundaryField]) -> Result<()> {
    let n = eta.grid().n();
    let widest = fields.iter().map(|f| f.band_limit()).max().unwrap_or(0);
    let total = eta.band_limit() + widest;
    if total > n / 4 {
        return Err(DtnError::Dealiasing(format!(
            "band(η) + band(f, g) = {total} exceeds n/4 = {}",
            n / 4
        )));
    }
    Ok(())
}

fn same_grid(grid: &GradedGrid, fields: &[&BoundaryField]) -> Result<()> {
    for f in fields {
        if f.grid() != grid.boundary() {
            return Err(DtnError::Config("fields must live on the quadrature grid's boundary".into()));
        }
    }
    Ok(())
}

/// Evaluates `per_level(y)` (one row per term, already summed over x) at every
/// level and integrates each row in t.
fn integrate_terms<F>(grid: &GradedGrid, count: usize, per_level: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let rows = grid
        .heights()
        .par_iter()
        .map(|&y| per_level(y))
        .collect::<Result<Vec<_>>>()?;
    let h = grid.boundary().spacing();
    Ok((0..count)
        .map(|i| rows.iter().zip(grid.weights()).map(|(r, w)| r[i] * w).sum::<f64>() * h)
        .collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn dot3(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x * y * z).sum()
}

struct Levels<'a> {
    u: &'a SolutionSlice,
    h: &'a SolutionSlice,
    g: &'a ExtensionSlice,
}

fn labeled(labels: &[&str], values: Vec<f64>) -> Vec<Term> {
    labels
        .iter()
        .zip(values)
        .map(|(l, v)| Term {
            label: l.to_string(),
            value: v,
        })
        .collect()
}

const KEY_LABELS: [&str; 4] = [
    "u·(∇G·∇h)",
    "−(∇u·∇G)h",
    "q ∂_αG h^α",
    "−π ∂_αG u^α",
];

/// ∫_∂ [Λ,η]f·g against the four volume terms built from the solutions
/// (u, q) for f, (h, π) for g and the extension G of η.
pub fn key_identity_check(
    f: &BoundaryField,
    g: &BoundaryField,
    eta: &BoundaryField,
    kind: &ExtensionKind,
    grid: &GradedGrid,
) -> Result<IdentityReport> {
    f.require_components(2)?;
    g.require_components(2)?;
    eta.require_components(1)?;
    same_grid(grid, &[f, g, eta])?;
    check_dealiasing(eta, &[f, g])?;
    let lhs = commutator_apply(eta, f)?.pairing(g)?;
    let (sol_u, sol_h) = (solve_stream(f)?, solve_stream(g)?);
    let values = integrate_terms(grid, 4, |y| {
        let (u, h, ge) = (sol_u.slice(y)?, sol_h.slice(y)?, extension_slice(eta, kind, y)?);
        let t1 = dot3(&u.u1, &ge.dx, &h.u1_x)
            + dot3(&u.u1, &ge.dt, &h.u1_y)
            + dot3(&u.u2, &ge.dx, &h.u2_x)
            + dot3(&u.u2, &ge.dt, &h.u2_y);
        let t2 = -(dot3(&u.u1_x, &ge.dx, &h.u1)
            + dot3(&u.u1_y, &ge.dt, &h.u1)
            + dot3(&u.u2_x, &ge.dx, &h.u2)
            + dot3(&u.u2_y, &ge.dt, &h.u2));
        let t3 = dot3(&u.q, &ge.dx, &h.u1) + dot3(&u.q, &ge.dt, &h.u2);
        let t4 = -(dot3(&h.q, &ge.dx, &u.u1) + dot3(&h.q, &ge.dt, &u.u2));
        Ok(vec![t1, t2, t3, t4])
    })?;
    Ok(IdentityReport::assemble(
        &format!("key identity ({})", kind.label()),
        grid,
        lhs,
        labeled(&KEY_LABELS, values),
        &[f, g],
    ))
}

const PRESSURE_LABELS: [&str; 6] = [
    "−t q ∂_α∂_tG h^α",
    "−t q ∂_αG ∂_th^α",
    "½t² ∂_tq ∂_α∂_tG h^α",
    "½t² ∂_tq ∂_αG ∂_th^α",
    "½t² ∂_xq ∂_α∂_xG h^α",
    "½t² ∂_xq ∂_αG ∂_xh^α",
];

fn pressure_row(y: f64, l: &Levels) -> Vec<f64> {
    let (u, h, g) = (l.u, l.h, l.g);
    let t2 = 0.5 * y * y;
    vec![
        dot3(&u.q, &g.dx, &h.u1) + dot3(&u.q, &g.dt, &h.u2),
        -y * (dot3(&u.q, &g.dxt, &h.u1) + dot3(&u.q, &g.dtt, &h.u2)),
        -y * (dot3(&u.q, &g.dx, &h.u1_y) + dot3(&u.q, &g.dt, &h.u2_y)),
        t2 * (dot3(&u.q_y, &g.dxt, &h.u1) + dot3(&u.q_y, &g.dtt, &h.u2)),
        t2 * (dot3(&u.q_y, &g.dx, &h.u1_y) + dot3(&u.q_y, &g.dt, &h.u2_y)),
        t2 * (dot3(&u.q_x, &g.dxx, &h.u1) + dot3(&u.q_x, &g.dxt, &h.u2)),
        t2 * (dot3(&u.q_x, &g.dx, &h.u1_x) + dot3(&u.q_x, &g.dt, &h.u2_x)),
    ]
}

/// ∬ q ∂_αG h^α against its t-weighted expansion obtained from two
/// integrations by parts in t and Δq = 0.
pub fn pressure_identity_check(
    f: &BoundaryField,
    g: &BoundaryField,
    eta: &BoundaryField,
    kind: &ExtensionKind,
    grid: &GradedGrid,
) -> Result<IdentityReport> {
    f.require_components(2)?;
    g.require_components(2)?;
    eta.require_components(1)?;
    same_grid(grid, &[f, g, eta])?;
    check_dealiasing(eta, &[f, g])?;
    let (sol_u, sol_h) = (solve_stream(f)?, solve_stream(g)?);
    let values = integrate_terms(grid, 7, |y| {
        let (u, h, ge) = (sol_u.slice(y)?, sol_h.slice(y)?, extension_slice(eta, kind, y)?);
        Ok(pressure_row(y, &Levels { u: &u, h: &h, g: &ge }))
    })?;
    Ok(IdentityReport::assemble(
        &format!("pressure identity ({})", kind.label()),
        grid,
        values[0],
        labeled(&PRESSURE_LABELS, values[1..].to_vec()),
        &[f, g],
    ))
}

/// Samples of a test field v_j^α and its first derivatives at one height;
/// indices are `[j][α]` with j, α ∈ {0 ↔ x, 1 ↔ t}.
#[derive(Debug, Clone)]
pub struct TestFieldSlice {
    pub v: [[Vec<f64>; 2]; 2],
    pub dx: [[Vec<f64>; 2]; 2],
    pub dt: [[Vec<f64>; 2]; 2],
}

impl TestFieldSlice {
    fn gradient_sq(&self) -> Vec<f64> {
        let n = self.v[0][0].len();
        (0..n)
            .map(|p| {
                let mut s = 0.0;
                for j in 0..2 {
                    for a in 0..2 {
                        s += self.dx[j][a][p].powi(2) + self.dt[j][a][p].powi(2);
                    }
                }
                s
            })
            .collect()
    }
}

type Sampler = dyn Fn(f64) -> Result<TestFieldSlice> + Send + Sync;

/// Analytically supplied 2×2 test field for the bilinear identity.
#[derive(Clone)]
pub struct TestField {
    n: usize,
    sampler: Arc<Sampler>,
}

impl std::fmt::Debug for TestField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestField").field("n", &self.n).finish_non_exhaustive()
    }
}

/// Relative size |v(·, Y)| / sup|v| above which v is treated as not decaying.
pub const DECAY_TOLERANCE: f64 = 1e-3;

impl TestField {
    pub fn new(n: usize, sampler: impl Fn(f64) -> Result<TestFieldSlice> + Send + Sync + 'static) -> Self {
        Self {
            n,
            sampler: Arc::new(sampler),
        }
    }

    pub fn sample(&self, t: f64) -> Result<TestFieldSlice> {
        (self.sampler)(t)
    }

    pub fn zero(n: usize) -> Self {
        Self::new(n, move |_| {
            let z = || [vec![0.0; n], vec![0.0; n]];
            Ok(TestFieldSlice {
                v: [z(), z()],
                dx: [z(), z()],
                dt: [z(), z()],
            })
        })
    }

    /// v_j^α(x, t) = φ_j^α(x) χ(t) with χ(t) = (1 − (t/T)²)⁶ on [0, T].
    /// `phi` holds four scalar fields in the order (x,1), (x,2), (t,1), (t,2).
    pub fn separable(phi: [BoundaryField; 4], cutoff: f64) -> Result<Self> {
        if !(cutoff > 0.0) {
            return Err(DtnError::Domain(format!("cutoff height must be positive (got {cutoff})")));
        }
        for p in &phi {
            p.require_components(1)?;
        }
        let n = phi[0].grid().n();
        let parts: Vec<(Vec<f64>, Vec<f64>)> = phi
            .iter()
            .map(|p| {
                let d = crate::spectral::tangential_derivative(p)?;
                Ok((p.component(0).to_vec(), d.component(0).to_vec()))
            })
            .collect::<Result<_>>()?;
        Ok(Self::new(n, move |t| {
            let s = t / cutoff;
            let (chi, dchi) = if s < 1.0 {
                let b = 1.0 - s * s;
                (b.powi(6), -12.0 * s * b.powi(5) / cutoff)
            } else {
                (0.0, 0.0)
            };
            let pick = |k: usize, scale: f64, deriv: bool| -> Vec<f64> {
                let src = if deriv { &parts[k].1 } else { &parts[k].0 };
                src.iter().map(|v| v * scale).collect()
            };
            Ok(TestFieldSlice {
                v: [[pick(0, chi, false), pick(1, chi, false)], [pick(2, chi, false), pick(3, chi, false)]],
                dx: [[pick(0, chi, true), pick(1, chi, true)], [pick(2, chi, true), pick(3, chi, true)]],
                dt: [[pick(0, dchi, false), pick(1, dchi, false)], [pick(2, dchi, false), pick(3, dchi, false)]],
            })
        }))
    }

    /// v_j^α = ∂_jG h^α with G the extension of η and h the velocity solving
    /// the Stokes problem with data g.
    pub fn gradient_times(eta: &BoundaryField, kind: ExtensionKind, g: &BoundaryField) -> Result<Self> {
        eta.require_components(1)?;
        let sol = solve_stream(g)?;
        let eta = eta.clone();
        let n = eta.grid().n();
        Ok(Self::new(n, move |t| {
            let ge = extension_slice(&eta, &kind, t)?;
            let h = sol.slice(t)?;
            let mul = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x * y).collect() };
            let add = |a: Vec<f64>, b: Vec<f64>| -> Vec<f64> { a.iter().zip(&b).map(|(x, y)| x + y).collect() };
            let hs = [&h.u1, &h.u2];
            let hx = [&h.u1_x, &h.u2_x];
            let ht = [&h.u1_y, &h.u2_y];
            let gj = [&ge.dx, &ge.dt];
            let gjx = [&ge.dxx, &ge.dxt];
            let gjt = [&ge.dxt, &ge.dtt];
            let build = |f: &dyn Fn(usize, usize) -> Vec<f64>| [[f(0, 0), f(0, 1)], [f(1, 0), f(1, 1)]];
            Ok(TestFieldSlice {
                v: build(&|j, a| mul(gj[j], hs[a])),
                dx: build(&|j, a| add(mul(gjx[j], hs[a]), mul(gj[j], hx[a]))),
                dt: build(&|j, a| add(mul(gjt[j], hs[a]), mul(gj[j], ht[a]))),
            })
        }))
    }

    fn check_decay(&self, grid: &GradedGrid) -> Result<()> {
        let sup = |s: &TestFieldSlice| {
            s.v.iter()
                .flatten()
                .flat_map(|c| c.iter())
                .fold(0.0f64, |m, v| m.max(v.abs()))
        };
        let top = sup(&self.sample(grid.y_max())?);
        let overall = grid
            .heights()
            .iter()
            .step_by(4)
            .map(|&y| self.sample(y).map(|s| sup(&s)))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(top, f64::max);
        if top > DECAY_TOLERANCE * overall {
            return Err(DtnError::Domain(format!(
                "test field does not decay in t: |v(·, Y)| = {top:.3e} vs sup |v| = {overall:.3e}"
            )));
        }
        Ok(())
    }
}

const DAHLBERG_LABELS: [&str; 6] = [
    "t ∂_th^α ∂_xv_x^α",
    "−t ∂_xh^α ∂_tv_x^α",
    "−t ∂_th^α ∂_tv_t^α",
    "−t ∂_xh¹ ∂_xv_t¹",
    "−t ∂_th¹ ∂_xv_t²",
    "t π ∂_xv_t¹",
];

fn dahlberg_row(y: f64, h: &SolutionSlice, v: &TestFieldSlice) -> Vec<f64> {
    let hx = [&h.u1_x, &h.u2_x];
    let ht = [&h.u1_y, &h.u2_y];
    let mut row = vec![0.0; 7];
    for a in 0..2 {
        row[0] += dot(hx[a], &v.v[0][a]) + dot(ht[a], &v.v[1][a]);
        row[1] += y * dot(ht[a], &v.dx[0][a]);
        row[2] -= y * dot(hx[a], &v.dt[0][a]);
        row[3] -= y * dot(ht[a], &v.dt[1][a]);
    }
    row[4] = -y * dot(&h.u1_x, &v.dx[1][0]);
    row[5] = -y * dot(&h.u1_y, &v.dx[1][1]);
    row[6] = y * dot(&h.q, &v.dx[1][0]);
    row
}

/// ∬ ∇h·v against its t-weighted expansion.
pub fn dahlberg_identity_check(g: &BoundaryField, v: &TestField, grid: &GradedGrid) -> Result<IdentityReport> {
    g.require_components(2)?;
    same_grid(grid, &[g])?;
    if v.n != grid.boundary().n() {
        return Err(DtnError::Dimension {
            expected: grid.boundary().n(),
            found: v.n,
        });
    }
    v.check_decay(grid)?;
    let sol = solve_stream(g)?;
    let values = integrate_terms(grid, 7, |y| Ok(dahlberg_row(y, &sol.slice(y)?, &v.sample(y)?)))?;
    Ok(IdentityReport::assemble(
        "dahlberg identity",
        grid,
        values[0],
        labeled(&DAHLBERG_LABELS, values[1..].to_vec()),
        &[g],
    ))
}

/// Pieces of the bilinear ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilinearRatio {
    pub pairing: f64,
    pub grad_h_t: f64,
    pub pi_t: f64,
    pub grad_v_t: f64,
    pub v_ntmax: f64,
    pub ratio: f64,
}

/// |∬∇h·v| / ({(∬|∇h|²t)^½ + (∬|π|²t)^½}·{(∬|∇v|²t)^½ + ‖(v)*‖₂}).
pub fn bilinear_ratio(g: &BoundaryField, v: &TestField, grid: &GradedGrid, aperture: f64) -> Result<BilinearRatio> {
    let report = dahlberg_identity_check(g, v, grid)?;
    let sol = solve_stream(g)?;
    let slices = grid
        .heights()
        .par_iter()
        .map(|&y| Ok((sol.slice(y)?, v.sample(y)?)))
        .collect::<Result<Vec<_>>>()?;
    let grad_h = LevelField {
        values: slices
            .iter()
            .map(|(h, _)| vec![h.u1_x.clone(), h.u1_y.clone(), h.u2_x.clone(), h.u2_y.clone()])
            .collect(),
    };
    let pi = LevelField {
        values: slices.iter().map(|(h, _)| vec![h.q.clone()]).collect(),
    };
    let grad_v = LevelField {
        values: slices
            .iter()
            .map(|(_, s)| vec![s.gradient_sq().into_iter().map(f64::sqrt).collect()])
            .collect(),
    };
    let v_vals = LevelField {
        values: slices
            .iter()
            .map(|(_, s)| s.v.iter().flatten().cloned().collect())
            .collect(),
    };
    let grad_h_t = weighted_integral(grid, &grad_h, 1).value.sqrt();
    let pi_t = weighted_integral(grid, &pi, 1).value.sqrt();
    let grad_v_t = weighted_integral(grid, &grad_v, 1).value.sqrt();
    let v_ntmax = nontangential_max(grid, &v_vals, aperture)?.l2_norm();
    let den = (grad_h_t + pi_t) * (grad_v_t + v_ntmax);
    if den == 0.0 {
        return Err(DtnError::UndefinedRatio("degenerate bilinear pair".into()));
    }
    Ok(BilinearRatio {
        pairing: report.lhs,
        grad_h_t,
        pi_t,
        grad_v_t,
        v_ntmax,
        ratio: report.lhs.abs() / den,
    })
}

/// |∬ q ∂_αG h^α| / (‖η‖_{C^{0,1}} ‖u‖_{L²(∂)} ‖(h)*‖₂).
pub fn q_eta_h_ratio(
    f: &BoundaryField,
    g: &BoundaryField,
    eta: &BoundaryField,
    kind: &ExtensionKind,
    grid: &GradedGrid,
    aperture: f64,
) -> Result<f64> {
    let report = pressure_identity_check(f, g, eta, kind, grid)?;
    let sol_h = solve_stream(g)?;
    let h = velocity_levels(grid, &sol_h)?;
    let den = lipschitz_norm(eta)? * f.l2_norm() * nontangential_max(grid, &h, aperture)?.l2_norm();
    if den == 0.0 {
        return Err(DtnError::UndefinedRatio("‖η‖‖u‖‖(h)*‖ = 0".into()));
    }
    Ok(report.lhs.abs() / den)
}

fn velocity_levels(grid: &GradedGrid, sol: &StreamSolution) -> Result<LevelField> {
    let values = grid
        .heights()
        .par_iter()
        .map(|&y| sol.slice(y).map(|s| vec![s.u1, s.u2]))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelField { values })
}

/// One row of a refinement study.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementStep {
    pub panels: usize,
    pub residual: f64,
    pub relative: f64,
    /// log₂ of the residual ratio to the previous step
    pub order: Option<f64>,
}

/// Runs `check` on `levels` successive doublings of the t-grid.
pub fn refinement_study<F>(grid: &GradedGrid, levels: usize, check: F) -> Result<Vec<RefinementStep>>
where
    F: Fn(&GradedGrid) -> Result<IdentityReport>,
{
    let mut out: Vec<RefinementStep> = Vec::with_capacity(levels);
    let mut current = grid.clone();
    for i in 0..levels {
        let r = check(&current)?;
        let order = out.last().map(|prev| (prev.residual / r.residual).log2());
        out.push(RefinementStep {
            panels: current.panels(),
            residual: r.residual,
            relative: r.relative,
            order,
        });
        if i + 1 < levels {
            current = current.refined()?;
        }
    }
    Ok(out)
}
