//! Lipschitz graph domains above y = ψ(x) and the Kenig–Stein map
//! ρ(x, t) = (x, c₀t + (ζₜ∗ψ)(x)) onto them from the half-plane.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DtnError, Result};
use crate::measures::{carleson_norm, GradedGrid, LevelField};
use crate::spectral::{
    extension_slice, lipschitz_norm, lipschitz_seminorm, BoundaryField, BoundaryGrid, BumpSpec, ExtensionKind,
};

/// Cap on the number of c₀ doublings.
pub const MAX_C0_DOUBLINGS: u32 = 1 << 10;

/// Smallest admissible ∂φ/∂t.
pub const MIN_VERTICAL_DERIVATIVE: f64 = 0.125;

#[derive(Debug, Clone)]
pub struct GraphDomain {
    psi: BoundaryField,
    lipschitz: f64,
}

impl GraphDomain {
    pub fn new(psi: BoundaryField) -> Result<Self> {
        psi.require_components(1)?;
        let lipschitz = lipschitz_seminorm(psi.component(0), psi.grid().spacing());
        if !lipschitz.is_finite() {
            return Err(DtnError::Domain("graph function is not Lipschitz on the grid".into()));
        }
        Ok(Self { psi, lipschitz })
    }

    pub fn psi(&self) -> &BoundaryField {
        &self.psi
    }

    /// Discrete Lipschitz constant M of ψ.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
}

/// Band-limited triangle wave a·(π/2 − (4/π) Σ_{k odd ≤ K} σ_k cos(kx)/k²)
/// rescaled to the period, with Lanczos factors σ_k damping the Gibbs ripple.
pub fn smooth_sawtooth(grid: BoundaryGrid, amplitude: f64, band: usize) -> BoundaryField {
    use std::f64::consts::PI;
    let w = std::f64::consts::TAU / grid.period();
    let k_max = band.max(1) as f64;
    BoundaryField::from_fn(grid, |x| {
        let mut s = PI / 2.0;
        let mut k = 1.0;
        while k <= k_max {
            let z = PI * k / (k_max + 1.0);
            s -= 4.0 / PI * (z.sin() / z) * (k * w * x).cos() / (k * k);
            k += 2.0;
        }
        amplitude * s
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum C0Policy {
    /// Start at 8(1 + M·m₁) and double until ∂φ/∂t ≥ 1/8 on the check grid.
    Auto,
    Fixed(f64),
}

/// φ and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MapDerivatives {
    pub phi: f64,
    pub phi_t: f64,
    pub phi_x: f64,
    pub phi_xx: f64,
    pub phi_xt: f64,
    pub phi_tt: f64,
}

impl MapDerivatives {
    pub fn hessian_norm(&self) -> f64 {
        (self.phi_xx.powi(2) + 2.0 * self.phi_xt.powi(2) + self.phi_tt.powi(2)).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct KenigSteinMap {
    domain: GraphDomain,
    bump: BumpSpec,
    c0: f64,
    doublings: u32,
}

/// ∂ₜ(ζₜ∗ψ) sampled on the grid: the part of ∂φ/∂t not involving c₀.
fn vertical_defect(psi: &BoundaryField, kind: &ExtensionKind, grid: &GradedGrid) -> Result<f64> {
    let mins = grid
        .heights()
        .par_iter()
        .map(|&t| {
            extension_slice(psi, kind, t).map(|s| s.dt.into_iter().fold(f64::INFINITY, f64::min))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(mins.into_iter().fold(f64::INFINITY, f64::min))
}

pub fn build_map(domain: GraphDomain, bump: BumpSpec, policy: C0Policy, check: &GradedGrid) -> Result<KenigSteinMap> {
    bump.validate()?;
    let kind = ExtensionKind::Mollifier(bump.clone());
    let defect = vertical_defect(domain.psi(), &kind, check)?;
    let (c0, doublings) = match policy {
        C0Policy::Fixed(c0) => {
            if !(c0 > 0.0 && c0.is_finite()) {
                return Err(DtnError::Config(format!("c0 must be positive (got {c0})")));
            }
            (c0, 0)
        }
        C0Policy::Auto => {
            let mut c0 = 8.0 * (1.0 + domain.lipschitz() * bump.dilation_moment());
            let mut doublings = 0;
            while c0 + defect < MIN_VERTICAL_DERIVATIVE {
                if doublings == MAX_C0_DOUBLINGS {
                    return Err(DtnError::SearchFailed(format!(
                        "∂φ/∂t ≥ 1/8 not reached after {MAX_C0_DOUBLINGS} doublings"
                    )));
                }
                c0 *= 2.0;
                doublings += 1;
            }
            (c0, doublings)
        }
    };
    Ok(KenigSteinMap {
        domain,
        bump,
        c0,
        doublings,
    })
}

impl KenigSteinMap {
    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn doublings(&self) -> u32 {
        self.doublings
    }

    pub fn domain(&self) -> &GraphDomain {
        &self.domain
    }

    pub fn bump(&self) -> &BumpSpec {
        &self.bump
    }

    fn kind(&self) -> ExtensionKind {
        ExtensionKind::Mollifier(self.bump.clone())
    }

    /// φ and derivatives at (x, t) by summing the modes of ψ against the
    /// differentiated kernel transform.
    pub fn derivatives(&self, x: f64, t: f64) -> Result<MapDerivatives> {
        if !(t > 0.0) {
            return Err(DtnError::Domain(format!("t must be positive (got {t})")));
        }
        let psi = self.domain.psi();
        let grid = psi.grid();
        let spec = &psi.spectrum()[0];
        let mut acc = [Complex64::new(0.0, 0.0); 6];
        for (idx, &c) in spec.iter().enumerate() {
            if idx == grid.nyquist_index() {
                continue;
            }
            let kappa = grid.wavenumber(grid.mode(idx));
            let [m, mt, mtt] = self.bump.transform(kappa * t);
            let (mt, mtt) = (kappa * mt, kappa * kappa * mtt);
            let ik = Complex64::new(0.0, kappa);
            let e = c * Complex64::from_polar(1.0, kappa * x);
            acc[0] += e * m;
            acc[1] += e * mt;
            acc[2] += e * ik * m;
            acc[3] += e * ik * ik * m;
            acc[4] += e * ik * mt;
            acc[5] += e * mtt;
        }
        Ok(MapDerivatives {
            phi: self.c0 * t + acc[0].re,
            phi_t: self.c0 + acc[1].re,
            phi_x: acc[2].re,
            phi_xx: acc[3].re,
            phi_xt: acc[4].re,
            phi_tt: acc[5].re,
        })
    }

    /// ρ(x, t) = (x, φ(x, t)); at t = 0 the graph point (x, ψ(x)).
    pub fn map_point(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        if t < 0.0 {
            return Err(DtnError::Domain(format!("t must be non-negative (got {t})")));
        }
        if t == 0.0 {
            return Ok((x, self.domain.psi().evaluate_at(0, x)));
        }
        Ok((x, self.derivatives(x, t)?.phi))
    }

    /// t with φ(x, t) = y, for y on or above the graph.
    pub fn inverse(&self, x: f64, y: f64) -> Result<f64> {
        let base = self.domain.psi().evaluate_at(0, x);
        if y < base {
            return Err(DtnError::Domain(format!("point ({x}, {y}) lies below the graph")));
        }
        let (mut lo, mut hi) = (0.0, ((y - base) / MIN_VERTICAL_DERIVATIVE).max(1e-300));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.map_point(x, mid)?.1 < y {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi.max(1e-300) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Grid samples of φ and its derivatives at height t.
    pub fn slice(&self, t: f64) -> Result<Vec<MapDerivatives>> {
        let s = extension_slice(self.domain.psi(), &self.kind(), t)?;
        Ok((0..s.value.len())
            .map(|j| MapDerivatives {
                phi: self.c0 * t + s.value[j],
                phi_t: self.c0 + s.dt[j],
                phi_x: s.dx[j],
                phi_xx: s.dxx[j],
                phi_xt: s.dxt[j],
                phi_tt: s.dtt[j],
            })
            .collect())
    }
}

pub fn map_derivatives(map: &KenigSteinMap, x: f64, t: f64) -> Result<MapDerivatives> {
    map.derivatives(x, t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapReport {
    pub c0: f64,
    pub min_phi_t: f64,
    pub vertical_pass: bool,
    /// smallest and largest singular value of ∇ρ on the grid
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub max_phi_x: f64,
    pub carleson: f64,
}

fn singular_values(d: &MapDerivatives) -> (f64, f64) {
    // ∇ρ = [[1, 0], [φ_x, φ_t]]
    let (a, b, c) = (1.0, d.phi_x, d.phi_t);
    let fro = a * a + b * b + c * c;
    let det = (a * c).abs();
    let disc = (fro * fro - 4.0 * det * det).max(0.0).sqrt();
    (((fro - disc) / 2.0).max(0.0).sqrt(), ((fro + disc) / 2.0).sqrt())
}

pub fn verify_map(map: &KenigSteinMap, grid: &GradedGrid) -> Result<MapReport> {
    if grid.boundary() != map.domain.psi().grid() {
        return Err(DtnError::Config("verification grid must share the graph's boundary grid".into()));
    }
    let slices = grid
        .heights()
        .par_iter()
        .map(|&t| map.slice(t))
        .collect::<Result<Vec<_>>>()?;
    let mut min_phi_t = f64::INFINITY;
    let (mut lower, mut upper, mut max_phi_x) = (f64::INFINITY, 0.0f64, 0.0f64);
    for d in slices.iter().flatten() {
        min_phi_t = min_phi_t.min(d.phi_t);
        max_phi_x = max_phi_x.max(d.phi_x.abs());
        let (lo, hi) = singular_values(d);
        lower = lower.min(lo);
        upper = upper.max(hi);
    }
    let density = LevelField::scalar_from(
        slices
            .iter()
            .zip(grid.heights())
            .map(|(s, &t)| s.iter().map(|d| d.hessian_norm().powi(2) * t).collect())
            .collect(),
    );
    Ok(MapReport {
        c0: map.c0,
        min_phi_t,
        vertical_pass: min_phi_t >= MIN_VERTICAL_DERIVATIVE,
        lower_bound: lower,
        upper_bound: upper,
        max_phi_x,
        carleson: carleson_norm(grid, &density)?.norm,
    })
}

/// Trapezoid weights over grid points first..=last (non-periodic).
fn interval_weights(points: usize, spacing: f64) -> Vec<f64> {
    (0..points)
        .map(|i| if i == 0 || i + 1 == points { 0.5 * spacing } else { spacing })
        .collect()
}

/// ∬ F(ρ(x, t)) ∂φ/∂t over {x_first ≤ x ≤ x_last, 0 < t ≤ height}: the
/// integral of F over the image of that box under ρ. Pass `height = None`
/// for the full strip up to Y, and `first..=last` spanning all points with
/// `periodic = true` for a full period.
pub fn pullback_integral<F>(
    map: &KenigSteinMap,
    grid: &GradedGrid,
    span: PullbackRegion,
    integrand: F,
) -> Result<f64>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let b = *grid.boundary();
    if &b != map.domain.psi().grid() {
        return Err(DtnError::Config("pullback grid must share the graph's boundary grid".into()));
    }
    let weights = match span.height {
        Some(h) => grid.weights_to(h)?,
        None => grid.weights().to_vec(),
    };
    let (first, xw) = match span.columns {
        Columns::Period => (0, vec![b.spacing(); b.n()]),
        Columns::Range { first, last } => {
            if last < first {
                return Err(DtnError::Domain("empty column range".into()));
            }
            (first, interval_weights(last - first + 1, b.spacing()))
        }
    };
    let rows = grid
        .heights()
        .par_iter()
        .zip(&weights)
        .map(|(&t, &w)| {
            if w == 0.0 {
                return Ok(0.0);
            }
            let s = map.slice(t)?;
            Ok(w * xw
                .iter()
                .enumerate()
                .map(|(i, wx)| {
                    let j = (first + i) % b.n();
                    let x = b.period() * (first + i) as f64 / b.n() as f64;
                    wx * integrand(x, s[j].phi) * s[j].phi_t
                })
                .sum::<f64>())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Columns {
    Period,
    /// Grid points first..=last; `last` may equal n for the right end of
    /// the period.
    Range { first: usize, last: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullbackRegion {
    pub columns: Columns,
    pub height: Option<f64>,
}

impl PullbackRegion {
    pub fn strip() -> Self {
        Self {
            columns: Columns::Period,
            height: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma21Report {
    pub lipschitz_norm: f64,
    pub grad_sup: f64,
    pub grad_ratio: f64,
    /// Carleson norm of |∇²G| t
    pub carleson_linear: f64,
    /// Carleson norm of |∇²G|² t
    pub carleson_quadratic: f64,
}

/// G(x, t) = (ζₜ∗η)(x) with its gradient bound and both Carleson functionals
/// of the Hessian.
pub fn extension_lemma21(eta: &BoundaryField, bump: &BumpSpec, grid: &GradedGrid) -> Result<Lemma21Report> {
    eta.require_components(1)?;
    let eta = if eta.grid() == grid.boundary() {
        eta.clone()
    } else {
        eta.resampled(*grid.boundary())?
    };
    let kind = ExtensionKind::Mollifier(bump.clone());
    let slices = grid
        .heights()
        .par_iter()
        .map(|&t| extension_slice(&eta, &kind, t))
        .collect::<Result<Vec<_>>>()?;
    let grad_sup = slices
        .iter()
        .flat_map(|s| s.gradient_norm())
        .fold(0.0, f64::max);
    let hess: Vec<Vec<f64>> = slices.iter().map(|s| s.hessian_norm()).collect();
    let weighted = |power: i32| {
        LevelField::scalar_from(
            hess.iter()
                .zip(grid.heights())
                .map(|(h, &t)| h.iter().map(|v| v.powi(power) * t).collect())
                .collect(),
        )
    };
    let lip = lipschitz_norm(&eta)?;
    Ok(Lemma21Report {
        lipschitz_norm: lip,
        grad_sup,
        grad_ratio: if lip == 0.0 { 0.0 } else { grad_sup / lip },
        carleson_linear: carleson_norm(grid, &weighted(1))?.norm,
        carleson_quadratic: carleson_norm(grid, &weighted(2))?.norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite_gauss;
    use std::f64::consts::PI;

    fn setup(n: usize, amp: f64) -> (GradedGrid, GraphDomain) {
        let b = BoundaryGrid::standard(n).unwrap();
        let grid = GradedGrid::with_defaults(b, 64).unwrap();
        let psi = smooth_sawtooth(b, amp, n / 4 - 1);
        (grid, GraphDomain::new(psi).unwrap())
    }

    fn auto_map(n: usize, amp: f64) -> (GradedGrid, KenigSteinMap) {
        let (grid, d) = setup(n, amp);
        let m = build_map(d, BumpSpec::standard(), C0Policy::Auto, &grid).unwrap();
        (grid, m)
    }

    #[test]
    fn flat_graph() {
        let b = BoundaryGrid::standard(32).unwrap();
        let grid = GradedGrid::with_defaults(b, 32).unwrap();
        let d = GraphDomain::new(BoundaryField::zeros(b, 1)).unwrap();
        let m = build_map(d, BumpSpec::standard(), C0Policy::Auto, &grid).unwrap();
        assert_eq!(m.c0(), 8.0);
        let p = m.derivatives(1.3, 0.7).unwrap();
        assert!((p.phi - 8.0 * 0.7).abs() < 1e-14 && (p.phi_t - 8.0).abs() < 1e-14);
        assert_eq!(p.hessian_norm(), 0.0);
        assert_eq!(verify_map(&m, &grid).unwrap().carleson, 0.0);
    }

    #[test]
    fn auto_policy_meets_vertical_bound() {
        for amp in [0.5, 1.0, 3.0] {
            let (grid, m) = auto_map(64, amp);
            let r = verify_map(&m, &grid).unwrap();
            assert!(r.vertical_pass && r.min_phi_t >= 0.125, "{r:?}");
            assert!(r.lower_bound > 0.0 && r.upper_bound.is_finite());
            assert!(r.max_phi_x <= m.domain().lipschitz() * 1.01 + 1e-12);
        }
    }

    #[test]
    fn fixed_policy_is_reported_honestly() {
        let (grid, d) = setup(64, 3.0);
        let m = build_map(d.clone(), BumpSpec::standard(), C0Policy::Fixed(0.01), &grid).unwrap();
        assert!(!verify_map(&m, &grid).unwrap().vertical_pass);
        assert!(build_map(d, BumpSpec::standard(), C0Policy::Fixed(-1.0), &grid).is_err());
    }

    #[test]
    fn c0_monotonicity() {
        let (grid, d) = setup(64, 1.0);
        let mins: Vec<f64> = [0.5, 1.0, 2.0]
            .iter()
            .map(|&c| {
                let m = build_map(d.clone(), BumpSpec::standard(), C0Policy::Fixed(c), &grid).unwrap();
                verify_map(&m, &grid).unwrap().min_phi_t
            })
            .collect();
        assert!(mins[0] < mins[1] && mins[1] < mins[2]);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let (_, m) = auto_map(64, 0.5);
        let h = 1e-4;
        for &(x, t) in &[(0.3, 0.05), (2.0, 0.4), (5.1, 1.7)] {
            let d = m.derivatives(x, t).unwrap();
            let at = |x: f64, t: f64| m.derivatives(x, t).unwrap();
            let fd_t = (at(x, t + h).phi - at(x, t - h).phi) / (2.0 * h);
            let fd_x = (at(x + h, t).phi - at(x - h, t).phi) / (2.0 * h);
            let fd_xx = (at(x + h, t).phi_x - at(x - h, t).phi_x) / (2.0 * h);
            let fd_xt = (at(x, t + h).phi_x - at(x, t - h).phi_x) / (2.0 * h);
            let fd_tt = (at(x, t + h).phi_t - at(x, t - h).phi_t) / (2.0 * h);
            for (a, b) in [
                (d.phi_t, fd_t),
                (d.phi_x, fd_x),
                (d.phi_xx, fd_xx),
                (d.phi_xt, fd_xt),
                (d.phi_tt, fd_tt),
            ] {
                assert!((a - b).abs() < 1e-6, "({x},{t}): {a} vs {b}");
            }
        }
        assert!(m.derivatives(1.0, 0.0).is_err());
    }

    #[test]
    fn mollified_graph_matches_direct_convolution() {
        let (_, m) = auto_map(64, 0.5);
        let psi = m.domain().psi();
        let bump = BumpSpec::standard();
        let nodes = composite_gauss(-1.0, 1.0, 64, 16);
        for &(x, t) in &[(PI / 2.0, 0.1), (1.0, 0.3), (4.0, 0.02)] {
            let direct: f64 = nodes.iter().map(|&(s, w)| w * bump.value(s) * psi.evaluate_at(0, x - t * s)).sum();
            let spectral = m.derivatives(x, t).unwrap().phi - m.c0() * t;
            assert!((direct - spectral).abs() < 1e-10, "{direct} vs {spectral}");
        }
        // the first moment vanishes, so away from the kinks the error is O(t²);
        // at the midpoint of a slope ψ is odd and the error vanishes outright
        let err = |x: f64, t: f64| (m.derivatives(x, t).unwrap().phi - m.c0() * t - psi.evaluate_at(0, x)).abs();
        let ratio = err(PI / 4.0, 0.02) / err(PI / 4.0, 0.01);
        assert!(ratio > 3.5, "{ratio}");
        assert!(err(PI / 2.0, 0.05) < 1e-13);
    }

    #[test]
    fn inverse_round_trip() {
        let (_, m) = auto_map(64, 1.0);
        for &(x, t) in &[(0.1, 0.01), (3.0, 0.5), (6.0, 2.0)] {
            let (_, y) = m.map_point(x, t).unwrap();
            assert!((m.inverse(x, y).unwrap() - t).abs() < 1e-12);
        }
    }

    #[test]
    fn pullback_identity_map() {
        let b = BoundaryGrid::standard(64).unwrap();
        let grid = GradedGrid::with_defaults(b, 64).unwrap();
        let d = GraphDomain::new(BoundaryField::zeros(b, 1)).unwrap();
        let m = build_map(d, BumpSpec::standard(), C0Policy::Fixed(1.0), &grid).unwrap();
        let f = |x: f64, y: f64| (-y).exp() * x.cos().powi(2);
        let pulled = pullback_integral(&m, &grid, PullbackRegion::strip(), f).unwrap();
        let direct: f64 = grid
            .heights()
            .iter()
            .zip(grid.weights())
            .map(|(&y, w)| w * b.points().iter().map(|&x| f(x, y)).sum::<f64>() * b.spacing())
            .sum();
        assert!((pulled - direct).abs() < 1e-10);
        assert!(pullback_integral(&m, &grid, PullbackRegion::strip(), |_, _| 1.0).unwrap() > 0.0);
    }

    fn shoelace(poly: &[(f64, f64)]) -> f64 {
        let n = poly.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (poly[i], poly[(i + 1) % n]);
                a.0 * b.1 - b.0 * a.1
            })
            .sum::<f64>()
            .abs()
    }

    #[test]
    fn pullback_area_matches_shoelace() {
        let (grid, m) = auto_map(64, 1.0);
        let b = *grid.boundary();
        let (first, last) = (16, 32);
        let height = 2.0 * PI / 4.0;
        let region = PullbackRegion {
            columns: Columns::Range { first, last },
            height: Some(height),
        };
        let area = pullback_integral(&m, &grid, region, |_, _| 1.0).unwrap();
        let (a, z) = (b.point(first), b.point(last));
        let k = 4000;
        let xs: Vec<f64> = (0..=k).map(|i| a + (z - a) * i as f64 / k as f64).collect();
        let mut poly: Vec<(f64, f64)> = xs.iter().map(|&x| m.map_point(x, 0.0).unwrap()).collect();
        poly.extend(xs.iter().rev().map(|&x| m.map_point(x, height).unwrap()));
        let oracle = shoelace(&poly);
        assert!((area - oracle).abs() < 1e-3 * oracle, "{area} vs {oracle}");
    }

    #[test]
    fn pullback_of_indicator_matches_tent_measure() {
        let (grid, m) = auto_map(64, 1.0);
        let b = *grid.boundary();
        let (first, last) = (8, 16);
        let height = b.point(last) - b.point(first);
        let tent = pullback_integral(
            &m,
            &grid,
            PullbackRegion {
                columns: Columns::Range { first, last },
                height: Some(height),
            },
            |_, _| 1.0,
        )
        .unwrap();
        let inside = |x: f64, y: f64| -> f64 {
            let t = m.inverse(x, y).unwrap();
            if t <= height * (1.0 + 1e-12) { 1.0 } else { 0.0 }
        };
        let pulled = pullback_integral(
            &m,
            &grid,
            PullbackRegion {
                columns: Columns::Range { first, last },
                height: None,
            },
            inside,
        )
        .unwrap();
        assert!((pulled - tent).abs() < 0.03 * tent, "{pulled} vs {tent}");
    }

    #[test]
    fn carleson_refinement_and_translation() {
        let norm = |n: usize, shift: f64| {
            let b = BoundaryGrid::standard(n).unwrap();
            let grid = GradedGrid::new(b, 2.0 * PI / 256.0, 4.0 * PI, 64).unwrap();
            let psi = smooth_sawtooth(b, 0.5, 15).shifted(shift);
            let m = build_map(GraphDomain::new(psi).unwrap(), BumpSpec::standard(), C0Policy::Auto, &grid).unwrap();
            verify_map(&m, &grid).unwrap().carleson
        };
        let (a, b) = (norm(64, 0.0), norm(128, 0.0));
        assert!(a > 0.0 && (a - b).abs() <= 0.1 * a, "{a} {b}");
        let s = norm(64, PI);
        assert!((a - s).abs() <= 1e-10 * a, "{a} {s}");
    }

    #[test]
    fn lemma21_reports() {
        let b = BoundaryGrid::standard(64).unwrap();
        let grid = GradedGrid::with_defaults(b, 64).unwrap();
        let bump = BumpSpec::standard();
        let c = extension_lemma21(&BoundaryField::from_fn(b, |_| 2.0), &bump, &grid).unwrap();
        assert!(c.grad_sup < 1e-13 && c.carleson_linear < 1e-13 && c.carleson_quadratic < 1e-13);
        let eta = BoundaryField::from_fn(b, f64::cos);
        let r = extension_lemma21(&eta, &bump, &grid).unwrap();
        let r2 = extension_lemma21(&eta.scaled(2.0), &bump, &grid).unwrap();
        assert!((r2.carleson_linear - 2.0 * r.carleson_linear).abs() < 1e-10 * r.carleson_linear);
        assert!((r2.carleson_quadratic - 4.0 * r.carleson_quadratic).abs() < 1e-10 * r.carleson_quadratic);
        let fine = GradedGrid::with_defaults(BoundaryGrid::standard(128).unwrap(), 64).unwrap();
        let rf = extension_lemma21(&eta, &bump, &fine).unwrap();
        assert!((rf.grad_ratio - r.grad_ratio).abs() < 0.05 * r.grad_ratio);
        let near = extension_slice(&eta, &ExtensionKind::Mollifier(bump), 1e-4).unwrap();
        let dev = near.value.iter().zip(eta.component(0)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dev < 1e-8);
    }
}
