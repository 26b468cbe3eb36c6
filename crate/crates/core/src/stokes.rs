//! Closed-form spectral solution of the Stokes Dirichlet problem on the upper
//! half-plane, and the Dirichlet-to-Neumann map it induces.
//!
//! Per nonzero mode the stream function is ψ̂(k, y) = (A_k + B_k y)e^{−|κ|y}
//! with A_k = f̂²(k)/(iκ) and B_k = |κ|A_k − f̂¹(k); the velocity is
//! u = (−∂_yψ, ∂_xψ) and the pressure q̂(k, y) = 2iκB_k e^{−|κ|y}. The outward
//! normal on {y = 0} is (0, −1), so the conormal derivative is
//! Λ(f)^α = −∂_y u^α + δ_{α2} q, with symbol [[2|κ|, iκ], [−iκ, 2|κ|]].
//! The zero mode is a constant velocity with zero pressure; the Nyquist mode
//! is dropped.

use num_complex::Complex64;

use crate::error::{DtnError, Result};
use crate::spectral::{
    apply_multiplier, synthesize_real, BoundaryField, BoundaryGrid, FourierMultiplier,
    SymbolMatrix,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn i_times(c: Complex64, kappa: f64) -> Complex64 {
    c * Complex64::new(0.0, kappa)
}

/// (c0 + c1·y)·e^{−s·y} for one Fourier mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinExp {
    pub c0: Complex64,
    pub c1: Complex64,
    pub decay: f64,
}

impl LinExp {
    pub fn new(c0: Complex64, c1: Complex64, decay: f64) -> Self {
        Self { c0, c1, decay }
    }

    pub fn zero(decay: f64) -> Self {
        Self::new(ZERO, ZERO, decay)
    }

    pub fn at(&self, y: f64) -> Complex64 {
        (self.c0 + self.c1 * y) * (-self.decay * y).exp()
    }

    pub fn dy(&self) -> Self {
        let s = self.decay;
        Self::new(self.c1 - self.c0 * s, -self.c1 * s, s)
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self::new(self.c0 * c, self.c1 * c, self.decay)
    }

    pub fn sub(&self, other: &LinExp) -> Self {
        Self::new(self.c0 - other.c0, self.c1 - other.c1, self.decay)
    }

    /// (∂_y² − s²) applied to the profile, as a profile.
    pub fn helmholtz(&self) -> Self {
        let s2 = self.decay * self.decay;
        self.dy().dy().sub(&self.scale(Complex64::new(s2, 0.0)))
    }

    /// ∫₀^∞ |p(y)|² yᵃ dy in closed form.
    pub fn weighted_square_integral(&self, power: u32) -> f64 {
        let two_s = 2.0 * self.decay;
        let gamma = |m: u32| factorial(m) / two_s.powi(m as i32 + 1);
        let a = power;
        self.c0.norm_sqr() * gamma(a)
            + 2.0 * (self.c0.conj() * self.c1).re * gamma(a + 1)
            + self.c1.norm_sqr() * gamma(a + 2)
    }
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// Per-mode profiles of one nonzero mode.
#[derive(Debug, Clone, Copy)]
pub struct ModeProfiles {
    pub kappa: f64,
    pub psi: LinExp,
    pub u1: LinExp,
    pub u2: LinExp,
    pub q: LinExp,
}

impl ModeProfiles {
    /// Profiles of ∂ₓu¹, ∂_yu¹, ∂ₓu², ∂_yu².
    pub fn velocity_gradient(&self) -> [LinExp; 4] {
        let ik = Complex64::new(0.0, self.kappa);
        [
            self.u1.scale(ik),
            self.u1.dy(),
            self.u2.scale(ik),
            self.u2.dy(),
        ]
    }

    pub fn pressure_gradient(&self) -> [LinExp; 2] {
        [self.q.scale(Complex64::new(0.0, self.kappa)), self.q.dy()]
    }
}

/// Spectral coefficients representing (ψ, u, q) in closed form.
#[derive(Debug, Clone)]
pub struct StreamSolution {
    grid: BoundaryGrid,
    a: Vec<Complex64>,
    b: Vec<Complex64>,
    pressure: Vec<Complex64>,
    constant: [f64; 2],
}

/// Real samples of the fields and their first derivatives at one height.
#[derive(Debug, Clone)]
pub struct SolutionSlice {
    pub y: f64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub q: Vec<f64>,
    pub psi: Vec<f64>,
    pub u1_x: Vec<f64>,
    pub u1_y: Vec<f64>,
    pub u2_x: Vec<f64>,
    pub u2_y: Vec<f64>,
    pub q_x: Vec<f64>,
    pub q_y: Vec<f64>,
}

impl SolutionSlice {
    pub fn velocity_gradient_sq(&self) -> Vec<f64> {
        (0..self.u1.len())
            .map(|j| {
                self.u1_x[j].powi(2) + self.u1_y[j].powi(2) + self.u2_x[j].powi(2) + self.u2_y[j].powi(2)
            })
            .collect()
    }

    pub fn velocity_magnitude(&self) -> Vec<f64> {
        (0..self.u1.len()).map(|j| self.u1[j].hypot(self.u2[j])).collect()
    }
}

/// (u¹, u², q, ψ) at one height as boundary fields.
#[derive(Debug, Clone)]
pub struct InteriorSlice {
    pub y: f64,
    pub u1: BoundaryField,
    pub u2: BoundaryField,
    pub q: BoundaryField,
    pub psi: BoundaryField,
}

/// Slices of the interior solution at a list of heights.
#[derive(Debug, Clone)]
pub struct InteriorField {
    pub heights: Vec<f64>,
    pub slices: Vec<InteriorSlice>,
}

/// Solves the Stokes Dirichlet problem with two-component boundary data `f`.
pub fn solve_stream(f: &BoundaryField) -> Result<StreamSolution> {
    f.require_components(2)?;
    let grid = *f.grid();
    let n = grid.n();
    let spec = f.spectrum();
    let mut a = vec![ZERO; n];
    let mut b = vec![ZERO; n];
    let mut pressure = vec![ZERO; n];
    for idx in 1..n {
        if idx == grid.nyquist_index() {
            continue;
        }
        let kappa = grid.wavenumber(grid.mode(idx));
        let (f1, f2) = (spec[0][idx], spec[1][idx]);
        let ak = f2 / Complex64::new(0.0, kappa);
        let bk = ak * kappa.abs() - f1;
        a[idx] = ak;
        b[idx] = bk;
        pressure[idx] = i_times(bk, 2.0 * kappa);
    }
    Ok(StreamSolution {
        grid,
        a,
        b,
        pressure,
        constant: [spec[0][0].re, spec[1][0].re],
    })
}

impl StreamSolution {
    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn a(&self, k: i64) -> Complex64 {
        self.a[self.grid.index(k)]
    }

    pub fn b(&self, k: i64) -> Complex64 {
        self.b[self.grid.index(k)]
    }

    /// Boundary pressure coefficient q̂(k, 0).
    pub fn pressure_trace(&self, k: i64) -> Complex64 {
        self.pressure[self.grid.index(k)]
    }

    /// Constant velocity carried by the zero mode.
    pub fn constant_mode(&self) -> [f64; 2] {
        self.constant
    }

    /// Multiplies every B_k by `factor`, leaving A_k and the stored pressure
    /// untouched. Used to check that residuals detect inconsistent data.
    pub fn scale_b(&mut self, factor: f64) {
        for b in &mut self.b {
            *b *= factor;
        }
    }

    /// Profiles for FFT index `idx`; `None` for the zero and Nyquist modes.
    pub fn mode_profiles(&self, idx: usize) -> Option<ModeProfiles> {
        if idx == 0 || idx == self.grid.nyquist_index() {
            return None;
        }
        let kappa = self.grid.wavenumber(self.grid.mode(idx));
        let s = kappa.abs();
        let psi = LinExp::new(self.a[idx], self.b[idx], s);
        let u1 = psi.dy().scale(Complex64::new(-1.0, 0.0));
        let u2 = psi.scale(Complex64::new(0.0, kappa));
        let q = LinExp::new(self.pressure[idx], ZERO, s);
        Some(ModeProfiles { kappa, psi, u1, u2, q })
    }

    pub fn modes(&self) -> impl Iterator<Item = ModeProfiles> + '_ {
        (0..self.grid.n()).filter_map(move |idx| self.mode_profiles(idx))
    }

    /// Largest coefficient magnitude, used as the field scale.
    pub fn scale(&self) -> f64 {
        let spectral = self
            .modes()
            .map(|m| {
                m.u1.c0.norm() + m.u2.c0.norm() + m.q.c0.norm() / m.kappa.abs().max(1.0)
            })
            .fold(0.0, f64::max);
        spectral.max(self.constant[0].abs()).max(self.constant[1].abs())
    }

    /// Fields and first derivatives sampled on the grid at height `y`.
    pub fn slice(&self, y: f64) -> Result<SolutionSlice> {
        if !(y >= 0.0) {
            return Err(DtnError::Domain(format!("height must be non-negative (got {y})")));
        }
        let n = self.grid.n();
        let mut parts = vec![vec![ZERO; n]; 10];
        parts[0][0] = Complex64::new(self.constant[0], 0.0);
        parts[1][0] = Complex64::new(self.constant[1], 0.0);
        for idx in 1..n {
            let Some(m) = self.mode_profiles(idx) else { continue };
            let ik = Complex64::new(0.0, m.kappa);
            let (u1, u2, q) = (m.u1.at(y), m.u2.at(y), m.q.at(y));
            parts[0][idx] = u1;
            parts[1][idx] = u2;
            parts[2][idx] = q;
            parts[3][idx] = m.psi.at(y);
            parts[4][idx] = ik * u1;
            parts[5][idx] = m.u1.dy().at(y);
            parts[6][idx] = ik * u2;
            parts[7][idx] = m.u2.dy().at(y);
            parts[8][idx] = ik * q;
            parts[9][idx] = m.q.dy().at(y);
        }
        let mut it = parts.iter().map(|p| synthesize_real(p));
        let mut next = || it.next().expect("ten parts");
        Ok(SolutionSlice {
            y,
            u1: next(),
            u2: next(),
            q: next(),
            psi: next(),
            u1_x: next(),
            u1_y: next(),
            u2_x: next(),
            u2_y: next(),
            q_x: next(),
            q_y: next(),
        })
    }

    /// (u¹, u², q, ψ) at height `y`.
    pub fn eval_fields(&self, y: f64) -> Result<InteriorSlice> {
        let s = self.slice(y)?;
        let g = self.grid;
        Ok(InteriorSlice {
            y,
            u1: BoundaryField::scalar(g, s.u1)?,
            u2: BoundaryField::scalar(g, s.u2)?,
            q: BoundaryField::scalar(g, s.q)?,
            psi: BoundaryField::scalar(g, s.psi)?,
        })
    }

    pub fn eval_interior(&self, heights: &[f64]) -> Result<InteriorField> {
        let slices = heights
            .iter()
            .map(|&y| self.eval_fields(y))
            .collect::<Result<Vec<_>>>()?;
        Ok(InteriorField {
            heights: heights.to_vec(),
            slices,
        })
    }

    /// ∬ |∇u|² yᵃ dx dy over the half-plane, per mode in closed form.
    pub fn closed_form_velocity_gradient(&self, power: u32) -> f64 {
        let l = self.grid.period();
        l * self
            .modes()
            .map(|m| {
                m.velocity_gradient()
                    .iter()
                    .map(|p| p.weighted_square_integral(power))
                    .sum::<f64>()
            })
            .sum::<f64>()
    }

    /// ∬ |q|² yᵃ dx dy in closed form.
    pub fn closed_form_pressure(&self, power: u32) -> f64 {
        let l = self.grid.period();
        l * self.modes().map(|m| m.q.weighted_square_integral(power)).sum::<f64>()
    }

    /// ∬ |∇q|² yᵃ dx dy in closed form.
    pub fn closed_form_pressure_gradient(&self, power: u32) -> f64 {
        let l = self.grid.period();
        l * self
            .modes()
            .map(|m| {
                m.pressure_gradient()
                    .iter()
                    .map(|p| p.weighted_square_integral(power))
                    .sum::<f64>()
            })
            .sum::<f64>()
    }
}

/// DtN symbol at wavenumber κ: [[2|κ|, iκ], [−iκ, 2|κ|]].
pub fn dtn_symbol(kappa: f64) -> SymbolMatrix {
    let s = Complex64::new(2.0 * kappa.abs(), 0.0);
    let ik = Complex64::new(0.0, kappa);
    [[s, ik], [-ik, s]]
}

/// The combination printed alongside the closed-form solution, with the
/// pressure attached to the first component and its printed sign. Kept only
/// for discrepancy reports.
pub fn paper_literal_symbol(kappa: f64) -> SymbolMatrix {
    let s = kappa.abs();
    [
        [
            Complex64::new(-2.0 * s, -2.0 * kappa),
            Complex64::new(2.0 * s, -kappa),
        ],
        [Complex64::new(0.0, -kappa), ZERO],
    ]
}

pub fn dtn_multiplier() -> FourierMultiplier {
    FourierMultiplier::matrix(dtn_symbol)
}

pub fn paper_literal_multiplier() -> FourierMultiplier {
    FourierMultiplier::matrix(paper_literal_symbol)
}

/// Λ(f) for two-component boundary data.
pub fn apply_dtn(f: &BoundaryField) -> Result<BoundaryField> {
    f.require_components(2)?;
    apply_multiplier(&dtn_multiplier(), f)
}

/// Both sides of ∫_∂ Λ(f)·f dx = ∬ |∇u|² dx dy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyCheck {
    pub boundary_pairing: f64,
    pub volume_energy: f64,
}

impl EnergyCheck {
    pub fn relative_gap(&self) -> f64 {
        let scale = self.boundary_pairing.abs().max(self.volume_energy.abs());
        if scale == 0.0 {
            0.0
        } else {
            (self.boundary_pairing - self.volume_energy).abs() / scale
        }
    }
}

pub fn dtn_energy_check(f: &BoundaryField) -> Result<EnergyCheck> {
    let lambda = apply_dtn(f)?;
    let boundary_pairing = lambda.pairing(f)?;
    let sol = solve_stream(f)?;
    Ok(EnergyCheck {
        boundary_pairing,
        volume_energy: sol.closed_form_velocity_gradient(0),
    })
}

/// Residuals of Δu − ∇q = 0 and div u = 0 at sample points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesResidual {
    pub momentum: f64,
    pub divergence: f64,
    /// Sum of magnitudes of the individual terms, the normalizing scale.
    pub scale: f64,
}

impl StokesResidual {
    pub fn relative(&self) -> f64 {
        if self.scale == 0.0 {
            return self.momentum.max(self.divergence);
        }
        self.momentum.max(self.divergence) / self.scale
    }
}

/// Mode-by-mode analytic residual of the Stokes system at `points` (x, y),
/// each with y > 0.
pub fn residual_stokes(sol: &StreamSolution, points: &[(f64, f64)]) -> Result<StokesResidual> {
    if let Some(&(x, y)) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(DtnError::Domain(format!(
            "residual sample ({x}, {y}) is not inside the half-plane"
        )));
    }
    let mut out = StokesResidual {
        momentum: 0.0,
        divergence: 0.0,
        scale: 0.0,
    };
    for &(x, y) in points {
        let mut mom = [ZERO; 2];
        let mut div = ZERO;
        let mut scale = 0.0;
        for m in sol.modes() {
            let k2 = Complex64::new(m.kappa * m.kappa, 0.0);
            let ik = Complex64::new(0.0, m.kappa);
            let phase = Complex64::from_polar(1.0, m.kappa * x);
            let lap1 = m.u1.dy().dy().at(y) - k2 * m.u1.at(y);
            let lap2 = m.u2.dy().dy().at(y) - k2 * m.u2.at(y);
            let qx = ik * m.q.at(y);
            let qy = m.q.dy().at(y);
            let d1 = ik * m.u1.at(y);
            let d2 = m.u2.dy().at(y);
            mom[0] += (lap1 - qx) * phase;
            mom[1] += (lap2 - qy) * phase;
            div += (d1 + d2) * phase;
            scale += lap1.norm() + lap2.norm() + qx.norm() + qy.norm() + d1.norm() + d2.norm();
        }
        out.momentum = out.momentum.max(mom[0].norm().max(mom[1].norm()));
        out.divergence = out.divergence.max(div.norm());
        out.scale = out.scale.max(scale);
    }
    Ok(out)
}
