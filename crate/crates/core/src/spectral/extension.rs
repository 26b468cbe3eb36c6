use super::bump::BumpSpec;

/// How a boundary function is extended into the half-plane.
#[derive(Debug, Clone)]
pub enum ExtensionKind {
    /// Poisson extension, multiplier e^{−|κ|t}.
    Harmonic,
    /// Mollified extension ζₜ∗g, multiplier ζ̂(κt).
    Mollifier(BumpSpec),
    /// Constant in t.
    Constant,
}

impl ExtensionKind {
    pub fn mollifier() -> Self {
        ExtensionKind::Mollifier(BumpSpec::standard())
    }

    pub fn label(&self) -> &'static str {
        match self {
            ExtensionKind::Harmonic => "harmonic",
            ExtensionKind::Mollifier(_) => "mollifier",
            ExtensionKind::Constant => "constant",
        }
    }

    /// Per-mode profile m(κ, t) with ∂ₜm and ∂ₜ²m.
    pub fn profile(&self, kappa: f64, t: f64) -> [f64; 3] {
        match self {
            ExtensionKind::Harmonic => {
                let s = kappa.abs();
                let e = (-s * t).exp();
                [e, -s * e, s * s * e]
            }
            ExtensionKind::Mollifier(bump) => {
                let [v, d1, d2] = bump.transform(kappa * t);
                [v, kappa * d1, kappa * kappa * d2]
            }
            ExtensionKind::Constant => [1.0, 0.0, 0.0],
        }
    }
}

use num_complex::Complex64;

use super::field::BoundaryField;
use super::multiplier::ZERO;
use crate::error::Result;

/// Values and first/second derivatives of an extended scalar at one height,
/// sampled on the boundary grid.
#[derive(Debug, Clone)]
pub struct ExtensionSlice {
    pub value: Vec<f64>,
    pub dx: Vec<f64>,
    pub dt: Vec<f64>,
    pub dxx: Vec<f64>,
    pub dxt: Vec<f64>,
    pub dtt: Vec<f64>,
}

impl ExtensionSlice {
    /// Frobenius norm of the Hessian (∂ₓₓ, ∂ₓₜ, ∂ₜₓ, ∂ₜₜ) at each grid point.
    pub fn hessian_norm(&self) -> Vec<f64> {
        (0..self.value.len())
            .map(|j| {
                (self.dxx[j].powi(2) + 2.0 * self.dxt[j].powi(2) + self.dtt[j].powi(2)).sqrt()
            })
            .collect()
    }

    pub fn gradient_norm(&self) -> Vec<f64> {
        (0..self.value.len())
            .map(|j| self.dx[j].hypot(self.dt[j]))
            .collect()
    }
}

/// Samples the extension of scalar `g` at height `t`.
pub fn extension_slice(g: &BoundaryField, kind: &ExtensionKind, t: f64) -> Result<ExtensionSlice> {
    g.require_components(1)?;
    let grid = *g.grid();
    let spec = &g.spectrum()[0];
    let n = grid.n();
    let mut parts = vec![vec![ZERO; n]; 6];
    for idx in 0..n {
        if idx == grid.nyquist_index() {
            continue;
        }
        let kappa = grid.wavenumber(grid.mode(idx));
        let [m, mt, mtt] = kind.profile(kappa, t);
        let c = spec[idx];
        let ik = Complex64::new(0.0, kappa);
        parts[0][idx] = c * m;
        parts[1][idx] = c * ik * m;
        parts[2][idx] = c * mt;
        parts[3][idx] = c * ik * ik * m;
        parts[4][idx] = c * ik * mt;
        parts[5][idx] = c * mtt;
    }
    let mut real = parts
        .into_iter()
        .map(|s| super::synthesize_real(&s))
        .collect::<Vec<_>>()
        .into_iter();
    let mut next = || real.next().expect("six parts");
    Ok(ExtensionSlice {
        value: next(),
        dx: next(),
        dt: next(),
        dxx: next(),
        dxt: next(),
        dtt: next(),
    })
}
