//! Periodic boundary grid, Fourier analysis and synthesis, multiplier
//! operators, and extensions of boundary functions into the half-plane.
//!
//! The boundary line is modeled by a torus of length `L`. Coefficients use
//! the convention g_j = Σ_k ĝ(k) e^{iκ_k x_j} with κ_k = 2πk/L, so that
//! Parseval reads (L/n)Σ|g_j|² = L Σ|ĝ(k)|².

mod bump;
mod extension;
mod fft;
mod field;
mod grid;
mod multiplier;

pub use bump::{standard_profile, BumpSpec, BUMP_TOLERANCE};
pub use extension::{extension_slice, ExtensionKind, ExtensionSlice};
pub use field::{synthesize_complex, BoundaryField, BAND_THRESHOLD};
pub use grid::BoundaryGrid;
pub use multiplier::{apply_multiplier, multiplier_spectrum, FourierMultiplier, SymbolMatrix};

use num_complex::Complex64;

use crate::error::{DtnError, Result};

pub(crate) fn synthesize_real(spec: &[Complex64]) -> Vec<f64> {
    fft::synthesize(spec).into_iter().map(|c| c.re).collect()
}

/// Fourier coefficients of every component, FFT order.
pub fn to_spectrum(g: &BoundaryField) -> Vec<Vec<Complex64>> {
    g.spectrum().to_vec()
}

pub fn from_spectrum(grid: BoundaryGrid, spectra: Vec<Vec<Complex64>>) -> Result<BoundaryField> {
    BoundaryField::from_spectrum(grid, spectra)
}

/// Symbol −i·sgn(κ).
pub fn hilbert_multiplier() -> FourierMultiplier {
    FourierMultiplier::scalar(|k| Complex64::new(0.0, -k.signum() * (k != 0.0) as i32 as f64))
}

/// Symbol iκ.
pub fn derivative_multiplier() -> FourierMultiplier {
    FourierMultiplier::scalar(|k| Complex64::new(0.0, k))
}

pub fn hilbert_transform(g: &BoundaryField) -> Result<BoundaryField> {
    g.require_components(1)?;
    apply_multiplier(&hilbert_multiplier(), g)
}

pub fn tangential_derivative(g: &BoundaryField) -> Result<BoundaryField> {
    g.require_components(1)?;
    apply_multiplier(&derivative_multiplier(), g)
}

/// Poisson extension e^{−|κ|y} applied to every component.
pub fn harmonic_extension_sample(g: &BoundaryField, y: f64) -> Result<BoundaryField> {
    if !(y >= 0.0) {
        return Err(DtnError::Domain(format!("height must be non-negative (got {y})")));
    }
    let m = FourierMultiplier::scalar(move |k| Complex64::new((-k.abs() * y).exp(), 0.0));
    per_component(&m, g)
}

/// Periodic convolution ζₜ∗g with ζₜ(x) = t⁻¹ζ(x/t).
pub fn mollifier_extension_sample(g: &BoundaryField, t: f64, bump: &BumpSpec) -> Result<BoundaryField> {
    bump.validate()?;
    if !(t > 0.0) {
        return Err(DtnError::Domain(format!("mollifier height must be positive (got {t})")));
    }
    let b = bump.clone();
    let m = FourierMultiplier::scalar(move |k| Complex64::new(b.transform(k * t)[0], 0.0));
    per_component(&m, g)
}

fn per_component(m: &FourierMultiplier, g: &BoundaryField) -> Result<BoundaryField> {
    let parts = (0..g.n_components())
        .map(|c| apply_multiplier(m, &g.extract(c)))
        .collect::<Result<Vec<_>>>()?;
    match parts.len() {
        1 => Ok(parts.into_iter().next().expect("one part")),
        _ => BoundaryField::stack(&parts[0], &parts[1]),
    }
}

/// Random real trigonometric polynomial with modes 1..=band per component:
/// cosine and sine coefficients uniform in [−1, 1], damped by 1/k, plus a
/// uniform mean in [−1, 1] when `with_mean` is set.
pub fn random_band_limited<R: rand::Rng>(
    grid: BoundaryGrid,
    rng: &mut R,
    band: usize,
    n_components: usize,
    with_mean: bool,
) -> Result<BoundaryField> {
    if band == 0 || band >= grid.n() / 2 {
        return Err(DtnError::Config(format!(
            "band must lie in 1..{} (got {band})",
            grid.n() / 2
        )));
    }
    let w = std::f64::consts::TAU / grid.period();
    let xs = grid.points();
    let comps = (0..n_components)
        .map(|_| {
            let mean = if with_mean { rng.gen_range(-1.0..=1.0) } else { 0.0 };
            let terms: Vec<(f64, f64, f64)> = (1..=band)
                .map(|k| {
                    let a: f64 = rng.gen_range(-1.0..=1.0);
                    let b: f64 = rng.gen_range(-1.0..=1.0);
                    (w * k as f64, a / k as f64, b / k as f64)
                })
                .collect();
            xs.iter()
                .map(|&x| mean + terms.iter().map(|&(kw, a, b)| a * (kw * x).cos() + b * (kw * x).sin()).sum::<f64>())
                .collect()
        })
        .collect();
    BoundaryField::new(grid, comps)
}

/// Discrete C^{0,1} norm: max|g_j| + max_j |g_{j+1} − g_j| / (L/n), periodic.
pub fn lipschitz_norm(g: &BoundaryField) -> Result<f64> {
    g.require_components(1)?;
    Ok(g.sup_norm() + lipschitz_seminorm(g.component(0), g.grid().spacing()))
}

/// Forward-difference Lipschitz seminorm of periodic samples.
pub fn lipschitz_seminorm(samples: &[f64], spacing: f64) -> f64 {
    let n = samples.len();
    (0..n)
        .map(|j| (samples[(j + 1) % n] - samples[j]).abs())
        .fold(0.0, f64::max)
        / spacing
}
