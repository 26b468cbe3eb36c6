use std::sync::OnceLock;

use num_complex::Complex64;

use super::fft::{analyze, synthesize};
use super::grid::BoundaryGrid;
use crate::error::{DtnError, Result};

/// Relative magnitude below which a Fourier coefficient counts as inactive
/// when measuring the band limit of a field.
pub const BAND_THRESHOLD: f64 = 1e-13;

/// Periodic samples of a scalar or two-component boundary field.
///
/// The spectrum is computed on first use and cached; fields are immutable
/// after construction.
#[derive(Debug, Clone)]
pub struct BoundaryField {
    grid: BoundaryGrid,
    components: Vec<Vec<f64>>,
    spectrum: OnceLock<Vec<Vec<Complex64>>>,
}

impl BoundaryField {
    pub fn new(grid: BoundaryGrid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() || components.len() > 2 {
            return Err(DtnError::Config(format!(
                "a boundary field has 1 or 2 components (got {})",
                components.len()
            )));
        }
        for c in &components {
            if c.len() != grid.n() {
                return Err(DtnError::Dimension {
                    expected: grid.n(),
                    found: c.len(),
                });
            }
        }
        Ok(Self {
            grid,
            components,
            spectrum: OnceLock::new(),
        })
    }

    pub fn scalar(grid: BoundaryGrid, samples: Vec<f64>) -> Result<Self> {
        Self::new(grid, vec![samples])
    }

    pub fn vector(grid: BoundaryGrid, first: Vec<f64>, second: Vec<f64>) -> Result<Self> {
        Self::new(grid, vec![first, second])
    }

    pub fn from_fn(grid: BoundaryGrid, f: impl Fn(f64) -> f64) -> Self {
        let samples = grid.points().into_iter().map(f).collect();
        Self::from_parts(grid, vec![samples])
    }

    pub fn vector_from_fn(grid: BoundaryGrid, f: impl Fn(f64) -> [f64; 2]) -> Self {
        let (a, b): (Vec<f64>, Vec<f64>) = grid
            .points()
            .into_iter()
            .map(|x| {
                let v = f(x);
                (v[0], v[1])
            })
            .unzip();
        Self::from_parts(grid, vec![a, b])
    }

    pub fn zeros(grid: BoundaryGrid, n_components: usize) -> Self {
        Self::from_parts(grid, vec![vec![0.0; grid.n()]; n_components])
    }

    pub(crate) fn from_parts(grid: BoundaryGrid, components: Vec<Vec<f64>>) -> Self {
        Self {
            grid,
            components,
            spectrum: OnceLock::new(),
        }
    }

    /// Builds a real field from Fourier coefficients (FFT order, one vector per
    /// component). Imaginary residue of the synthesis is discarded.
    pub fn from_spectrum(grid: BoundaryGrid, spectra: Vec<Vec<Complex64>>) -> Result<Self> {
        if spectra.is_empty() || spectra.len() > 2 {
            return Err(DtnError::Config(format!(
                "a boundary field has 1 or 2 components (got {})",
                spectra.len()
            )));
        }
        let mut components = Vec::with_capacity(spectra.len());
        for s in &spectra {
            if s.len() != grid.n() {
                return Err(DtnError::Dimension {
                    expected: grid.n(),
                    found: s.len(),
                });
            }
            components.push(synthesize(s).into_iter().map(|c| c.re).collect());
        }
        let field = Self::from_parts(grid, components);
        let _ = field.spectrum.set(spectra);
        Ok(field)
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, c: usize) -> &[f64] {
        &self.components[c]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Fourier coefficients per component in FFT order.
    pub fn spectrum(&self) -> &[Vec<Complex64>] {
        self.spectrum
            .get_or_init(|| self.components.iter().map(|c| analyze(c)).collect())
    }

    /// Coefficient ĝ(k) of component `c`.
    pub fn coefficient(&self, c: usize, k: i64) -> Complex64 {
        self.spectrum()[c][self.grid.index(k)]
    }

    pub(crate) fn require_components(&self, count: usize) -> Result<()> {
        if self.n_components() != count {
            return Err(DtnError::Dimension {
                expected: count,
                found: self.n_components(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_same_grid(&self, other: &BoundaryField) -> Result<()> {
        if self.grid != other.grid {
            return Err(DtnError::Config(format!(
                "grid mismatch: n={} L={} vs n={} L={}",
                self.grid.n(),
                self.grid.period(),
                other.grid.n(),
                other.grid.period()
            )));
        }
        Ok(())
    }

    /// Discrete L² norm ((L/n) Σ_j |g_j|²)^{1/2}, with |·| the Euclidean norm
    /// over components.
    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0)
    }

    /// Discrete Lᵖ norm ((L/n) Σ_j |g_j|ᵖ)^{1/p}.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let h = self.grid.spacing();
        let sum: f64 = self.pointwise_magnitude().iter().map(|m| m.powf(p)).sum();
        (h * sum).powf(1.0 / p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.pointwise_magnitude().into_iter().fold(0.0, f64::max)
    }

    pub fn pointwise_magnitude(&self) -> Vec<f64> {
        (0..self.grid.n())
            .map(|j| {
                self.components
                    .iter()
                    .map(|c| c[j] * c[j])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    pub fn mean(&self, c: usize) -> f64 {
        self.components[c].iter().sum::<f64>() / self.grid.n() as f64
    }

    /// ∫ g·h dx over one period (trapezoid, exact for band-limited products).
    pub fn pairing(&self, other: &BoundaryField) -> Result<f64> {
        self.require_same_grid(other)?;
        if self.n_components() != other.n_components() {
            return Err(DtnError::Dimension {
                expected: self.n_components(),
                found: other.n_components(),
            });
        }
        let h = self.grid.spacing();
        Ok(self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
            .sum::<f64>()
            * h)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let comps = self
            .components
            .iter()
            .map(|c| c.iter().map(|v| v * factor).collect())
            .collect();
        Self::from_parts(self.grid, comps)
    }

    /// Adds `value` to every sample of every component.
    pub fn offset(&self, value: f64) -> Self {
        let comps = self
            .components
            .iter()
            .map(|c| c.iter().map(|v| v + value).collect())
            .collect();
        Self::from_parts(self.grid, comps)
    }

    /// a·self + b·other.
    pub fn combine(&self, a: f64, other: &BoundaryField, b: f64) -> Result<Self> {
        self.require_same_grid(other)?;
        other.require_components(self.n_components())?;
        let comps = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(x, y)| x.iter().zip(y).map(|(p, q)| a * p + b * q).collect())
            .collect();
        Ok(Self::from_parts(self.grid, comps))
    }

    pub fn sub(&self, other: &BoundaryField) -> Result<Self> {
        self.combine(1.0, other, -1.0)
    }

    pub fn max_abs_diff(&self, other: &BoundaryField) -> Result<f64> {
        Ok(self.sub(other)?.sup_norm())
    }

    /// Pointwise product with a scalar field, dealiased on a 2× zero-padded
    /// grid and truncated back (Nyquist mode zeroed).
    pub fn multiply_by(&self, eta: &BoundaryField) -> Result<Self> {
        self.require_same_grid(eta)?;
        eta.require_components(1)?;
        let n = self.grid.n();
        let eta_fine = padded_samples(&self.grid, &eta.spectrum()[0]);
        let mut spectra = Vec::with_capacity(self.n_components());
        for spec in self.spectrum() {
            let fine = padded_samples(&self.grid, spec);
            let prod: Vec<f64> = fine.iter().zip(&eta_fine).map(|(a, b)| a * b).collect();
            let fine_spec = analyze(&prod);
            let mut out = vec![Complex64::new(0.0, 0.0); n];
            for (idx, o) in out.iter_mut().enumerate() {
                let k = self.grid.mode(idx);
                if idx == self.grid.nyquist_index() {
                    continue;
                }
                *o = fine_spec[k.rem_euclid(2 * n as i64) as usize];
            }
            spectra.push(out);
        }
        Self::from_spectrum(self.grid, spectra)
    }

    /// Value of the trigonometric interpolant of component `c` at `x`.
    pub fn evaluate_at(&self, c: usize, x: f64) -> f64 {
        let spec = &self.spectrum()[c];
        let mut acc = 0.0;
        for (idx, coef) in spec.iter().enumerate() {
            if idx == self.grid.nyquist_index() {
                // symmetric treatment of the unpaired mode
                let kappa = self.grid.wavenumber(self.grid.mode(idx));
                acc += coef.re * (kappa * x).cos();
                continue;
            }
            let kappa = self.grid.wavenumber(self.grid.mode(idx));
            let phase = Complex64::from_polar(1.0, kappa * x);
            acc += (coef * phase).re;
        }
        acc
    }

    /// Translate by `shift`: the result samples g(x + shift).
    pub fn shifted(&self, shift: f64) -> Self {
        let spectra = self
            .spectrum()
            .iter()
            .map(|spec| {
                spec.iter()
                    .enumerate()
                    .map(|(idx, c)| {
                        if idx == self.grid.nyquist_index() {
                            return Complex64::new(0.0, 0.0);
                        }
                        let kappa = self.grid.wavenumber(self.grid.mode(idx));
                        c * Complex64::from_polar(1.0, kappa * shift)
                    })
                    .collect()
            })
            .collect();
        Self::from_spectrum(self.grid, spectra).expect("same grid")
    }

    /// Spectral resampling onto a grid with the same period and a different n.
    pub fn resampled(&self, target: BoundaryGrid) -> Result<Self> {
        if (target.period() - self.grid.period()).abs() > 1e-14 * self.grid.period() {
            return Err(DtnError::Config("resampling requires equal periods".into()));
        }
        let limit = (self.grid.n().min(target.n()) / 2) as i64;
        let spectra = self
            .spectrum()
            .iter()
            .map(|spec| {
                let mut out = vec![Complex64::new(0.0, 0.0); target.n()];
                for k in (-limit + 1)..limit {
                    out[target.index(k)] = spec[self.grid.index(k)];
                }
                out
            })
            .collect();
        Self::from_spectrum(target, spectra)
    }

    /// Largest |k| carrying a coefficient above `BAND_THRESHOLD` relative to
    /// the largest coefficient.
    pub fn band_limit(&self) -> usize {
        let spec = self.spectrum();
        let scale = spec
            .iter()
            .flat_map(|s| s.iter().map(|c| c.norm()))
            .fold(0.0, f64::max);
        if scale == 0.0 {
            return 0;
        }
        let mut band = 0usize;
        for s in spec {
            for (idx, c) in s.iter().enumerate() {
                if c.norm() > BAND_THRESHOLD * scale {
                    band = band.max(self.grid.mode(idx).unsigned_abs() as usize);
                }
            }
        }
        band
    }

    /// Single component as its own scalar field.
    pub fn extract(&self, c: usize) -> Self {
        Self::from_parts(self.grid, vec![self.components[c].clone()])
    }

    pub fn stack(first: &BoundaryField, second: &BoundaryField) -> Result<Self> {
        first.require_same_grid(second)?;
        first.require_components(1)?;
        second.require_components(1)?;
        Ok(Self::from_parts(
            first.grid,
            vec![first.components[0].clone(), second.components[0].clone()],
        ))
    }
}

/// Samples of a spectrum on the 2n-point grid (zero padding).
fn padded_samples(grid: &BoundaryGrid, spec: &[Complex64]) -> Vec<f64> {
    let n = grid.n();
    let mut fine = vec![Complex64::new(0.0, 0.0); 2 * n];
    for (idx, c) in spec.iter().enumerate() {
        if idx == grid.nyquist_index() {
            continue;
        }
        let k = grid.mode(idx);
        fine[k.rem_euclid(2 * n as i64) as usize] = *c;
    }
    synthesize(&fine).into_iter().map(|c| c.re).collect()
}

/// Complex samples of a spectrum without discarding the imaginary part.
pub fn synthesize_complex(spectrum: &[Complex64]) -> Vec<Complex64> {
    synthesize(spectrum)
}
