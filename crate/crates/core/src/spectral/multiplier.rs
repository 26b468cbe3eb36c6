use std::sync::Arc;

use num_complex::Complex64;

use super::field::BoundaryField;
use crate::error::{DtnError, Result};

/// 2×2 symbol matrix; scalar multipliers use entry [0][0].
pub type SymbolMatrix = [[Complex64; 2]; 2];

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A Fourier multiplier: a map from physical wavenumber κ = 2πk/L to a
/// complex d×d matrix, d ∈ {1, 2}.
#[derive(Clone)]
pub struct FourierMultiplier {
    dim: usize,
    symbol: Arc<dyn Fn(f64) -> SymbolMatrix + Send + Sync>,
}

impl std::fmt::Debug for FourierMultiplier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierMultiplier")
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

impl FourierMultiplier {
    pub fn scalar(symbol: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Self {
            dim: 1,
            symbol: Arc::new(move |k| [[symbol(k), ZERO], [ZERO, ZERO]]),
        }
    }

    pub fn matrix(symbol: impl Fn(f64) -> SymbolMatrix + Send + Sync + 'static) -> Self {
        Self {
            dim: 2,
            symbol: Arc::new(symbol),
        }
    }

    pub fn identity(dim: usize) -> Self {
        let one = Complex64::new(1.0, 0.0);
        if dim == 1 {
            Self::scalar(move |_| one)
        } else {
            Self::matrix(move |_| [[one, ZERO], [ZERO, one]])
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, kappa: f64) -> SymbolMatrix {
        (self.symbol)(kappa)
    }

    /// Symbol of `self ∘ other`.
    pub fn compose(&self, other: &FourierMultiplier) -> Result<Self> {
        if self.dim != other.dim {
            return Err(DtnError::Dimension {
                expected: self.dim,
                found: other.dim,
            });
        }
        let (a, b) = (self.symbol.clone(), other.symbol.clone());
        let dim = self.dim;
        Ok(Self {
            dim,
            symbol: Arc::new(move |k| mat_mul(&a(k), &b(k), dim)),
        })
    }

    /// Largest entrywise deviation from M(−κ) = conj(M(κ)) over the given
    /// wavenumbers.
    pub fn reality_defect(&self, wavenumbers: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for &k in wavenumbers {
            let (p, m) = (self.at(k), self.at(-k));
            for i in 0..self.dim {
                for j in 0..self.dim {
                    worst = worst.max((m[i][j] - p[i][j].conj()).norm());
                }
            }
        }
        worst
    }
}

pub(crate) fn mat_mul(a: &SymbolMatrix, b: &SymbolMatrix, dim: usize) -> SymbolMatrix {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..dim {
        for j in 0..dim {
            for l in 0..dim {
                out[i][j] += a[i][l] * b[l][j];
            }
        }
    }
    out
}

/// Spectrum of M(κ)ĝ(k) per mode, Nyquist mode zeroed.
pub fn multiplier_spectrum(m: &FourierMultiplier, g: &BoundaryField) -> Result<Vec<Vec<Complex64>>> {
    if m.dim() != g.n_components() {
        return Err(DtnError::Dimension {
            expected: m.dim(),
            found: g.n_components(),
        });
    }
    let grid = g.grid();
    let spec = g.spectrum();
    let n = grid.n();
    let mut out = vec![vec![ZERO; n]; m.dim()];
    for idx in 0..n {
        if idx == grid.nyquist_index() {
            continue;
        }
        let sym = m.at(grid.wavenumber(grid.mode(idx)));
        for i in 0..m.dim() {
            let mut acc = ZERO;
            for (j, s) in spec.iter().enumerate() {
                acc += sym[i][j] * s[idx];
            }
            out[i][idx] = acc;
        }
    }
    Ok(out)
}

/// Output spectrum ĥ(k) = M(k)ĝ(k), synthesized back to a real field.
pub fn apply_multiplier(m: &FourierMultiplier, g: &BoundaryField) -> Result<BoundaryField> {
    let spectra = multiplier_spectrum(m, g)?;
    BoundaryField::from_spectrum(*g.grid(), spectra)
}
