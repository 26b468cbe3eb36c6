use std::f64::consts::PI;

use crate::error::{DtnError, Result};

/// Uniform periodic grid on a torus of length `period`, standing in for the
/// boundary line of the half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryGrid {
    n: usize,
    period: f64,
}

impl BoundaryGrid {
    /// `n` must be a power of two no smaller than 8 and `period` positive.
    pub fn new(n: usize, period: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(DtnError::Config(format!(
                "n must be a power of two and at least 8 (got {n})"
            )));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(DtnError::Config(format!(
                "period must be positive and finite (got {period})"
            )));
        }
        Ok(Self { n, period })
    }

    /// Grid of period 2π.
    pub fn standard(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn spacing(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn point(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.point(j)).collect()
    }

    /// Signed mode number stored at FFT index `idx`.
    pub fn mode(&self, idx: usize) -> i64 {
        let n = self.n as i64;
        let i = idx as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// FFT index of mode `k`, `k` in `-n/2..n/2`.
    pub fn index(&self, k: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(k >= -n / 2 && k < n / 2);
        k.rem_euclid(n) as usize
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    /// Physical wavenumber 2πk/L of mode `k`.
    pub fn wavenumber(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    /// Wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.wavenumber(self.mode(i))).collect()
    }

    /// Smallest nonzero |wavenumber|.
    pub fn min_wavenumber(&self) -> f64 {
        2.0 * PI / self.period
    }

    pub fn with_n(&self, n: usize) -> Result<Self> {
        Self::new(n, self.period)
    }
}
