use std::sync::{Arc, OnceLock};

use crate::error::{DtnError, Result};
use crate::quadrature::composite_gauss;

/// Tolerance on the mass and first moment of a bump profile.
pub const BUMP_TOLERANCE: f64 = 1e-10;

const PANELS: usize = 64;
const ORDER: usize = 16;

// Transform table: ξ in [0, TABLE_MAX] with step 1/TABLE_DENSITY.
const TABLE_DENSITY: f64 = 16.0;
const TABLE_MAX: f64 = 1024.0;

/// Standard C∞ bump exp(1/(s²−1)) on (−1, 1), not normalized.
pub fn standard_profile(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 / (s * s - 1.0)).exp()
    }
}

/// A smooth, symmetric, compactly supported bump ζ on [−1, 1] with unit mass.
///
/// Fourier data ζ̂(ξ) = ∫ ζ(s) cos(ξs) ds and its first two derivatives are
/// evaluated by composite Gauss–Legendre quadrature on the half support.
#[derive(Clone)]
pub struct BumpSpec {
    profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    scale: f64,
    // (s, w·ζ(s)) for s in (0, 1)
    half_nodes: Arc<Vec<(f64, f64)>>,
    // ζ̂ and its first four derivatives at the table nodes
    table: Arc<OnceLock<Vec<[f64; 5]>>>,
}

impl std::fmt::Debug for BumpSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BumpSpec")
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

impl BumpSpec {
    /// The normalized standard bump.
    pub fn standard() -> Self {
        let mass = raw_moment(&standard_profile, 0);
        Self::build(Arc::new(standard_profile), 1.0 / mass)
    }

    /// Uses `profile` as given (supported in [−1, 1]); rejects it unless it
    /// has unit mass and vanishing first moment.
    pub fn from_profile(profile: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Result<Self> {
        let bump = Self::build(Arc::new(profile), 1.0);
        bump.validate()?;
        Ok(bump)
    }

    fn build(profile: Arc<dyn Fn(f64) -> f64 + Send + Sync>, scale: f64) -> Self {
        let half_nodes = composite_gauss(0.0, 1.0, PANELS, ORDER)
            .into_iter()
            .map(|(s, w)| (s, w * scale * profile(s)))
            .collect();
        Self {
            profile,
            scale,
            half_nodes: Arc::new(half_nodes),
            table: Arc::new(OnceLock::new()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mass = self.mass();
        if (mass - 1.0).abs() > BUMP_TOLERANCE {
            return Err(DtnError::Config(format!(
                "bump must have unit mass (got {mass:.12})"
            )));
        }
        let first = self.first_moment();
        if first.abs() > BUMP_TOLERANCE {
            return Err(DtnError::Config(format!(
                "bump must be symmetric (first moment {first:.3e})"
            )));
        }
        Ok(())
    }

    pub fn value(&self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.scale * (self.profile)(s)
        }
    }

    /// Centered-difference derivative of the profile.
    pub fn derivative(&self, s: f64) -> f64 {
        let h = 1e-6;
        (self.value(s + h) - self.value(s - h)) / (2.0 * h)
    }

    pub fn mass(&self) -> f64 {
        self.scale * raw_moment(&*self.profile, 0)
    }

    pub fn first_moment(&self) -> f64 {
        self.scale * raw_moment(&*self.profile, 1)
    }

    /// ∫ |s| |ζ(s) + sζ′(s)| ds, the constant bounding |∂ₜ(ζₜ∗ψ)| by Lip(ψ).
    pub fn dilation_moment(&self) -> f64 {
        composite_gauss(-1.0, 1.0, 2 * PANELS, ORDER)
            .into_iter()
            .map(|(s, w)| w * s.abs() * (self.value(s) + s * self.derivative(s)).abs())
            .sum()
    }

    /// ζ̂(ξ), ζ̂′(ξ), ζ̂″(ξ), interpolated from a precomputed table.
    pub fn transform(&self, xi: f64) -> [f64; 3] {
        let a = xi.abs();
        if a >= TABLE_MAX {
            return self.transform_direct(xi);
        }
        let table = self.table.get_or_init(|| {
            let count = (TABLE_MAX * TABLE_DENSITY) as usize + 1;
            (0..count).map(|i| self.derivatives(i as f64 / TABLE_DENSITY)).collect()
        });
        let pos = a * TABLE_DENSITY;
        let i = (pos.floor() as usize).min(table.len() - 2);
        let u = pos - i as f64;
        let d = 1.0 / TABLE_DENSITY;
        let (l, r) = (&table[i], &table[i + 1]);
        let hermite = |m: usize| {
            let u2 = u * u;
            let u3 = u2 * u;
            let u4 = u3 * u;
            let u5 = u4 * u;
            l[m] * (1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5)
                + d * l[m + 1] * (u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5)
                + d * d * l[m + 2] * 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5)
                + r[m] * (10.0 * u3 - 15.0 * u4 + 6.0 * u5)
                + d * r[m + 1] * (-4.0 * u3 + 7.0 * u4 - 3.0 * u5)
                + d * d * r[m + 2] * 0.5 * (u3 - 2.0 * u4 + u5)
        };
        let sign = if xi < 0.0 { -1.0 } else { 1.0 };
        [hermite(0), sign * hermite(1), hermite(2)]
    }

    /// ζ̂(ξ), ζ̂′(ξ), ζ̂″(ξ) by direct quadrature.
    pub fn transform_direct(&self, xi: f64) -> [f64; 3] {
        let d = self.derivatives(xi);
        [d[0], d[1], d[2]]
    }

    fn derivatives(&self, xi: f64) -> [f64; 5] {
        let mut acc = [0.0; 5];
        for &(s, wz) in self.half_nodes.iter() {
            let (sn, cs) = (xi * s).sin_cos();
            let s2 = s * s;
            acc[0] += wz * cs;
            acc[1] -= wz * s * sn;
            acc[2] -= wz * s2 * cs;
            acc[3] += wz * s2 * s * sn;
            acc[4] += wz * s2 * s2 * cs;
        }
        acc.map(|v| 2.0 * v)
    }
}

fn raw_moment(profile: &dyn Fn(f64) -> f64, power: i32) -> f64 {
    composite_gauss(-1.0, 1.0, 2 * PANELS, ORDER)
        .into_iter()
        .map(|(s, w)| {
            let v = if s.abs() >= 1.0 { 0.0 } else { profile(s) };
            w * v * s.powi(power)
        })
        .sum()
}
