//! Quadrature on the half-plane: graded height grids, weighted square
//! functions, nontangential maximal functions and Carleson norms over dyadic
//! tents.
//!
//! Heights are discretized by a short Gauss–Legendre layer on [0, y_min]
//! followed by geometrically spaced levels on [y_min, Y], integrated with
//! composite Simpson in s = ln y. Partial integrals ∫₀^a integrate the same
//! piecewise-quadratic interpolant, so adjacent height ranges add up exactly.

use rayon::prelude::*;

use crate::error::{DtnError, Result};
use crate::quadrature::gauss_legendre;
use crate::spectral::{BoundaryField, BoundaryGrid};
use crate::stokes::{SolutionSlice, StreamSolution};

/// Gauss points in the boundary layer [0, y_min].
pub const BOUNDARY_LAYER_ORDER: usize = 8;

/// Default cone aperture N₀.
pub const DEFAULT_APERTURE: f64 = 2.0;

/// Height grid paired with a boundary grid.
#[derive(Debug, Clone)]
pub struct GradedGrid {
    boundary: BoundaryGrid,
    y_min: f64,
    y_max: f64,
    panels: usize,
    heights: Vec<f64>,
    weights: Vec<f64>,
    log_step: f64,
}

impl GradedGrid {
    /// `panels` geometric panels between `y_min` and `y_max`; must be a
    /// multiple of four so that every other level forms a Simpson grid too.
    pub fn new(boundary: BoundaryGrid, y_min: f64, y_max: f64, panels: usize) -> Result<Self> {
        let l = boundary.period();
        if !(y_min > 0.0) {
            return Err(DtnError::Config(format!("y_min must be positive (got {y_min})")));
        }
        if !(y_max > y_min) {
            return Err(DtnError::Config(format!("Y must exceed y_min (got {y_max})")));
        }
        if y_max > 4.0 * l * (1.0 + 1e-12) {
            return Err(DtnError::Config(format!("Y must not exceed 4L (got {y_max})")));
        }
        if panels < 4 || !panels.is_multiple_of(4) {
            return Err(DtnError::Config(format!(
                "y_levels must be a positive multiple of 4 (got {panels})"
            )));
        }
        let (gx, gw) = gauss_legendre(BOUNDARY_LAYER_ORDER);
        let mut heights: Vec<f64> = gx.iter().map(|x| 0.5 * y_min * (x + 1.0)).collect();
        let mut weights: Vec<f64> = gw.iter().map(|w| 0.5 * y_min * w).collect();
        let log_step = (y_max / y_min).ln() / panels as f64;
        for i in 0..=panels {
            let y = if i == panels { y_max } else { y_min * (log_step * i as f64).exp() };
            heights.push(y);
            weights.push(simpson_factor(i, panels) * log_step * y);
        }
        Ok(Self {
            boundary,
            y_min,
            y_max,
            panels,
            heights,
            weights,
            log_step,
        })
    }

    /// Defaults y_min = L/(4n) and Y = 2L.
    pub fn with_defaults(boundary: BoundaryGrid, panels: usize) -> Result<Self> {
        let l = boundary.period();
        Self::new(boundary, l / (4.0 * boundary.n() as f64), 2.0 * l, panels)
    }

    pub fn boundary(&self) -> &BoundaryGrid {
        &self.boundary
    }

    pub fn y_min(&self) -> f64 {
        self.y_min
    }

    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn panels(&self) -> usize {
        self.panels
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    /// Weights for ∫₀^Y g(y) dy.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.heights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heights.is_empty()
    }

    fn layer(&self) -> usize {
        BOUNDARY_LAYER_ORDER
    }

    /// Same heights with every other geometric level removed; returns weights
    /// on the full level list with zeros at the dropped levels.
    pub fn coarse_weights(&self) -> Vec<f64> {
        let mut w = self.weights.clone();
        let off = self.layer();
        for i in 0..=self.panels {
            let idx = off + i;
            w[idx] = if i % 2 == 1 {
                0.0
            } else {
                simpson_factor(i / 2, self.panels / 2) * 2.0 * self.log_step * self.heights[idx]
            };
        }
        w
    }

    /// Weights for ∫₀^a g(y) dy, y_min ≤ a ≤ Y.
    pub fn weights_to(&self, a: f64) -> Result<Vec<f64>> {
        if a < self.y_min * (1.0 - 1e-12) || a > self.y_max * (1.0 + 1e-12) {
            return Err(DtnError::Domain(format!(
                "partial height {a} outside [{}, {}]",
                self.y_min, self.y_max
            )));
        }
        let mut w = vec![0.0; self.len()];
        let off = self.layer();
        w[..off].copy_from_slice(&self.weights[..off]);
        let h = self.log_step;
        let u_a = ((a / self.y_min).ln() / h).clamp(0.0, self.panels as f64);
        for pair in 0..self.panels / 2 {
            let start = 2 * pair;
            let tau = (u_a - start as f64).min(2.0);
            if tau <= 0.0 {
                break;
            }
            for (node, b) in quadratic_partial(tau).into_iter().enumerate() {
                w[off + start + node] += h * b * self.heights[off + start + node];
            }
        }
        Ok(w)
    }

    /// ∫₀^Y g dy from per-level values.
    pub fn integrate(&self, per_level: &[f64]) -> f64 {
        per_level.iter().zip(&self.weights).map(|(g, w)| g * w).sum()
    }

    /// Relative size of the truncated tail beyond Y for fields decaying at
    /// least like the slowest nonzero mode, e^{−2(2π/L)Y}.
    pub fn tail_bound(&self) -> f64 {
        (-2.0 * self.boundary.min_wavenumber() * self.y_max).exp()
    }

    /// The grid with twice as many geometric panels.
    pub fn refined(&self) -> Result<Self> {
        Self::new(self.boundary, self.y_min, self.y_max, 2 * self.panels)
    }

    /// Same height layout over a different boundary grid.
    pub fn with_boundary(&self, boundary: BoundaryGrid) -> Result<Self> {
        Self::new(boundary, self.y_min, self.y_max, self.panels)
    }
}

fn simpson_factor(i: usize, panels: usize) -> f64 {
    if i == 0 || i == panels {
        1.0 / 3.0
    } else if i % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// ∫₀^τ of the Lagrange basis on nodes u = 0, 1, 2.
fn quadratic_partial(tau: f64) -> [f64; 3] {
    let (t2, t3) = (tau * tau, tau * tau * tau);
    [
        0.5 * (t3 / 3.0 - 1.5 * t2 + 2.0 * tau),
        t2 - t3 / 3.0,
        0.5 * (t3 / 3.0 - 0.5 * t2),
    ]
}

/// Vector-valued samples on the graded grid: `values[level][component][j]`.
#[derive(Debug, Clone)]
pub struct LevelField {
    pub values: Vec<Vec<Vec<f64>>>,
}

impl LevelField {
    /// Samples `sampler(y)` at every level in parallel.
    pub fn sample<F>(grid: &GradedGrid, sampler: F) -> Self
    where
        F: Fn(f64) -> Vec<Vec<f64>> + Sync,
    {
        let values = grid.heights().par_iter().map(|&y| sampler(y)).collect();
        Self { values }
    }

    /// Scalar samples from a pointwise function of (x, y).
    pub fn pointwise<F>(grid: &GradedGrid, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        let xs = grid.boundary().points();
        Self::sample(grid, |y| vec![xs.iter().map(|&x| f(x, y)).collect()])
    }

    pub fn scalar_from(values: Vec<Vec<f64>>) -> Self {
        Self {
            values: values.into_iter().map(|v| vec![v]).collect(),
        }
    }

    /// Euclidean magnitude over components, per level.
    pub fn magnitude(&self) -> Vec<Vec<f64>> {
        self.values
            .iter()
            .map(|comps| {
                let n = comps[0].len();
                (0..n)
                    .map(|j| comps.iter().map(|c| c[j] * c[j]).sum::<f64>().sqrt())
                    .collect()
            })
            .collect()
    }

    fn squared_x_integrals(&self, spacing: f64) -> Vec<f64> {
        self.values
            .iter()
            .map(|comps| {
                comps
                    .iter()
                    .map(|c| c.iter().map(|v| v * v).sum::<f64>())
                    .sum::<f64>()
                    * spacing
            })
            .collect()
    }
}

/// ∬|v|² tᵃ with the coarse-grid value and a Richardson error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeNorm {
    pub value: f64,
    pub coarse: f64,
    pub richardson_error: f64,
    pub tail_bound: f64,
}

/// ∬ |v(x, t)|² tᵃ dx dt for a ∈ {1, 3}.
pub fn weighted_volume_norm(grid: &GradedGrid, field: &LevelField, power: u32) -> Result<VolumeNorm> {
    if power != 1 && power != 3 {
        return Err(DtnError::Unsupported(format!(
            "weight t^{power}: only t and t³ are supported"
        )));
    }
    Ok(weighted_integral(grid, field, power))
}

/// Same as [`weighted_volume_norm`] without the restriction on the power.
pub fn weighted_integral(grid: &GradedGrid, field: &LevelField, power: u32) -> VolumeNorm {
    let per_level: Vec<f64> = field
        .squared_x_integrals(grid.boundary().spacing())
        .into_iter()
        .zip(grid.heights())
        .map(|(v, y)| v * y.powi(power as i32))
        .collect();
    let value = grid.integrate(&per_level);
    let coarse: f64 = per_level.iter().zip(grid.coarse_weights()).map(|(g, w)| g * w).sum();
    VolumeNorm {
        value,
        coarse,
        richardson_error: (value - coarse) / 15.0,
        tail_bound: grid.tail_bound(),
    }
}

/// (v)*(x_j): max of |v| over grid points in the cone
/// |(x′, y) − (x_j, 0)| ≤ N₀ y.
pub fn nontangential_max(grid: &GradedGrid, field: &LevelField, aperture: f64) -> Result<BoundaryField> {
    if !(aperture >= 1.0) {
        return Err(DtnError::Domain(format!("aperture N0 must be ≥ 1 (got {aperture})")));
    }
    let b = grid.boundary();
    let n = b.n();
    let h = b.spacing();
    let slope = (aperture * aperture - 1.0).sqrt();
    let mags = field.magnitude();
    let mut out = vec![0.0f64; n];
    for (level, &y) in grid.heights().iter().enumerate() {
        let half_width = slope * y.min(grid.y_max());
        let m = ((half_width / h) * (1.0 + 1e-12)).floor() as usize;
        let window = windowed_max(&mags[level], m);
        for (o, w) in out.iter_mut().zip(window) {
            *o = o.max(w);
        }
    }
    BoundaryField::scalar(*b, out)
}

/// Periodic max over j−m..=j+m.
fn windowed_max(values: &[f64], m: usize) -> Vec<f64> {
    let n = values.len();
    if 2 * m + 1 >= n {
        let all = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return vec![all; n];
    }
    let mut out = vec![0.0; n];
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let width = 2 * m + 1;
    // positions p in 0..n+2m map to index (p + n − m) mod n
    let at = |p: usize| values[(p + n - m) % n];
    for p in 0..(n + 2 * m) {
        while let Some(&back) = deque.back() {
            if at(back) <= at(p) {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(p);
        if let Some(&front) = deque.front() {
            if front + width <= p {
                deque.pop_front();
            }
        }
        if p + 1 >= width {
            out[p + 1 - width] = at(*deque.front().expect("nonempty"));
        }
    }
    out
}

/// Dyadic intervals of the torus at levels 0..=depth.
#[derive(Debug, Clone, Copy)]
pub struct TentFamily {
    boundary: BoundaryGrid,
    depth: u32,
}

/// One dyadic interval Q = [start, start + side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicInterval {
    pub level: u32,
    pub index: usize,
    pub first_point: usize,
    pub points: usize,
    pub side: f64,
}

impl TentFamily {
    /// All levels whose intervals hold at least one grid point and whose tent
    /// height lies within the graded grid.
    pub fn for_grid(grid: &GradedGrid) -> Self {
        let b = *grid.boundary();
        let mut depth = 0;
        while (1usize << (depth + 1)) <= b.n()
            && b.period() / f64::from(1u32 << (depth + 1)) >= grid.y_min()
        {
            depth += 1;
        }
        Self { boundary: b, depth }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn side(&self, level: u32) -> f64 {
        self.boundary.period() / f64::from(1u32 << level)
    }

    pub fn intervals(&self, level: u32) -> impl Iterator<Item = DyadicInterval> + '_ {
        let count = 1usize << level;
        let points = self.boundary.n() / count;
        let side = self.side(level);
        (0..count).map(move |index| DyadicInterval {
            level,
            index,
            first_point: index * points,
            points,
            side,
        })
    }
}

/// ν(T(Q)) and ν(T(Q))/|Q| for one tent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TentRecord {
    pub interval: DyadicInterval,
    pub mass: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct CarlesonReport {
    pub norm: f64,
    pub table: Vec<TentRecord>,
}

/// Per-point column integrals ∫_lo^hi density dt for a scalar density.
fn column_integrals(weights: &[f64], density: &LevelField) -> Vec<f64> {
    let n = density.values[0][0].len();
    let mut col = vec![0.0; n];
    for (level, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        for (c, v) in col.iter_mut().zip(&density.values[level][0]) {
            *c += w * v;
        }
    }
    col
}

fn check_density(density: &LevelField) -> Result<()> {
    if density.values.iter().any(|l| l.len() != 1) {
        return Err(DtnError::Dimension {
            expected: 1,
            found: density.values[0].len(),
        });
    }
    if let Some(v) = density
        .values
        .iter()
        .flat_map(|l| l[0].iter())
        .find(|v| **v < 0.0 || v.is_nan())
    {
        return Err(DtnError::Domain(format!("density must be non-negative (found {v})")));
    }
    Ok(())
}

/// ν(Q × (lo, hi]) for the measure density·dx dt.
pub fn slab_mass(grid: &GradedGrid, density: &LevelField, q: &DyadicInterval, lo: f64, hi: f64) -> Result<f64> {
    check_density(density)?;
    let w_hi = grid.weights_to(hi)?;
    let w_lo = if lo <= 0.0 { vec![0.0; grid.len()] } else { grid.weights_to(lo)? };
    let w: Vec<f64> = w_hi.iter().zip(&w_lo).map(|(a, b)| a - b).collect();
    let col = column_integrals(&w, density);
    let h = grid.boundary().spacing();
    Ok(col[q.first_point..q.first_point + q.points].iter().sum::<f64>() * h)
}

/// sup over dyadic Q of ν(T(Q))/|Q|, with the per-tent table.
pub fn carleson_norm(grid: &GradedGrid, density: &LevelField) -> Result<CarlesonReport> {
    check_density(density)?;
    let tents = TentFamily::for_grid(grid);
    let h = grid.boundary().spacing();
    let mut table = Vec::new();
    for level in 0..=tents.depth() {
        let w = grid.weights_to(tents.side(level).min(grid.y_max()))?;
        let col = column_integrals(&w, density);
        for q in tents.intervals(level) {
            let mass = col[q.first_point..q.first_point + q.points].iter().sum::<f64>() * h;
            table.push(TentRecord {
                interval: q,
                mass,
                ratio: mass / q.side,
            });
        }
    }
    let norm = table.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(CarlesonReport { norm, table })
}

/// Solution slices at every level of the grid.
pub fn sample_solution(grid: &GradedGrid, sol: &StreamSolution) -> Result<Vec<SolutionSlice>> {
    grid.heights().par_iter().map(|&y| sol.slice(y)).collect()
}

/// |∇u|²·t as a Carleson density.
pub fn gradient_density(grid: &GradedGrid, slices: &[SolutionSlice]) -> LevelField {
    LevelField::scalar_from(
        slices
            .iter()
            .zip(grid.heights())
            .map(|(s, &y)| s.velocity_gradient_sq().into_iter().map(|v| v * y).collect())
            .collect(),
    )
}

/// |q|²·t as a Carleson density.
pub fn pressure_density(grid: &GradedGrid, slices: &[SolutionSlice]) -> LevelField {
    LevelField::scalar_from(
        slices
            .iter()
            .zip(grid.heights())
            .map(|(s, &y)| s.q.iter().map(|v| v * v * y).collect())
            .collect(),
    )
}

/// Square functions and maximal function of one solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareReport {
    /// ∬ |∇u|² t
    pub grad_u_t: f64,
    /// ‖(u)*‖₂²
    pub ntmax_u_sq: f64,
    /// ∬ |∇q|² t³
    pub grad_q_t3: f64,
    /// ∬ |q|² t
    pub q_t: f64,
    /// ‖u‖²_{L²(∂)} = ‖f‖₂²
    pub boundary_u_sq: f64,
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        if num == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        num / den
    }
}

impl SquareReport {
    /// ∬|∇u|²t / ‖(u)*‖₂².
    pub fn gradient_to_maximal(&self) -> f64 {
        ratio_or_zero(self.grad_u_t, self.ntmax_u_sq)
    }

    /// ∬|q|²t / ‖u‖²_{L²(∂)}.
    pub fn pressure_to_boundary(&self) -> f64 {
        ratio_or_zero(self.q_t, self.boundary_u_sq)
    }

    /// ∬|∇q|²t³ / ∬|q|²t.
    pub fn pressure_chain(&self) -> f64 {
        ratio_or_zero(self.grad_q_t3, self.q_t)
    }
}

pub fn square_bound_report(f: &BoundaryField, grid: &GradedGrid, aperture: f64) -> Result<SquareReport> {
    f.require_components(2)?;
    let grid = if grid.boundary() == f.grid() {
        grid.clone()
    } else {
        grid.with_boundary(*f.grid())?
    };
    let sol = crate::stokes::solve_stream(f)?;
    let slices = sample_solution(&grid, &sol)?;
    let grad_u = LevelField {
        values: slices
            .iter()
            .map(|s| vec![s.u1_x.clone(), s.u1_y.clone(), s.u2_x.clone(), s.u2_y.clone()])
            .collect(),
    };
    let velocity = LevelField {
        values: slices.iter().map(|s| vec![s.u1.clone(), s.u2.clone()]).collect(),
    };
    let q = LevelField {
        values: slices.iter().map(|s| vec![s.q.clone()]).collect(),
    };
    let grad_q = LevelField {
        values: slices.iter().map(|s| vec![s.q_x.clone(), s.q_y.clone()]).collect(),
    };
    let ntmax = nontangential_max(&grid, &velocity, aperture)?;
    Ok(SquareReport {
        grad_u_t: weighted_volume_norm(&grid, &grad_u, 1)?.value,
        ntmax_u_sq: ntmax.l2_norm().powi(2),
        grad_q_t3: weighted_volume_norm(&grid, &grad_q, 3)?.value,
        q_t: weighted_volume_norm(&grid, &q, 1)?.value,
        boundary_u_sq: f.l2_norm().powi(2),
    })
}
