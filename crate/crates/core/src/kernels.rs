//! Stokes fundamental solution in d ≥ 3 dimensions, the double-layer kernel,
//! and the surface field W_k with its pressure q̃ = −Σ ∂W_k/∂x_k.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{DtnError, Result};

/// Surface area of the unit sphere in ℝᵈ.
pub fn omega(d: usize) -> f64 {
    use std::f64::consts::PI;
    let (mut w, mut k) = if d.is_multiple_of(2) { (2.0 * PI, 2) } else { (4.0 * PI, 3) };
    while k < d {
        w *= 2.0 * PI / k as f64;
        k += 2;
    }
    w
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn check_dim(d: usize, x: &[f64]) -> Result<()> {
    if d < 3 {
        return Err(DtnError::Unsupported(format!("dimension {d}: only d ≥ 3 is implemented")));
    }
    if x.len() != d {
        return Err(DtnError::Dimension {
            expected: d,
            found: x.len(),
        });
    }
    Ok(())
}

/// (Γ, Π) at x ≠ 0: Γ_ij = (δ_ij/((d−2)rᵈ⁻²) + x_ix_j/rᵈ)/(2ω_d),
/// Πⁱ = x_i/(ω_d rᵈ).
pub fn fundamental_solution(x: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let d = x.len();
    check_dim(d, x)?;
    let r = norm(x);
    if r == 0.0 {
        return Err(DtnError::Singular("fundamental solution at the origin".into()));
    }
    let w = omega(d);
    let rd = r.powi(d as i32);
    let diag = 1.0 / ((d as f64 - 2.0) * r.powi(d as i32 - 2));
    let gamma = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let delta = if i == j { diag } else { 0.0 };
                    (delta + x[i] * x[j] / rd) / (2.0 * w)
                })
                .collect()
        })
        .collect();
    let pi = x.iter().map(|xi| xi / (w * rd)).collect();
    Ok((gamma, pi))
}

/// ∂_kΓ_ij(x), indexed `[i][j][k]`.
pub fn gamma_gradient(x: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
    let d = x.len();
    check_dim(d, x)?;
    let r = norm(x);
    if r == 0.0 {
        return Err(DtnError::Singular("kernel gradient at the origin".into()));
    }
    let c = 1.0 / (2.0 * omega(d));
    let rd = r.powi(d as i32);
    let rd2 = rd * r * r;
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    Ok((0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    (0..d)
                        .map(|k| {
                            c * ((-delta(i, j) * x[k] + delta(i, k) * x[j] + delta(j, k) * x[i]) / rd
                                - d as f64 * x[i] * x[j] * x[k] / rd2)
                        })
                        .collect()
                })
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelResidual {
    /// max_{i,j} |ΔΓ_ij − ∂_iΠʲ|
    pub momentum: f64,
    /// max_j |Σ_i ∂_iΓ_ij|
    pub divergence: f64,
}

/// Central-difference residuals of the Stokes system for each column of
/// (Γ, Π) at x with step h.
pub fn kernel_residual(x: &[f64], h: f64) -> Result<KernelResidual> {
    let d = x.len();
    check_dim(d, x)?;
    if !(h > 0.0) || norm(x) < 10.0 * h {
        return Err(DtnError::Singular(format!(
            "stencil of width {h} too close to the origin (|x| = {})",
            norm(x)
        )));
    }
    let (g0, _) = fundamental_solution(x)?;
    let shifted = |axis: usize, s: f64| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut y = x.to_vec();
        y[axis] += s;
        fundamental_solution(&y)
    };
    let mut lap = vec![vec![0.0; d]; d];
    let mut grad_pi = vec![vec![0.0; d]; d]; // [i][j] = ∂_iΠʲ
    let mut div = vec![0.0; d];
    for axis in 0..d {
        let (gp, pp) = shifted(axis, h)?;
        let (gm, pm) = shifted(axis, -h)?;
        for i in 0..d {
            for j in 0..d {
                lap[i][j] += (gp[i][j] - 2.0 * g0[i][j] + gm[i][j]) / (h * h);
            }
        }
        for j in 0..d {
            grad_pi[axis][j] = (pp[j] - pm[j]) / (2.0 * h);
            div[j] += (gp[axis][j] - gm[axis][j]) / (2.0 * h);
        }
    }
    let mut momentum = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            momentum = momentum.max((lap[i][j] - grad_pi[i][j]).abs());
        }
    }
    Ok(KernelResidual {
        momentum,
        divergence: div.iter().fold(0.0f64, |m, v| m.max(v.abs())),
    })
}

/// K_ij(x, y) = ∂/∂y_k{Γ_ij(x − y)} n_k − Πⁱ(x − y) n_j.
pub fn double_layer_kernel(x: &[f64], y: &[f64], n: &[f64]) -> Result<Vec<Vec<f64>>> {
    let d = x.len();
    if y.len() != d || n.len() != d {
        return Err(DtnError::Dimension {
            expected: d,
            found: if y.len() != d { y.len() } else { n.len() },
        });
    }
    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    if norm(&z) == 0.0 {
        return Err(DtnError::Singular("double-layer kernel at coincident points".into()));
    }
    let grad = gamma_gradient(&z)?;
    let (_, pi) = fundamental_solution(&z)?;
    Ok((0..d)
        .map(|i| {
            (0..d)
                .map(|j| -(0..d).map(|k| grad[i][j][k] * n[k]).sum::<f64>() - pi[i] * n[j])
                .collect()
        })
        .collect())
}

/// Flat quadrature panel on a closed surface in ℝ³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Panel {
    pub centroid: [f64; 3],
    pub area: f64,
    pub normal: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurfaceMesh {
    pub panels: Vec<Panel>,
}

fn normalize(v: [f64; 3]) -> [f64; 3] {
    let r = norm(&v);
    [v[0] / r, v[1] / r, v[2] / r]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Solid angle of the spherical triangle with unit vertices a, b, c.
fn spherical_area(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let num = dot3(a, cross(b, c)).abs();
    let den = 1.0 + dot3(a, b) + dot3(b, c) + dot3(c, a);
    2.0 * num.atan2(den)
}

impl SurfaceMesh {
    /// Unit sphere from an icosahedron subdivided `level` times: 20·4^level
    /// panels with spherical areas, centroids and normals projected radially.
    pub fn icosphere(level: u32) -> Self {
        let p = (1.0 + 5f64.sqrt()) / 2.0;
        let mut verts: Vec<[f64; 3]> = [
            [-1.0, p, 0.0],
            [1.0, p, 0.0],
            [-1.0, -p, 0.0],
            [1.0, -p, 0.0],
            [0.0, -1.0, p],
            [0.0, 1.0, p],
            [0.0, -1.0, -p],
            [0.0, 1.0, -p],
            [p, 0.0, -1.0],
            [p, 0.0, 1.0],
            [-p, 0.0, -1.0],
            [-p, 0.0, 1.0],
        ]
        .into_iter()
        .map(normalize)
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ];
        for _ in 0..level {
            let mut cache = std::collections::HashMap::new();
            let mut mid = |a: usize, b: usize, verts: &mut Vec<[f64; 3]>| -> usize {
                let key = (a.min(b), a.max(b));
                *cache.entry(key).or_insert_with(|| {
                    let (u, v) = (verts[a], verts[b]);
                    verts.push(normalize([u[0] + v[0], u[1] + v[1], u[2] + v[2]]));
                    verts.len() - 1
                })
            };
            faces = faces
                .iter()
                .flat_map(|&[a, b, c]| {
                    let ab = mid(a, b, &mut verts);
                    let bc = mid(b, c, &mut verts);
                    let ca = mid(c, a, &mut verts);
                    [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
                })
                .collect();
        }
        let panels = faces
            .iter()
            .map(|&[a, b, c]| {
                let (u, v, w) = (verts[a], verts[b], verts[c]);
                let n = normalize([u[0] + v[0] + w[0], u[1] + v[1] + w[1], u[2] + v[2] + w[2]]);
                Panel {
                    centroid: n,
                    area: spherical_area(u, v, w),
                    normal: n,
                }
            })
            .collect();
        Self { panels }
    }

    pub fn total_area(&self) -> f64 {
        self.panels.iter().map(|p| p.area).sum()
    }

    /// One panel per line: `cx cy cz area nx ny nz`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut panels = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let vals = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| DtnError::Parse(format!("line {}: {e}", lineno + 1)))?;
            if vals.len() != 7 {
                return Err(DtnError::Parse(format!(
                    "line {}: expected 7 numbers, found {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            if !(vals[3] > 0.0) {
                return Err(DtnError::Parse(format!("line {}: panel area must be positive", lineno + 1)));
            }
            let normal = [vals[4], vals[5], vals[6]];
            if (norm(&normal) - 1.0).abs() > 1e-6 {
                return Err(DtnError::Parse(format!("line {}: normal is not a unit vector", lineno + 1)));
            }
            panels.push(Panel {
                centroid: [vals[0], vals[1], vals[2]],
                area: vals[3],
                normal,
            });
        }
        if panels.is_empty() {
            return Err(DtnError::Parse("mesh has no panels".into()));
        }
        Ok(Self { panels })
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("# cx cy cz area nx ny nz\n");
        for p in &self.panels {
            let c = p.centroid;
            let n = p.normal;
            let _ = writeln!(s, "{:e} {:e} {:e} {:e} {:e} {:e} {:e}", c[0], c[1], c[2], p.area, n[0], n[1], n[2]);
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Distance from x to the nearest panel centroid.
    pub fn distance(&self, x: [f64; 3]) -> f64 {
        self.panels
            .iter()
            .map(|p| norm(&[x[0] - p.centroid[0], x[1] - p.centroid[1], x[2] - p.centroid[2]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Typical panel diameter.
    pub fn panel_size(&self) -> f64 {
        (self.total_area() / self.panels.len() as f64).sqrt()
    }
}

/// W_k(x), k = 1..3, and q̃(x) = −Σ_k ∂W_k/∂x_k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WField {
    pub w: [f64; 3],
    pub q_tilde: f64,
}

/// Panel quadrature of W_k(x) = ∫ (x_j − y_j)/(ω₃|x − y|³) n_k φ_j dS for a
/// per-panel density φ.
pub fn w_field(mesh: &SurfaceMesh, density: &[[f64; 3]], x: [f64; 3]) -> Result<WField> {
    if density.len() != mesh.panels.len() {
        return Err(DtnError::Dimension {
            expected: mesh.panels.len(),
            found: density.len(),
        });
    }
    if mesh.distance(x) < 2.0 * mesh.panel_size() {
        return Err(DtnError::Singular(format!(
            "evaluation point within two panel widths of the surface ({:.3e})",
            mesh.distance(x)
        )));
    }
    let w3 = omega(3);
    let (w, q) = mesh
        .panels
        .par_iter()
        .zip(density)
        .map(|(p, phi)| {
            let z = [x[0] - p.centroid[0], x[1] - p.centroid[1], x[2] - p.centroid[2]];
            let r2 = dot3(z, z);
            let r3 = r2 * r2.sqrt();
            let zphi = dot3(z, *phi);
            let base = zphi / (w3 * r3) * p.area;
            // ∂_m (z_j φ_j / r³) = (φ_m − 3 z_m z·φ / r²) / r³
            let div: f64 = (0..3)
                .map(|k| (phi[k] - 3.0 * z[k] * zphi / r2) / (w3 * r3) * p.normal[k] * p.area)
                .sum();
            ([base * p.normal[0], base * p.normal[1], base * p.normal[2]], -div)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(([0.0; 3], 0.0), |(a, qa), (b, qb)| ([a[0] + b[0], a[1] + b[1], a[2] + b[2]], qa + qb));
    Ok(WField { w, q_tilde: q })
}

/// Seven-point Laplacian of each W_k at x with step h.
pub fn w_laplacian(mesh: &SurfaceMesh, density: &[[f64; 3]], x: [f64; 3], h: f64) -> Result<[f64; 3]> {
    let center = w_field(mesh, density, x)?.w;
    let mut lap = [0.0; 3];
    for axis in 0..3 {
        for s in [-h, h] {
            let mut y = x;
            y[axis] += s;
            let v = w_field(mesh, density, y)?.w;
            for k in 0..3 {
                lap[k] += v[k];
            }
        }
    }
    for k in 0..3 {
        lap[k] = (lap[k] - 6.0 * center[k]) / (h * h);
    }
    Ok(lap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_areas() {
        assert!((omega(3) - 4.0 * PI).abs() < 1e-15);
        assert!((omega(4) - 2.0 * PI * PI).abs() < 1e-14);
        assert!((omega(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn classical_values() {
        let (g, p) = fundamental_solution(&[1.0, 0.0, 0.0]).unwrap();
        assert!((g[0][0] - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((g[1][1] - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((g[2][2] - 1.0 / (8.0 * PI)).abs() < 1e-15);
        assert!((p[0] - 1.0 / (4.0 * PI)).abs() < 1e-15 && p[1] == 0.0 && p[2] == 0.0);
        let x = [0.3, -1.2, 0.7];
        let (g1, _) = fundamental_solution(&x).unwrap();
        let (g2, _) = fundamental_solution(&x.map(|v| 2.0 * v)).unwrap();
        let (gm, _) = fundamental_solution(&x.map(|v| -v)).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((g2[i][j] - g1[i][j] / 2.0).abs() < 1e-15);
                assert_eq!(g1[i][j], gm[i][j]);
                assert_eq!(g1[i][j], g1[j][i]);
            }
        }
        assert!(fundamental_solution(&[0.0; 3]).is_err());
        assert!(matches!(fundamental_solution(&[1.0, 0.0]), Err(DtnError::Unsupported(_))));
    }

    #[test]
    fn pde_residual_converges() {
        let x = [1.0, 0.0, 0.0];
        let a = kernel_residual(&x, 1e-3).unwrap();
        assert!(a.momentum <= 1e-4 && a.divergence <= 1e-4, "{a:?}");
        let y = [0.6, -0.5, 0.8];
        let (r1, r2) = (kernel_residual(&y, 2e-2).unwrap(), kernel_residual(&y, 1e-2).unwrap());
        assert!((r1.momentum / r2.momentum).log2() >= 1.9);
        assert!((r1.divergence / r2.divergence).log2() >= 1.9);
        assert!(kernel_residual(&[0.01, 0.0, 0.0], 1e-2).is_err());
        // the same check in four dimensions
        let r4 = kernel_residual(&[0.7, 0.2, -0.4, 0.5], 1e-3).unwrap();
        assert!(r4.momentum < 1e-4 && r4.divergence < 1e-4);
    }

    #[test]
    fn gradient_matches_differences() {
        let x = [0.4, 0.9, -0.3];
        let g = gamma_gradient(&x).unwrap();
        let h = 1e-5;
        for k in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let (gp, _) = fundamental_solution(&xp).unwrap();
            let (gm, _) = fundamental_solution(&xm).unwrap();
            for i in 0..3 {
                for j in 0..3 {
                    assert!((g[i][j][k] - (gp[i][j] - gm[i][j]) / (2.0 * h)).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn double_layer_kernel_properties() {
        let y = [0.1, 0.2, 0.3];
        let z = [0.5, -0.4, 0.9];
        let zero = double_layer_kernel(&[y[0] + z[0], y[1] + z[1], y[2] + z[2]], &y, &[0.0; 3]).unwrap();
        assert!(zero.iter().flatten().all(|v| *v == 0.0));
        let n = normalize([1.0, 2.0, -0.5]);
        let plus = double_layer_kernel(&[y[0] + z[0], y[1] + z[1], y[2] + z[2]], &y, &n).unwrap();
        let minus = double_layer_kernel(&[y[0] - z[0], y[1] - z[1], y[2] - z[2]], &y, &n).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((plus[i][j] + minus[i][j]).abs() < 1e-15);
            }
        }
        // direct evaluation: difference Γ(x − y) in y
        let x = [y[0] + z[0], y[1] + z[1], y[2] + z[2]];
        let h = 1e-5;
        let (_, pi) = fundamental_solution(&z).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut dsum = 0.0;
                for k in 0..3 {
                    let mut yp = y;
                    let mut ym = y;
                    yp[k] += h;
                    ym[k] -= h;
                    let zp: Vec<f64> = (0..3).map(|m| x[m] - yp[m]).collect();
                    let zm: Vec<f64> = (0..3).map(|m| x[m] - ym[m]).collect();
                    let (gp, _) = fundamental_solution(&zp).unwrap();
                    let (gm, _) = fundamental_solution(&zm).unwrap();
                    dsum += (gp[i][j] - gm[i][j]) / (2.0 * h) * n[k];
                }
                assert!((plus[i][j] - (dsum - pi[i] * n[j])).abs() < 1e-8);
            }
        }
        assert!(double_layer_kernel(&y, &y, &n).is_err());
    }

    #[test]
    fn icosphere_and_text_round_trip() {
        let m = SurfaceMesh::icosphere(2);
        assert_eq!(m.panels.len(), 320);
        assert!((m.total_area() - 4.0 * PI).abs() < 1e-12);
        let back = SurfaceMesh::parse(&m.to_text()).unwrap();
        assert_eq!(back.panels.len(), 320);
        for (a, b) in m.panels.iter().zip(&back.panels) {
            assert!((a.area - b.area).abs() < 1e-14);
        }
        assert!(SurfaceMesh::parse("1 2 3").is_err());
        assert!(SurfaceMesh::parse("0 0 1 0.1 0 0 2").is_err());
        assert!(SurfaceMesh::parse("# nothing\n").is_err());
    }

    /// For the unit ball B and a constant density, the divergence theorem and
    /// the mean value property give W_k(x) = −|B| φ_j ∂_k(x_j/(ω₃|x|³)).
    fn sphere_oracle(phi: [f64; 3], x: [f64; 3]) -> [f64; 3] {
        let r2 = dot3(x, x);
        let r3 = r2 * r2.sqrt();
        let xp = dot3(x, phi);
        let vol = 4.0 * PI / 3.0;
        [0, 1, 2].map(|k| -vol * (phi[k] - 3.0 * x[k] * xp / r2) / (omega(3) * r3))
    }

    #[test]
    fn w_field_matches_sphere_oracle() {
        let m = SurfaceMesh::icosphere(4);
        let phi = [0.3, -1.0, 0.5];
        let density = vec![phi; m.panels.len()];
        for x in [[10.0, 0.0, 0.0], [0.0, 3.0, 4.0], [1.5, -1.2, 0.9]] {
            let w = w_field(&m, &density, x).unwrap();
            let exact = sphere_oracle(phi, x);
            let scale = exact.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for k in 0..3 {
                assert!((w.w[k] - exact[k]).abs() < 2e-3 * scale, "{x:?}: {:?} vs {exact:?}", w.w);
            }
            // q̃ = −div W = |B| φ·∇(Δ(1/(ω r))) … = 0 for the constant density outside B
            assert!(w.q_tilde.abs() < 1e-2 * scale);
        }
        let zero = vec![[0.0; 3]; m.panels.len()];
        let w0 = w_field(&m, &zero, [2.0, 0.0, 0.0]).unwrap();
        assert_eq!(w0.w, [0.0; 3]);
        assert_eq!(w0.q_tilde, 0.0);
        assert!(w_field(&m, &density, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn far_field_decay_exponent() {
        let m = SurfaceMesh::icosphere(3);
        let density = vec![[1.0, 0.0, 0.0]; m.panels.len()];
        let mag = |r: f64| norm(&w_field(&m, &density, [r, 0.0, 0.0]).unwrap().w);
        let slope = (mag(20.0) / mag(10.0)).ln() / 2f64.ln();
        // ∫ n dS = 0 removes the |x|^{1−d} term, leaving |x|^{−d}
        assert!((slope + 3.0).abs() < 0.3, "{slope}");
    }

    #[test]
    fn w_field_is_harmonic() {
        let density_of = |m: &SurfaceMesh| -> Vec<[f64; 3]> {
            m.panels.iter().map(|p| [1.0 + p.centroid[2], p.centroid[0], -0.5]).collect()
        };
        let x = [2.0, 0.0, 0.0];
        let coarse = SurfaceMesh::icosphere(3);
        let fine = SurfaceMesh::icosphere(4);
        let r = |m: &SurfaceMesh, h: f64| {
            w_laplacian(m, &density_of(m), x, h).unwrap().iter().fold(0.0f64, |a, v| a.max(v.abs()))
        };
        let (a, b) = (r(&coarse, 0.02), r(&fine, 0.01));
        assert!(a <= 1e-3 && a / b >= 3.0, "{a:e} {b:e}");
    }
}
