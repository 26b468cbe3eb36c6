//! Gauss–Legendre rules used for bump transforms and short boundary-layer panels.

/// Nodes and weights of the `order`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "Gauss-Legendre order must be positive");
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let m = order.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(order, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(order, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[order - 1 - i] = x;
        weights[i] = w;
        weights[order - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if order == 0 { 1.0 } else { p1 };
    let d = order as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite Gauss–Legendre rule on [a, b] with `panels` equal panels.
pub fn composite_gauss(a: f64, b: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (xs, ws) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (x, w) in xs.iter().zip(&ws) {
            out.push((lo + 0.5 * h * (x + 1.0), 0.5 * h * w));
        }
    }
    out
}
