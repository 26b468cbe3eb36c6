use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward transform normalized so that coefficient k is (1/n) Σ g_j e^{-2πijk/n}.
pub(crate) fn analyze(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buf));
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse of [`analyze`]: g_j = Σ_k ĝ(k) e^{2πijk/n}.
pub(crate) fn synthesize(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let mut buf = coeffs.to_vec();
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut buf));
    buf
}
