use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

/// Shared plan cache; planning is serialized, execution is not.
pub(crate) fn plan(len: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new())).lock().unwrap();
    if inverse {
        planner.plan_fft_inverse(len)
    } else {
        planner.plan_fft_forward(len)
    }
}

/// Unnormalized DST-I: X_k = Σ_{j=1}^{N} x_j sin(πjk/(N+1)), k = 1..N.
/// Computed from an odd extension of length 2(N+1).
pub(crate) fn dst1(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 0 {
        return Vec::new();
    }
    let m = 2 * (n + 1);
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (j, &v) in x.iter().enumerate() {
        buf[j + 1].re = v;
        buf[m - 1 - j].re = -v;
    }
    plan(m, false).process(&mut buf);
    buf[1..=n].iter().map(|z| -0.5 * z.im).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_matches_direct_sum_and_inverts() {
        let x: Vec<f64> = (0..13).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let n = x.len();
        let fast = dst1(&x);
        for k in 1..=n {
            let direct: f64 = (1..=n)
                .map(|j| x[j - 1] * (std::f64::consts::PI * (j * k) as f64 / (n + 1) as f64).sin())
                .sum();
            assert!((fast[k - 1] - direct).abs() < 1e-12);
        }
        let back: Vec<f64> = dst1(&fast).iter().map(|v| v * 2.0 / (n + 1) as f64).collect();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
    }
}
