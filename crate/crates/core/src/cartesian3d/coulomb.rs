//! Free-space ρ ∗ |x|⁻¹ on the box by circular convolution on a doubled,
//! zero-padded box.
//!
//! Off the origin the kernel is the point value 1/|x|. The origin carries
//! the weight h²·C with C = 2.8372974794806, the lattice constant that
//! makes h³Σ_{j≠0} f(x_j)/|x_j| + Ch²f(0) an accurate rule for ∫f/|x| on a
//! cubic lattice. Both real-space kernel and its transform are cached per
//! (n, h).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft3::{fft3, fft_last_axis, fft_strided_axis, Axis};
use super::{CubeGrid, Field3D};

pub const ORIGIN_WEIGHT: f64 = 2.837_297_479_480_6;

type Key = (usize, u64);
static KERNELS: OnceLock<Mutex<HashMap<Key, Arc<Vec<f64>>>>> = OnceLock::new();

/// Transform of h³·K on the padded box of side 2n; real since K is even.
fn kernel_hat(n: usize, h: f64) -> Arc<Vec<f64>> {
    let key = (n, h.to_bits());
    let cache = KERNELS.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(k) = cache.lock().unwrap().get(&key) {
        return k.clone();
    }
    let m = 2 * n;
    let signed = |a: usize| if a <= n { a as f64 } else { a as f64 - m as f64 };
    let mut data: Vec<Complex64> = (0..m * m * m)
        .into_par_iter()
        .map(|idx| {
            let (a, b, c) = (idx / (m * m), (idx / m) % m, idx % m);
            let r = (signed(a).powi(2) + signed(b).powi(2) + signed(c).powi(2)).sqrt();
            // h³/(h r) off the origin, h²C at it.
            let w = if r == 0.0 { ORIGIN_WEIGHT * h * h } else { h * h / r };
            Complex64::new(w, 0.0)
        })
        .collect();
    fft3(&mut data, m, false);
    let hat = Arc::new(data.into_iter().map(|z| z.re).collect::<Vec<f64>>());
    cache.lock().unwrap().insert(key, hat.clone());
    hat
}

pub(crate) fn potential(rho: &Field3D) -> Field3D {
    let grid: CubeGrid = *rho.grid();
    let n = grid.n();
    let m = 2 * n;
    let mut data = vec![Complex64::new(0.0, 0.0); m * m * m];
    for i in 0..n {
        for j in 0..n {
            let src = &rho.values[(i * n + j) * n..(i * n + j + 1) * n];
            let dst = &mut data[(i * m + j) * m..(i * m + j) * m + n];
            for (d, s) in dst.iter_mut().zip(src) {
                d.re = *s;
            }
        }
    }
    padded_forward(&mut data, n);
    let hat = kernel_hat(n, grid.h());
    data.par_iter_mut().zip(hat.par_iter()).for_each(|(z, k)| *z *= *k);
    cropped_inverse(&mut data, n);
    let scale = 1.0 / (m * m * m) as f64;
    let mut values = vec![0.0; n * n * n];
    for i in 0..n {
        for j in 0..n {
            let src = &data[(i * m + j) * m..(i * m + j) * m + n];
            for (v, z) in values[(i * n + j) * n..(i * n + j + 1) * n].iter_mut().zip(src) {
                *v = z.re * scale;
            }
        }
    }
    Field3D::from_parts(grid, values)
}

// The density occupies the first n indices of each padded axis and only
// that block of the potential is kept, so each pass skips the lines that
// are known to be zero or are never read.

fn padded_forward(data: &mut [Complex64], n: usize) {
    let m = 2 * n;
    fft_last_axis(data, m, false, |i, j| i < n && j < n);
    fft_strided_axis(data, m, false, Axis::Middle, |i| i < n);
    fft_strided_axis(data, m, false, Axis::First, |_| true);
}

fn cropped_inverse(data: &mut [Complex64], n: usize) {
    let m = 2 * n;
    fft_strided_axis(data, m, true, Axis::First, |_| true);
    fft_strided_axis(data, m, true, Axis::Middle, |i| i < n);
    fft_last_axis(data, m, true, |i, j| i < n && j < n);
}
