//! Cubic 3D transforms as three passes of 1D work. The strided axes are
//! handled one plane at a time through a transposed buffer.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::fft::plan;

/// out[k][i][j] = src[i][j][k] for a cube of side n stored i-major.
pub(crate) fn rotate<T: Copy + Send + Sync + Default>(src: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::default(); src.len()];
    out.par_chunks_mut(n * n).enumerate().for_each(|(k, slab)| {
        for i in 0..n {
            for j in 0..n {
                slab[i * n + j] = src[(i * n + j) * n + k];
            }
        }
    });
    out
}

/// Unnormalized forward or inverse 3D DFT in place.
pub(crate) fn fft3(data: &mut [Complex64], n: usize, inverse: bool) {
    let all = |_: usize, _: usize| true;
    fft_last_axis(data, n, inverse, all);
    fft_strided_axis(data, n, inverse, Axis::Middle, |_| true);
    fft_strided_axis(data, n, inverse, Axis::First, |_| true);
}

/// 1D transforms along the contiguous axis of the rows (i, j) selected by
/// `keep`; the other rows are left untouched.
pub(crate) fn fft_last_axis(data: &mut [Complex64], n: usize, inverse: bool, keep: impl Fn(usize, usize) -> bool + Sync) {
    let fft = plan(n, inverse);
    data.par_chunks_mut(n * n).enumerate().for_each(|(i, rows)| {
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for (j, row) in rows.chunks_mut(n).enumerate() {
            if keep(i, j) {
                fft.process_with_scratch(row, &mut scratch);
            }
        }
    });
}

#[derive(Clone, Copy, PartialEq)]
pub(crate) enum Axis {
    /// Stride n², planes indexed by j.
    First,
    /// Stride n, planes indexed by i.
    Middle,
}

/// 1D transforms along a strided axis. Each plane holding whole lines is
/// an n×n block with contiguous rows; it is transposed into a buffer that
/// stays in cache, transformed row by row and transposed back. Only the
/// planes selected by `keep` are touched.
pub(crate) fn fft_strided_axis(
    data: &mut [Complex64],
    n: usize,
    inverse: bool,
    axis: Axis,
    keep: impl Fn(usize) -> bool,
) {
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    let (stride, step) = match axis {
        Axis::First => (n * n, n),
        Axis::Middle => (n, n * n),
    };
    for plane in (0..n).filter(|p| keep(*p)) {
        let base = plane * step;
        for a in 0..n {
            let row = &data[base + a * stride..base + a * stride + n];
            for (k, z) in row.iter().enumerate() {
                buf[k * n + a] = *z;
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for a in 0..n {
            let row = &mut data[base + a * stride..base + a * stride + n];
            for (k, z) in row.iter_mut().enumerate() {
                *z = buf[k * n + a];
            }
        }
    }
}

/// Applies the n×n matrix `m` (row-major) along every axis of a real cube.
pub(crate) fn apply_separable(src: &[f64], n: usize, m: &[f64]) -> Vec<f64> {
    let mut data = src.to_vec();
    for _ in 0..3 {
        let mut out = vec![0.0; data.len()];
        out.par_chunks_mut(n).zip(data.par_chunks(n)).for_each(|(o, row)| {
            for (i, oi) in o.iter_mut().enumerate() {
                *oi = m[i * n..(i + 1) * n].iter().zip(row).map(|(a, b)| a * b).sum();
            }
        });
        data = rotate(&out, n);
    }
    data
}
