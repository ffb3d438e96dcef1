//! Full 3D fields on a periodic cube [-L, L)³ with n nodes per axis.
//!
//! Derivatives, (-Δ+ω)⁻¹ and translations are spectral. The Coulomb term
//! uses a zero-padded convolution, so the box only has to hold the field,
//! not its potential. Dilation evaluates the trigonometric interpolant at
//! the scaled nodes one axis at a time.

mod coulomb;
mod fft3;
pub mod io;
mod symmetry;

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{invalid, LabError, Result};
use crate::nonlinearity::{Nonlinearity, ScalingContext};
use crate::radial::RadialField;
use crate::solvers::{MinimizerOptions, MinimizerReport, Translatable};
use crate::space::FieldSpace;

pub use coulomb::ORIGIN_WEIGHT;
pub use symmetry::{spherical_average, symmetry_defect};

use fft3::{apply_separable, fft3};

/// Reductions sum fixed-size chunks in order, so results do not depend on
/// how the thread pool splits the work.
const CHUNK: usize = 4096;

/// Boundary layer values must stay below this fraction of the peak.
pub const DECAY_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CubeGrid {
    half_width: f64,
    n: usize,
}

impl CubeGrid {
    pub fn new(half_width: f64, n: usize) -> Result<Self> {
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(invalid("half_width", format!("{half_width} must be positive")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(invalid("n", format!("{n} must be a power of two, at least 8")));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.h()
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    /// Angular wavenumber of DFT index m; the Nyquist index maps to -π/h.
    pub fn wavenumber(&self, m: usize) -> f64 {
        let s = if m < self.n / 2 { m as f64 } else { m as f64 - self.n as f64 };
        PI * s / self.half_width
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    fn split(&self, idx: usize) -> (usize, usize, usize) {
        (idx / (self.n * self.n), (idx / self.n) % self.n, idx % self.n)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field3D {
    grid: CubeGrid,
    values: Vec<f64>,
}

impl Field3D {
    pub fn new(grid: CubeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::GridMismatch(format!("{} values for {} nodes", values.len(), grid.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "non-finite entry"));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: CubeGrid, values: Vec<f64>) -> Self {
        Self { grid, values }
    }

    pub fn from_fn(grid: CubeGrid, f: impl Fn(f64, f64, f64) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = grid.split(idx);
                f(grid.coord(i), grid.coord(j), grid.coord(k))
            })
            .collect();
        Self { grid, values }
    }

    pub fn zeros(grid: CubeGrid) -> Self {
        Self { grid, values: vec![0.0; grid.len()] }
    }

    /// u(|x|) sampled on the cube; zero beyond the radial grid.
    pub fn from_radial(u: &RadialField, grid: CubeGrid) -> Self {
        // Values depend only on the integer squared distance to the origin node.
        let half = (grid.n / 2) as i64;
        let key = |i: usize| (i as i64 - half).pow(2);
        let max_key = 3 * half * half;
        let h = grid.h();
        let radii: Vec<f64> = (0..=max_key).map(|s| h * (s as f64).sqrt()).collect();
        let table = u.eval_many(&radii);
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| {
                let (i, j, k) = grid.split(idx);
                table[(key(i) + key(j) + key(k)) as usize]
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &CubeGrid {
        &self.grid
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.grid.index(i, j, k)]
    }

    /// Largest |u| on the faces of the cube relative to the peak.
    pub fn boundary_ratio(&self) -> f64 {
        let n = self.grid.n;
        let edge = |i: usize| i == 0 || i == n - 1;
        let face = self
            .values
            .iter()
            .enumerate()
            .filter(|(idx, _)| {
                let (i, j, k) = self.grid.split(*idx);
                edge(i) || edge(j) || edge(k)
            })
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        let peak = self.sup_norm();
        if peak == 0.0 {
            0.0
        } else {
            face / peak
        }
    }

    pub fn check_decay(&self) -> Result<()> {
        let ratio = self.boundary_ratio();
        if ratio > DECAY_TOLERANCE {
            let peak = self.sup_norm();
            return Err(LabError::DecayViolation { boundary: ratio * peak, peak });
        }
        Ok(())
    }

    /// ∫φ_u u², refusing fields that have not decayed at the faces.
    pub fn coulomb_energy_checked(&self) -> Result<f64> {
        self.check_decay()?;
        Ok(FieldSpace::coulomb_energy(self))
    }

    /// Values along the +x axis through the origin node: (x, u).
    pub fn axis_slice(&self) -> Vec<(f64, f64)> {
        let c = self.grid.n / 2;
        (c..self.grid.n).map(|i| (self.grid.coord(i), self.at(i, c, c))).collect()
    }

    fn spectrum(&self) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = self.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft3(&mut data, self.grid.n, false);
        data
    }

    fn from_spectrum(grid: CubeGrid, mut data: Vec<Complex64>) -> Self {
        fft3(&mut data, grid.n, true);
        let scale = 1.0 / grid.len() as f64;
        Self { grid, values: data.into_iter().map(|z| z.re * scale).collect() }
    }

    /// Multiply the spectrum by a function of the wave vector.
    fn spectral_map(&self, f: impl Fn(f64, f64, f64) -> Complex64 + Sync) -> Self {
        let g = self.grid;
        let k: Vec<f64> = (0..g.n).map(|m| g.wavenumber(m)).collect();
        let mut data = self.spectrum();
        data.par_iter_mut().enumerate().for_each(|(idx, z)| {
            let (a, b, c) = g.split(idx);
            *z *= f(k[a], k[b], k[c]);
        });
        Self::from_spectrum(g, data)
    }

    fn k_squared(&self) -> impl Fn(f64, f64, f64) -> f64 {
        |a, b, c| a * a + b * b + c * c
    }
}

impl FieldSpace for Field3D {
    fn values(&self) -> &[f64] {
        &self.values
    }

    fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn same_grid(&self, other: &Self) -> bool {
        self.grid == other.grid
    }

    fn dot(&self, other: &Self) -> f64 {
        let partial: Vec<f64> = self
            .values
            .par_chunks(CHUNK)
            .zip(other.values.par_chunks(CHUNK))
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum())
            .collect();
        self.grid.h().powi(3) * partial.iter().sum::<f64>()
    }

    fn kinetic(&self) -> f64 {
        let g = self.grid;
        let k: Vec<f64> = (0..g.n).map(|m| g.wavenumber(m)).collect();
        let k2 = self.k_squared();
        let partial: Vec<f64> = self
            .spectrum()
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(chunk, zs)| {
                zs.iter()
                    .enumerate()
                    .map(|(off, z)| {
                        let (a, b, c) = g.split(chunk * CHUNK + off);
                        k2(k[a], k[b], k[c]) * z.norm_sqr()
                    })
                    .sum()
            })
            .collect();
        let sum: f64 = partial.iter().sum();
        g.h().powi(3) * sum / g.len() as f64
    }

    fn neg_laplacian(&self) -> Self {
        let k2 = self.k_squared();
        self.spectral_map(|a, b, c| Complex64::new(k2(a, b, c), 0.0))
    }

    fn potential_of_density(&self) -> Self {
        coulomb::potential(self)
    }

    fn helmholtz_inverse(&self, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(invalid("omega", format!("{omega} must be positive")));
        }
        let k2 = self.k_squared();
        Ok(self.spectral_map(|a, b, c| Complex64::new(1.0 / (k2(a, b, c) + omega), 0.0)))
    }

    fn dilate(&self, t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(invalid("t", format!("{t} must be positive")));
        }
        if t == 1.0 {
            return Ok(self.clone());
        }
        let g = self.grid;
        let n = g.n;
        let h = g.h();
        // Periodic interpolation weights from node m to the point t·x_i;
        // targets outside the cube are zero.
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            let y = t * g.coord(i);
            if y < -g.half_width || y >= g.half_width {
                continue;
            }
            for j in 0..n {
                m[i * n + j] = periodic_sinc((y - g.coord(j)) / h, n);
            }
        }
        let scale = t.powf(1.5);
        let values = apply_separable(&self.values, n, &m).into_iter().map(|v| scale * v).collect();
        Ok(Self { grid: g, values })
    }

    fn local_integral(&self, h: &dyn Fn(f64) -> f64) -> f64 {
        self.grid.h().powi(3) * self.values.iter().map(|v| h(*v)).sum::<f64>()
    }

    fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Cardinal function of trigonometric interpolation on n periodic nodes,
/// at an offset of d grid spacings, with the Nyquist mode split evenly.
fn periodic_sinc(d: f64, n: usize) -> f64 {
    if d.abs() < 1e-14 {
        return 1.0;
    }
    let nf = n as f64;
    (PI * d).sin() / (nf * (PI * d / nf).tan())
}

impl Translatable for Field3D {
    const DIM: usize = 3;

    fn translated(&self, tau: [f64; 3]) -> Self {
        self.spectral_map(|a, b, c| Complex64::from_polar(1.0, -(a * tau[0] + b * tau[1] + c * tau[2])))
    }

    fn partials(&self) -> Vec<Self> {
        let g = self.grid;
        let nyquist = -PI / g.h();
        // The Nyquist mode has no real derivative; it is dropped.
        let d = |k: f64| if k == nyquist { 0.0 } else { k };
        vec![
            self.spectral_map(|a, _, _| Complex64::new(0.0, d(a))),
            self.spectral_map(|_, b, _| Complex64::new(0.0, d(b))),
            self.spectral_map(|_, _, c| Complex64::new(0.0, d(c))),
        ]
    }

    fn centroid(&self) -> [f64; 3] {
        let g = self.grid;
        let mut acc = [0.0; 4];
        for (idx, v) in self.values.iter().enumerate() {
            let (i, j, k) = g.split(idx);
            let w = v * v;
            acc[0] += w * g.coord(i);
            acc[1] += w * g.coord(j);
            acc[2] += w * g.coord(k);
            acc[3] += w;
        }
        [acc[0] / acc[3], acc[1] / acc[3], acc[2] / acc[3]]
    }
}

/// Minimizer options for the cube: the gradient tolerance is 1e-6.
pub fn default_3d_options() -> MinimizerOptions {
    MinimizerOptions { tol: 1e-6, ..MinimizerOptions::default() }
}

/// The radial minimization scheme run on the cube without imposing symmetry.
pub fn minimize_3d(
    nl: &Nonlinearity,
    ctx: &ScalingContext,
    init: &Field3D,
    opts: &MinimizerOptions,
) -> Result<MinimizerReport<Field3D>> {
    init.check_decay()?;
    crate::solvers::minimize_rescaled(nl, ctx, init, opts)
}
