//! Decomposition u = φ_τ + R with R orthogonal to the translation modes
//! ∂_iφ_τ, where φ_τ = φ(· − τ).
//!
//! τ solves F_i(τ) = ⟨u − φ_τ, ∂_iφ_τ⟩ = 0 by Newton's method with
//! dF_i/dτ_j = ⟨∂_jφ_τ, ∂_iφ_τ⟩ − ⟨u − φ_τ, ∂_i∂_jφ_τ⟩, started at the
//! centroid of u².

use crate::error::{LabError, Result};
use crate::radial::RadialField;
use crate::space::FieldSpace;

/// Fields that can be translated. Radial fields have no translation modes.
pub trait Translatable: FieldSpace {
    /// Number of translation directions.
    const DIM: usize;
    /// x ↦ u(x − τ).
    fn translated(&self, tau: [f64; 3]) -> Self;
    /// ∂_i u for i < DIM.
    fn partials(&self) -> Vec<Self>;
    /// ∫x u² / ∫u².
    fn centroid(&self) -> [f64; 3];
}

impl Translatable for RadialField {
    const DIM: usize = 0;

    fn translated(&self, _tau: [f64; 3]) -> Self {
        self.clone()
    }

    fn partials(&self) -> Vec<Self> {
        Vec::new()
    }

    fn centroid(&self) -> [f64; 3] {
        [0.0; 3]
    }
}

#[derive(Clone, Debug)]
pub struct Recentered<U> {
    pub tau: [f64; 3],
    pub remainder: U,
    /// ⟨R, ∂_iφ_τ⟩ at the returned τ.
    pub orthogonality: [f64; 3],
    pub iterations: usize,
}

pub const RECENTER_MAX_ITER: usize = 50;

pub fn recenter<U: Translatable>(u: &U, phi: &U) -> Result<Recentered<U>> {
    let d = U::DIM;
    let mut tau = if d == 0 { [0.0; 3] } else { u.centroid() };
    let mut iterations = 0;
    loop {
        let phi_t = phi.translated(tau);
        let rem = u.axpy(-1.0, &phi_t);
        let grads = phi_t.partials();
        let mut f = [0.0; 3];
        for i in 0..d {
            f[i] = rem.dot(&grads[i]);
        }
        if d == 0 {
            return Ok(Recentered { tau, remainder: rem, orthogonality: f, iterations });
        }
        if iterations >= RECENTER_MAX_ITER {
            return Err(LabError::RecenterBasin { iterations });
        }
        let mut jac = [[0.0; 3]; 3];
        for i in 0..d {
            let second = grads[i].partials();
            for j in 0..d {
                jac[i][j] = grads[j].dot(&grads[i]) - rem.dot(&second[j]);
            }
        }
        // F(τ + δ) ≈ F + J δ.
        let delta = solve3(jac, [-f[0], -f[1], -f[2]])
            .filter(|d| d.iter().all(|v| v.is_finite()))
            .ok_or(LabError::RecenterBasin { iterations })?;
        for i in 0..3 {
            tau[i] += delta[i];
        }
        iterations += 1;
        let step = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let scale = tau.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        if step <= 1e-14 * scale {
            let phi_t = phi.translated(tau);
            let rem = u.axpy(-1.0, &phi_t);
            let grads = phi_t.partials();
            let mut f = [0.0; 3];
            for i in 0..d {
                f[i] = rem.dot(&grads[i]);
            }
            return Ok(Recentered { tau, remainder: rem, orthogonality: f, iterations });
        }
    }
}

/// Gaussian elimination with partial pivoting on a 3×3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col] == 0.0 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}
