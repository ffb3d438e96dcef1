//! Newton's method for the Euler–Lagrange equation at fixed (c, ω):
//!
//!   Φ(u) = (-Δ+ω)u + κφ_u u − g(u) = 0,
//!   dΦ(u)h = (-Δ+ω)h + κ[φ_u h + 2u·(|x|⁻¹ ∗ (uh))] − g'(u)h.
//!
//! The derivative term uses g'(s) = λ^{p-1}f'(λ⁻¹s), the chain rule applied
//! to g(s) = λᵖf(λ⁻¹s). Linear systems are solved by GMRES with (-Δ+ω)⁻¹
//! as right preconditioner, which turns dΦ into identity plus a compact
//! perturbation.

use serde::{Deserialize, Serialize};

use super::gmres::gmres;
use crate::error::{invalid, LabError, Result};
use crate::functionals::RescaledProblem;
use crate::space::FieldSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    /// Target for the relative sup residual of Φ.
    pub tol: f64,
    pub max_steps: usize,
    pub gmres_rtol: f64,
    pub gmres_restart: usize,
    pub gmres_max_iter: usize,
    pub max_backtracks: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_steps: 30,
            gmres_rtol: 1e-12,
            gmres_restart: 80,
            gmres_max_iter: 400,
            max_backtracks: 20,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport<U> {
    pub field: U,
    pub omega: f64,
    /// Relative sup residual before each step and after the last one.
    pub residual_history: Vec<f64>,
    pub linear_iterations: Vec<usize>,
    pub steps: usize,
}

impl<U> NewtonReport<U> {
    pub fn final_residual(&self) -> f64 {
        *self.residual_history.last().unwrap()
    }

    /// max over late steps of r_{k+1}/r_k², the constant of quadratic
    /// convergence. Steps that start within 1e3·floor or land within
    /// 10·floor of roundoff are skipped; their ratios measure the floor.
    pub fn quadratic_constant(&self, floor: f64) -> Option<f64> {
        self.residual_history
            .windows(2)
            .filter(|w| w[0] > 1e3 * floor && w[0] < 1e-2 && w[1] > 10.0 * floor)
            .map(|w| w[1] / (w[0] * w[0]))
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

impl RescaledProblem {
    /// dΦ(u)h, given φ_u.
    pub fn jacobian_apply<U: FieldSpace>(&self, omega: f64, u: &U, phi_u: &U, h: &U) -> U {
        let mut out = h.neg_laplacian().axpy(omega, h);
        if self.coulomb_weight() != 0.0 {
            let cross = u.zip_map(h, |a, b| a * b).potential_of_density();
            let k = self.coulomb_weight();
            let vals = out.values_mut();
            for i in 0..vals.len() {
                let (ui, hi) = (u.values()[i], h.values()[i]);
                vals[i] += k * (phi_u.values()[i] * hi + 2.0 * ui * cross.values()[i]);
            }
        }
        for (o, (&ui, &hi)) in out.values_mut().iter_mut().zip(u.values().iter().zip(h.values())) {
            *o -= self.local_fprime(ui) * hi;
        }
        out
    }

    /// Relative sup residual of Φ and the residual field itself.
    fn newton_residual<U: FieldSpace>(&self, omega: f64, u: &U) -> (f64, U) {
        let lin = u.neg_laplacian().axpy(omega, u);
        let non = u.map(|s| self.local_f(s));
        let mut res = lin.axpy(-1.0, &non);
        if self.coulomb_weight() != 0.0 {
            let phi = u.coulomb_potential();
            let k = self.coulomb_weight();
            for (r, (&p, &v)) in res.values_mut().iter_mut().zip(phi.values().iter().zip(u.values())) {
                *r += k * p * v;
            }
        }
        let scale = lin.sup_norm().max(non.sup_norm()).max(f64::MIN_POSITIVE);
        (res.sup_norm() / scale, res)
    }

    pub fn newton_solve<U: FieldSpace>(&self, omega: f64, init: &U, opts: &NewtonOptions) -> Result<NewtonReport<U>> {
        if !(omega > 0.0) {
            return Err(invalid("omega", format!("{omega} must be positive")));
        }
        let mut u = init.clone();
        let (mut rel, mut res) = self.newton_residual(omega, &u);
        let mut history = vec![rel];
        let mut linear = Vec::new();
        let mut steps = 0;
        while rel > opts.tol {
            if steps >= opts.max_steps {
                return Err(LabError::NewtonNonConvergence { iterations: steps, residual: rel });
            }
            let phi_u = if self.coulomb_weight() != 0.0 { u.coulomb_potential() } else { u.scaled(0.0) };
            let rhs = res.scaled(-1.0);
            let (h, out) = gmres(
                |v: &U| self.jacobian_apply(omega, &u, &phi_u, v),
                |v: &U| v.helmholtz_inverse(omega).expect("omega checked positive"),
                &rhs,
                opts.gmres_rtol,
                opts.gmres_restart,
                opts.gmres_max_iter,
            );
            linear.push(out.iterations);
            if out.relative_residual > 1e-3 {
                return Err(LabError::NewtonNonConvergence { iterations: steps, residual: rel });
            }
            // Backtracking on the L² norm of Φ.
            let merit = res.l2_norm();
            let mut s = 1.0;
            let mut accepted = None;
            for _ in 0..=opts.max_backtracks {
                let trial = u.axpy(s, &h);
                let (trel, tres) = self.newton_residual(omega, &trial);
                if tres.l2_norm() <= (1.0 - 1e-4 * s) * merit || trel <= opts.tol {
                    accepted = Some((trial, trel, tres));
                    break;
                }
                s *= 0.5;
            }
            let Some((trial, trel, tres)) = accepted else {
                return Err(LabError::NewtonNonConvergence { iterations: steps, residual: rel });
            };
            u = trial;
            rel = trel;
            res = tres;
            history.push(rel);
            steps += 1;
        }
        Ok(NewtonReport { field: u.synced(), omega, residual_history: history, linear_iterations: linear, steps })
    }
}
