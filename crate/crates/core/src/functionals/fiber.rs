//! The fiber map t ↦ Î(u^t) along the mass-preserving dilation
//! u^t = t^{3/2}u(t·).
//!
//! Dilation scales the quadratic terms exactly, A(u^t) = t²A and
//! D(u^t) = tD, and turns local integrals into ∫h(u^t) = t⁻³∫h(t^{3/2}u).
//! So Ψ and its derivatives are evaluated on the nodal values of u without
//! resampling anything.

use serde::{Deserialize, Serialize};

use super::{RescaledProblem, Terms, UNIT_MASS_TOLERANCE};
use crate::error::{LabError, Result};
use crate::space::FieldSpace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberOptions {
    pub t_min: f64,
    pub t_max: f64,
    /// Number of geometric probes spanning [t_min, t_max].
    pub probes: usize,
    pub max_newton: usize,
}

impl Default for FiberOptions {
    fn default() -> Self {
        Self { t_min: 1e-3, t_max: 1e3, probes: 61, max_newton: 100 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiberMax {
    pub t_star: f64,
    /// Ψ(t*) = Î(u^{t*}).
    pub value: f64,
    /// Ψ''(t*).
    pub curvature: f64,
    /// Q̂(u^{t*}) = t*Ψ'(t*).
    pub q_residual: f64,
    pub newton_steps: usize,
}

/// Ψ restricted to one field: the t-independent terms plus the nodal values.
pub(crate) struct Fiber<'a, U: FieldSpace> {
    prob: &'a RescaledProblem,
    u: &'a U,
    kinetic: f64,
    coulomb: f64,
}

impl<'a, U: FieldSpace> Fiber<'a, U> {
    pub(crate) fn new(prob: &'a RescaledProblem, u: &'a U, terms: &Terms) -> Self {
        Self { prob, u, kinetic: terms.kinetic, coulomb: prob.kappa * terms.coulomb }
    }

    fn value(&self, t: f64) -> f64 {
        let s = t.powf(1.5);
        let pot = self.u.local_integral(&|v| self.prob.local_F(s * v));
        0.5 * t * t * self.kinetic + 0.25 * t * self.coulomb - pot / (t * t * t)
    }

    /// Q̂(u^t) = tΨ'(t).
    fn q(&self, t: f64) -> f64 {
        let s = t.powf(1.5);
        let j = self.u.local_integral(&|v| {
            let x = s * v;
            self.prob.local_f(x) * x - 2.0 * self.prob.local_F(x)
        });
        t * t * self.kinetic + 0.25 * t * self.coulomb - 1.5 * j / (t * t * t)
    }

    /// (Q̂(u^t), dQ̂/d log t, Ψ''(t)).
    fn q_with_slope(&self, t: f64) -> (f64, f64, f64) {
        let s = t.powf(1.5);
        let j = self.u.local_integral(&|v| {
            let x = s * v;
            self.prob.local_f(x) * x - 2.0 * self.prob.local_F(x)
        });
        let k = self.u.local_integral(&|v| {
            let x = s * v;
            self.prob.local_fprime(x) * x * x - self.prob.local_f(x) * x
        });
        let t3 = t * t * t;
        let q = t * t * self.kinetic + 0.25 * t * self.coulomb - 1.5 * j / t3;
        let psi2 = self.kinetic + 6.0 * j / (t3 * t * t) - 2.25 * k / (t3 * t * t);
        // dQ/dlog t = tΨ' + t²Ψ'' = Q + t²Ψ''.
        (q, q + t * t * psi2, psi2)
    }
}

impl RescaledProblem {
    /// Maximizer t* of Ψ(t) = Î(u^t) for a unit-mass u.
    pub fn fiber_max<U: FieldSpace>(&self, u: &U) -> Result<FiberMax> {
        self.fiber_max_with(u, &FiberOptions::default())
    }

    pub fn fiber_max_with<U: FieldSpace>(&self, u: &U, opts: &FiberOptions) -> Result<FiberMax> {
        let terms = self.terms(u);
        if (terms.mass - 1.0).abs() > UNIT_MASS_TOLERANCE {
            return Err(LabError::NotUnitMass { mass: terms.mass, tolerance: UNIT_MASS_TOLERANCE });
        }
        self.fiber_max_terms(u, &terms, opts)
    }

    pub(crate) fn fiber_max_terms<U: FieldSpace>(
        &self,
        u: &U,
        terms: &Terms,
        opts: &FiberOptions,
    ) -> Result<FiberMax> {
        let fiber = Fiber::new(self, u, terms);
        let no_bracket = LabError::FiberBracket { t_min: opts.t_min, t_max: opts.t_max };

        // Probes t_j = t_min·ρ^j. Walk outward from the probe nearest t = 1
        // until Q̂(u^t) changes sign; Q̂ > 0 left of t* and < 0 right of it.
        let m = opts.probes.max(3) - 1;
        let (l0, l1) = (opts.t_min.ln(), opts.t_max.ln());
        let probe = |j: usize| (l0 + (l1 - l0) * j as f64 / m as f64).exp();
        let mut j = (((0.0 - l0) / (l1 - l0)) * m as f64).round().clamp(0.0, m as f64) as usize;
        let q0 = fiber.q(probe(j));
        let (mut lo, mut hi);
        if q0 > 0.0 {
            lo = probe(j);
            loop {
                if j == m {
                    return Err(no_bracket);
                }
                j += 1;
                let t = probe(j);
                if fiber.q(t) <= 0.0 {
                    hi = t;
                    break;
                }
                lo = t;
            }
        } else {
            hi = probe(j);
            loop {
                if j == 0 {
                    return Err(no_bracket);
                }
                j -= 1;
                let t = probe(j);
                if fiber.q(t) > 0.0 {
                    lo = t;
                    break;
                }
                hi = t;
            }
        }

        // Safeguarded Newton on log t for Q̂(u^t) = 0.
        let mut x = 0.5 * (lo.ln() + hi.ln());
        let (mut xl, mut xh) = (lo.ln(), hi.ln());
        let mut steps = 0;
        let mut last;
        loop {
            let t = x.exp();
            let (q, dq, psi2) = fiber.q_with_slope(t);
            last = (t, q, psi2);
            if q > 0.0 {
                xl = x;
            } else {
                xh = x;
            }
            if q == 0.0 || steps >= opts.max_newton {
                break;
            }
            steps += 1;
            let newton = x - q / dq;
            let next = if dq < 0.0 && newton > xl && newton < xh {
                newton
            } else {
                0.5 * (xl + xh)
            };
            let done = (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) || xh - xl <= 4.0 * f64::EPSILON;
            x = next;
            if done {
                let t = x.exp();
                let (q, _, psi2) = fiber.q_with_slope(t);
                last = (t, q, psi2);
                break;
            }
        }
        let (t_star, q, curvature) = last;
        Ok(FiberMax { t_star, value: fiber.value(t_star), curvature, q_residual: q, newton_steps: steps })
    }

    /// u^{t*}: the fiber projection of a unit-mass field onto Q̂ = 0.
    pub fn project_to_manifold<U: FieldSpace>(&self, u: &U) -> Result<(U, FiberMax)> {
        let fm = self.fiber_max(u)?;
        Ok((u.dilate(fm.t_star)?, fm))
    }
}
