//! Energies and constraint functionals in original, rescaled and limit form.
//!
//! All three share one shape. For a local nonlinearity G with derivative g,
//! a Coulomb weight κ and the fields' quadrature,
//!
//!   Î(u) = ½A + ¼κD − ∫G(u),   Q̂(u) = A + ¼κD − (3/2)∫(g(u)u − 2G(u)),
//!
//! with A = ‖∇u‖² and D = ∫φ_u u². The original functional has G = F and
//! κ = 1, the rescaled one G = λ^{p+1}F(λ⁻¹·) and κ = c^α, the limit one
//! G = |s|^{p+1}/(p+1) and κ = 0.

mod fiber;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::nonlinearity::{Nonlinearity, ScalingContext};
use crate::radial::{RadialField, RadialGrid};
use crate::space::FieldSpace;

pub use fiber::{FiberMax, FiberOptions};

/// Mass tolerance for fields that are supposed to lie on the unit sphere.
pub const UNIT_MASS_TOLERANCE: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// ½‖∇u‖².
    pub kinetic: f64,
    /// ¼κD(u).
    pub coulomb: f64,
    /// ∫G(u).
    pub potential: f64,
    pub total: f64,
    #[serde(rename = "q")]
    pub constraint_q: f64,
}

/// The quadrature-level ingredients of the functionals at one field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Terms {
    pub mass: f64,
    /// ‖∇u‖².
    pub kinetic: f64,
    /// D(u), without the κ weight.
    pub coulomb: f64,
    /// ∫G(u).
    pub potential: f64,
    /// ∫g(u)u.
    pub work: f64,
}

/// One functional of the family: nonlinearity, limit exponent p, zoom λ
/// and Coulomb weight κ.
#[derive(Clone, Debug)]
pub struct RescaledProblem {
    nl: Nonlinearity,
    p: f64,
    lambda: f64,
    kappa: f64,
    c: Option<f64>,
}

impl RescaledProblem {
    /// Î_{c,p} and Q̂_c.
    pub fn new(nl: Nonlinearity, ctx: &ScalingContext) -> Self {
        Self { nl, p: ctx.p, lambda: ctx.lambda, kappa: ctx.coulomb_weight(), c: Some(ctx.c) }
    }

    /// Î_{0,p} and Q̂₀: pure power, no Coulomb term.
    pub fn limit(p: f64) -> Result<Self> {
        Ok(Self { nl: Nonlinearity::pure_power(p)?, p, lambda: 1.0, kappa: 0.0, c: None })
    }

    /// The unscaled I and Q.
    pub fn original(nl: Nonlinearity) -> Self {
        let p = nl.limit_exponent();
        Self { nl, p, lambda: 1.0, kappa: 1.0, c: None }
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nl
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn coulomb_weight(&self) -> f64 {
        self.kappa
    }

    /// The constraint parameter c for rescaled problems.
    pub fn c(&self) -> Option<f64> {
        self.c
    }

    pub fn is_limit(&self) -> bool {
        self.kappa == 0.0 && self.c.is_none()
    }

    pub fn local_f(&self, s: f64) -> f64 {
        self.nl.scaled_f_at(self.lambda, self.p, s).0
    }

    #[allow(non_snake_case)]
    pub fn local_F(&self, s: f64) -> f64 {
        self.nl.scaled_F_at(self.lambda, self.p, s).0
    }

    pub fn local_fprime(&self, s: f64) -> f64 {
        self.nl.scaled_fprime_at(self.lambda, self.p, s).0
    }

    pub fn terms<U: FieldSpace>(&self, u: &U) -> Terms {
        self.terms_with_potential(u).0
    }

    /// The terms together with φ_u, which is only formed when κ ≠ 0.
    pub fn terms_with_potential<U: FieldSpace>(&self, u: &U) -> (Terms, Option<U>) {
        let phi = (self.kappa != 0.0).then(|| u.coulomb_potential());
        let coulomb = phi.as_ref().map_or(0.0, |phi| phi.zip_map(u, |a, b| a * b).dot(u));
        let terms = Terms {
            mass: u.mass(),
            kinetic: u.kinetic(),
            coulomb,
            potential: u.local_integral(&|s| self.local_F(s)),
            work: u.local_integral(&|s| self.local_f(s) * s),
        };
        (terms, phi)
    }

    pub fn breakdown(&self, t: &Terms) -> EnergyBreakdown {
        let kinetic = 0.5 * t.kinetic;
        let coulomb = 0.25 * self.kappa * t.coulomb;
        EnergyBreakdown {
            kinetic,
            coulomb,
            potential: t.potential,
            total: kinetic + coulomb - t.potential,
            constraint_q: self.q_from_terms(t),
        }
    }

    pub(crate) fn q_from_terms(&self, t: &Terms) -> f64 {
        t.kinetic + 0.25 * self.kappa * t.coulomb - 1.5 * (t.work - 2.0 * t.potential)
    }

    pub fn energy<U: FieldSpace>(&self, u: &U) -> EnergyBreakdown {
        self.breakdown(&self.terms(u))
    }

    /// The constraint functional Q̂ (d/dt of the energy along u^t at t = 1).
    pub fn pohozaev<U: FieldSpace>(&self, u: &U) -> f64 {
        self.q_from_terms(&self.terms(u))
    }

    /// Nehari functional A + κD − ∫g(u)u + ω·mass.
    pub fn nehari<U: FieldSpace>(&self, omega: f64, u: &U) -> f64 {
        let t = self.terms(u);
        t.kinetic + self.kappa * t.coulomb - t.work + omega * t.mass
    }

    /// L² gradient of Î + (ω/2)·mass: (-Δ+ω)u + κφ_u u − g(u).
    pub fn gradient<U: FieldSpace>(&self, omega: f64, u: &U) -> U {
        let phi = (self.kappa != 0.0).then(|| u.coulomb_potential());
        self.gradient_with_potential(omega, u, phi.as_ref())
    }

    /// [`gradient`](Self::gradient) with a precomputed φ_u.
    pub fn gradient_with_potential<U: FieldSpace>(&self, omega: f64, u: &U, phi: Option<&U>) -> U {
        self.fiber_gradient(omega, 1.0, u, phi)
    }

    /// L² gradient in u of Ψ_u(t) + (ω/2)·mass at fixed t:
    /// t²(-Δu) + ωu + κtφ_u u − t^{-3/2}g(t^{3/2}u). At t = 1 this is
    /// [`gradient`](Self::gradient).
    pub fn fiber_gradient<U: FieldSpace>(&self, omega: f64, t: f64, u: &U, phi: Option<&U>) -> U {
        let mut out = u.neg_laplacian();
        let (t2, s) = (t * t, t.powf(1.5));
        for (o, &v) in out.values_mut().iter_mut().zip(u.values()) {
            *o = t2 * *o + omega * v;
        }
        if let (true, Some(phi)) = (self.kappa != 0.0, phi) {
            for ((o, &p), &v) in out.values_mut().iter_mut().zip(phi.values()).zip(u.values()) {
                *o += self.kappa * t * p * v;
            }
        }
        for (o, &v) in out.values_mut().iter_mut().zip(u.values()) {
            *o -= self.local_f(s * v) / s;
        }
        out
    }

    /// ω = [∫g(u)u − A − κD] / mass.
    pub fn lagrange_multiplier<U: FieldSpace>(&self, u: &U) -> Result<f64> {
        self.lagrange_from_terms(&self.terms(u))
    }

    pub fn lagrange_from_terms(&self, t: &Terms) -> Result<f64> {
        if t.mass == 0.0 {
            return Err(invalid("u", "zero field has no Lagrange multiplier"));
        }
        Ok((t.work - t.kinetic - self.kappa * t.coulomb) / t.mass)
    }

    /// Sup of the Euler–Lagrange residual relative to the size of its
    /// parts, ‖(-Δ+ω)u + κφ_u u − g(u)‖∞ / max(‖(-Δ+ω)u‖∞, ‖g(u)‖∞).
    /// The profiles have amplitudes far from 1, so an absolute residual
    /// would measure the units rather than the solution quality.
    pub fn el_residual<U: FieldSpace>(&self, omega: f64, u: &U) -> f64 {
        let res = self.gradient(omega, u).sup_norm();
        let lin = u.neg_laplacian().axpy(omega, u).sup_norm();
        let non = u.map(|s| self.local_f(s)).sup_norm();
        res / lin.max(non).max(f64::MIN_POSITIVE)
    }
}

pub fn energy_original<U: FieldSpace>(nl: &Nonlinearity, u: &U) -> EnergyBreakdown {
    RescaledProblem::original(nl.clone()).energy(u)
}

pub fn energy_rescaled<U: FieldSpace>(nl: &Nonlinearity, ctx: &ScalingContext, u: &U) -> EnergyBreakdown {
    RescaledProblem::new(nl.clone(), ctx).energy(u)
}

pub fn pohozaev_rescaled<U: FieldSpace>(nl: &Nonlinearity, ctx: &ScalingContext, u: &U) -> f64 {
    RescaledProblem::new(nl.clone(), ctx).pohozaev(u)
}

pub fn energy_limit<U: FieldSpace>(u: &U, p: f64) -> Result<EnergyBreakdown> {
    Ok(RescaledProblem::limit(p)?.energy(u))
}

pub fn pohozaev_limit<U: FieldSpace>(u: &U, p: f64) -> Result<f64> {
    Ok(RescaledProblem::limit(p)?.pohozaev(u))
}

/// A rescaled field mapped back to the original variables.
#[derive(Clone, Debug)]
pub struct OriginalField {
    pub field: RadialField,
    /// mass(v)·c², the mass the original-variable field carries.
    pub induced_mass: f64,
    /// Eigenvalue of the original equation, −ω·c^{2b}, when ω is known.
    pub eigenvalue: Option<f64>,
}

/// x ↦ c^a v(c^b x) with a = 4/(7−3p), b = 2(p−1)/(7−3p).
pub fn rescale_to_original(v: &RadialField, ctx: &ScalingContext, omega: Option<f64>) -> Result<OriginalField> {
    let (a, b) = (ctx.amplitude_exponent(), ctx.length_exponent());
    let amp = ctx.c.powf(a);
    let len = ctx.c.powf(b);
    let grid = RadialGrid::new(v.grid().rmax() / len, v.grid().n())?;
    let field = RadialField::new(grid, v.values().iter().map(|x| amp * x).collect())?;
    Ok(OriginalField {
        field,
        induced_mass: ctx.c * ctx.c * v.mass(),
        eigenvalue: omega.map(|w| -w * len * len),
    })
}
