//! Descent of E(u) = max_t Î(u^t) on the unit-mass sphere.
//!
//! E is evaluated from the fiber scaling laws, so it is a function of the
//! nodal values of u alone. By the envelope argument its derivative is the
//! u-derivative of Ψ_u(t) at t = t*(u), and with the matching Lagrange ω
//! the gradient G is tangent to the sphere (⟨G, u⟩ = 0). The start is
//! dilated onto Q̂ = 0 and the result is dilated back there; in between the
//! iterates are not resampled, because a resampled field carries a
//! slightly different E whenever the dilation is not exact.
//!
//! The search direction is the H¹-type gradient d = P(G − βu) with
//! P = (-Δ+σ)⁻¹ and β fixing ⟨d, u⟩ = 0. Then ⟨G, d⟩ = ‖d‖²_{P⁻¹}, and its
//! square root, the dual norm of the projected gradient, is the
//! convergence measure. Steps are Barzilai–Borwein lengths checked
//! by a nonmonotone Armijo test on E.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::functionals::{EnergyBreakdown, FiberOptions, RescaledProblem};
use crate::nonlinearity::{Nonlinearity, ScalingContext};
use crate::radial::RadialField;
use crate::space::FieldSpace;

/// Mass tolerance accepted on the initial field before it is renormalized.
pub const INIT_MASS_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MinimizerOptions {
    /// Stop when sqrt(⟨G, d⟩) falls below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Report divergence after this many consecutive increases of E.
    pub divergence_window: usize,
    /// Length of the nonmonotone reference window.
    pub memory: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Largest c accepted.
    pub c_ceiling: f64,
    pub fiber: FiberOptions,
}

impl Default for MinimizerOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 5000,
            divergence_window: 50,
            memory: 8,
            armijo: 1e-4,
            max_backtracks: 30,
            c_ceiling: 0.5,
            fiber: FiberOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIterations,
    Divergence,
    LineSearch,
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct MinimizerReport<U = RadialField> {
    pub field: U,
    /// Breakdown at the final field; `energy.total` is K_{c,p}.
    pub energy: EnergyBreakdown,
    pub omega: f64,
    pub q_residual: f64,
    pub el_residual: f64,
    /// Final value of the convergence measure.
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Ψ''(1) of the final field.
    pub curvature: f64,
    /// t* of the last iterate, before the final dilation. E is dilation
    /// invariant in the continuum, so a value away from 1 means the grid
    /// favours a rescaled field: the problem is under-resolved.
    pub iterate_t_star: f64,
    /// Nodes where the field changed sign relative to its peak.
    pub sign_flips: usize,
    pub energy_history: Vec<f64>,
}

/// Minimizer of Î_{c,p} on the Pohozaev–Nehari manifold.
pub fn minimize_rescaled<U: FieldSpace>(
    nl: &Nonlinearity,
    ctx: &ScalingContext,
    init: &U,
    opts: &MinimizerOptions,
) -> Result<MinimizerReport<U>> {
    RescaledProblem::new(nl.clone(), ctx).minimize(init, opts)
}

struct State<U> {
    u: U,
    energy: f64,
    t_star: f64,
    grad: U,
    dir: U,
    /// ⟨G, d⟩.
    slope: f64,
    measure: f64,
    shift: f64,
}

impl RescaledProblem {
    pub fn minimize<U: FieldSpace>(&self, init: &U, opts: &MinimizerOptions) -> Result<MinimizerReport<U>> {
        if let Some(c) = self.c() {
            if c > opts.c_ceiling {
                return Err(invalid("c", format!("{c} exceeds the ceiling {}", opts.c_ceiling)));
            }
        }
        let m = init.mass();
        if (m - 1.0).abs() > INIT_MASS_TOLERANCE {
            return Err(LabError::NotUnitMass { mass: m, tolerance: INIT_MASS_TOLERANCE });
        }
        let start = init.map(f64::abs).normalized();
        let fm = self.fiber_max_with(&start, &opts.fiber)?;
        let mut state = self.state(start.dilate(fm.t_star)?.normalized(), opts)?;
        let mut history = vec![state.energy];
        let mut window: VecDeque<f64> = VecDeque::from([state.energy]);
        let mut alpha = 1.0;
        let mut increases = 0;
        let mut iterations = 0;

        let termination = loop {
            if state.measure <= opts.tol {
                break Termination::Converged;
            }
            if iterations >= opts.max_iter {
                break Termination::MaxIterations;
            }
            let reference = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            // E is only known to roundoff; demanding more decrease than that
            // would stall the search next to the minimizer.
            let slack = 1e-13 * reference.abs().max(1.0);
            let mut step = alpha;
            let mut accepted = None;
            let mut failure = None;
            for _ in 0..=opts.max_backtracks {
                let trial = state.u.axpy(-step, &state.dir).normalized();
                match self.state(trial, opts) {
                    Ok(next) => {
                        if next.energy <= reference - opts.armijo * step * state.slope + slack {
                            accepted = Some(next);
                            break;
                        }
                    }
                    // A long BB step can leave the region where the fiber has
                    // an interior maximum; shorter steps stay close to u.
                    Err(LabError::FiberBracket { .. }) => {}
                    Err(e) => {
                        failure = Some(e);
                        break;
                    }
                }
                step *= 0.5;
            }
            if let Some(e) = failure {
                break Termination::Failed(e.to_string());
            }
            let Some(next) = accepted else {
                break Termination::LineSearch;
            };
            iterations += 1;

            // BB2 length in the P⁻¹ metric: ⟨s, y⟩ / ⟨y, P y⟩.
            let s = next.u.axpy(-1.0, &state.u);
            let y = next.grad.axpy(-1.0, &state.grad);
            let sy = s.dot(&y);
            let ypy = y.dot(&y.helmholtz_inverse(next.shift)?);
            alpha = if sy > 0.0 && ypy > 0.0 { (sy / ypy).clamp(1e-4, 1e2) } else { 1.0 };

            if next.energy > state.energy + slack {
                increases += 1;
            } else {
                increases = 0;
            }
            state = next;
            history.push(state.energy);
            window.push_back(state.energy);
            if window.len() > opts.memory.max(1) {
                window.pop_front();
            }
            if increases >= opts.divergence_window {
                break Termination::Divergence;
            }
        };

        let field = if state.t_star == 1.0 { state.u } else { state.u.dilate(state.t_star)?.normalized() };
        let (terms, _) = self.terms_with_potential(&field);
        let fm = self.fiber_max_terms(&field, &terms, &opts.fiber);
        let curvature = fm.as_ref().map_or(f64::NAN, |f| f.curvature);
        let omega = self.lagrange_from_terms(&terms)?;
        let peak = field.sup_norm();
        let sign_flips = field.values().iter().filter(|v| **v < -1e-12 * peak).count();
        let converged = termination == Termination::Converged;
        Ok(MinimizerReport {
            energy: self.breakdown(&terms),
            omega,
            q_residual: self.q_from_terms(&terms),
            el_residual: self.el_residual(omega, &field),
            gradient_norm: state.measure,
            iterations,
            converged,
            termination,
            curvature,
            iterate_t_star: state.t_star,
            sign_flips,
            energy_history: history,
            field,
        })
    }

    /// E, its gradient and the preconditioned direction at a unit-mass u.
    fn state<U: FieldSpace>(&self, u: U, opts: &MinimizerOptions) -> Result<State<U>> {
        let (terms, phi) = self.terms_with_potential(&u);
        let fm = self.fiber_max_terms(&u, &terms, &opts.fiber)?;
        let t = fm.t_star;
        // ω from ⟨G, u⟩ = 0: the Lagrange multiplier of u^{t*}.
        let s = t.powf(1.5);
        let work = u.local_integral(&|v| self.local_f(s * v) * s * v) / (t * t * t);
        let omega = (work - t * t * terms.kinetic - self.coulomb_weight() * t * terms.coulomb) / terms.mass;
        // σ = ω/t² once ω is positive; before that the kinetic scale A/mass.
        let shift = if omega > 0.0 { omega / (t * t) } else { terms.kinetic / terms.mass };
        let grad = self.fiber_gradient(omega, t, &u, phi.as_ref());
        let pg = grad.helmholtz_inverse(shift)?;
        let pu = u.helmholtz_inverse(shift)?;
        let beta = pg.dot(&u) / pu.dot(&u);
        let dir = pg.axpy(-beta, &pu);
        let slope = grad.dot(&dir).max(0.0);
        let measure = slope.sqrt();
        Ok(State { u, energy: fm.value, t_star: t, grad, dir, slope, measure, shift })
    }
}
