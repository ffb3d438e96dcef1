//! The limit ground state φ: the positive radial solution of
//! -Δφ + ω₀φ = |φ|^{p-1}φ with ‖φ‖₂ = 1.
//!
//! At ω = 1 the profile W is found by shooting on the central value W(0).
//! Every other ω follows from the symmetry φ_ω(r) = ω^{1/(p-1)}W(√ω r),
//! which gives mass(φ_ω) = ω^{2/(p-1) - 3/2}·mass(W). The exponent is
//! negative for p > 7/3, so ω₀ = mass(W)^{1/(3/2 - 2/(p-1))} in closed form.
//!
//! Grids are sized in units of the decay length 1/√ω. The ω = 1 profile is
//! polished by Newton on the discrete equation and then mapped to ω₀ by
//! stretching the grid. The spectral operators commute with that map, so
//! the result solves the discrete equation at ω₀ to roundoff.

mod ode;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};
use crate::functionals::RescaledProblem;
use crate::nonlinearity::{P_MAX, P_MIN};
use crate::radial::{RadialField, RadialGrid};
use crate::solvers::NewtonOptions;

use ode::Dp45;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimitOptions {
    /// Truncation radius in decay lengths 1/√ω.
    pub rmax_natural: f64,
    /// Minimum node count; raised to 2^k + 1 until the spacing is at most
    /// `core_resolution`·W(0)^{-(p-1)/2}, the width of the core at ω = 1.
    pub n: usize,
    /// `None` keeps exactly `n` nodes; written as `false` in config files,
    /// which have no null.
    #[serde(with = "number_or_false")]
    pub core_resolution: Option<f64>,
    /// Upper end of the central-value bracket.
    pub w_max: f64,
    pub bisect_rtol: f64,
    /// The ODE solution is replaced by the Yukawa tail where W < this·W(0).
    pub tail_fraction: f64,
    pub ode_rtol: f64,
    pub ode_atol: f64,
    pub newton: NewtonOptions,
}

impl Default for LimitOptions {
    fn default() -> Self {
        Self {
            rmax_natural: 24.0,
            n: 513,
            core_resolution: Some(0.3),
            w_max: 50.0,
            bisect_rtol: 1e-13,
            tail_fraction: 1e-6,
            ode_rtol: 1e-12,
            ode_atol: 1e-14,
            newton: NewtonOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct LimitGroundState {
    pub p: f64,
    pub omega0: f64,
    pub phi: RadialField,
    /// W(0) of the ω = 1 profile found by shooting.
    pub central_value: f64,
    /// mass of the polished ω = 1 profile.
    pub unit_omega_mass: f64,
    pub mass_residual: f64,
    /// Relative sup residual of the discrete equation.
    pub el_residual: f64,
    /// |‖∇φ‖² + ω₀‖φ‖² − ‖φ‖_{p+1}^{p+1}| / ‖φ‖_{p+1}^{p+1}.
    pub nehari_residual: f64,
    /// |Q̂₀(φ)|.
    pub pohozaev_residual: f64,
}

/// Serializable summary of a [`LimitGroundState`] without the profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSummary {
    pub p: f64,
    pub omega0: f64,
    pub central_value: f64,
    pub unit_omega_mass: f64,
    pub mass_residual: f64,
    pub el_residual: f64,
    pub nehari_residual: f64,
    pub pohozaev_residual: f64,
    pub rmax: f64,
    pub n: usize,
}

impl LimitGroundState {
    pub fn summary(&self) -> LimitSummary {
        LimitSummary {
            p: self.p,
            omega0: self.omega0,
            central_value: self.central_value,
            unit_omega_mass: self.unit_omega_mass,
            mass_residual: self.mass_residual,
            el_residual: self.el_residual,
            nehari_residual: self.nehari_residual,
            pohozaev_residual: self.pohozaev_residual,
            rmax: self.phi.grid().rmax(),
            n: self.phi.grid().n(),
        }
    }

    /// Î₀(φ) = K_{0,p}.
    pub fn limit_energy(&self) -> f64 {
        RescaledProblem::limit(self.p).expect("p validated").energy(&self.phi).total
    }
}

mod number_or_false {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Flag(bool),
    }

    pub fn serialize<S: Serializer>(v: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match v {
            Some(x) => Repr::Number(*x),
            None => Repr::Flag(false),
        }
        .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(x) => Ok(Some(x)),
            Repr::Flag(false) => Ok(None),
            Repr::Flag(true) => Err(serde::de::Error::custom("expected a number or false")),
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > P_MIN && p < P_MAX) {
        return Err(invalid("p", format!("{p} is outside (7/3, 5)")));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Verdict {
    Overshoot,
    Undershoot,
}

fn rhs(p: f64) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    move |r, y| [y[1], -2.0 * y[1] / r + y[0] - y[0].abs().powf(p - 1.0) * y[0]]
}

/// Start off the singular point with the series W = W₀ + br²/2, b = (W₀ − W₀ᵖ)/3.
fn series_start(p: f64, w0: f64) -> (f64, [f64; 2]) {
    let b = (w0 - w0.powf(p)) / 3.0;
    let r0 = 1e-5 / (1.0 + b.abs()).sqrt();
    (r0, [w0 + 0.5 * b * r0 * r0, b * r0])
}

fn classify(p: f64, w0: f64, opts: &LimitOptions) -> Result<Verdict> {
    let (r0, y0) = series_start(p, w0);
    let mut ode = Dp45::new(rhs(p), r0, y0, r0, opts.ode_rtol, opts.ode_atol);
    let r_cap = 80.0;
    while ode.t < r_cap {
        ode.step(r_cap)?;
        if ode.y[0] < 0.0 {
            return Ok(Verdict::Overshoot);
        }
        if ode.y[1] > 0.0 {
            return Ok(Verdict::Undershoot);
        }
    }
    // Still positive and decreasing: indistinguishable from the ground state.
    Ok(Verdict::Undershoot)
}

/// Central value W(0) of the ω = 1 ground state.
pub fn shooting_central_value(p: f64, opts: &LimitOptions) -> Result<f64> {
    check_p(p)?;
    // W(0) ≤ 1 makes W'' ≥ 0 at the origin, a certain undershoot.
    let mut lo = 1.0;
    let mut hi = opts.w_max;
    if classify(p, hi, opts)? != Verdict::Overshoot {
        return Err(LabError::ShootingBracket { w_max: opts.w_max });
    }
    while hi - lo > opts.bisect_rtol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(p, mid, opts)? {
            Verdict::Overshoot => hi = mid,
            Verdict::Undershoot => lo = mid,
        }
    }
    Ok(0.5 * (lo + hi))
}

/// W at sorted radii for a given central value, with the Yukawa tail
/// A e^{-r}/r beyond the first radius where W < tail_fraction·W(0).
fn unit_profile(p: f64, w0: f64, radii: &[f64], opts: &LimitOptions) -> Result<Vec<f64>> {
    let (r0, y0) = series_start(p, w0);
    let b = (w0 - w0.powf(p)) / 3.0;
    let mut ode = Dp45::new(rhs(p), r0, y0, r0, opts.ode_rtol, opts.ode_atol);
    let mut tail: Option<f64> = None;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if let Some(a) = tail {
            out.push(a * (-r).exp() / r);
            continue;
        }
        if r <= r0 {
            out.push(w0 + 0.5 * b * r * r);
            continue;
        }
        ode.advance_to(r)?;
        let (w, dw) = (ode.y[0], ode.y[1]);
        if w < opts.tail_fraction * w0 || w <= 0.0 || dw > 0.0 {
            let (rl, wl) = if w > 0.0 && dw <= 0.0 {
                (r, w)
            } else {
                // Trajectory already left the ground state; match at the last good node.
                let k = out.len() - 1;
                (radii[k], out[k])
            };
            let a = wl * rl * rl.exp();
            tail = Some(a);
            out.push(a * (-r).exp() / r);
        } else {
            out.push(w);
        }
    }
    Ok(out)
}

/// The shooting profile ω^{1/(p-1)}W(√ω r) sampled on `grid`, without
/// polishing.
pub fn shoot_profile(p: f64, omega: f64, grid: RadialGrid, opts: &LimitOptions) -> Result<RadialField> {
    if !(omega > 0.0) {
        return Err(invalid("omega", format!("{omega} must be positive")));
    }
    let w0 = shooting_central_value(p, opts)?;
    profile_from_central_value(p, omega, w0, grid, opts)
}

fn profile_from_central_value(
    p: f64,
    omega: f64,
    w0: f64,
    grid: RadialGrid,
    opts: &LimitOptions,
) -> Result<RadialField> {
    let k = omega.sqrt();
    let amp = omega.powf(1.0 / (p - 1.0));
    let radii: Vec<f64> = grid.nodes().iter().map(|r| k * r).collect();
    let mut values: Vec<f64> = unit_profile(p, w0, &radii, opts)?.into_iter().map(|w| amp * w).collect();
    *values.last_mut().unwrap() = 0.0;
    RadialField::new(grid, values)
}

/// Ground state at (p, ω) on `grid`: shooting profile polished by Newton
/// on the discrete equation.
pub fn shoot_ground_state(p: f64, omega: f64, grid: RadialGrid) -> Result<RadialField> {
    shoot_ground_state_with(p, omega, grid, &LimitOptions::default())
}

pub fn shoot_ground_state_with(p: f64, omega: f64, grid: RadialGrid, opts: &LimitOptions) -> Result<RadialField> {
    let raw = shoot_profile(p, omega, grid, opts)?;
    let prob = RescaledProblem::limit(p)?;
    Ok(prob.newton_solve(omega, &raw, &opts.newton)?.field)
}

pub fn normalize_mass(p: f64) -> Result<LimitGroundState> {
    normalize_mass_with(p, &LimitOptions::default())
}

pub fn normalize_mass_with(p: f64, opts: &LimitOptions) -> Result<LimitGroundState> {
    check_p(p)?;
    let w0 = shooting_central_value(p, opts)?;
    let natural = RadialGrid::new(opts.rmax_natural, natural_size(p, w0, opts))?;
    let raw = profile_from_central_value(p, 1.0, w0, natural, opts)?;
    let prob = RescaledProblem::limit(p)?;
    let unit = prob.newton_solve(1.0, &raw, &opts.newton)?.field;
    let m1 = unit.mass();

    let exponent = 1.5 - 2.0 / (p - 1.0);
    let omega0 = m1.powf(1.0 / exponent);
    let grid = natural.stretched(1.0 / omega0.sqrt())?;
    let amp = omega0.powf(1.0 / (p - 1.0));
    let phi = RadialField::new(grid, unit.values().iter().map(|v| amp * v).collect())?;

    let terms = prob.terms(&phi);
    let b = terms.work;
    Ok(LimitGroundState {
        p,
        omega0,
        central_value: w0,
        unit_omega_mass: m1,
        mass_residual: (terms.mass - 1.0).abs(),
        el_residual: prob.el_residual(omega0, &phi),
        nehari_residual: (terms.kinetic + omega0 * terms.mass - b).abs() / b,
        pohozaev_residual: prob.breakdown(&terms).constraint_q.abs(),
        phi,
    })
}

fn natural_size(p: f64, w0: f64, opts: &LimitOptions) -> usize {
    let Some(frac) = opts.core_resolution else { return opts.n };
    let h_max = frac * w0.powf(-(p - 1.0) / 2.0);
    let mut n = opts.n;
    while opts.rmax_natural / (n - 1) as f64 > h_max {
        n = 2 * (n - 1) + 1;
    }
    n
}

/// ω₀ computed on natural grids of the given sizes (same truncation radius).
pub fn omega0_refinement(p: f64, sizes: &[usize], opts: &LimitOptions) -> Result<Vec<(usize, f64)>> {
    sizes
        .iter()
        .map(|&n| Ok((n, normalize_mass_with(p, &LimitOptions { n, core_resolution: None, ..*opts })?.omega0)))
        .collect()
}
