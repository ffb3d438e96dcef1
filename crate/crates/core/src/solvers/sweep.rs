//! The c → 0 sweep: minimizers along a decreasing schedule of c, measured
//! against the limit ground state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::minimize::{MinimizerOptions, MinimizerReport};
use crate::error::{invalid, Result};
use crate::functionals::RescaledProblem;
use crate::limit_problem::LimitGroundState;
use crate::nonlinearity::{Nonlinearity, ScalingContext};
use crate::radial::RadialField;
use crate::space::FieldSpace;

/// 1e-1, 1e-2, …, 1e-5.
pub fn default_schedule() -> Vec<f64> {
    (1..=5).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub minimizer: MinimizerOptions,
    /// Start each row from the previous converged field. Cold rows all start
    /// from φ and run in parallel.
    pub warm_start: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { minimizer: MinimizerOptions::default(), warm_start: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub c: f64,
    #[serde(rename = "K")]
    pub k: f64,
    /// t*_c(φ): the top of φ's fiber for Î_{c,p}.
    pub t_star_phi: f64,
    pub omega: f64,
    pub h1_dist: f64,
    pub q_residual: f64,
    pub el_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Sweep {
    pub p: f64,
    pub omega0: f64,
    /// K_{0,p} = Î₀(φ).
    pub k0: f64,
    /// The Lagrange multiplier of the discrete φ for Î₀. It agrees with
    /// `omega0` to the residual of φ, and it is what ω_c tends to on the
    /// same grid, so the ω column is measured against it.
    pub omega0_discrete: f64,
    /// t*₀(φ), 1 up to the Pohozaev residual of the discrete φ.
    pub t_star0: f64,
    pub rows: Vec<SweepRow>,
    /// Minimizers, `None` where the solver failed outright.
    pub fields: Vec<Option<RadialField>>,
}

/// Outcome of a monotone-decrease check on one column.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    /// Adjacent pairs where the value did not decrease.
    pub violations: usize,
    /// last / first.
    pub ratio: f64,
}

impl Trend {
    pub fn of(values: &[f64]) -> Trend {
        let violations = values.windows(2).filter(|w| !(w[1] < w[0])).count();
        let ratio = match (values.first(), values.last()) {
            (Some(a), Some(b)) if values.len() > 1 => b / a,
            _ => f64::NAN,
        };
        Trend { violations, ratio }
    }

    pub fn passes(&self, allowed_violations: usize, max_ratio: f64) -> bool {
        self.violations <= allowed_violations && self.ratio <= max_ratio
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTrends {
    pub t_star: Trend,
    pub omega: Trend,
    pub energy: Trend,
    pub h1: Trend,
}

impl Sweep {
    /// |t*_c(φ) − t*₀(φ)|, |ω_c − ω₀|, |K_c − K₀| and ‖u_c − φ‖_{H¹} over
    /// the converged rows, against the discrete limit references.
    pub fn deviations(&self) -> [Vec<f64>; 4] {
        let ok: Vec<&SweepRow> = self.rows.iter().filter(|r| r.converged).collect();
        [
            ok.iter().map(|r| (r.t_star_phi - self.t_star0).abs()).collect(),
            ok.iter().map(|r| (r.omega - self.omega0_discrete).abs()).collect(),
            ok.iter().map(|r| (r.k - self.k0).abs()).collect(),
            ok.iter().map(|r| r.h1_dist).collect(),
        ]
    }

    pub fn trends(&self) -> SweepTrends {
        let [t, w, k, h] = self.deviations();
        SweepTrends { t_star: Trend::of(&t), omega: Trend::of(&w), energy: Trend::of(&k), h1: Trend::of(&h) }
    }

    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }
}

pub fn continuation_sweep(
    nl: &Nonlinearity,
    limit: &LimitGroundState,
    schedule: &[f64],
    opts: &SweepOptions,
) -> Result<Sweep> {
    if schedule.is_empty() {
        return Err(invalid("c_schedule", "empty"));
    }
    if schedule.iter().any(|c| !(*c > 0.0)) || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(invalid("c_schedule", "must be positive and strictly decreasing"));
    }
    if nl.limit_exponent() != limit.p {
        return Err(invalid(
            "p",
            format!("nonlinearity exponent {} differs from the limit state's {}", nl.limit_exponent(), limit.p),
        ));
    }
    let phi = &limit.phi;
    let results: Vec<(SweepRow, Option<RadialField>)> = if opts.warm_start {
        let mut out = Vec::with_capacity(schedule.len());
        let mut init = phi.clone();
        for &c in schedule {
            let (row, field) = sweep_row(nl, limit, c, &init, &opts.minimizer)?;
            if let (true, Some(f)) = (row.converged, &field) {
                init = f.clone();
            }
            out.push((row, field));
        }
        out
    } else {
        schedule.par_iter().map(|&c| sweep_row(nl, limit, c, phi, &opts.minimizer)).collect::<Result<_>>()?
    };
    let (rows, fields) = results.into_iter().unzip();
    let lim = RescaledProblem::limit(limit.p)?;
    let omega0_discrete = lim.lagrange_multiplier(phi)?;
    let t_star0 = lim.fiber_max_with(phi, &opts.minimizer.fiber)?.t_star;
    Ok(Sweep { p: limit.p, omega0: limit.omega0, k0: limit.limit_energy(), omega0_discrete, t_star0, rows, fields })
}

fn sweep_row(
    nl: &Nonlinearity,
    limit: &LimitGroundState,
    c: f64,
    init: &RadialField,
    opts: &MinimizerOptions,
) -> Result<(SweepRow, Option<RadialField>)> {
    let ctx = ScalingContext::new(c, limit.p)?;
    let prob = RescaledProblem::new(nl.clone(), &ctx);
    let t_star_phi = prob.fiber_max_with(&limit.phi, &opts.fiber).map_or(f64::NAN, |f| f.t_star);
    let failed = |e: String| SweepRow {
        c,
        k: f64::NAN,
        t_star_phi,
        omega: f64::NAN,
        h1_dist: f64::NAN,
        q_residual: f64::NAN,
        el_residual: f64::NAN,
        iterations: 0,
        converged: false,
        error: Some(e),
    };
    Ok(match prob.minimize(init, opts) {
        Ok(rep) => (row_from_report(c, t_star_phi, &limit.phi, &rep), Some(rep.field)),
        Err(e) => (failed(e.to_string()), None),
    })
}

fn row_from_report(c: f64, t_star_phi: f64, phi: &RadialField, rep: &MinimizerReport) -> SweepRow {
    SweepRow {
        c,
        k: rep.energy.total,
        t_star_phi,
        omega: rep.omega,
        h1_dist: rep.field.h1_distance(phi),
        q_residual: rep.q_residual,
        el_residual: rep.el_residual,
        iterations: rep.iterations,
        converged: rep.converged,
        error: (!rep.converged).then(|| format!("{:?}", rep.termination)),
    }
}
