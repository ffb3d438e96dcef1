//! Solution machines: Newton on the Euler–Lagrange equation at fixed ω,
//! and descent on the unit sphere of E(u) = max_t Î(u^t).

mod gmres;
mod minimize;
mod newton;
mod recenter;
mod sweep;

pub use gmres::{gmres, GmresOutcome};
pub use minimize::{minimize_rescaled, MinimizerOptions, MinimizerReport, Termination, INIT_MASS_TOLERANCE};
pub use newton::{NewtonOptions, NewtonReport};
pub use recenter::{recenter, Recentered, Translatable, RECENTER_MAX_ITER};
pub use sweep::{continuation_sweep, default_schedule, Sweep, SweepOptions, SweepRow, SweepTrends, Trend};

use crate::error::Result;
use crate::functionals::RescaledProblem;
use crate::nonlinearity::{Nonlinearity, ScalingContext};
use crate::radial::RadialField;

/// The branch point w(c, ω): the solution of the rescaled Euler–Lagrange
/// equation at fixed (c, ω), by Newton from `init`.
pub fn newton_branch(
    nl: &Nonlinearity,
    ctx: &ScalingContext,
    omega: f64,
    init: &RadialField,
    opts: &NewtonOptions,
) -> Result<NewtonReport<RadialField>> {
    RescaledProblem::new(nl.clone(), ctx).newton_solve(omega, init, opts)
}
