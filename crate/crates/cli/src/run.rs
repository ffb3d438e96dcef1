//! One function per experiment kind. Each writes its artifacts through the
//! [`Writer`] and reports whether every solve it requested converged.
//! Solver failures are recorded in the artifacts rather than aborting, so a
//! failed run still leaves its partial results behind.

use std::path::Path;

use anyhow::Result;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use splab_core::cartesian3d::{io as io3, minimize_3d, symmetry_defect};
use splab_core::limit_problem::{normalize_mass_with, LimitGroundState};
use splab_core::nonlinearity::check_assumptions;
use splab_core::radial;
use splab_core::solvers::{
    continuation_sweep, minimize_rescaled, newton_branch, recenter, MinimizerOptions, MinimizerReport, Sweep,
    SweepOptions, Termination,
};
use splab_core::{CubeGrid, Field3D, FieldSpace, Nonlinearity, RadialField, ScalingContext};

use crate::config::{ExperimentConfig, Kind};
use crate::output::{num, Manifest, Writer};

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_JSON: &str = "sweep.json";
pub const SWEEP_COLUMNS: [&str; 9] =
    ["c", "K", "t_star_phi", "omega", "h1_dist", "q_residual", "converged", "el_residual", "iterations"];
pub const SYMMETRY_JSON: &str = "symmetry3d.json";
pub const PHI_TEXT: &str = "phi.txt";

/// File name of the sweep profile at c.
pub fn profile_name(c: f64) -> String {
    format!("profile_c{c:e}.txt")
}

/// Validates, runs and writes the manifest. Config errors return before
/// anything is computed or written.
pub fn run(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    let nl = cfg.nonlinearity()?;
    let recorded = cfg.to_toml()?;
    let mut w = Writer::new(&cfg.out)?;
    let converged = match cfg.kind {
        Kind::Groundstate => groundstate(cfg, &mut w)?,
        Kind::Minimize => minimize(cfg, &nl, &mut w)?,
        Kind::Branch => branch(cfg, &nl, &mut w)?,
        Kind::Sweep => sweep(cfg, &nl, &mut w)?,
        Kind::CheckAssumptions => assumptions(cfg, &nl, &mut w)?,
        Kind::Symmetry3d => symmetry3d(cfg, &nl, &mut w)?,
    };
    w.finish(cfg.kind.name(), Some(cfg.seed), converged, Some(recorded))
}

fn radial_text(u: &RadialField) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    radial::write_text(u, &mut buf)?;
    Ok(buf)
}

fn limit_state(cfg: &ExperimentConfig, w: &mut Writer) -> Result<Option<LimitGroundState>> {
    match normalize_mass_with(cfg.p, &cfg.limit) {
        Ok(limit) => {
            w.json("limit.json", &json!({ "summary": limit.summary(), "limit_energy": limit.limit_energy() }))?;
            w.bytes(PHI_TEXT, &radial_text(&limit.phi)?)?;
            Ok(Some(limit))
        }
        Err(e) => {
            w.json("limit.json", &json!({ "error": e.to_string() }))?;
            w.warn(format!("limit ground state failed: {e}"));
            Ok(None)
        }
    }
}

fn groundstate(cfg: &ExperimentConfig, w: &mut Writer) -> Result<bool> {
    Ok(limit_state(cfg, w)?.is_some())
}

#[derive(Serialize)]
struct MinimizerSummary<'a> {
    c: f64,
    energy: &'a splab_core::functionals::EnergyBreakdown,
    omega: f64,
    q_residual: f64,
    el_residual: f64,
    gradient_norm: f64,
    iterations: usize,
    converged: bool,
    termination: &'a Termination,
    curvature: f64,
    iterate_t_star: f64,
    sign_flips: usize,
}

fn summary<U>(c: f64, r: &MinimizerReport<U>) -> MinimizerSummary<'_> {
    MinimizerSummary {
        c,
        energy: &r.energy,
        omega: r.omega,
        q_residual: r.q_residual,
        el_residual: r.el_residual,
        gradient_norm: r.gradient_norm,
        iterations: r.iterations,
        converged: r.converged,
        termination: &r.termination,
        curvature: r.curvature,
        iterate_t_star: r.iterate_t_star,
        sign_flips: r.sign_flips,
    }
}

fn history_csv<U>(w: &mut Writer, name: &str, r: &MinimizerReport<U>) -> Result<()> {
    let rows: Vec<Vec<String>> =
        r.energy_history.iter().enumerate().map(|(i, e)| vec![i.to_string(), num(*e)]).collect();
    w.csv(name, &["iteration", "energy"], &rows)
}

fn minimize(cfg: &ExperimentConfig, nl: &Nonlinearity, w: &mut Writer) -> Result<bool> {
    let Some(limit) = limit_state(cfg, w)? else { return Ok(false) };
    let ctx = ScalingContext::new(cfg.c, cfg.p)?;
    match minimize_rescaled(nl, &ctx, &limit.phi, &cfg.minimizer) {
        Ok(rep) => {
            let h1 = rep.field.h1_distance(&limit.phi);
            w.json("minimize.json", &json!({ "report": summary(cfg.c, &rep), "h1_dist_to_phi": h1 }))?;
            w.bytes("minimizer.txt", &radial_text(&rep.field)?)?;
            history_csv(w, "energy_history.csv", &rep)?;
            Ok(rep.converged)
        }
        Err(e) => {
            w.json("minimize.json", &json!({ "c": cfg.c, "error": e.to_string() }))?;
            w.warn(format!("minimization failed: {e}"));
            Ok(false)
        }
    }
}

fn branch(cfg: &ExperimentConfig, nl: &Nonlinearity, w: &mut Writer) -> Result<bool> {
    let Some(limit) = limit_state(cfg, w)? else { return Ok(false) };
    let ctx = ScalingContext::new(cfg.c, cfg.p)?;
    let (omega, minimizer) = match cfg.omega {
        Some(o) => (o, None),
        None => match minimize_rescaled(nl, &ctx, &limit.phi, &cfg.minimizer) {
            Ok(rep) if rep.converged => (rep.omega, Some(rep)),
            Ok(rep) => {
                w.json("branch.json", &json!({ "c": cfg.c, "minimizer": summary(cfg.c, &rep) }))?;
                w.warn("the minimizer that supplies ω_c did not converge");
                return Ok(false);
            }
            Err(e) => {
                w.json("branch.json", &json!({ "c": cfg.c, "error": e.to_string() }))?;
                w.warn(format!("minimization failed: {e}"));
                return Ok(false);
            }
        },
    };
    match newton_branch(nl, &ctx, omega, &limit.phi, &cfg.newton) {
        Ok(rep) => {
            let converged = rep.final_residual() <= cfg.newton.tol;
            let to_min = minimizer.as_ref().map(|m| rep.field.h1_distance(&m.field));
            w.json(
                "branch.json",
                &json!({
                    "c": cfg.c,
                    "omega": omega,
                    "steps": rep.steps,
                    "residual_history": rep.residual_history,
                    "linear_iterations": rep.linear_iterations,
                    "converged": converged,
                    "mass": rep.field.mass(),
                    "h1_dist_to_phi": rep.field.h1_distance(&limit.phi),
                    "h1_dist_to_minimizer": to_min,
                }),
            )?;
            w.bytes("branch.txt", &radial_text(&rep.field)?)?;
            Ok(converged)
        }
        Err(e) => {
            w.json("branch.json", &json!({ "c": cfg.c, "omega": omega, "error": e.to_string() }))?;
            w.warn(format!("Newton branch failed: {e}"));
            Ok(false)
        }
    }
}

fn sweep_rows(s: &Sweep) -> Vec<Vec<String>> {
    s.rows
        .iter()
        .map(|r| {
            vec![
                num(r.c),
                num(r.k),
                num(r.t_star_phi),
                num(r.omega),
                num(r.h1_dist),
                num(r.q_residual),
                r.converged.to_string(),
                num(r.el_residual),
                r.iterations.to_string(),
            ]
        })
        .collect()
}

fn sweep(cfg: &ExperimentConfig, nl: &Nonlinearity, w: &mut Writer) -> Result<bool> {
    let Some(limit) = limit_state(cfg, w)? else { return Ok(false) };
    let opts = SweepOptions { minimizer: cfg.minimizer, warm_start: cfg.warm_start };
    let s = continuation_sweep(nl, &limit, &cfg.c_schedule, &opts)?;
    w.csv(SWEEP_CSV, &SWEEP_COLUMNS, &sweep_rows(&s))?;
    for (r, f) in s.rows.iter().zip(&s.fields) {
        if let Some(f) = f {
            w.bytes(&profile_name(r.c), &radial_text(f)?)?;
        }
        if let Some(e) = &r.error {
            w.warn(format!("c = {:e}: {e}", r.c));
        }
    }
    let grid = limit.phi.grid();
    w.json(
        SWEEP_JSON,
        &json!({
            "nonlinearity": nl.to_spec(),
            "p": s.p,
            "omega0": s.omega0,
            "omega0_discrete": s.omega0_discrete,
            "t_star0": s.t_star0,
            "k0": s.k0,
            "grid": { "rmax": grid.rmax(), "n": grid.n() },
            "minimizer": cfg.minimizer,
            "warm_start": cfg.warm_start,
            "trends": s.trends(),
            "columns": SWEEP_COLUMNS,
            "versions": { "splab": env!("CARGO_PKG_VERSION"), "schema": crate::output::SCHEMA_VERSION },
        }),
    )?;
    Ok(s.all_converged())
}

fn assumptions(cfg: &ExperimentConfig, nl: &Nonlinearity, w: &mut Writer) -> Result<bool> {
    let (dq, dl) = nl.default_exponents();
    let q = cfg.assumptions.q.unwrap_or(dq);
    let l = cfg.assumptions.l.unwrap_or(dl);
    let report = check_assumptions(nl, q, l, &cfg.assumptions.sampling);
    w.json("assumptions.json", &json!({ "nonlinearity": nl.to_spec(), "all_passed": report.all_passed(), "report": report }))?;
    for (name, c) in [("F1", &report.f1), ("F2", &report.f2), ("F3", &report.f3), ("A1", &report.a1), ("A2", &report.a2)] {
        if !c.passed {
            w.warn(format!("({name}) fails on the sample"));
        }
    }
    // A completed check is a successful run whatever its verdict.
    Ok(true)
}

/// Dipole and quadrupole modes times the Gaussian of width s, with
/// coefficients drawn from the seed.
fn non_radial_bump(g: CubeGrid, s: f64, seed: u64) -> Field3D {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    Field3D::from_fn(g, move |x, y, z| {
        let (x, y, z) = (x / s, y / s, z / s);
        let modes = [x, y, z, x * y, y * z, z * x, x * x - y * y, 2.0 * z * z - x * x - y * y];
        let v: f64 = modes.iter().zip(&a).map(|(m, c)| m * c).sum();
        v * (-(x * x + y * y + z * z) / 2.0).exp()
    })
}

fn symmetry3d(cfg: &ExperimentConfig, nl: &Nonlinearity, w: &mut Writer) -> Result<bool> {
    let Some(limit) = limit_state(cfg, w)? else { return Ok(false) };
    let ctx = ScalingContext::new(cfg.c, cfg.p)?;
    let radial = match minimize_rescaled(nl, &ctx, &limit.phi, &cfg.minimizer) {
        Ok(r) => r,
        Err(e) => {
            w.json(SYMMETRY_JSON, &json!({ "c": cfg.c, "error": format!("radial minimizer: {e}") }))?;
            w.warn(format!("radial minimization failed: {e}"));
            return Ok(false);
        }
    };
    let s = 1.0 / limit.omega0.sqrt();
    let g = CubeGrid::new(cfg.cube.half_width * s, cfg.cube.n)?;
    let phi3 = Field3D::from_radial(&limit.phi, g);
    let bump = non_radial_bump(g, s, cfg.seed);
    let init = phi3.axpy(cfg.cube.perturbation * limit.phi.sup_norm() / bump.sup_norm(), &bump).normalized();
    let opts = MinimizerOptions { tol: cfg.cube.tol, max_iter: cfg.cube.max_iter, ..cfg.minimizer };
    let initial_defect = symmetry_defect(&init, [0.0; 3]);
    let rep = match minimize_3d(nl, &ctx, &init, &opts) {
        Ok(r) => r,
        Err(e) => {
            w.json(SYMMETRY_JSON, &json!({ "c": cfg.c, "error": format!("3D minimizer: {e}") }))?;
            w.warn(format!("3D minimization failed: {e}"));
            return Ok(false);
        }
    };
    let reference = Field3D::from_radial(&radial.field, g);
    let (tau, orthogonality, defect) = match recenter(&rep.field, &reference) {
        Ok(rc) => (Some(rc.tau), Some(rc.orthogonality), symmetry_defect(&rep.field, rc.tau)),
        Err(e) => {
            w.warn(format!("recentering failed: {e}"));
            (None, None, symmetry_defect(&rep.field, [0.0; 3]))
        }
    };
    let k_rel = (rep.energy.total - radial.energy.total).abs() / radial.energy.total.abs();
    w.json(
        SYMMETRY_JSON,
        &json!({
            "c": cfg.c,
            "grid": { "half_width": g.half_width(), "n": g.n(), "h": g.h() },
            "seed": cfg.seed,
            "perturbation": cfg.cube.perturbation,
            "initial_defect": initial_defect,
            "defect": defect,
            "tau": tau,
            "orthogonality": orthogonality,
            "radial_energy": radial.energy.total,
            "energy_rel_gap": k_rel,
            "report": summary(cfg.c, &rep),
        }),
    )?;
    let mut bin = Vec::new();
    io3::write_binary(&rep.field, &mut bin)?;
    w.bytes("field3d.bin", &bin)?;
    let mut slice = Vec::new();
    io3::write_axis_slice(&rep.field, &mut slice)?;
    w.bytes("field3d_slice.txt", &slice)?;
    history_csv(w, "energy_history.csv", &rep)?;
    Ok(rep.converged && radial.converged)
}

/// Reads a manifest back, for callers that only have the directory.
pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    Ok(serde_json::from_slice(&std::fs::read(dir.join(crate::output::MANIFEST))?)?)
}
