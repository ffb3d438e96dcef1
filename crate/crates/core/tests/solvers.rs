use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splab_core::functionals::RescaledProblem;
use splab_core::limit_problem::{normalize_mass, LimitGroundState};
use splab_core::solvers::{
    continuation_sweep, default_schedule, minimize_rescaled, newton_branch, MinimizerOptions, NewtonOptions,
    SweepOptions, Termination, Trend,
};
use splab_core::{FieldSpace, LabError, Nonlinearity, RadialField, ScalingContext};

fn cubic() -> LimitGroundState {
    normalize_mass(3.0).unwrap()
}

fn gaussian_on(limit: &LimitGroundState) -> RadialField {
    let s = 1.0 / limit.omega0.sqrt();
    RadialField::from_fn(*limit.phi.grid(), |r| (-(r / s).powi(2) / 2.0).exp()).normalized()
}

/// Smooth random direction: a few Gaussian bumps at the scale of φ.
fn random_direction(limit: &LimitGroundState, rng: &mut ChaCha8Rng) -> RadialField {
    let s = 1.0 / limit.omega0.sqrt();
    let bumps: Vec<(f64, f64, f64)> =
        (0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..3.0) * s, rng.gen_range(0.5..2.0) * s)).collect();
    RadialField::from_fn(*limit.phi.grid(), |r| {
        bumps.iter().map(|(a, c, w)| a * (-((r - c) / w).powi(2)).exp()).sum()
    })
}

#[test]
fn minimizer_from_a_gaussian_recovers_the_limit_state() {
    let limit = cubic();
    let prob = RescaledProblem::limit(3.0).unwrap();
    let rep = prob.minimize(&gaussian_on(&limit), &MinimizerOptions::default()).unwrap();
    assert!(rep.converged, "{:?}", rep.termination);
    assert!(rep.field.h1_distance(&limit.phi) < 1e-6);
    assert!((rep.omega - limit.omega0).abs() < 1e-6 * limit.omega0);
    assert!((rep.energy.total - limit.limit_energy()).abs() < 1e-9 * limit.limit_energy());
    assert!(rep.energy_history.last().unwrap() <= &rep.energy_history[0]);
}

#[test]
fn converged_minimizers_satisfy_every_invariant() {
    let limit = cubic();
    let nls = [Nonlinearity::pure_power(3.0).unwrap(), Nonlinearity::power_difference(3.0, 2.5).unwrap()];
    for nl in &nls {
        for c in [1e-1, 1e-3] {
            let ctx = ScalingContext::new(c, 3.0).unwrap();
            let rep = minimize_rescaled(nl, &ctx, &gaussian_on(&limit), &MinimizerOptions::default()).unwrap();
            assert!(rep.converged);
            assert!((rep.field.mass() - 1.0).abs() <= 1e-8);
            assert!(rep.q_residual.abs() <= 1e-7);
            assert!(rep.el_residual <= 1e-6);
            assert!(rep.curvature < 0.0);
            assert_eq!(rep.sign_flips, 0);
            assert!(rep.energy.total > 0.0);
        }
    }
}

#[test]
fn minimizer_and_newton_branch_agree() {
    let limit = cubic();
    let nl = Nonlinearity::power_difference(3.0, 2.5).unwrap();
    for c in [1e-2, 1e-3, 1e-4] {
        let ctx = ScalingContext::new(c, 3.0).unwrap();
        let rep = minimize_rescaled(&nl, &ctx, &limit.phi, &MinimizerOptions::default()).unwrap();
        let branch = newton_branch(&nl, &ctx, rep.omega, &limit.phi, &NewtonOptions::default()).unwrap();
        assert!(rep.field.h1_distance(&branch.field) <= 1e-6, "c={c}");
    }
}

#[test]
fn branch_at_the_limit_point_needs_no_steps() {
    let limit = cubic();
    let nl = Nonlinearity::pure_power(3.0).unwrap();
    let prob = RescaledProblem::limit(3.0).unwrap();
    let rep = prob.newton_solve(limit.omega0, &limit.phi, &NewtonOptions::default()).unwrap();
    assert_eq!(rep.steps, 0);
    // Same through the c-parametrized entry point at c → 0.
    let ctx = ScalingContext::new(1e-6, 3.0).unwrap();
    let rep = newton_branch(&nl, &ctx, limit.omega0, &limit.phi, &NewtonOptions::default()).unwrap();
    assert_eq!(rep.steps, 0);
}

#[test]
fn branch_converges_quadratically_and_tends_to_phi() {
    let limit = cubic();
    let nl = Nonlinearity::power_difference(3.0, 2.5).unwrap();
    let mut last = f64::INFINITY;
    for c in [1e-1, 1e-2, 1e-3, 1e-4] {
        let ctx = ScalingContext::new(c, 3.0).unwrap();
        let rep = newton_branch(&nl, &ctx, limit.omega0, &limit.phi, &NewtonOptions::default()).unwrap();
        assert!(rep.final_residual() <= 1e-10);
        if let Some(k) = rep.quadratic_constant(1e-14) {
            // Residual ratio r_{k+1}/r_k² bounded: quadratic, not linear.
            assert!(k < 1e3, "c={c}: {:?}", rep.residual_history);
        }
        let d = rep.field.h1_distance(&limit.phi);
        assert!(d < last, "c={c}");
        last = d;
    }
}

#[test]
fn newton_outside_the_basin_fails_cleanly() {
    let limit = cubic();
    let prob = RescaledProblem::limit(3.0).unwrap();
    let zero = limit.phi.scaled(0.0);
    let opts = NewtonOptions { max_steps: 5, ..NewtonOptions::default() };
    // Starting from 0 Newton converges to the trivial solution or fails,
    // never to φ.
    match prob.newton_solve(limit.omega0, &zero, &opts) {
        Ok(rep) => assert!(rep.field.sup_norm() < 1e-6),
        Err(e) => assert!(matches!(e, LabError::NewtonNonConvergence { .. })),
    }
}

#[test]
fn gradient_and_jacobian_match_finite_differences() {
    let limit = cubic();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let nl = Nonlinearity::power_difference(3.0, 2.5).unwrap();
    for c in [1e-2, 1e-4] {
        let prob = RescaledProblem::new(nl.clone(), &ScalingContext::new(c, 3.0).unwrap());
        let u = limit.phi.axpy(0.1, &random_direction(&limit, &mut rng).scaled(limit.phi.sup_norm()));
        let omega = prob.lagrange_multiplier(&u).unwrap();
        let lagrangian = |v: &RadialField| prob.energy(v).total + 0.5 * omega * v.mass();
        let grad = prob.gradient(omega, &u);
        let phi_u = u.coulomb_potential();
        for _ in 0..3 {
            let h = random_direction(&limit, &mut rng);
            let eps = 1e-5;
            let fd = (lagrangian(&u.axpy(eps, &h)) - lagrangian(&u.axpy(-eps, &h))) / (2.0 * eps);
            let an = grad.dot(&h);
            let scale = grad.l2_norm() * h.l2_norm();
            assert!((fd - an).abs() <= 1e-5 * scale, "c={c}: fd {fd} vs {an}");

            let eps = 1e-6 * u.l2_norm() / h.l2_norm();
            let plus = prob.gradient(omega, &u.axpy(eps, &h));
            let minus = prob.gradient(omega, &u.axpy(-eps, &h));
            let fd = plus.axpy(-1.0, &minus).scaled(0.5 / eps);
            let an = prob.jacobian_apply(omega, &u, &phi_u, &h);
            assert!(fd.axpy(-1.0, &an).l2_norm() <= 1e-5 * an.l2_norm());
        }
    }
}

#[test]
fn sweep_columns_decrease_and_cold_starts_agree() {
    let limit = cubic();
    let nl = Nonlinearity::power_difference(3.0, 2.5).unwrap();
    let warm = continuation_sweep(&nl, &limit, &default_schedule(), &SweepOptions::default()).unwrap();
    let cold =
        continuation_sweep(&nl, &limit, &default_schedule(), &SweepOptions { warm_start: false, ..Default::default() })
            .unwrap();
    assert!(warm.all_converged() && cold.all_converged());
    let t = warm.trends();
    for trend in [t.t_star, t.omega, t.energy, t.h1] {
        assert!(trend.passes(1, 1e-2), "{t:?}");
    }
    assert!(warm.rows.iter().all(|r| r.k > 0.0));
    for (a, b) in warm.fields.iter().zip(&cold.fields) {
        assert!(a.as_ref().unwrap().h1_distance(b.as_ref().unwrap()) <= 1e-6);
    }
    // Removing the subtracted power raises the energy.
    assert!(warm.rows.iter().all(|r| r.k > warm.k0));
}

#[test]
fn invalid_inputs_are_rejected() {
    let limit = cubic();
    let nl = Nonlinearity::pure_power(3.0).unwrap();
    let opts = MinimizerOptions::default();
    let ctx = ScalingContext::new(0.9, 3.0).unwrap();
    assert!(matches!(minimize_rescaled(&nl, &ctx, &limit.phi, &opts), Err(LabError::InvalidParameter { .. })));
    let ctx = ScalingContext::new(1e-2, 3.0).unwrap();
    let heavy = limit.phi.scaled(1.1);
    assert!(matches!(minimize_rescaled(&nl, &ctx, &heavy, &opts), Err(LabError::NotUnitMass { .. })));
    assert!(continuation_sweep(&nl, &limit, &[1e-3, 1e-2], &SweepOptions::default()).is_err());
    let other = Nonlinearity::pure_power(3.5).unwrap();
    assert!(continuation_sweep(&other, &limit, &[1e-2], &SweepOptions::default()).is_err());
}

#[test]
fn iteration_cap_reports_non_convergence() {
    let limit = cubic();
    let prob = RescaledProblem::limit(3.0).unwrap();
    let opts = MinimizerOptions { max_iter: 2, ..MinimizerOptions::default() };
    let rep = prob.minimize(&gaussian_on(&limit), &opts).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.termination, Termination::MaxIterations);
    assert_eq!(rep.iterations, 2);
}

#[test]
fn negative_initial_data_is_positivized() {
    let limit = cubic();
    let prob = RescaledProblem::limit(3.0).unwrap();
    let rep = prob.minimize(&gaussian_on(&limit).scaled(-1.0), &MinimizerOptions::default()).unwrap();
    assert!(rep.converged);
    assert!(rep.field.h1_distance(&limit.phi) < 1e-6);
}

proptest! {
    #[test]
    fn trend_of_strictly_decreasing_data_is_clean(mut v in prop::collection::vec(1e-12f64..1e3, 2..10)) {
        v.sort_by(|a, b| b.partial_cmp(a).unwrap());
        v.dedup();
        prop_assume!(v.len() >= 2);
        let t = Trend::of(&v);
        prop_assert_eq!(t.violations, 0);
        prop_assert!((t.ratio - v[v.len() - 1] / v[0]).abs() <= 1e-15 * t.ratio.abs());
    }

    #[test]
    fn trend_counts_each_rise(v in prop::collection::vec(0.0f64..1.0, 2..12)) {
        let rises = v.windows(2).filter(|w| w[1] >= w[0]).count();
        prop_assert_eq!(Trend::of(&v).violations, rises);
    }
}
