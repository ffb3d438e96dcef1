use std::f64::consts::PI;

use proptest::prelude::*;

use splab_core::functionals::RescaledProblem;
use splab_core::{FieldSpace, Nonlinearity, RadialField, RadialGrid, ScalingContext};

fn gaussian(sigma: f64) -> RadialField {
    let g = RadialGrid::new(12.0 * sigma, 1025).unwrap();
    let norm = (PI * sigma * sigma).powf(-0.75);
    RadialField::from_fn(g, |r| norm * (-r * r / (2.0 * sigma * sigma)).exp())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn gaussian_closed_forms() {
    for sigma in [0.5, 1.0, 3.0] {
        let u = gaussian(sigma);
        assert!(rel(u.mass(), 1.0) < 1e-12);
        // ‖∇u‖² = 3/(2σ²), ∫∫u²u²/|x−y| = √(2/π)/σ.
        assert!(rel(u.kinetic(), 1.5 / (sigma * sigma)) < 1e-10);
        assert!(rel(u.coulomb_energy(), (2.0 / PI).sqrt() / sigma) < 1e-10);
    }
}

#[test]
fn dilation_keeps_the_fiber_laws() {
    // u^t = t^{3/2}u(t·): mass fixed, ‖∇u‖² ~ t², D ~ t, ∫|u|^{q} ~ t^{3(q−2)/2}.
    let u = gaussian(1.0);
    let q = 4.0;
    let lq = |v: &RadialField| v.local_integral(&|s: f64| s.abs().powf(q));
    for t in [0.7, 1.3, 2.0] {
        let v = u.dilate(t).unwrap();
        assert!(rel(v.mass(), u.mass()) < 1e-10, "t={t}");
        assert!(rel(v.kinetic(), t * t * u.kinetic()) < 1e-9, "t={t}");
        assert!(rel(v.coulomb_energy(), t * u.coulomb_energy()) < 1e-9, "t={t}");
        assert!(rel(lq(&v), t.powf(1.5 * (q - 2.0)) * lq(&u)) < 1e-9, "t={t}");
    }
}

#[test]
fn pohozaev_vanishes_at_the_fiber_maximum() {
    let nl = Nonlinearity::power_difference(3.0, 2.5).unwrap();
    let prob = RescaledProblem::new(nl, &ScalingContext::new(1e-2, 3.0).unwrap());
    let u = gaussian(0.2);
    let fm = prob.fiber_max(&u).unwrap();
    let v = u.dilate(fm.t_star).unwrap();
    let scale = v.kinetic();
    assert!(prob.pohozaev(&v).abs() <= 1e-9 * scale);
    for t in [0.9, 1.1] {
        assert!(prob.energy(&v.dilate(t).unwrap()).total < prob.energy(&v).total);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coulomb_energy_is_quadratic_in_the_density(sigma in 0.5f64..2.0, a in 0.1f64..3.0) {
        let u = gaussian(sigma);
        prop_assert!(rel(u.scaled(a).coulomb_energy(), a.powi(4) * u.coulomb_energy()) < 1e-12);
    }

    #[test]
    fn helmholtz_inverse_undoes_the_operator(omega in 0.1f64..50.0) {
        // The smoothing direction; the reverse amplifies roundoff by k²max/ω.
        let u = gaussian(1.0);
        let lu = u.neg_laplacian().axpy(omega, &u);
        let back = lu.helmholtz_inverse(omega).unwrap();
        prop_assert!(back.axpy(-1.0, &u).sup_norm() <= 1e-10 * u.sup_norm());
    }
}
