use crate::error::Result;

/// Operations a discretized field must provide so that the functionals and
/// the minimizer can run unchanged on radial profiles and on 3D boxes.
///
/// `dot` is the discrete L² inner product; every other integral is built on
/// the same quadrature so that discrete gradients are exact derivatives of
/// the discrete functionals.
pub trait FieldSpace: Clone + Send + Sync + Sized {
    fn values(&self) -> &[f64];
    fn values_mut(&mut self) -> &mut [f64];
    fn same_grid(&self, other: &Self) -> bool;

    fn dot(&self, other: &Self) -> f64;
    /// ∫|∇u|².
    fn kinetic(&self) -> f64;
    fn neg_laplacian(&self) -> Self;
    /// ρ ∗ |x|⁻¹ with the values read as a density ρ; linear in ρ.
    fn potential_of_density(&self) -> Self;
    /// (-Δ + ω)⁻¹ applied to `self`.
    fn helmholtz_inverse(&self, omega: f64) -> Result<Self>;
    /// u^t(x) = t^{3/2} u(tx).
    fn dilate(&self, t: f64) -> Result<Self>;
    /// ∫ h(u(x)) dx.
    fn local_integral(&self, h: &dyn Fn(f64) -> f64) -> f64;
    /// Max |u| over nodes that carry independent values.
    fn sup_norm(&self) -> f64;

    /// Recompute any nodes that are determined by the others.
    fn synced(self) -> Self {
        self
    }

    /// φ_u = |u|² ∗ |x|⁻¹.
    fn coulomb_potential(&self) -> Self {
        self.map(|v| v * v).potential_of_density()
    }

    fn mass(&self) -> f64 {
        self.dot(self)
    }

    fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// D(u) = ∫ φ_u u².
    fn coulomb_energy(&self) -> f64 {
        let phi = self.coulomb_potential();
        let phi_u = phi.zip_map(self, |a, b| a * b);
        phi_u.dot(self)
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        out.values_mut().iter_mut().for_each(|v| *v = f(*v));
        out
    }

    fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = self.clone();
        for (o, &b) in out.values_mut().iter_mut().zip(other.values()) {
            *o = f(*o, b);
        }
        out
    }

    fn scaled(&self, a: f64) -> Self {
        self.map(|v| a * v)
    }

    /// self + a·x.
    fn axpy(&self, a: f64, x: &Self) -> Self {
        self.zip_map(x, |u, v| u + a * v)
    }

    /// ‖u − v‖_{H¹} = (‖∇(u−v)‖² + ‖u−v‖²)^{1/2}.
    fn h1_distance(&self, other: &Self) -> f64 {
        let d = self.axpy(-1.0, other);
        (d.kinetic() + d.mass()).sqrt()
    }

    fn normalized(&self) -> Self {
        self.scaled(1.0 / self.l2_norm())
    }
}
