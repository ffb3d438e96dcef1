//! Nonlinearity models f, their antiderivatives F(s) = ∫₀ˢ f, and the
//! c-scaled family λᵖ f(λ⁻¹ s) that appears in the rescaled functionals.
//!
//! Built-in models are finite sums of odd powers Σ aᵢ |s|^{pᵢ-1} s. Their
//! scaled forms are evaluated term by term with the homogeneity applied
//! analytically, λᵖ·aᵢ|λ⁻¹s|^{pᵢ-1}λ⁻¹s = aᵢ λ^{p-pᵢ} |s|^{pᵢ-1}s, so the
//! dominant power never sees λ at all and nothing overflows as c → 0.

mod assumptions;
mod quadrature;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, LabError, Result};

pub use assumptions::{
    check_assumptions, AssumptionCheck, AssumptionReport, LambdaDeviation, SamplingSpec,
};

/// Lower end of the L²-supercritical range, p > 7/3.
pub const P_MIN: f64 = 7.0 / 3.0;
/// Upper end (H¹-subcritical), p < 5.
pub const P_MAX: f64 = 5.0;

/// Default magnitude cap for λ⁻¹|s| before custom models fall back to the
/// dominant-power asymptote.
pub const DEFAULT_OVERFLOW_CAP: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NonlinearityKind {
    PurePower,
    PowerSum,
    PowerDifference,
    Custom,
}

/// Config-file form of a nonlinearity. Custom models cannot be expressed
/// here; they are constructed in code.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub kind: NonlinearityKind,
    pub powers: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<f64>,
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
struct CustomModel {
    name: String,
    f: ScalarFn,
    fprime: Option<ScalarFn>,
}

#[derive(Clone)]
pub struct Nonlinearity {
    kind: NonlinearityKind,
    powers: Vec<f64>,
    coefficients: Vec<f64>,
    limit_exponent: f64,
    overflow_cap: f64,
    custom: Option<CustomModel>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("Nonlinearity");
        d.field("kind", &self.kind)
            .field("powers", &self.powers)
            .field("coefficients", &self.coefficients)
            .field("limit_exponent", &self.limit_exponent);
        if let Some(c) = &self.custom {
            d.field("custom", &c.name);
        }
        d.finish()
    }
}

fn check_supercritical(name: &'static str, p: f64) -> Result<()> {
    if !(p > P_MIN && p < P_MAX) {
        return Err(invalid(name, format!("{p} is outside (7/3, 5)")));
    }
    Ok(())
}

impl Nonlinearity {
    /// f(s) = |s|^{p-1} s.
    pub fn pure_power(p: f64) -> Result<Self> {
        check_supercritical("powers", p)?;
        Ok(Self {
            kind: NonlinearityKind::PurePower,
            powers: vec![p],
            coefficients: vec![1.0],
            limit_exponent: p,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
            custom: None,
        })
    }

    /// f(s) = Σ |s|^{pᵢ-1} s with every pᵢ in (7/3, 5).
    pub fn power_sum(powers: &[f64]) -> Result<Self> {
        Self::power_sum_with(powers, &vec![1.0; powers.len()])
    }

    pub fn power_sum_with(powers: &[f64], coefficients: &[f64]) -> Result<Self> {
        if powers.is_empty() {
            return Err(invalid("powers", "at least one power is required"));
        }
        if coefficients.len() != powers.len() {
            return Err(invalid("coefficients", "length must match powers"));
        }
        for &p in powers {
            check_supercritical("powers", p)?;
        }
        let limit = powers.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kind: NonlinearityKind::PowerSum,
            powers: powers.to_vec(),
            coefficients: coefficients.to_vec(),
            limit_exponent: limit,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
            custom: None,
        })
    }

    /// f(s) = |s|^{p₁-1}s - |s|^{p₂-1}s with p₁ in (7/3, 5) and p₂ in (2, p₁).
    pub fn power_difference(p1: f64, p2: f64) -> Result<Self> {
        check_supercritical("powers", p1)?;
        if !(p2 > 2.0 && p2 < p1) {
            return Err(invalid("powers", format!("subtracted power {p2} must lie in (2, {p1})")));
        }
        Ok(Self {
            kind: NonlinearityKind::PowerDifference,
            powers: vec![p1, p2],
            coefficients: vec![1.0, -1.0],
            limit_exponent: p1,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
            custom: None,
        })
    }

    /// A user-supplied odd C¹ nonlinearity with declared limit exponent `p`.
    /// Without `fprime`, f' is taken by Richardson-extrapolated central
    /// differences of `f`.
    pub fn custom(
        name: impl Into<String>,
        p: f64,
        f: ScalarFn,
        fprime: Option<ScalarFn>,
    ) -> Result<Self> {
        check_supercritical("limit_exponent", p)?;
        Ok(Self {
            kind: NonlinearityKind::Custom,
            powers: vec![p],
            coefficients: vec![],
            limit_exponent: p,
            overflow_cap: DEFAULT_OVERFLOW_CAP,
            custom: Some(CustomModel { name: name.into(), f, fprime }),
        })
    }

    pub fn from_spec(spec: &NonlinearitySpec) -> Result<Self> {
        match spec.kind {
            NonlinearityKind::PurePower => {
                if spec.powers.len() != 1 {
                    return Err(invalid("powers", "pure_power takes exactly one power"));
                }
                let mut nl = Self::pure_power(spec.powers[0])?;
                if let Some(&a) = spec.coefficients.first() {
                    nl.coefficients = vec![a];
                }
                Ok(nl)
            }
            NonlinearityKind::PowerSum => {
                if spec.coefficients.is_empty() {
                    Self::power_sum(&spec.powers)
                } else {
                    Self::power_sum_with(&spec.powers, &spec.coefficients)
                }
            }
            NonlinearityKind::PowerDifference => {
                if spec.powers.len() != 2 {
                    return Err(invalid("powers", "power_difference takes exactly two powers"));
                }
                let mut nl = Self::power_difference(spec.powers[0], spec.powers[1])?;
                if !spec.coefficients.is_empty() {
                    if spec.coefficients.len() != 2 {
                        return Err(invalid("coefficients", "length must match powers"));
                    }
                    nl.coefficients = spec.coefficients.clone();
                }
                Ok(nl)
            }
            NonlinearityKind::Custom => Err(invalid(
                "kind",
                "custom nonlinearities cannot be built from a config block",
            )),
        }
    }

    pub fn to_spec(&self) -> NonlinearitySpec {
        NonlinearitySpec {
            kind: self.kind,
            powers: self.powers.clone(),
            coefficients: self.coefficients.clone(),
        }
    }

    pub fn with_overflow_cap(mut self, cap: f64) -> Self {
        self.overflow_cap = cap;
        self
    }

    pub fn kind(&self) -> NonlinearityKind {
        self.kind
    }

    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn limit_exponent(&self) -> f64 {
        self.limit_exponent
    }

    pub fn is_builtin(&self) -> bool {
        self.custom.is_none()
    }

    pub fn eval_f(&self, s: f64) -> f64 {
        match &self.custom {
            Some(c) => (c.f)(s),
            None => self
                .terms()
                .map(|(p, a)| a * s.abs().powf(p - 1.0) * s)
                .sum(),
        }
    }

    /// F(s) = ∫₀ˢ f. Closed form for built-ins, adaptive Gauss–Kronrod
    /// (absolute tolerance 1e-12) for custom models.
    #[allow(non_snake_case)]
    pub fn eval_F(&self, s: f64) -> Result<f64> {
        match &self.custom {
            Some(c) => quadrature::integrate(&*c.f, 0.0, s, 1e-12)
                .map_err(|error| LabError::QuadratureNonConvergence { at: s, error }),
            None => Ok(self.builtin_antiderivative(s)),
        }
    }

    pub fn eval_fprime(&self, s: f64) -> f64 {
        match &self.custom {
            Some(CustomModel { fprime: Some(d), .. }) => d(s),
            Some(CustomModel { f, .. }) => richardson_derivative(&**f, s),
            None => self
                .terms()
                .map(|(p, a)| a * p * s.abs().powf(p - 1.0))
                .sum(),
        }
    }

    /// λᵖ f(λ⁻¹ s) with λ = ctx.lambda.
    pub fn scaled_f(&self, ctx: &ScalingContext, s: f64) -> f64 {
        self.scaled_f_flagged(ctx, s).0
    }

    /// Like [`Self::scaled_f`], also reporting whether the asymptote fallback
    /// was used because λ⁻¹|s| exceeded the overflow cap.
    pub fn scaled_f_flagged(&self, ctx: &ScalingContext, s: f64) -> (f64, bool) {
        self.scaled_f_at(ctx.lambda, ctx.p, s)
    }

    /// λ^{p+1} F(λ⁻¹ s).
    #[allow(non_snake_case)]
    pub fn scaled_F(&self, ctx: &ScalingContext, s: f64) -> f64 {
        self.scaled_F_at(ctx.lambda, ctx.p, s).0
    }

    /// λ^{p-1} f'(λ⁻¹ s), the exact chain-rule derivative of `scaled_f`.
    pub fn scaled_fprime(&self, ctx: &ScalingContext, s: f64) -> f64 {
        self.scaled_fprime_at(ctx.lambda, ctx.p, s).0
    }

    pub(crate) fn scaled_f_at(&self, lambda: f64, p: f64, s: f64) -> (f64, bool) {
        match &self.custom {
            None => (
                self.terms()
                    .map(|(q, a)| a * homogeneity_factor(lambda, p, q) * s.abs().powf(q - 1.0) * s)
                    .sum(),
                false,
            ),
            Some(c) => {
                let z = s / lambda;
                if z.abs() > self.overflow_cap {
                    (s.abs().powf(p - 1.0) * s, true)
                } else {
                    (lambda.powf(p) * (c.f)(z), false)
                }
            }
        }
    }

    #[allow(non_snake_case)]
    pub(crate) fn scaled_F_at(&self, lambda: f64, p: f64, s: f64) -> (f64, bool) {
        match &self.custom {
            None => (
                self.terms()
                    .map(|(q, a)| {
                        a * homogeneity_factor(lambda, p, q) * s.abs().powf(q + 1.0) / (q + 1.0)
                    })
                    .sum(),
                false,
            ),
            Some(c) => {
                let z = s / lambda;
                if z.abs() > self.overflow_cap {
                    (s.abs().powf(p + 1.0) / (p + 1.0), true)
                } else {
                    let big_f = quadrature::integrate(&*c.f, 0.0, z, 1e-12).unwrap_or(f64::NAN);
                    (lambda.powf(p + 1.0) * big_f, false)
                }
            }
        }
    }

    pub(crate) fn scaled_fprime_at(&self, lambda: f64, p: f64, s: f64) -> (f64, bool) {
        match &self.custom {
            None => (
                self.terms()
                    .map(|(q, a)| a * q * homogeneity_factor(lambda, p, q) * s.abs().powf(q - 1.0))
                    .sum(),
                false,
            ),
            Some(_) => {
                let z = s / lambda;
                if z.abs() > self.overflow_cap {
                    (p * s.abs().powf(p - 1.0), true)
                } else {
                    (lambda.powf(p - 1.0) * self.eval_fprime(z), false)
                }
            }
        }
    }

    fn builtin_antiderivative(&self, s: f64) -> f64 {
        self.terms()
            .map(|(p, a)| a * s.abs().powf(p + 1.0) / (p + 1.0))
            .sum()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.powers.iter().copied().zip(self.coefficients.iter().copied())
    }
}

/// λ^{p-q}; exactly 1 for the dominant power so that its evaluation path is
/// the same for every c.
fn homogeneity_factor(lambda: f64, p: f64, q: f64) -> f64 {
    if q == p {
        1.0
    } else {
        lambda.powf(p - q)
    }
}

fn richardson_derivative(f: &(dyn Fn(f64) -> f64 + Send + Sync), s: f64) -> f64 {
    let h = 1e-3 * s.abs().max(1.0);
    let d1 = (f(s + h) - f(s - h)) / (2.0 * h);
    let d2 = (f(s + h / 2.0) - f(s - h / 2.0)) / h;
    (4.0 * d2 - d1) / 3.0
}

/// The (c, p) pair of the rescaled problem with its derived exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingContext {
    pub c: f64,
    pub p: f64,
    /// α(p) = 8(2-p)/(7-3p), the exponent of the Coulomb prefactor.
    pub alpha: f64,
    /// λ = c^{4/(3p-7)}, tends to 0⁺ with c.
    pub lambda: f64,
    /// c^{4/(7-3p)} = λ⁻¹, the argument scale inside f.
    pub zoom: f64,
}

impl ScalingContext {
    pub fn new(c: f64, p: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("c", format!("{c} must be positive and finite")));
        }
        check_supercritical("p", p)?;
        let alpha = 8.0 * (2.0 - p) / (7.0 - 3.0 * p);
        let lambda = c.powf(4.0 / (3.0 * p - 7.0));
        let zoom = c.powf(4.0 / (7.0 - 3.0 * p));
        Ok(Self { c, p, alpha, lambda, zoom })
    }

    /// c^α, the weight of the Coulomb term in the rescaled functionals.
    pub fn coulomb_weight(&self) -> f64 {
        self.c.powf(self.alpha)
    }

    /// Amplitude exponent a = 4/(7-3p) of the map back to original variables.
    pub fn amplitude_exponent(&self) -> f64 {
        4.0 / (7.0 - 3.0 * self.p)
    }

    /// Length exponent b = 2(p-1)/(7-3p) of the map back to original variables.
    pub fn length_exponent(&self) -> f64 {
        2.0 * (self.p - 1.0) / (7.0 - 3.0 * self.p)
    }
}
