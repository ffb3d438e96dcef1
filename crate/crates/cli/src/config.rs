//! Experiment configuration: one TOML file with nested blocks. Every
//! numeric field is checked before any compute, and errors carry the
//! dotted path of the offending key.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use splab_core::limit_problem::LimitOptions;
use splab_core::nonlinearity::{SamplingSpec, P_MAX, P_MIN};
use splab_core::solvers::{default_schedule, MinimizerOptions, NewtonOptions};
use splab_core::{Nonlinearity, NonlinearityKind, NonlinearitySpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Groundstate,
    Minimize,
    Branch,
    Sweep,
    CheckAssumptions,
    Symmetry3d,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Groundstate => "groundstate",
            Kind::Minimize => "minimize",
            Kind::Branch => "branch",
            Kind::Sweep => "sweep",
            Kind::CheckAssumptions => "check-assumptions",
            Kind::Symmetry3d => "symmetry3d",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Limit exponent; must match the nonlinearity's.
    pub p: f64,
    /// Rescaled mass parameter for single-c runs.
    pub c: f64,
    pub c_schedule: Vec<f64>,
    /// Fixed ω for `branch`. Without it the minimizer's ω_c is used.
    pub omega: Option<f64>,
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    pub threads: usize,
    pub out: PathBuf,
    pub warm_start: bool,
    /// Defaults to the pure power of exponent `p`.
    pub nonlinearity: Option<NonlinearitySpec>,
    pub limit: LimitOptions,
    pub minimizer: MinimizerOptions,
    pub newton: NewtonOptions,
    pub cube: CubeConfig,
    pub assumptions: AssumptionConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CubeConfig {
    /// Nodes per axis, a power of two.
    pub n: usize,
    /// Half-width in decay lengths 1/√ω₀.
    pub half_width: f64,
    /// Size of the non-radial perturbation relative to the peak of φ.
    pub perturbation: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for CubeConfig {
    fn default() -> Self {
        Self { n: 64, half_width: 16.0, perturbation: 0.1, tol: 1e-6, max_iter: 5000 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AssumptionConfig {
    /// Exponents of (F1) and (F3); the family defaults when absent.
    pub q: Option<f64>,
    pub l: Option<f64>,
    pub sampling: SamplingSpec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: Kind::Groundstate,
            p: 3.0,
            c: 1e-2,
            c_schedule: default_schedule(),
            omega: None,
            seed: 0,
            threads: 0,
            out: PathBuf::from("results"),
            warm_start: true,
            nonlinearity: None,
            limit: LimitOptions::default(),
            minimizer: MinimizerOptions::default(),
            newton: NewtonOptions::default(),
            cube: CubeConfig::default(),
            assumptions: AssumptionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.to_string(), message: message.into() }
}

fn positive(path: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(err(path, format!("{v} must be positive and finite")))
    }
}

fn at_least(path: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(err(path, format!("{v} must be at least {min}")))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let at = e.span().map(|s| {
                let before = &text[..s.start];
                let line = before.matches('\n').count() + 1;
                let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
                format!("line {line}, column {col}")
            });
            err(&at.unwrap_or_else(|| "config".into()), e.message().to_string())
        })
    }

    pub fn to_toml(&self) -> Result<String, ConfigError> {
        toml::to_string(self).map_err(|e| err("config", e.to_string()))
    }

    pub fn nonlinearity(&self) -> Result<Nonlinearity, ConfigError> {
        match &self.nonlinearity {
            None => Nonlinearity::pure_power(self.p).map_err(|e| err("p", e.to_string())),
            Some(spec) => Nonlinearity::from_spec(spec).map_err(|e| err("nonlinearity", e.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.p > P_MIN && self.p < P_MAX) {
            return Err(err("p", format!("{} is outside (7/3, 5)", self.p)));
        }
        let nl = self.nonlinearity()?;
        if let Some(spec) = &self.nonlinearity {
            if spec.kind == NonlinearityKind::Custom {
                return Err(err("nonlinearity.kind", "custom models cannot be configured from a file"));
            }
        }
        if nl.limit_exponent() != self.p {
            return Err(err(
                "nonlinearity.powers",
                format!("limit exponent {} differs from p = {}", nl.limit_exponent(), self.p),
            ));
        }
        positive("c", self.c)?;
        if self.c > self.minimizer.c_ceiling {
            return Err(err("c", format!("{} exceeds minimizer.c_ceiling = {}", self.c, self.minimizer.c_ceiling)));
        }
        if self.c_schedule.is_empty() {
            return Err(err("c_schedule", "empty"));
        }
        for (i, c) in self.c_schedule.iter().enumerate() {
            positive(&format!("c_schedule[{i}]"), *c)?;
        }
        if self.c_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(err("c_schedule", "must be strictly decreasing"));
        }
        // TOML integers are signed 64-bit.
        if self.seed > i64::MAX as u64 {
            return Err(err("seed", format!("{} exceeds {}", self.seed, i64::MAX)));
        }
        if let Some(w) = self.omega {
            positive("omega", w)?;
        }

        let l = &self.limit;
        positive("limit.rmax_natural", l.rmax_natural)?;
        at_least("limit.n", l.n, 17)?;
        if let Some(r) = l.core_resolution {
            positive("limit.core_resolution", r)?;
        }
        positive("limit.w_max", l.w_max)?;
        positive("limit.bisect_rtol", l.bisect_rtol)?;
        positive("limit.tail_fraction", l.tail_fraction)?;
        positive("limit.ode_rtol", l.ode_rtol)?;
        positive("limit.ode_atol", l.ode_atol)?;
        check_newton("limit.newton", &l.newton)?;

        let m = &self.minimizer;
        positive("minimizer.tol", m.tol)?;
        at_least("minimizer.max_iter", m.max_iter, 1)?;
        at_least("minimizer.memory", m.memory, 1)?;
        at_least("minimizer.divergence_window", m.divergence_window, 1)?;
        if !(m.armijo > 0.0 && m.armijo < 1.0) {
            return Err(err("minimizer.armijo", format!("{} must lie in (0, 1)", m.armijo)));
        }
        positive("minimizer.c_ceiling", m.c_ceiling)?;
        positive("minimizer.fiber.t_min", m.fiber.t_min)?;
        if !(m.fiber.t_max > m.fiber.t_min && m.fiber.t_max.is_finite()) {
            return Err(err("minimizer.fiber.t_max", "must be finite and exceed t_min"));
        }
        at_least("minimizer.fiber.probes", m.fiber.probes, 3)?;
        check_newton("newton", &self.newton)?;

        let q = &self.cube;
        if !(q.n >= 8 && q.n.is_power_of_two()) {
            return Err(err("cube.n", format!("{} must be a power of two, at least 8", q.n)));
        }
        positive("cube.half_width", q.half_width)?;
        if !(q.perturbation >= 0.0 && q.perturbation.is_finite()) {
            return Err(err("cube.perturbation", format!("{} must be non-negative", q.perturbation)));
        }
        positive("cube.tol", q.tol)?;
        at_least("cube.max_iter", q.max_iter, 1)?;

        let a = &self.assumptions;
        if let Some(v) = a.q {
            positive("assumptions.q", v)?;
        }
        if let Some(v) = a.l {
            positive("assumptions.l", v)?;
        }
        let s = &a.sampling;
        at_least("assumptions.sampling.points", s.points, 3)?;
        positive("assumptions.sampling.s_min", s.s_min)?;
        if !(s.s_max > s.s_min && s.s_max.is_finite()) {
            return Err(err("assumptions.sampling.s_max", "must be finite and exceed s_min"));
        }
        if s.lambdas.is_empty() {
            return Err(err("assumptions.sampling.lambdas", "empty"));
        }
        for (i, v) in s.lambdas.iter().enumerate() {
            positive(&format!("assumptions.sampling.lambdas[{i}]"), *v)?;
        }
        if !(s.interval[0] < s.interval[1]) {
            return Err(err("assumptions.sampling.interval", "must be increasing"));
        }
        positive("assumptions.sampling.epsilon", s.epsilon)?;
        positive("assumptions.sampling.chi", s.chi)?;
        positive("assumptions.sampling.uniform_tolerance", s.uniform_tolerance)?;
        Ok(())
    }
}

fn check_newton(path: &str, n: &NewtonOptions) -> Result<(), ConfigError> {
    positive(&format!("{path}.tol"), n.tol)?;
    at_least(&format!("{path}.max_steps"), n.max_steps, 1)?;
    positive(&format!("{path}.gmres_rtol"), n.gmres_rtol)?;
    at_least(&format!("{path}.gmres_restart"), n.gmres_restart, 1)?;
    at_least(&format!("{path}.gmres_max_iter"), n.gmres_max_iter, 1)
}
