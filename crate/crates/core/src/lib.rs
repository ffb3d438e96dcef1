//! Normalized ground states of Schrödinger–Poisson equations with general
//! nonlinearities, computed in the c-rescaled variables where the problem
//! converges to the limit equation -Δφ + ω₀φ = |φ|^{p-1}φ as c → 0.

pub mod cartesian3d;
pub mod error;
pub mod functionals;
pub mod limit_problem;
mod fft;
pub mod nonlinearity;
pub mod radial;
pub mod solvers;
pub mod space;

pub use cartesian3d::{CubeGrid, Field3D};
pub use error::{LabError, Result};
pub use nonlinearity::{Nonlinearity, NonlinearityKind, NonlinearitySpec, ScalingContext};
pub use radial::{RadialField, RadialGrid};
pub use space::FieldSpace;
