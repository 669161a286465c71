//! Conservative stochastic particle approximation of the spatially homogeneous
//! Landau equation, together with evaluators for entropy/Fisher-type
//! functionals and the diagnostics used to study the mean-field limit.
//!
//! The crate is organised bottom-up:
//!
//! - [`potentials`]: regularized interaction potentials and pair kernels.
//! - [`noise`]: counter-based antisymmetric pair noise.
//! - [`dynamics`]: the Euler–Maruyama particle integrator.
//! - [`density`]: analytic density models with gradient/Hessian access.
//! - [`functionals`]: H, I, D, K_β and J by quadrature or Monte Carlo.
//! - [`estimators`]: statistics of particle clouds.
//! - [`diagnostics`]: weak-form residuals, bounded-Lipschitz distances,
//!   δ-non-alignment and ι.
//! - [`reference`]: Maxwellians, presets and the Maxwell-molecule moment ODE.
//! - [`io`]: configuration files, snapshots and JSON-lines records.
//! - [`verify`]: a fast self-check suite exposed by the command line tool.

pub mod density;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod functionals;
pub mod io;
pub mod noise;
pub mod numeric;
pub mod potentials;
pub mod reference;
pub mod verify;

pub use error::{LandauError, Result};

/// Velocity vector in R³.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 real matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
