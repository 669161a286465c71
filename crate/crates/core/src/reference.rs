//! Reference solutions: Maxwellians, named initial densities, and the closed
//! moment system of Maxwell molecules.
//!
//! For α ≡ 1 the second-moment equation closes. Taking φ(v) = vᵢvⱼ in the weak
//! form, the drift part contributes −4zᵢzⱼ and the diffusion part
//! 2(|z|²δᵢⱼ − zᵢzⱼ), where z = v − w is drawn from f ⊗ f. Since
//! E[zzᵀ] = 2C with C the covariance,
//!
//! ```text
//! dC/dt = 4 tr(C) I − 12 C.
//! ```
//!
//! The trace is conserved and the traceless part decays like e^{−12t}:
//!
//! ```text
//! C(t) = (tr C₀/3) I + e^{−12t}(C₀ − (tr C₀/3) I).
//! ```
//!
//! For the N-particle system the pair average (1/(N(N−1)))Σ_{i≠j}(vᵢ−vⱼ)(vᵢ−vⱼ)ᵀ
//! equals 2N/(N−1) times the empirical covariance, so the expected decay rate
//! becomes 12N/(N−1).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, DiagGaussian, GaussianMixture};
use crate::{LandauError, Mat3, Result, Vec3};

/// Decay rate of the traceless covariance for Maxwell molecules.
pub const ANISOTROPY_DECAY_RATE: f64 = 12.0;

/// Decay rate of the expected traceless empirical covariance with N particles.
pub fn finite_n_decay_rate(n: usize) -> f64 {
    ANISOTROPY_DECAY_RATE * n as f64 / (n as f64 - 1.0)
}

/// Mean velocity and temperature of an isotropic Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxwellianSpec {
    pub mean: Vec3,
    pub temperature: f64,
}

/// The Maxwellian with the given mean and temperature (variance per axis).
pub fn maxwellian(spec: &MaxwellianSpec) -> Result<DiagGaussian> {
    DiagGaussian::new(
        vec![spec.mean[0], spec.mean[1], spec.mean[2]],
        vec![spec.temperature; 3],
    )
}

/// Names understood by [`preset`].
pub const PRESET_NAMES: &[&str] = &["maxwellian(T)", "aniso_gauss(T1,T2,T3)", "bimodal(d)"];

/// Builds a named initial density:
///
/// - `maxwellian(T)`: centered Gaussian with variance T per axis;
/// - `aniso_gauss(T1,T2,T3)`: centered Gaussian with per-axis variances;
/// - `bimodal(d)`: equal mixture of N(±(d/2)e₁, I).
pub fn preset(text: &str) -> Result<Arc<dyn DensityModel>> {
    let unknown = || {
        LandauError::Config(format!(
            "unknown initial density {text:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))
    };
    let s = text.trim();
    let open = s.find('(').ok_or_else(unknown)?;
    if !s.ends_with(')') {
        return Err(unknown());
    }
    let name = s[..open].trim();
    let args: Vec<f64> = s[open + 1..s.len() - 1]
        .split(',')
        .map(|a| a.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| LandauError::Config(format!("bad arguments in {text:?}")))?;
    let arity = |n: usize| {
        if args.len() == n {
            Ok(())
        } else {
            Err(LandauError::Config(format!(
                "{name} takes {n} argument(s), got {}",
                args.len()
            )))
        }
    };
    match name {
        "maxwellian" => {
            arity(1)?;
            Ok(Arc::new(maxwellian(&MaxwellianSpec {
                mean: Vec3::zeros(),
                temperature: args[0],
            })?))
        }
        "aniso_gauss" => {
            arity(3)?;
            Ok(Arc::new(DiagGaussian::new(vec![0.0; 3], args)?))
        }
        "bimodal" => {
            arity(1)?;
            let h = 0.5 * args[0];
            if !h.is_finite() {
                return Err(LandauError::Config(
                    "bimodal separation must be finite".into(),
                ));
            }
            let comps = vec![
                DiagGaussian::new(vec![h, 0.0, 0.0], vec![1.0; 3])?,
                DiagGaussian::new(vec![-h, 0.0, 0.0], vec![1.0; 3])?,
            ];
            Ok(Arc::new(GaussianMixture::new(vec![0.5, 0.5], comps)?))
        }
        _ => Err(unknown()),
    }
}

/// Covariance at time t of a Maxwell-molecule solution started from
/// covariance `c0`, with traceless decay at `rate`.
pub fn covariance_relaxation(c0: &Mat3, t: f64, rate: f64) -> Result<Mat3> {
    check_psd(c0)?;
    if !(t >= 0.0) {
        return Err(LandauError::Precondition(format!(
            "time must be non-negative, got {t}"
        )));
    }
    let iso = Mat3::identity() * (c0.trace() / 3.0);
    Ok(iso + (c0 - iso) * (-rate * t).exp())
}

/// Second-moment matrix at time t for a centered Maxwell-molecule solution
/// with second-moment matrix `p0` at time zero.
pub fn maxwell_molecule_moment_ode(p0: &Mat3, t: f64) -> Result<Mat3> {
    covariance_relaxation(p0, t, ANISOTROPY_DECAY_RATE)
}

fn check_psd(m: &Mat3) -> Result<()> {
    if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
        return Err(LandauError::Precondition(
            "moment matrix must be symmetric".into(),
        ));
    }
    let ev = m.symmetric_eigenvalues();
    if ev.iter().any(|&l| l < -1e-12 * m.abs().max().max(1.0)) {
        return Err(LandauError::Precondition(
            "moment matrix must be positive semidefinite".into(),
        ));
    }
    Ok(())
}
