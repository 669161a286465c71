//! Interaction potentials α(r) = r^γ, their bounded regularizations α_η, and
//! the pair-kernel objects a(z), b_k, b̃_k, b^N and σ^N.
//!
//! The regularization follows α_η(r) = χ_η(r)^γ with χ_η(r) = η·χ(r/η), where
//! χ is non-decreasing, equals 0.99 on [0, 0.98], equals the identity on
//! [1, ∞), and on [0.98, 1] has derivative given by a quintic smoothstep. This
//! makes χ three times continuously differentiable with χ′ ∈ [0, 1] and
//! χ(x) ≥ max(0.99, x). Consequently r·|α_η′(r)|/α_η(r) = |γ|·xχ′(x)/χ(x) never
//! exceeds |γ|, so the ratio condition r|α′|/α ≤ −γ/θ holds for every θ ≤ 1.

use serde::{Deserialize, Serialize};

use crate::numeric::smoothstep5;
use crate::{LandauError, Mat3, Result, Vec3};

/// Start of the transition of χ (in units of η).
const CHI_KNEE: f64 = 0.98;
/// Width of the transition of χ (in units of η).
const CHI_WIDTH: f64 = 1.0 - CHI_KNEE;
/// Plateau value of χ below the transition.
const CHI_FLOOR: f64 = 0.99;

/// Regularized power-law potential α_η(r) = χ_η(r)^γ.
///
/// γ = 0 (Maxwell molecules, α ≡ 1) is accepted through
/// [`PotentialSpec::maxwell_molecules`] only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPotentialSpec")]
pub struct PotentialSpec {
    gamma: f64,
    eta: f64,
    theta: f64,
}

#[derive(Deserialize)]
struct RawPotentialSpec {
    gamma: f64,
    eta: f64,
    #[serde(default = "default_theta")]
    theta: f64,
}

impl TryFrom<RawPotentialSpec> for PotentialSpec {
    type Error = LandauError;
    fn try_from(raw: RawPotentialSpec) -> Result<Self> {
        if raw.gamma == 0.0 {
            let mut spec = PotentialSpec::maxwell_molecules();
            spec.eta = raw.eta;
            spec.theta = raw.theta;
            spec.validate_common()?;
            Ok(spec)
        } else {
            PotentialSpec::with_theta(raw.gamma, raw.eta, raw.theta)
        }
    }
}

fn default_theta() -> f64 {
    PotentialSpec::DEFAULT_THETA
}

impl PotentialSpec {
    pub const DEFAULT_THETA: f64 = 0.99;

    /// Very soft / Coulomb potential with the default ratio constant θ = 0.99.
    pub fn new(gamma: f64, eta: f64) -> Result<Self> {
        Self::with_theta(gamma, eta, Self::DEFAULT_THETA)
    }

    /// Very soft / Coulomb potential with an explicit ratio constant θ, which
    /// must lie in (−γ/√22, 1].
    pub fn with_theta(gamma: f64, eta: f64, theta: f64) -> Result<Self> {
        if !(-3.0..=-2.0).contains(&gamma) {
            return Err(LandauError::Config(format!(
                "gamma must lie in [-3, -2], got {gamma}"
            )));
        }
        let spec = PotentialSpec { gamma, eta, theta };
        spec.validate_common()?;
        let margin = ratio_condition_margin(&spec, &spec.check_grid());
        if margin > 0.0 {
            return Err(LandauError::Config(format!(
                "regularization violates r|α'|/α ≤ -γ/θ by {margin:e}"
            )));
        }
        Ok(spec)
    }

    /// Maxwell molecules, α ≡ 1 (γ = 0). Used as an oracle regime.
    pub fn maxwell_molecules() -> Self {
        PotentialSpec {
            gamma: 0.0,
            eta: 1.0,
            theta: Self::DEFAULT_THETA,
        }
    }

    fn validate_common(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(LandauError::Config(format!(
                "eta must be positive and finite, got {}",
                self.eta
            )));
        }
        let lower = -self.gamma / 22f64.sqrt();
        if !(self.theta > lower && self.theta <= 1.0) {
            return Err(LandauError::Config(format!(
                "theta must lie in ({lower}, 1], got {}",
                self.theta
            )));
        }
        Ok(())
    }

    fn check_grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.eta / 4.0, 4.0 * self.eta);
        let n = 4000;
        (0..=n)
            .map(|i| lo * (hi / lo).powf(i as f64 / n as f64))
            .collect()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// α_η(r).
    #[inline]
    pub fn alpha(&self, r: f64) -> f64 {
        if self.gamma == 0.0 {
            return 1.0;
        }
        let c = if r >= self.eta {
            r
        } else {
            self.eta * chi(r / self.eta)
        };
        pow_gamma(c, self.gamma)
    }

    /// Derivative α_η′(r).
    pub fn alpha_derivative(&self, r: f64) -> f64 {
        if self.gamma == 0.0 {
            return 0.0;
        }
        let x = r / self.eta;
        let c = self.eta * chi(x);
        self.gamma * pow_gamma(c, self.gamma - 1.0) * chi_derivative(x)
    }

    /// r·|α_η′(r)|/α_η(r), evaluated in closed form.
    pub fn log_derivative_ratio(&self, r: f64) -> f64 {
        let x = r / self.eta;
        self.gamma.abs() * x * chi_derivative(x) / chi(x)
    }
}

/// c^γ, using integer powers when γ is integral.
#[inline]
fn pow_gamma(c: f64, gamma: f64) -> f64 {
    if gamma == -2.0 {
        1.0 / (c * c)
    } else if gamma == -3.0 {
        1.0 / (c * c * c)
    } else {
        c.powf(gamma)
    }
}

/// The profile χ with χ = 0.99 on [0, 0.98] and χ(x) = x on [1, ∞).
pub fn chi(x: f64) -> f64 {
    if x >= 1.0 {
        x
    } else if x <= CHI_KNEE {
        CHI_FLOOR
    } else {
        let t = (x - CHI_KNEE) / CHI_WIDTH;
        // Antiderivative of the quintic smoothstep: t⁶ − 3t⁵ + 2.5t⁴.
        let s = t * t * t * t * (t * (t - 3.0) + 2.5);
        CHI_FLOOR + CHI_WIDTH * s
    }
}

/// χ′(x), a quintic smoothstep across the transition.
pub fn chi_derivative(x: f64) -> f64 {
    if x >= 1.0 {
        1.0
    } else if x <= CHI_KNEE {
        0.0
    } else {
        smoothstep5((x - CHI_KNEE) / CHI_WIDTH)
    }
}

/// α_η(r) for a validated spec.
pub fn alpha_reg(spec: &PotentialSpec, r: f64) -> f64 {
    spec.alpha(r)
}

/// Maximum over `r_grid` of r|α′|/α − (−γ/θ). A valid regularization has a
/// non-positive margin.
pub fn ratio_condition_margin(spec: &PotentialSpec, r_grid: &[f64]) -> f64 {
    let bound = -spec.gamma / spec.theta;
    r_grid
        .iter()
        .map(|&r| spec.log_derivative_ratio(r) - bound)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Either a regularized potential or the bare power law α(r) = r^γ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Potential {
    Regularized(PotentialSpec),
    Exact { gamma: f64 },
}

impl Potential {
    /// The bare power law; γ must lie in [−3, 0].
    pub fn exact(gamma: f64) -> Result<Self> {
        if !(-3.0..=0.0).contains(&gamma) {
            return Err(LandauError::Config(format!(
                "gamma must lie in [-3, 0], got {gamma}"
            )));
        }
        Ok(Potential::Exact { gamma })
    }

    #[inline]
    pub fn alpha(&self, r: f64) -> f64 {
        match self {
            Potential::Regularized(spec) => spec.alpha(r),
            Potential::Exact { gamma } => {
                if *gamma == 0.0 {
                    1.0
                } else {
                    pow_gamma(r, *gamma)
                }
            }
        }
    }

    pub fn gamma(&self) -> f64 {
        match self {
            Potential::Regularized(spec) => spec.gamma,
            Potential::Exact { gamma } => *gamma,
        }
    }
}

/// Geometric objects attached to a pair of velocities.
#[derive(Debug, Clone, PartialEq)]
pub struct PairKernel {
    /// z = v₁ − v₂.
    pub z: Vec3,
    /// a(z) = |z|²Id − z⊗z.
    pub a: Mat3,
    /// b_k = e_k × z.
    pub bk: [Vec3; 3],
    /// b̃_k = (b_k, −b_k) ∈ R⁶.
    pub btilde: [[f64; 6]; 3],
}

/// a(z) = |z|²Id − z⊗z.
#[inline]
pub fn a_matrix(z: &Vec3) -> Mat3 {
    Mat3::identity() * z.norm_squared() - z * z.transpose()
}

/// e_k × z for k ∈ {0, 1, 2}.
#[inline]
pub fn cross_basis(k: usize, z: &Vec3) -> Vec3 {
    match k {
        0 => Vec3::new(0.0, -z[2], z[1]),
        1 => Vec3::new(z[2], 0.0, -z[0]),
        2 => Vec3::new(-z[1], z[0], 0.0),
        _ => panic!("basis index {k} out of range"),
    }
}

/// Builds the pair kernel for (v₁, v₂). All fields vanish when v₁ = v₂.
pub fn kernel_at(v1: &Vec3, v2: &Vec3) -> PairKernel {
    let z = v1 - v2;
    let bk = [cross_basis(0, &z), cross_basis(1, &z), cross_basis(2, &z)];
    let mut btilde = [[0.0; 6]; 3];
    for k in 0..3 {
        for c in 0..3 {
            btilde[k][c] = bk[k][c];
            btilde[k][c + 3] = -bk[k][c];
        }
    }
    PairKernel {
        z,
        a: a_matrix(&z),
        bk,
        btilde,
    }
}

/// b^N(z) = −2α_η(|z|)z, zero at z = 0.
#[inline]
pub fn drift_bn(spec: &PotentialSpec, z: &Vec3) -> Vec3 {
    let r = z.norm();
    if r == 0.0 {
        return Vec3::zeros();
    }
    z * (-2.0 * spec.alpha(r))
}

/// σ^N(z) = √α_η(|z|)·|z|⁻¹·a(z), the zero matrix at z = 0.
pub fn diffusion_sigma_n(spec: &PotentialSpec, z: &Vec3) -> Mat3 {
    let r = z.norm();
    if r == 0.0 {
        return Mat3::zeros();
    }
    a_matrix(z) * (spec.alpha(r).sqrt() / r)
}

/// σ^N(z)·ξ without forming the matrix: √α(|z|ξ − z(z·ξ)/|z|).
#[inline]
pub fn sigma_n_apply(sqrt_alpha: f64, r: f64, z: &Vec3, xi: &Vec3) -> Vec3 {
    if r == 0.0 {
        return Vec3::zeros();
    }
    (xi * r - z * (z.dot(xi) / r)) * sqrt_alpha
}
