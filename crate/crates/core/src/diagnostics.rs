//! Convergence and regularity instruments: the weak-form residual, a
//! bounded-Lipschitz type metric built from a normalized C² dictionary, the
//! time-Hölder seminorm of a trajectory, δ-non-aligned triples and the
//! bump-weighted ball masses ι.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, DiagGaussian};
use crate::dynamics::{momentum_energy, Observer, ParticleState, Trajectory};
use crate::estimators::{knn_entropy, pair_inverse_square, EmpiricalMeasure, DEFAULT_K};
use crate::functionals::GridSpec;
use crate::io::JsonlWriter;
use crate::numeric::{
    gauss_legendre, neumaier_sum, smoothstep5, smoothstep5_d1, smoothstep5_d2, NeumaierSum,
};
use crate::potentials::Potential;
use crate::{LandauError, Mat3, Result, Vec3};

/// A C² function on R³ with value, gradient and Hessian access.
pub trait TestFunction: Send + Sync {
    fn value(&self, v: &Vec3) -> f64;
    fn grad(&self, v: &Vec3) -> Vec3;
    fn hess(&self, v: &Vec3) -> Mat3;
}

/// φ ≡ c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantFn(pub f64);

impl TestFunction for ConstantFn {
    fn value(&self, _v: &Vec3) -> f64 {
        self.0
    }
    fn grad(&self, _v: &Vec3) -> Vec3 {
        Vec3::zeros()
    }
    fn hess(&self, _v: &Vec3) -> Mat3 {
        Mat3::zeros()
    }
}

/// φ(v) = c + p·v.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFn {
    pub c: f64,
    pub p: Vec3,
}

impl TestFunction for AffineFn {
    fn value(&self, v: &Vec3) -> f64 {
        self.c + self.p.dot(v)
    }
    fn grad(&self, _v: &Vec3) -> Vec3 {
        self.p
    }
    fn hess(&self, _v: &Vec3) -> Mat3 {
        Mat3::zeros()
    }
}

/// Value, first and second derivative of a radial profile ψ(r), turned into
/// value, gradient and Hessian of ψ(|v − c|).
fn radial_derivatives(x: &Vec3, psi: (f64, f64, f64)) -> (f64, Vec3, Mat3) {
    let (p0, p1, p2) = psi;
    let r = x.norm();
    if r == 0.0 || (p1 == 0.0 && p2 == 0.0) {
        // At the center the profiles used here have ψ′(0) = 0 and
        // ψ″(0)·Id as Hessian.
        return (
            p0,
            Vec3::zeros(),
            Mat3::identity() * if r == 0.0 { p2 } else { 0.0 },
        );
    }
    let u = x / r;
    let uu = u * u.transpose();
    let hess = uu * p2 + (Mat3::identity() - uu) * (p1 / r);
    (p0, u * p1, hess)
}

/// φ(v) = A·exp(−|v − c|²/(2s²)).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: Vec3,
    pub scale: f64,
    pub amplitude: f64,
}

impl GaussianBump {
    /// The amplitude that makes sup|φ| + sup|∇φ| + sup‖∇²φ‖_F equal to 1:
    /// the three suprema are A, A·e^{−1/2}/s and A·√3/s² (the Hessian norm
    /// peaks at the center).
    pub fn normalized(center: Vec3, scale: f64) -> Self {
        let amplitude = 1.0 / (1.0 + (-0.5f64).exp() / scale + 3f64.sqrt() / (scale * scale));
        GaussianBump {
            center,
            scale,
            amplitude,
        }
    }

    fn profile(&self, r: f64) -> (f64, f64, f64) {
        let s2 = self.scale * self.scale;
        let e = self.amplitude * (-0.5 * r * r / s2).exp();
        (e, -e * r / s2, e * (r * r / (s2 * s2) - 1.0 / s2))
    }
}

impl TestFunction for GaussianBump {
    fn value(&self, v: &Vec3) -> f64 {
        self.profile((v - self.center).norm()).0
    }
    fn grad(&self, v: &Vec3) -> Vec3 {
        let x = v - self.center;
        let s2 = self.scale * self.scale;
        -x * (self.value(v) / s2)
    }
    fn hess(&self, v: &Vec3) -> Mat3 {
        let x = v - self.center;
        let s2 = self.scale * self.scale;
        let e = self.value(v);
        (x * x.transpose() / (s2 * s2) - Mat3::identity() / s2) * e
    }
}

/// The radial bump profile: 1 on [0, 1], 0 on [3/2, ∞), a quintic
/// smoothstep in between. Returns (h, h′, h″).
pub fn bump_profile(r: f64) -> (f64, f64, f64) {
    if r <= 1.0 {
        (1.0, 0.0, 0.0)
    } else if r >= 1.5 {
        (0.0, 0.0, 0.0)
    } else {
        let t = (r - 1.0) / 0.5;
        (
            1.0 - smoothstep5(t),
            -smoothstep5_d1(t) / 0.5,
            -smoothstep5_d2(t) / 0.25,
        )
    }
}

/// h(x) = bump_profile(|x|).
pub fn bump_h(x: &Vec3) -> f64 {
    bump_profile(x.norm()).0
}

/// φ(v) = h((v − c)/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompactBump {
    pub center: Vec3,
    pub scale: f64,
}

impl CompactBump {
    fn psi(&self, r: f64) -> (f64, f64, f64) {
        let (h0, h1, h2) = bump_profile(r / self.scale);
        (h0, h1 / self.scale, h2 / (self.scale * self.scale))
    }
}

impl TestFunction for CompactBump {
    fn value(&self, v: &Vec3) -> f64 {
        bump_profile((v - self.center).norm() / self.scale).0
    }
    fn grad(&self, v: &Vec3) -> Vec3 {
        let x = v - self.center;
        radial_derivatives(&x, self.psi(x.norm())).1
    }
    fn hess(&self, v: &Vec3) -> Mat3 {
        let x = v - self.center;
        radial_derivatives(&x, self.psi(x.norm())).2
    }
}

/// Ordered Gaussian bumps φ_1, φ_2, … with weights 2^{−n}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunctionDictionary {
    functions: Vec<GaussianBump>,
}

/// Radius of the ball containing the dictionary centers.
const DICT_RADIUS: i32 = 6;
const DICT_SCALES: [f64; 3] = [0.5, 1.0, 2.0];
pub const DEFAULT_N_MAX: usize = 64;

impl TestFunctionDictionary {
    /// Integer lattice centers in B(0, 6) by increasing norm (ties broken
    /// lexicographically), each at scales 1/2, 1, 2, truncated to `n_max`
    /// functions. The C² norm bound is verified by sampling.
    pub fn standard(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(LandauError::Config(
                "dictionary needs at least one function".into(),
            ));
        }
        let mut centers = Vec::new();
        for a in -DICT_RADIUS..=DICT_RADIUS {
            for b in -DICT_RADIUS..=DICT_RADIUS {
                for c in -DICT_RADIUS..=DICT_RADIUS {
                    if a * a + b * b + c * c <= DICT_RADIUS * DICT_RADIUS {
                        centers.push((a * a + b * b + c * c, [a, b, c]));
                    }
                }
            }
        }
        centers.sort();
        let max_len = centers.len() * DICT_SCALES.len();
        if n_max > max_len {
            return Err(LandauError::Config(format!(
                "dictionary holds at most {max_len} functions"
            )));
        }
        let functions: Vec<GaussianBump> = centers
            .iter()
            .flat_map(|(_, c)| {
                let center = Vec3::new(c[0] as f64, c[1] as f64, c[2] as f64);
                DICT_SCALES.map(|s| GaussianBump::normalized(center, s))
            })
            .take(n_max)
            .collect();
        let dict = TestFunctionDictionary { functions };
        dict.verify_norms()?;
        Ok(dict)
    }

    /// Samples each function along several rays through its center and
    /// checks sup|φ| + sup|∇φ| + sup‖∇²φ‖ ≤ 1.
    pub fn verify_norms(&self) -> Result<()> {
        let dirs = [
            Vec3::x(),
            Vec3::new(1.0, 1.0, 1.0).normalize(),
            Vec3::new(-0.3, 0.8, 0.52).normalize(),
        ];
        for (n, f) in self.functions.iter().enumerate() {
            let (mut s0, mut s1, mut s2) = (0.0f64, 0.0f64, 0.0f64);
            for d in &dirs {
                for i in 0..=800 {
                    let v = f.center + d * (8.0 * f.scale * i as f64 / 800.0);
                    s0 = s0.max(f.value(&v).abs());
                    s1 = s1.max(f.grad(&v).norm());
                    s2 = s2.max(f.hess(&v).norm());
                }
            }
            if s0 + s1 + s2 > 1.0 + 1e-12 {
                return Err(LandauError::Config(format!(
                    "dictionary function {} has C² norm {}",
                    n + 1,
                    s0 + s1 + s2
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn functions(&self) -> &[GaussianBump] {
        &self.functions
    }

    /// Bound on the omitted tail Σ_{n>n_max} 2^{−n}·2.
    pub fn truncation_error(&self) -> f64 {
        2.0 * 0.5f64.powi(self.functions.len() as i32)
    }
}

/// A measure on R³ given either by points or by a density.
#[derive(Clone, Copy)]
pub enum Measure<'a> {
    Empirical(&'a EmpiricalMeasure),
    Density(&'a dyn DensityModel),
}

/// Grid points per axis for integrating dictionary functions against
/// densities.
const DENSITY_GRID_POINTS: usize = 101;

/// ∫φ_n dμ for every dictionary function.
pub fn dictionary_integrals(mu: &Measure, dict: &TestFunctionDictionary) -> Result<Vec<f64>> {
    match mu {
        Measure::Empirical(m) => Ok(dict
            .functions
            .par_iter()
            .map(|f| m.integrate(|v| f.value(v)))
            .collect()),
        Measure::Density(d) => {
            let grid = GridSpec::covering(*d, DENSITY_GRID_POINTS)?;
            let (axes, w) = grid.nodes();
            let h = grid.spacing();
            let cell = h[0] * h[1] * h[2];
            let slabs: Vec<Vec<f64>> = (0..grid.points)
                .into_par_iter()
                .map(|i| {
                    let mut acc = vec![NeumaierSum::new(); dict.len()];
                    for j in 0..grid.points {
                        for k in 0..grid.points {
                            let x = [axes[0][i], axes[1][j], axes[2][k]];
                            let p = d.density(&x) * w[i] * w[j] * w[k];
                            if p == 0.0 {
                                continue;
                            }
                            let v = Vec3::new(x[0], x[1], x[2]);
                            for (a, f) in acc.iter_mut().zip(&dict.functions) {
                                a.add(p * f.value(&v));
                            }
                        }
                    }
                    acc.iter().map(|a| a.value()).collect()
                })
                .collect();
            Ok((0..dict.len())
                .map(|n| neumaier_sum(slabs.iter().map(|s| s[n])) * cell)
                .collect())
        }
    }
}

/// Σ 2^{−n}|a_n − b_n|.
pub fn distance_from_integrals(a: &[f64], b: &[f64]) -> f64 {
    let mut w = 1.0;
    neumaier_sum(a.iter().zip(b).map(|(x, y)| {
        w *= 0.5;
        w * (x - y).abs()
    }))
}

/// Truncated dictionary distance with its truncation bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlDistance {
    pub value: f64,
    pub truncation_error: f64,
}

/// d(μ, ν) = Σ_n 2^{−n}|∫φ_n d(μ − ν)| over the dictionary.
pub fn bl_distance(
    mu: &Measure,
    nu: &Measure,
    dict: &TestFunctionDictionary,
) -> Result<BlDistance> {
    let a = dictionary_integrals(mu, dict)?;
    let b = dictionary_integrals(nu, dict)?;
    Ok(BlDistance {
        value: distance_from_integrals(&a, &b),
        truncation_error: dict.truncation_error(),
    })
}

/// max over snapshot pairs of d(μ_s, μ_t)/|t − s|^exponent.
pub fn holder_seminorm(
    traj: &Trajectory,
    dict: &TestFunctionDictionary,
    exponent: f64,
) -> Result<f64> {
    if traj.snapshots.len() < 2 {
        return Err(LandauError::Precondition(
            "need at least two snapshots".into(),
        ));
    }
    let integrals: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|s| {
            let mu = EmpiricalMeasure::new(s.velocities.clone())?;
            dictionary_integrals(&Measure::Empirical(&mu), dict)
        })
        .collect::<Result<_>>()?;
    let times = traj.times();
    Ok(holder_from_integrals(&times, &integrals, exponent))
}

/// [`holder_seminorm`] from precomputed dictionary integrals.
pub fn holder_from_integrals(times: &[f64], integrals: &[Vec<f64>], exponent: f64) -> f64 {
    let mut best = 0.0f64;
    for a in 0..times.len() {
        for b in a + 1..times.len() {
            let dt = (times[b] - times[a]).abs();
            if dt == 0.0 {
                continue;
            }
            let d = distance_from_integrals(&integrals[a], &integrals[b]);
            best = best.max(d / dt.powf(exponent));
        }
    }
    best
}

/// (1/N²)Σ_{i≠j, Vᵢ≠Vⱼ}[b(z)·(∇φ(Vᵢ) − ∇φ(Vⱼ)) + α(|z|)a(z):∇²φ(Vᵢ)], z = Vᵢ − Vⱼ,
/// with the bare potential α and b(z) = −2α(|z|)z.
pub fn weak_form_integrand(velocities: &[Vec3], phi: &dyn TestFunction, pot: &Potential) -> f64 {
    let n = velocities.len();
    let grads: Vec<Vec3> = velocities.iter().map(|v| phi.grad(v)).collect();
    let hess: Vec<Mat3> = velocities.iter().map(|v| phi.hess(v)).collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = NeumaierSum::new();
            for j in i + 1..n {
                let z = velocities[i] - velocities[j];
                let r2 = z.norm_squared();
                if r2 == 0.0 {
                    continue;
                }
                let alpha = pot.alpha(r2.sqrt());
                let dg = grads[i] - grads[j];
                // Both orderings of the pair: b is odd, a is even in z.
                let b_term = if dg == Vec3::zeros() {
                    0.0
                } else {
                    2.0 * (-2.0 * alpha) * z.dot(&dg)
                };
                let hsum = hess[i] + hess[j];
                let a_term = if hsum == Mat3::zeros() {
                    0.0
                } else {
                    alpha * (r2 * hsum.trace() - z.dot(&(hsum * z)))
                };
                s.add(b_term + a_term);
            }
            s.value()
        })
        .collect();
    neumaier_sum(rows) / (n as f64 * n as f64)
}

/// The weak-form residual with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakResidual {
    pub value: f64,
    /// Number of stored snapshots in [0, t].
    pub n_snapshots: usize,
    /// Steps between stored snapshots.
    pub stride: u64,
    /// Largest time gap in the trapezoid rule.
    pub max_gap: f64,
}

/// 𝓕_{φ,t}(μ) = −⟨μ_t, φ⟩ + ⟨μ_0, φ⟩ + ∫_0^t S(s)ds with S from
/// [`weak_form_integrand`], integrated by the trapezoid rule over the
/// stored snapshots. `t` must coincide with a stored snapshot time.
pub fn weak_form_residual(
    traj: &Trajectory,
    phi: &dyn TestFunction,
    t: f64,
) -> Result<WeakResidual> {
    let pot = Potential::exact(traj.config.gamma)?;
    let tol = 1e-9 * traj.config.dt;
    let end = traj
        .snapshots
        .iter()
        .position(|s| (s.t - t).abs() <= tol)
        .ok_or_else(|| {
            LandauError::Interpolation(format!(
                "t = {t} is not a stored snapshot time (stride {} steps)",
                traj.config.snapshot_stride
            ))
        })?;
    let mut tracker = WeakResidualTracker::new(pot);
    let mut value = 0.0;
    for s in &traj.snapshots[..=end] {
        value = tracker.update(s.t, &s.velocities, phi);
    }
    Ok(WeakResidual {
        value,
        n_snapshots: end + 1,
        stride: traj.config.snapshot_stride,
        max_gap: tracker.max_gap,
    })
}

/// Incremental weak-form residual along a stream of snapshots.
#[derive(Debug, Clone)]
pub struct WeakResidualTracker {
    pot: Potential,
    initial_mean: Option<f64>,
    last: Option<(f64, f64)>,
    integral: NeumaierSum,
    max_gap: f64,
}

impl WeakResidualTracker {
    pub fn new(pot: Potential) -> Self {
        WeakResidualTracker {
            pot,
            initial_mean: None,
            last: None,
            integral: NeumaierSum::new(),
            max_gap: 0.0,
        }
    }

    /// Adds the snapshot at time `t` and returns the residual up to `t`.
    pub fn update(&mut self, t: f64, velocities: &[Vec3], phi: &dyn TestFunction) -> f64 {
        let n = velocities.len() as f64;
        let mean = neumaier_sum(velocities.iter().map(|v| phi.value(v))) / n;
        let s = weak_form_integrand(velocities, phi, &self.pot);
        let initial = *self.initial_mean.get_or_insert(mean);
        if let Some((t0, s0)) = self.last {
            let gap = t - t0;
            self.max_gap = self.max_gap.max(gap);
            self.integral.add(0.5 * gap * (s0 + s));
        }
        self.last = Some((t, s));
        -mean + initial + self.integral.value()
    }
}

/// Outcome of the δ-non-alignment test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonAlignmentCheck {
    pub nonaligned: bool,
    /// (|v₂−v₁| − 6√δ, |p⊥(v₃−v₁)| − 24δ − 2√δ|v₃−v₁|).
    pub margins: (f64, f64),
}

/// Tests |v₂−v₁| ≥ 6√δ and |p_{(v₂−v₁)⊥}(v₃−v₁)| ≥ 24δ + 2√δ|v₃−v₁|.
pub fn is_delta_nonaligned(v1: &Vec3, v2: &Vec3, v3: &Vec3, delta: f64) -> NonAlignmentCheck {
    let sd = delta.sqrt();
    let e = v2 - v1;
    let w = v3 - v1;
    let len = e.norm();
    let perp = if len > 0.0 {
        let u = e / len;
        w - u * u.dot(&w)
    } else {
        w
    };
    let m1 = len - 6.0 * sd;
    let m2 = perp.norm() - (24.0 * delta + 2.0 * sd * w.norm());
    NonAlignmentCheck {
        nonaligned: len > 0.0 && m1 >= 0.0 && m2 >= 0.0,
        margins: (m1, m2),
    }
}

/// A δ-non-aligned triple together with its three ball masses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonAlignedTriple {
    pub v: [Vec3; 3],
    pub delta: f64,
    pub margins: (f64, f64),
    pub masses: [f64; 3],
}

/// ∫h((w − c)/δ)μ(dw). Densities use product Gauss–Legendre quadrature in
/// spherical coordinates (radial nodes split at the kink ρ = 1).
pub fn ball_mass(mu: &Measure, center: &Vec3, delta: f64) -> f64 {
    match mu {
        Measure::Empirical(m) => m.integrate(|w| bump_h(&((w - center) / delta))),
        Measure::Density(d) => ball_mass_density(*d, center, delta),
    }
}

fn ball_mass_density(d: &dyn DensityModel, center: &Vec3, delta: f64) -> f64 {
    thread_local! {
        static RULE: (Vec<(f64, f64)>, Vec<(Vec3, f64)>) = spherical_rule();
    }
    RULE.with(|(radial, dirs)| {
        let mut acc = NeumaierSum::new();
        for &(rho, wr) in radial {
            let h = bump_profile(rho).0;
            if h == 0.0 {
                continue;
            }
            for (u, wu) in dirs {
                let x = center + u * (delta * rho);
                acc.add(wr * wu * h * rho * rho * d.density(&[x[0], x[1], x[2]]));
            }
        }
        acc.value() * delta.powi(3)
    })
}

/// Radial nodes on [0, 1] ∪ [1, 3/2] and directions on the unit sphere.
fn spherical_rule() -> (Vec<(f64, f64)>, Vec<(Vec3, f64)>) {
    let (x, w) = gauss_legendre(10);
    let mut radial = Vec::new();
    for (a, b) in [(0.0, 1.0), (1.0, 1.5)] {
        for (xi, wi) in x.iter().zip(&w) {
            radial.push((0.5 * (a + b) + 0.5 * (b - a) * xi, 0.5 * (b - a) * wi));
        }
    }
    let (ct, wt) = gauss_legendre(12);
    let n_phi = 24;
    let mut dirs = Vec::new();
    for (c, wc) in ct.iter().zip(&wt) {
        let s = (1.0 - c * c).sqrt();
        for k in 0..n_phi {
            let ph = std::f64::consts::TAU * (k as f64 + 0.5) / n_phi as f64;
            dirs.push((
                Vec3::new(s * ph.cos(), s * ph.sin(), *c),
                wc * std::f64::consts::TAU / n_phi as f64,
            ));
        }
    }
    (radial, dirs)
}

/// Most candidates kept for the triple search.
const MAX_CANDIDATES: usize = 300;
/// Most particle positions added as candidates.
const MAX_CLOUD_CANDIDATES: usize = 256;

/// Searches lattice points of B(0, R) (spacing max(δ, R/10)), plus particle
/// positions for empirical measures, for a δ-non-aligned triple whose three
/// ball masses are all at least κ, and returns the one maximizing the
/// smallest mass. The search is bounded; `None` means no such triple among
/// the candidates.
pub fn find_nonaligned_triple(
    mu: &Measure,
    delta: f64,
    radius: f64,
    kappa: f64,
) -> Result<Option<NonAlignedTriple>> {
    if !(delta > 0.0 && radius > 0.0 && kappa > 0.0) {
        return Err(LandauError::Precondition(
            "delta, R and kappa must be positive".into(),
        ));
    }
    if 6.0 * delta.sqrt() > 2.0 * radius {
        return Ok(None);
    }
    let spacing = delta.max(radius / 10.0);
    let m = (radius / spacing).floor() as i64;
    let mut candidates = Vec::new();
    for a in -m..=m {
        for b in -m..=m {
            for c in -m..=m {
                let p = Vec3::new(a as f64, b as f64, c as f64) * spacing;
                if p.norm() <= radius {
                    candidates.push(p);
                }
            }
        }
    }
    if let Measure::Empirical(e) = mu {
        let inside: Vec<Vec3> = e
            .points()
            .iter()
            .copied()
            .filter(|p| p.norm() <= radius)
            .collect();
        let step = inside.len().div_ceil(MAX_CLOUD_CANDIDATES).max(1);
        candidates.extend(inside.iter().step_by(step));
    }
    let masses: Vec<f64> = candidates
        .par_iter()
        .map(|c| ball_mass(mu, c, delta))
        .collect();
    let mut ranked: Vec<(f64, Vec3)> = masses
        .into_iter()
        .zip(candidates)
        .filter(|(m, _)| *m >= kappa)
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    ranked.truncate(MAX_CANDIDATES);
    // Candidates are sorted by mass, so the smallest mass of a triple is the
    // mass of its last member; the first index that closes a valid triple
    // gives the optimum.
    for c in 2..ranked.len() {
        for a in 0..c {
            for b in a + 1..c {
                let pts = [ranked[a], ranked[b], ranked[c]];
                if let Some(t) = best_ordering(&pts, delta) {
                    return Ok(Some(t));
                }
            }
        }
    }
    Ok(None)
}

fn best_ordering(pts: &[(f64, Vec3); 3], delta: f64) -> Option<NonAlignedTriple> {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    PERMS
        .iter()
        .filter_map(|p| {
            let (a, b, c) = (pts[p[0]], pts[p[1]], pts[p[2]]);
            let chk = is_delta_nonaligned(&a.1, &b.1, &c.1, delta);
            chk.nonaligned.then_some(NonAlignedTriple {
                v: [a.1, b.1, c.1],
                delta,
                margins: chk.margins,
                masses: [a.0, b.0, c.0],
            })
        })
        .max_by(|x, y| {
            x.margins
                .0
                .min(x.margins.1)
                .total_cmp(&y.margins.0.min(y.margins.1))
        })
}

/// ι = min_k ∫h((w − v_k)/δ)μ(dw).
pub fn iota(mu: &Measure, triple: &NonAlignedTriple) -> f64 {
    triple
        .v
        .iter()
        .map(|c| ball_mass(mu, c, triple.delta))
        .fold(f64::INFINITY, f64::min)
}

/// One row of the diagnostics stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub step: u64,
    pub momentum: [f64; 3],
    pub energy: f64,
    pub pair_inv_sq: Option<f64>,
    pub knn_entropy: Option<f64>,
    pub bl_dist_to_ref: Option<f64>,
    pub weak_residual: BTreeMap<String, f64>,
    pub iota: Option<f64>,
}

impl DiagnosticsRecord {
    /// Numeric series by name, for plot extraction. Weak residuals are
    /// addressed as `weak_residual` (first test function) or
    /// `weak_residual.<id>`.
    pub fn series(&self, name: &str) -> Option<Option<f64>> {
        match name {
            "energy" => Some(Some(self.energy)),
            "momentum_x" => Some(Some(self.momentum[0])),
            "momentum_y" => Some(Some(self.momentum[1])),
            "momentum_z" => Some(Some(self.momentum[2])),
            "pair_inv_sq" => Some(self.pair_inv_sq),
            "knn_entropy" | "entropy" => Some(self.knn_entropy),
            "bl_dist_to_ref" | "distance" => Some(self.bl_dist_to_ref),
            "iota" => Some(self.iota),
            "weak_residual" | "residual" => Some(self.weak_residual.values().next().copied()),
            other => other
                .strip_prefix("weak_residual.")
                .map(|id| self.weak_residual.get(id).copied()),
        }
    }
}

/// Names accepted by [`DiagnosticsRecord::series`] besides `weak_residual.<id>`.
pub const SERIES_NAMES: &[&str] = &[
    "energy",
    "momentum_x",
    "momentum_y",
    "momentum_z",
    "pair_inv_sq",
    "knn_entropy",
    "entropy",
    "bl_dist_to_ref",
    "distance",
    "iota",
    "weak_residual",
    "residual",
];

/// Settings of the standard observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardObserverOptions {
    pub knn_k: usize,
    /// δ of the non-aligned triple tracked by ι.
    pub iota_delta: f64,
    /// Search radius for the triple.
    pub iota_radius: f64,
}

impl Default for StandardObserverOptions {
    fn default() -> Self {
        StandardObserverOptions {
            knn_k: DEFAULT_K,
            iota_delta: 0.05,
            iota_radius: 3.0,
        }
    }
}

/// Observer producing one [`DiagnosticsRecord`] per snapshot: conserved
/// quantities, pair statistic, k-NN entropy, distance to the Maxwellian with
/// the initial momentum and energy, weak residuals of two fixed test
/// functions, and ι for a triple chosen on the initial cloud.
pub struct StandardObserver {
    options: StandardObserverOptions,
    dict: TestFunctionDictionary,
    reference: Option<Vec<f64>>,
    triple: Option<Option<NonAlignedTriple>>,
    tests: Vec<(String, Box<dyn TestFunction>)>,
    trackers: Vec<WeakResidualTracker>,
    pot: Potential,
    rows: Vec<DiagnosticsRecord>,
    sink: Option<JsonlWriter>,
}

impl StandardObserver {
    pub fn new(
        gamma: f64,
        options: StandardObserverOptions,
        sink: Option<JsonlWriter>,
    ) -> Result<Self> {
        let pot = Potential::exact(gamma)?;
        let tests: Vec<(String, Box<dyn TestFunction>)> = vec![
            (
                "bump".to_string(),
                Box::new(CompactBump {
                    center: Vec3::zeros(),
                    scale: 1.0,
                }),
            ),
            (
                "gauss".to_string(),
                Box::new(GaussianBump::normalized(Vec3::new(0.5, 0.0, 0.0), 1.0)),
            ),
        ];
        let trackers = tests
            .iter()
            .map(|_| WeakResidualTracker::new(pot))
            .collect();
        Ok(StandardObserver {
            options,
            dict: TestFunctionDictionary::standard(DEFAULT_N_MAX)?,
            reference: None,
            triple: None,
            tests,
            trackers,
            pot,
            rows: Vec::new(),
            sink,
        })
    }

    pub fn rows(&self) -> &[DiagnosticsRecord] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<DiagnosticsRecord> {
        self.rows
    }

    pub fn potential(&self) -> &Potential {
        &self.pot
    }
}

/// The Maxwellian sharing the cloud's mean velocity and energy.
pub fn matched_maxwellian(velocities: &[Vec3]) -> Result<DiagGaussian> {
    let n = velocities.len() as f64;
    let (m, e) = momentum_energy(velocities);
    let mean = m / n;
    let temperature = (e / n - mean.norm_squared()) / 3.0;
    if !(temperature > 0.0) {
        return Err(LandauError::DegenerateCloud(
            "cloud has no thermal spread".into(),
        ));
    }
    DiagGaussian::new(vec![mean[0], mean[1], mean[2]], vec![temperature; 3])
}

impl Observer for StandardObserver {
    fn observe(&mut self, state: &ParticleState) -> Result<()> {
        let v = &state.velocities;
        let mu = EmpiricalMeasure::new(v.clone())?;
        if self.reference.is_none() {
            let m = matched_maxwellian(v).ok();
            self.reference = Some(match m {
                Some(g) => dictionary_integrals(&Measure::Density(&g), &self.dict)?,
                None => Vec::new(),
            });
        }
        if self.triple.is_none() {
            let kappa = 1.0 / v.len() as f64;
            self.triple = Some(find_nonaligned_triple(
                &Measure::Empirical(&mu),
                self.options.iota_delta,
                self.options.iota_radius,
                kappa,
            )?);
        }
        let (momentum, energy) = momentum_energy(v);
        let reference = self.reference.as_ref().unwrap();
        let bl = if reference.is_empty() {
            None
        } else {
            let own = dictionary_integrals(&Measure::Empirical(&mu), &self.dict)?;
            Some(distance_from_integrals(&own, reference))
        };
        let mut weak = BTreeMap::new();
        for ((id, phi), tr) in self.tests.iter().zip(self.trackers.iter_mut()) {
            weak.insert(id.clone(), tr.update(state.t, v, phi.as_ref()));
        }
        let row = DiagnosticsRecord {
            t: state.t,
            step: state.step_index,
            momentum: [momentum[0], momentum[1], momentum[2]],
            energy,
            pair_inv_sq: pair_inverse_square(&mu).ok().map(|p| p.value),
            knn_entropy: knn_entropy(&mu, self.options.knn_k).ok().map(|k| k.value),
            bl_dist_to_ref: bl,
            weak_residual: weak,
            iota: self
                .triple
                .unwrap()
                .map(|t| iota(&Measure::Empirical(&mu), &t)),
        };
        if let Some(sink) = self.sink.as_mut() {
            sink.write(&row)?;
        }
        self.rows.push(row);
        Ok(())
    }
}
