//! Entropy H, Fisher information I, entropy production D, Fisher dissipation
//! K_β and the fourth-order functional J.
//!
//! H and I are three-dimensional and use tensor-grid trapezoid quadrature.
//! D, K_β and J live on pairs (v, w) ∈ R⁶ and use Monte Carlo over samples of
//! the density. For a sample x = (v, w, …) with z = v − w, every pair
//! functional reduces to the two directional derivatives
//!
//! ```text
//! s1_k = b̃_k·∇log F = b_k·(∇_v log F − ∇_w log F)
//! s2_k = (b̃_k·∇)(b̃_k·∇ log F) = b̃_kᵀ∇²log F b̃_k + c_k·∇log F,
//! ```
//!
//! with b_k = e_k × z and c_k = (b̃_k·∇)b̃_k = (2e_k×b_k, −2e_k×b_k), and the
//! radial weight w⁴ = α(|z|)/|z|² of the derivation operator
//! ∂_{b_k} = |z|^{−1/2}α^{1/4} b̃_k·∇. The weight commutes with b̃_k·∇ because
//! b̃_k annihilates functions of |z|. Per sample:
//!
//! ```text
//! D   : ½α Σ_k s1_k²
//! K_β : Σ_k w⁴(s2_k + βs1_k²)²        (so K₁ integrates (∂²F)²/F)
//! J   : Σ_k w⁴ s1_k⁴                   (the weighted form α/|z|²·(b̃·∇log F)⁴)
//! ```
//!
//! Integration by parts gives E[w⁴(s2 + s1²)s1²] = (2/3)J, from which
//! K_β = K₁ + (β−1)(β+1/3)J = K_{1/3} + (β−1/3)²J.
//!
//! On Maxwellian tensors s1 and s2 vanish identically, but in floating point
//! they come out as rounding residue. Sums whose magnitude is below
//! [`CANCELLATION_TOL`] times the magnitude of their terms are therefore set
//! to exactly zero.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{DensityModel, Normalization, PowerTransform, TensorProduct};
use crate::noise::aux_rng;
use crate::numeric::{snap, NeumaierSum, CANCELLATION_TOL};
use crate::potentials::{cross_basis, Potential};
use crate::{LandauError, Result, Vec3};

/// Required captured mass for 3D quadrature.
pub const COVERAGE: f64 = 1.0 - 1e-8;
/// Floor for relative residuals.
pub const RESIDUAL_FLOOR: f64 = 1e-30;
/// Pairs closer than this are rejected from Monte Carlo averages.
pub const SINGULARITY_GUARD: f64 = 1e-12;
/// Samples per Monte Carlo batch; each batch has its own stream.
pub const MC_BATCH: usize = 4096;

const TAG_PAIR_FUNCTIONALS: u64 = 0x4B4A;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Grid,
    Mc,
}

/// A functional value with its error bar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalEstimate {
    pub value: f64,
    /// Grid: refinement difference plus truncation. Monte Carlo: standard
    /// error times the multiplier of the [`McSpec`].
    pub abs_error: f64,
    pub method: Method,
    /// Grid points or accepted samples.
    pub n: usize,
    /// Samples rejected by the singularity guard.
    #[serde(default)]
    pub rejected: usize,
}

/// Tensor-product trapezoid grid on a box in R³ with an odd number of points
/// per axis, so that every other point forms the half-resolution grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    pub points: usize,
}

impl GridSpec {
    pub fn new(lower: [f64; 3], upper: [f64; 3], points: usize) -> Result<Self> {
        if points < 5 || points % 2 == 0 {
            return Err(LandauError::Config(format!(
                "grid needs an odd number of points per axis (at least 5), got {points}"
            )));
        }
        if (0..3).any(|a| !(upper[a] > lower[a])) {
            return Err(LandauError::Config("grid box is empty".into()));
        }
        Ok(GridSpec {
            lower,
            upper,
            points,
        })
    }

    /// A box of ±10 spreads around the model's center on every axis.
    pub fn covering(model: &dyn DensityModel, points: usize) -> Result<Self> {
        let (c, s) = model.location_scale();
        if c.len() != 3 {
            return Err(LandauError::Config(
                "grids cover densities on R³ only".into(),
            ));
        }
        let lower = [c[0] - 10.0 * s[0], c[1] - 10.0 * s[1], c[2] - 10.0 * s[2]];
        let upper = [c[0] + 10.0 * s[0], c[1] + 10.0 * s[1], c[2] + 10.0 * s[2]];
        Self::new(lower, upper, points)
    }

    pub fn spacing(&self) -> [f64; 3] {
        let m = (self.points - 1) as f64;
        [
            (self.upper[0] - self.lower[0]) / m,
            (self.upper[1] - self.lower[1]) / m,
            (self.upper[2] - self.lower[2]) / m,
        ]
    }

    pub fn total_points(&self) -> usize {
        self.points.pow(3)
    }

    fn weights(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.points;
        let fine: Vec<f64> = (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 } else { 1.0 })
            .collect();
        let coarse: Vec<f64> = (0..n)
            .map(|i| {
                if i % 2 == 1 {
                    0.0
                } else if i == 0 || i == n - 1 {
                    1.0
                } else {
                    2.0
                }
            })
            .collect();
        (fine, coarse)
    }

    /// Point coordinates and trapezoid weights along each axis.
    pub fn nodes(&self) -> ([Vec<f64>; 3], Vec<f64>) {
        let h = self.spacing();
        let axes = [0, 1, 2].map(|a| {
            (0..self.points)
                .map(|i| self.lower[a] + i as f64 * h[a])
                .collect::<Vec<f64>>()
        });
        (axes, self.weights().0)
    }
}

struct GridSums {
    fine: f64,
    coarse: f64,
    mass: f64,
}

/// Integrates `integrand(log f, ∇log f)` against the grid at resolutions h
/// and 2h, together with the captured mass.
fn grid_sums<F>(f: &dyn DensityModel, grid: &GridSpec, need_grad: bool, integrand: F) -> GridSums
where
    F: Fn(f64, &[f64; 3]) -> f64 + Sync,
{
    let (axes, _) = grid.nodes();
    let (wf, wc) = grid.weights();
    let h = grid.spacing();
    let cell = h[0] * h[1] * h[2];
    let slabs: Vec<(f64, f64, f64)> = (0..grid.points)
        .into_par_iter()
        .map(|i| {
            let (mut fine, mut coarse, mut mass) =
                (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
            let mut g = [0.0; 3];
            for j in 0..grid.points {
                for k in 0..grid.points {
                    let x = [axes[0][i], axes[1][j], axes[2][k]];
                    let l = f.log_density(&x);
                    if l == f64::NEG_INFINITY {
                        continue;
                    }
                    if need_grad {
                        f.log_grad(&x, &mut g);
                    }
                    let val = integrand(l, &g);
                    let p = l.exp();
                    let w = wf[i] * wf[j] * wf[k];
                    fine.add(w * val);
                    mass.add(w * p);
                    let c = wc[i] * wc[j] * wc[k];
                    if c != 0.0 {
                        coarse.add(c * val);
                    }
                }
            }
            (fine.value(), coarse.value(), mass.value())
        })
        .collect();
    let mut out = (NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new());
    for (a, b, c) in slabs {
        out.0.add(a);
        out.1.add(b);
        out.2.add(c);
    }
    GridSums {
        fine: out.0.value() * cell,
        coarse: out.1.value() * cell,
        mass: out.2.value() * cell,
    }
}

fn grid_functional<F>(
    f: &dyn DensityModel,
    grid: &GridSpec,
    need_grad: bool,
    integrand: F,
) -> Result<FunctionalEstimate>
where
    F: Fn(f64, &[f64; 3]) -> f64 + Sync,
{
    if f.dim() != 3 {
        return Err(LandauError::Config(format!(
            "grid functionals need a density on R³, got dimension {}",
            f.dim()
        )));
    }
    if f.normalization() != Normalization::Analytic {
        return Err(LandauError::Precondition(
            "density must be normalized".into(),
        ));
    }
    let sums = grid_sums(f, grid, need_grad, integrand);
    if sums.mass < COVERAGE {
        return Err(LandauError::Coverage {
            mass: sums.mass,
            required: COVERAGE,
        });
    }
    let truncation = (1.0 - sums.mass).abs() * sums.fine.abs().max(1.0);
    Ok(FunctionalEstimate {
        value: sums.fine,
        abs_error: (sums.fine - sums.coarse).abs() + truncation,
        method: Method::Grid,
        n: grid.total_points(),
        rejected: 0,
    })
}

/// H(f) = ∫ f log f.
pub fn entropy(f: &dyn DensityModel, grid: &GridSpec) -> Result<FunctionalEstimate> {
    grid_functional(f, grid, false, |l, _| l.exp() * l)
}

/// I(f) = ∫ f |∇log f|².
pub fn fisher(f: &dyn DensityModel, grid: &GridSpec) -> Result<FunctionalEstimate> {
    grid_functional(f, grid, true, |l, g| {
        l.exp() * (g[0] * g[0] + g[1] * g[1] + g[2] * g[2])
    })
}

/// Monte Carlo controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSpec {
    pub n_samples: usize,
    pub seed: u64,
    /// Factor applied to the standard error when reporting abs_error.
    pub multiplier: f64,
}

impl McSpec {
    pub fn new(n_samples: usize, seed: u64) -> Self {
        McSpec {
            n_samples,
            seed,
            multiplier: 1.0,
        }
    }
}

/// Derivatives of log F along b̃_k at one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairDerivatives {
    pub z: Vec3,
    /// α(|z|).
    pub alpha: f64,
    /// w⁴ = α/|z|².
    pub w4: f64,
    pub s1: [f64; 3],
    /// Present when the model has Hessian access and it was requested.
    pub s2: Option<[f64; 3]>,
}

/// Computes s1_k (and s2_k) at `x`, the first six coordinates of which are
/// (v, w). `snap_cancellation` zeroes sums at rounding level.
pub fn pair_derivatives(
    f: &dyn DensityModel,
    pot: &Potential,
    x: &[f64],
    with_hessian: bool,
    snap_cancellation: bool,
) -> Result<Option<PairDerivatives>> {
    let d = f.dim();
    if d < 6 || d % 3 != 0 {
        return Err(LandauError::Config(format!(
            "pair functionals need a density on R^(3m), m ≥ 2, got dimension {d}"
        )));
    }
    let z = Vec3::new(x[0] - x[3], x[1] - x[4], x[2] - x[5]);
    let r = z.norm();
    if r < SINGULARITY_GUARD {
        return Ok(None);
    }
    let mut g = vec![0.0; d];
    f.log_grad(x, &mut g);
    let dg = Vec3::new(g[0] - g[3], g[1] - g[4], g[2] - g[5]);
    let gscale = Vec3::new(
        g[0].abs() + g[3].abs(),
        g[1].abs() + g[4].abs(),
        g[2].abs() + g[5].abs(),
    );
    let alpha = pot.alpha(r);
    let mut s1 = [0.0; 3];
    let mut s2 = [0.0; 3];
    let mut u = vec![0.0; d];
    for k in 0..3 {
        let b = cross_basis(k, &z);
        let raw1 = b.dot(&dg);
        let scale1 = b.abs().dot(&gscale);
        s1[k] = if snap_cancellation {
            snap(raw1, scale1)
        } else {
            raw1
        };
        if with_hessian {
            for c in 0..3 {
                u[c] = b[c];
                u[c + 3] = -b[c];
            }
            let q = f.log_hess_quadform(x, &u).ok_or_else(|| {
                LandauError::Capability(format!("{} has no Hessian access", f.describe()))
            })?;
            let c = cross_basis(k, &b) * 2.0;
            let cg = c.dot(&dg);
            let raw2 = q + cg;
            let scale2 = q.abs() + c.abs().dot(&gscale);
            s2[k] = if snap_cancellation {
                snap(raw2, scale2)
            } else {
                raw2
            };
        }
    }
    Ok(Some(PairDerivatives {
        z,
        alpha,
        w4: alpha / (r * r),
        s1,
        s2: with_hessian.then_some(s2),
    }))
}

/// Per-sample derivative records drawn from one density, shared by every
/// pair functional so that identities can be tested on common samples.
#[derive(Debug, Clone)]
pub struct SharedSamples {
    pub records: Vec<PairDerivatives>,
    pub rejected: usize,
    pub multiplier: f64,
}

impl SharedSamples {
    /// Draws `mc.n_samples` samples of F in batches of [`MC_BATCH`], batch b
    /// using stream (seed, tag, b). `tag` separates sample sets that must be
    /// independent.
    pub fn draw(
        f: &dyn DensityModel,
        pot: &Potential,
        mc: &McSpec,
        tag: u64,
        with_hessian: bool,
    ) -> Result<Self> {
        if !f.can_sample() {
            return Err(LandauError::Config(format!(
                "{} cannot be sampled",
                f.describe()
            )));
        }
        if mc.n_samples < 2 {
            return Err(LandauError::Config(
                "Monte Carlo needs at least 2 samples".into(),
            ));
        }
        let n_batches = mc.n_samples.div_ceil(MC_BATCH);
        let batches: Vec<Result<(Vec<PairDerivatives>, usize)>> = (0..n_batches)
            .into_par_iter()
            .map(|b| {
                let mut rng = aux_rng(mc.seed, tag, b as u64);
                let count = MC_BATCH.min(mc.n_samples - b * MC_BATCH);
                let mut x = vec![0.0; f.dim()];
                let mut recs = Vec::with_capacity(count);
                let mut rejected = 0;
                for _ in 0..count {
                    f.sample(&mut rng, &mut x)?;
                    match pair_derivatives(f, pot, &x, with_hessian, true)? {
                        Some(r) => recs.push(r),
                        None => rejected += 1,
                    }
                }
                Ok((recs, rejected))
            })
            .collect();
        let mut records = Vec::with_capacity(mc.n_samples);
        let mut rejected = 0;
        for b in batches {
            let (r, rej) = b?;
            records.extend(r);
            rejected += rej;
        }
        Ok(SharedSamples {
            records,
            rejected,
            multiplier: mc.multiplier,
        })
    }

    /// Mean and standard error of a per-sample statistic.
    pub fn estimate<F: Fn(&PairDerivatives) -> f64 + Sync>(&self, stat: F) -> FunctionalEstimate {
        let n = self.records.len();
        let vals: Vec<f64> = self.records.par_iter().map(&stat).collect();
        let (mean, se) = if n == 0 {
            (0.0, 0.0)
        } else {
            crate::numeric::mean_and_se(&vals)
        };
        FunctionalEstimate {
            value: mean,
            abs_error: se * self.multiplier,
            method: Method::Mc,
            n,
            rejected: self.rejected,
        }
    }

    fn s2(r: &PairDerivatives) -> [f64; 3] {
        r.s2.expect("samples drawn with Hessian access")
    }

    fn has_hessian(&self) -> bool {
        self.records.first().is_none_or(|r| r.s2.is_some())
    }

    fn require_hessian(&self) -> Result<()> {
        if self.has_hessian() {
            Ok(())
        } else {
            Err(LandauError::Capability(
                "samples were drawn without Hessian access".into(),
            ))
        }
    }

    /// D: ½α Σ_k s1_k².
    pub fn d(&self) -> FunctionalEstimate {
        self.estimate(|r| 0.5 * r.alpha * r.s1.iter().map(|s| s * s).sum::<f64>())
    }

    /// K_β restricted to the directions in `k_set`.
    pub fn k_beta(&self, beta: f64, k_set: &KSet) -> Result<FunctionalEstimate> {
        self.require_hessian()?;
        Ok(self.estimate(|r| {
            let s2 = Self::s2(r);
            k_set
                .iter()
                .map(|k| {
                    let t = s2[k] + beta * r.s1[k] * r.s1[k];
                    r.w4 * t * t
                })
                .sum()
        }))
    }

    /// J restricted to `k_set`.
    pub fn j(&self, k_set: &KSet) -> FunctionalEstimate {
        self.estimate(|r| k_set.iter().map(|k| r.w4 * r.s1[k].powi(4)).sum())
    }

    /// ∫ ∂²F (∂F)²/F² restricted to `k_set`.
    pub fn ibp_middle(&self, k_set: &KSet) -> Result<FunctionalEstimate> {
        self.require_hessian()?;
        Ok(self.estimate(|r| {
            let s2 = Self::s2(r);
            k_set
                .iter()
                .map(|k| {
                    let s = r.s1[k] * r.s1[k];
                    r.w4 * (s2[k] + s) * s
                })
                .sum()
        }))
    }
}

/// A subset of the three directions b_1, b_2, b_3 (stored 0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KSet(Vec<usize>);

impl KSet {
    /// From 1-based direction labels.
    pub fn new(labels: &[usize]) -> Result<Self> {
        if labels.is_empty() || labels.iter().any(|k| !(1..=3).contains(k)) {
            return Err(LandauError::Config(format!(
                "direction labels must be a nonempty subset of {{1,2,3}}, got {labels:?}"
            )));
        }
        let mut v: Vec<usize> = labels.iter().map(|k| k - 1).collect();
        v.sort_unstable();
        v.dedup();
        Ok(KSet(v))
    }

    pub fn all() -> Self {
        KSet(vec![0, 1, 2])
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

fn tensor_square(rho: &Arc<dyn DensityModel>) -> Result<TensorProduct> {
    if rho.dim() != 3 {
        return Err(LandauError::Config(format!(
            "expected a density on R³, got dimension {}",
            rho.dim()
        )));
    }
    TensorProduct::power(rho.clone(), 2)
}

/// D(ρ⊗ρ) = ½∫ α a(v−w):[∇log ρ(v) − ∇log ρ(w)]^{⊗2} ρ(v)ρ(w).
pub fn entropy_production_d(
    rho: &Arc<dyn DensityModel>,
    pot: &Potential,
    mc: &McSpec,
) -> Result<FunctionalEstimate> {
    let f = tensor_square(rho)?;
    Ok(SharedSamples::draw(&f, pot, mc, 2, false)?.d())
}

/// D on a general density on R^(3m), acting on its first two velocity blocks.
pub fn entropy_production_d_general(
    f: &dyn DensityModel,
    pot: &Potential,
    mc: &McSpec,
    tag: u64,
) -> Result<FunctionalEstimate> {
    Ok(SharedSamples::draw(f, pot, mc, tag, false)?.d())
}

/// K_β(F) summed over `k_set`.
pub fn dissipation_k(
    f: &dyn DensityModel,
    beta: f64,
    k_set: &KSet,
    pot: &Potential,
    mc: &McSpec,
) -> Result<FunctionalEstimate> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(LandauError::Config(format!(
            "beta must lie in [0, 1], got {beta}"
        )));
    }
    SharedSamples::draw(f, pot, mc, TAG_PAIR_FUNCTIONALS, true)?.k_beta(beta, k_set)
}

/// J(F) summed over `k_set`.
pub fn j_functional(
    f: &dyn DensityModel,
    k_set: &KSet,
    pot: &Potential,
    mc: &McSpec,
) -> Result<FunctionalEstimate> {
    Ok(SharedSamples::draw(f, pot, mc, TAG_PAIR_FUNCTIONALS, false)?.j(k_set))
}

/// Outcome of the integration-by-parts identity ∫∂²F(∂F)²/F² = (2/3)J.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpCheck {
    /// |middle − (2/3)J| / max(J, 1e−30).
    pub residual: f64,
    pub middle: FunctionalEstimate,
    pub j: FunctionalEstimate,
    /// Standard error of the per-sample difference middle − (2/3)J, in the
    /// same relative units as `residual`.
    pub residual_se: f64,
}

/// Checks the integration-by-parts identity for direction `k` (1-based) on
/// shared samples.
pub fn ibp_identity_check(
    f: &dyn DensityModel,
    k: usize,
    pot: &Potential,
    mc: &McSpec,
) -> Result<IbpCheck> {
    let ks = KSet::new(&[k])?;
    let samples = SharedSamples::draw(f, pot, mc, TAG_PAIR_FUNCTIONALS, true)?;
    Ok(ibp_from_samples(&samples, &ks))
}

/// [`ibp_identity_check`] on an existing sample set.
pub fn ibp_from_samples(samples: &SharedSamples, k_set: &KSet) -> IbpCheck {
    let middle = samples.ibp_middle(k_set).expect("hessian samples");
    let j = samples.j(k_set);
    let diff = samples.estimate(|r| {
        let s2 = SharedSamples::s2(r);
        k_set
            .iter()
            .map(|k| {
                let s = r.s1[k] * r.s1[k];
                r.w4 * ((s2[k] + s) * s - 2.0 / 3.0 * s * s)
            })
            .sum()
    });
    let denom = j.value.max(RESIDUAL_FLOOR);
    IbpCheck {
        residual: (middle.value - 2.0 / 3.0 * j.value).abs() / denom,
        middle,
        j,
        residual_se: diff.abs_error / denom,
    }
}

/// One rung of the K_β ladder evaluated on shared samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub beta: f64,
    pub k_beta: FunctionalEstimate,
    pub k_third: FunctionalEstimate,
    pub k_one: FunctionalEstimate,
    pub j: FunctionalEstimate,
    /// K_β − K_{1/3} − (β−1/3)²J.
    pub ladder_residual: f64,
    /// √(SE(K_β)² + SE(K_{1/3})² + (β−1/3)⁴SE(J)²).
    pub ladder_se: f64,
    /// Lower sandwich bound (9/4)(β−1/3)²K₁.
    pub sandwich_lower: f64,
    /// √(SE(K_β)² + ((9/4)(β−1/3)²)²SE(K₁)²).
    pub lower_se: f64,
    /// √(SE(K_β)² + SE(K₁)²).
    pub upper_se: f64,
}

/// Evaluates K_β, K_{1/3}, K₁ and J on one shared sample set.
pub fn beta_ladder(samples: &SharedSamples, betas: &[f64], k_set: &KSet) -> Result<Vec<LadderRow>> {
    let k_third = samples.k_beta(1.0 / 3.0, k_set)?;
    let k_one = samples.k_beta(1.0, k_set)?;
    let j = samples.j(k_set);
    betas
        .iter()
        .map(|&beta| {
            let k_beta = samples.k_beta(beta, k_set)?;
            let c = (beta - 1.0 / 3.0).powi(2);
            let lower_c = 9.0 / 4.0 * c;
            Ok(LadderRow {
                beta,
                k_beta,
                k_third,
                k_one,
                j,
                ladder_residual: k_beta.value - k_third.value - c * j.value,
                ladder_se: (k_beta.abs_error.powi(2)
                    + k_third.abs_error.powi(2)
                    + (c * j.abs_error).powi(2))
                .sqrt(),
                sandwich_lower: lower_c * k_one.value,
                lower_se: (k_beta.abs_error.powi(2) + (lower_c * k_one.abs_error).powi(2)).sqrt(),
                upper_se: (k_beta.abs_error.powi(2) + k_one.abs_error.powi(2)).sqrt(),
            })
        })
        .collect()
}

/// D^j(ρ^{⊗j}) and D(ρ⊗ρ), sampled with streams tagged j and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensorConsistency {
    pub value_j: FunctionalEstimate,
    pub value_2: FunctionalEstimate,
}

pub fn tensor_consistency_d(
    rho: &Arc<dyn DensityModel>,
    j: usize,
    pot: &Potential,
    mc: &McSpec,
) -> Result<TensorConsistency> {
    if !(2..=4).contains(&j) {
        return Err(LandauError::Config(format!(
            "tensor order must lie in 2..=4, got {j}"
        )));
    }
    if rho.dim() != 3 {
        return Err(LandauError::Config("expected a density on R³".into()));
    }
    let fj = TensorProduct::power(rho.clone(), j)?;
    let value_j = entropy_production_d_general(&fj, pot, mc, j as u64)?;
    let value_2 = entropy_production_d(rho, pot, mc)?;
    Ok(TensorConsistency { value_j, value_2 })
}

/// The derivation operator ∂_{b_k} = |z|^{−1/2}α^{1/4} b̃_k·∇₁₂ (or its
/// unweighted part b̃_k·∇₁₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivationOp {
    /// Direction label in {1, 2, 3}.
    pub k: usize,
    pub weighted: bool,
    pub potential: Potential,
}

impl DerivationOp {
    pub fn new(k: usize, weighted: bool, potential: Potential) -> Result<Self> {
        if !(1..=3).contains(&k) {
            return Err(LandauError::Config(format!(
                "direction must be 1, 2 or 3, got {k}"
            )));
        }
        Ok(DerivationOp {
            k,
            weighted,
            potential,
        })
    }

    /// b̃_k at (v₁, v₂).
    pub fn direction(&self, x: &[f64; 6]) -> [f64; 6] {
        let z = Vec3::new(x[0] - x[3], x[1] - x[4], x[2] - x[5]);
        let b = cross_basis(self.k - 1, &z);
        [b[0], b[1], b[2], -b[0], -b[1], -b[2]]
    }

    /// |z|^{−1/2}α(|z|)^{1/4}, or 1 when unweighted.
    pub fn weight(&self, x: &[f64; 6]) -> f64 {
        if !self.weighted {
            return 1.0;
        }
        let r = ((x[0] - x[3]).powi(2) + (x[1] - x[4]).powi(2) + (x[2] - x[5]).powi(2)).sqrt();
        if r == 0.0 {
            return 0.0;
        }
        r.powf(-0.5) * self.potential.alpha(r).powf(0.25)
    }

    /// Central finite difference of the operator applied to `phi`.
    pub fn apply_fd<F: Fn(&[f64; 6]) -> f64>(&self, phi: F, x: &[f64; 6], h: f64) -> f64 {
        let d = self.direction(x);
        let mut xp = *x;
        let mut xm = *x;
        for c in 0..6 {
            xp[c] += h * d[c];
            xm[c] -= h * d[c];
        }
        self.weight(x) * (phi(&xp) - phi(&xm)) / (2.0 * h)
    }

    /// ∂_{b_k} log F at x, from the analytic gradient.
    pub fn apply_log(&self, f: &dyn DensityModel, x: &[f64; 6]) -> f64 {
        let mut g = [0.0; 6];
        f.log_grad(x, &mut g);
        let d = self.direction(x);
        self.weight(x) * d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>()
    }
}

/// Relative residual of the pointwise identity
/// ∂²F^β/(βF^β) = ∂²F/F + (β−1)(∂F)²/F² at `x` for direction `k`
/// (1-based). The left side is computed from the density F^β itself.
pub fn beta_expansion_residual(
    f: &Arc<dyn DensityModel>,
    beta: f64,
    k: usize,
    x: &[f64],
    pot: &Potential,
) -> Result<f64> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(LandauError::Config(format!(
            "beta must lie in (0, 1], got {beta}"
        )));
    }
    let g = PowerTransform::new(f.clone(), beta);
    let Some(lhs_d) = pair_derivatives(&g, pot, x, true, false)? else {
        return Ok(0.0);
    };
    let rhs_d = pair_derivatives(f.as_ref(), pot, x, true, false)?.expect("same sample");
    let kk = k - 1;
    let w2 = lhs_d.w4.sqrt();
    let (s1g, s2g) = (lhs_d.s1[kk], lhs_d.s2.unwrap()[kk]);
    let (s1, s2) = (rhs_d.s1[kk], rhs_d.s2.unwrap()[kk]);
    let lhs = w2 * (s2g + s1g * s1g) / beta;
    let rhs = w2 * (s2 + s1 * s1) + (beta - 1.0) * w2 * s1 * s1;
    let scale = w2 * (s2.abs() + s1 * s1);
    if scale == 0.0 {
        return Ok((lhs - rhs).abs());
    }
    Ok((lhs - rhs).abs() / scale)
}

/// Whether a value is consistent with zero to within `k` error bars, allowing
/// values that vanish exactly.
pub fn within_error(estimate: &FunctionalEstimate, target: f64, k: f64) -> bool {
    (estimate.value - target).abs() <= k * estimate.abs_error + CANCELLATION_TOL * target.abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{DiagGaussian, Scaled};
    use crate::potentials::PotentialSpec;

    fn gauss(var: f64) -> Arc<dyn DensityModel> {
        Arc::new(DiagGaussian::isotropic(var).unwrap())
    }

    #[test]
    fn standard_gaussian_entropy_and_fisher() {
        let g = gauss(1.0);
        let grid = GridSpec::covering(g.as_ref(), 81).unwrap();
        let h = entropy(g.as_ref(), &grid).unwrap();
        let target = -1.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E).ln();
        assert!((h.value - target).abs() < 1e-9, "{} vs {target}", h.value);
        assert!((target + 4.25681).abs() < 1e-5);
        assert!(h.abs_error < 1e-8);
        let i = fisher(g.as_ref(), &grid).unwrap();
        assert!((i.value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn zero_entropy_gaussian() {
        let var = (-1.0f64).exp() / (2.0 * std::f64::consts::PI);
        let g = gauss(var);
        let grid = GridSpec::covering(g.as_ref(), 81).unwrap();
        assert!(entropy(g.as_ref(), &grid).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn shifted_gaussian_fisher_is_three() {
        let g = DiagGaussian::new(vec![1.5, -2.0, 0.5], vec![1.0; 3]).unwrap();
        let grid = GridSpec::covering(&g, 81).unwrap();
        assert!((fisher(&g, &grid).unwrap().value - 3.0).abs() < 1e-9);
    }

    #[test]
    fn coverage_error_on_small_box() {
        let g = gauss(1.0);
        let grid = GridSpec::new([-2.0; 3], [2.0; 3], 41).unwrap();
        assert!(matches!(
            entropy(g.as_ref(), &grid),
            Err(LandauError::Coverage { .. })
        ));
    }

    #[test]
    fn scaling_law_for_fisher() {
        let g = gauss(0.7);
        let s = Scaled::new(g.clone(), 2.0).unwrap();
        let i0 = fisher(g.as_ref(), &GridSpec::covering(g.as_ref(), 81).unwrap()).unwrap();
        let i2 = fisher(&s, &GridSpec::covering(&s, 81).unwrap()).unwrap();
        assert!((i2.value - 4.0 * i0.value).abs() < 1e-8 * i2.value);
    }

    #[test]
    fn maxwellian_pair_functionals_vanish_exactly() {
        let pot = Potential::Regularized(PotentialSpec::new(-2.0, 0.1).unwrap());
        let g = gauss(1.0);
        let f = TensorProduct::power(g.clone(), 2).unwrap();
        let mc = McSpec::new(20_000, 3);
        let s = SharedSamples::draw(&f, &pot, &mc, 0, true).unwrap();
        assert_eq!(s.d().value, 0.0);
        assert_eq!(s.j(&KSet::all()).value, 0.0);
        for beta in [0.0, 0.5, 1.0] {
            assert_eq!(s.k_beta(beta, &KSet::all()).unwrap().value, 0.0);
        }
        assert_eq!(entropy_production_d(&g, &pot, &mc).unwrap().value, 0.0);
    }

    #[test]
    fn anisotropic_values_are_positive() {
        let pot = Potential::Regularized(PotentialSpec::new(-2.0, 0.1).unwrap());
        let rho: Arc<dyn DensityModel> =
            Arc::new(DiagGaussian::new(vec![0.0; 3], vec![2.0, 0.5, 0.5]).unwrap());
        let f = TensorProduct::power(rho.clone(), 2).unwrap();
        let mc = McSpec::new(20_000, 3);
        let s = SharedSamples::draw(&f, &pot, &mc, 0, true).unwrap();
        let d = s.d();
        assert!(d.value > 5.0 * d.abs_error);
        let j = s.j(&KSet::all());
        assert!(j.value > 5.0 * j.abs_error);
        let k = s.k_beta(1.0, &KSet::all()).unwrap();
        assert!(k.value > 5.0 * k.abs_error);
    }

    #[test]
    fn k_needs_hessian_access() {
        struct NoHess(DiagGaussian);
        impl DensityModel for NoHess {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn log_density(&self, x: &[f64]) -> f64 {
                self.0.log_density(x)
            }
            fn log_grad(&self, x: &[f64], out: &mut [f64]) {
                self.0.log_grad(x, out)
            }
            fn can_sample(&self) -> bool {
                true
            }
            fn sample(&self, rng: &mut dyn rand::RngCore, out: &mut [f64]) -> Result<()> {
                self.0.sample(rng, out)
            }
            fn location_scale(&self) -> (Vec<f64>, Vec<f64>) {
                self.0.location_scale()
            }
            fn describe(&self) -> String {
                "no-hessian".into()
            }
        }
        let f =
            NoHess(DiagGaussian::new(vec![0.0; 6], vec![1.0, 2.0, 0.5, 1.0, 2.0, 0.5]).unwrap());
        let pot = Potential::exact(-2.0).unwrap();
        let r = dissipation_k(&f, 1.0, &KSet::all(), &pot, &McSpec::new(100, 1));
        assert!(matches!(r, Err(LandauError::Capability(_))));
        assert!(j_functional(&f, &KSet::all(), &pot, &McSpec::new(100, 1)).is_ok());
    }

    #[test]
    fn kset_validation() {
        assert!(KSet::new(&[]).is_err());
        assert!(KSet::new(&[0]).is_err());
        assert!(KSet::new(&[4]).is_err());
        assert_eq!(
            KSet::new(&[3, 1, 3]).unwrap().iter().collect::<Vec<_>>(),
            vec![0, 2]
        );
    }

    #[test]
    fn derivation_op_kills_radial_functions() {
        let pot = Potential::Regularized(PotentialSpec::new(-3.0, 0.2).unwrap());
        let phi = |x: &[f64; 6]| {
            let r2 = (x[0] - x[3]).powi(2) + (x[1] - x[4]).powi(2) + (x[2] - x[5]).powi(2);
            (-(r2)).exp() + r2.sqrt().sin()
        };
        let x = [0.3, -0.2, 0.9, -0.4, 0.1, 0.05];
        for k in 1..=3 {
            let op = DerivationOp::new(k, true, pot).unwrap();
            assert!(op.apply_fd(phi, &x, 1e-4).abs() < 1e-10);
        }
    }
}
