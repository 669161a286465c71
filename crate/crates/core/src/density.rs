//! Analytic probability densities with log-gradient and log-Hessian access.
//!
//! Models work on flat coordinate slices so that the same trait covers
//! one-particle densities on R³ and multi-particle densities on R^{3n}.

use std::sync::Arc;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::{LandauError, Result};

/// How a model's total mass is known.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Integrates to one by construction.
    Analytic,
    /// Not a probability density (for example a power F^β).
    Unnormalized,
}

/// A smooth density on R^dim.
pub trait DensityModel: Send + Sync {
    fn dim(&self) -> usize;

    /// log f(x); −∞ where f underflows.
    fn log_density(&self, x: &[f64]) -> f64;

    fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    /// ∇log f(x) written into `out` (length `dim`).
    fn log_grad(&self, x: &[f64], out: &mut [f64]);

    /// uᵀ∇²log f(x)u, or `None` when the model has no Hessian access.
    fn log_hess_quadform(&self, _x: &[f64], _u: &[f64]) -> Option<f64> {
        None
    }

    /// Whether [`DensityModel::sample`] is available.
    fn can_sample(&self) -> bool {
        false
    }

    /// Draws one exact sample into `out`.
    fn sample(&self, _rng: &mut dyn RngCore, _out: &mut [f64]) -> Result<()> {
        Err(LandauError::Capability(format!(
            "{} has no sampler",
            self.describe()
        )))
    }

    /// Per-coordinate center and spread used to lay out quadrature boxes.
    fn location_scale(&self) -> (Vec<f64>, Vec<f64>);

    fn normalization(&self) -> Normalization {
        Normalization::Analytic
    }

    fn describe(&self) -> String;
}

/// Gaussian with diagonal covariance on R^d.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagGaussian {
    mean: Vec<f64>,
    var: Vec<f64>,
    log_norm: f64,
}

impl DiagGaussian {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.len() != var.len() || mean.is_empty() {
            return Err(LandauError::Config(
                "mean and variance must have the same nonzero length".into(),
            ));
        }
        if var.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(LandauError::Config(format!(
                "variances must be positive, got {var:?}"
            )));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(LandauError::Config("mean must be finite".into()));
        }
        let log_norm = -0.5
            * var
                .iter()
                .map(|v| (2.0 * std::f64::consts::PI * v).ln())
                .sum::<f64>();
        Ok(DiagGaussian {
            mean,
            var,
            log_norm,
        })
    }

    /// N(0, σ²Id₃).
    pub fn isotropic(sigma2: f64) -> Result<Self> {
        Self::new(vec![0.0; 3], vec![sigma2; 3])
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }
}

impl DensityModel for DiagGaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let mut q = 0.0;
        for ((xi, m), v) in x.iter().zip(&self.mean).zip(&self.var) {
            let d = xi - m;
            q += d * d / v;
        }
        self.log_norm - 0.5 * q
    }

    fn log_grad(&self, x: &[f64], out: &mut [f64]) {
        for (((o, xi), m), v) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.var) {
            *o = -(xi - m) / v;
        }
    }

    fn log_hess_quadform(&self, _x: &[f64], u: &[f64]) -> Option<f64> {
        Some(-u.iter().zip(&self.var).map(|(u, v)| u * u / v).sum::<f64>())
    }

    fn can_sample(&self) -> bool {
        true
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        for ((o, m), v) in out.iter_mut().zip(&self.mean).zip(&self.var) {
            let z: f64 = StandardNormal.sample(rng);
            *o = m + v.sqrt() * z;
        }
        Ok(())
    }

    fn location_scale(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.mean.clone(),
            self.var.iter().map(|v| v.sqrt()).collect(),
        )
    }

    fn describe(&self) -> String {
        format!("gaussian(mean={:?}, var={:?})", self.mean, self.var)
    }
}

/// Finite mixture of diagonal Gaussians.
#[derive(Debug, Clone)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    components: Vec<DiagGaussian>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, components: Vec<DiagGaussian>) -> Result<Self> {
        if weights.len() != components.len() || weights.is_empty() {
            return Err(LandauError::Config(
                "mixture needs one positive weight per component".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(LandauError::Config(
                "mixture weights must be positive".into(),
            ));
        }
        let d = components[0].dim();
        if components.iter().any(|c| c.dim() != d) {
            return Err(LandauError::Config(
                "mixture components differ in dimension".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Ok(GaussianMixture {
            weights,
            log_weights,
            components,
        })
    }

    pub fn components(&self) -> &[DiagGaussian] {
        &self.components
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Posterior responsibilities and log f at x.
    fn responsibilities(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let logs: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_weights)
            .map(|(c, lw)| lw + c.log_density(x))
            .collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            let k = self.components.len() as f64;
            return (vec![1.0 / k; self.components.len()], m);
        }
        let exps: Vec<f64> = logs.iter().map(|l| (l - m).exp()).collect();
        let s: f64 = exps.iter().sum();
        (exps.iter().map(|e| e / s).collect(), m + s.ln())
    }
}

impl DensityModel for GaussianMixture {
    fn dim(&self) -> usize {
        self.components[0].dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.responsibilities(x).1
    }

    fn log_grad(&self, x: &[f64], out: &mut [f64]) {
        let (p, _) = self.responsibilities(x);
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut g = vec![0.0; self.dim()];
        for (c, pk) in self.components.iter().zip(&p) {
            c.log_grad(x, &mut g);
            for (o, gi) in out.iter_mut().zip(&g) {
                *o += pk * gi;
            }
        }
    }

    fn log_hess_quadform(&self, x: &[f64], u: &[f64]) -> Option<f64> {
        // ∇²log f = Σ p_k(H_k + g_k g_kᵀ) − g gᵀ.
        let (p, _) = self.responsibilities(x);
        let mut g = vec![0.0; self.dim()];
        let mut mix_gu = 0.0;
        let mut acc = 0.0;
        for (c, pk) in self.components.iter().zip(&p) {
            c.log_grad(x, &mut g);
            let gu: f64 = g.iter().zip(u).map(|(a, b)| a * b).sum();
            acc += pk * (c.log_hess_quadform(x, u)? + gu * gu);
            mix_gu += pk * gu;
        }
        Some(acc - mix_gu * mix_gu)
    }

    fn can_sample(&self) -> bool {
        true
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (k, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                chosen = k;
                break;
            }
        }
        self.components[chosen].sample(rng, out)
    }

    fn location_scale(&self) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim();
        let mut mean = vec![0.0; d];
        for (c, w) in self.components.iter().zip(&self.weights) {
            for (m, cm) in mean.iter_mut().zip(c.mean()) {
                *m += w * cm;
            }
        }
        let mut var = vec![0.0; d];
        for (c, w) in self.components.iter().zip(&self.weights) {
            for i in 0..d {
                let dm = c.mean()[i] - mean[i];
                var[i] += w * (c.var()[i] + dm * dm);
            }
        }
        (mean, var.iter().map(|v| v.sqrt()).collect())
    }

    fn describe(&self) -> String {
        format!("mixture of {} gaussians", self.components.len())
    }
}

/// Product density F(x₁, …, x_m) = Π f_i(x_i).
#[derive(Clone)]
pub struct TensorProduct {
    factors: Vec<Arc<dyn DensityModel>>,
    offsets: Vec<usize>,
    dim: usize,
}

impl TensorProduct {
    pub fn new(factors: Vec<Arc<dyn DensityModel>>) -> Result<Self> {
        if factors.is_empty() {
            return Err(LandauError::Config("tensor product of nothing".into()));
        }
        let mut offsets = Vec::with_capacity(factors.len());
        let mut dim = 0;
        for f in &factors {
            offsets.push(dim);
            dim += f.dim();
        }
        Ok(TensorProduct {
            factors,
            offsets,
            dim,
        })
    }

    /// ρ^{⊗j}.
    pub fn power(rho: Arc<dyn DensityModel>, j: usize) -> Result<Self> {
        if j == 0 {
            return Err(LandauError::Config("tensor power must be positive".into()));
        }
        Self::new(vec![rho; j])
    }

    fn blocks(&self) -> impl Iterator<Item = (&Arc<dyn DensityModel>, std::ops::Range<usize>)> {
        self.factors
            .iter()
            .zip(&self.offsets)
            .map(|(f, &o)| (f, o..o + f.dim()))
    }
}

impl DensityModel for TensorProduct {
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.blocks().map(|(f, r)| f.log_density(&x[r])).sum()
    }

    fn log_grad(&self, x: &[f64], out: &mut [f64]) {
        for (f, r) in self.blocks() {
            f.log_grad(&x[r.clone()], &mut out[r]);
        }
    }

    fn log_hess_quadform(&self, x: &[f64], u: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for (f, r) in self.blocks() {
            if u[r.clone()].iter().all(|v| *v == 0.0) {
                continue;
            }
            acc += f.log_hess_quadform(&x[r.clone()], &u[r])?;
        }
        Some(acc)
    }

    fn can_sample(&self) -> bool {
        self.factors.iter().all(|f| f.can_sample())
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        for (f, r) in self.blocks() {
            f.sample(rng, &mut out[r])?;
        }
        Ok(())
    }

    fn location_scale(&self) -> (Vec<f64>, Vec<f64>) {
        let mut c = Vec::with_capacity(self.dim);
        let mut s = Vec::with_capacity(self.dim);
        for f in &self.factors {
            let (fc, fs) = f.location_scale();
            c.extend(fc);
            s.extend(fs);
        }
        (c, s)
    }

    fn normalization(&self) -> Normalization {
        if self
            .factors
            .iter()
            .all(|f| f.normalization() == Normalization::Analytic)
        {
            Normalization::Analytic
        } else {
            Normalization::Unnormalized
        }
    }

    fn describe(&self) -> String {
        let parts: Vec<String> = self.factors.iter().map(|f| f.describe()).collect();
        parts.join(" ⊗ ")
    }
}

/// Mass-preserving dilation f_λ(x) = λ^d f(λx).
#[derive(Clone)]
pub struct Scaled {
    base: Arc<dyn DensityModel>,
    lambda: f64,
}

impl Scaled {
    pub fn new(base: Arc<dyn DensityModel>, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(LandauError::Config(format!(
                "dilation factor must be positive, got {lambda}"
            )));
        }
        Ok(Scaled { base, lambda })
    }
}

impl DensityModel for Scaled {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        let y: Vec<f64> = x.iter().map(|v| v * self.lambda).collect();
        self.dim() as f64 * self.lambda.ln() + self.base.log_density(&y)
    }

    fn log_grad(&self, x: &[f64], out: &mut [f64]) {
        let y: Vec<f64> = x.iter().map(|v| v * self.lambda).collect();
        self.base.log_grad(&y, out);
        out.iter_mut().for_each(|o| *o *= self.lambda);
    }

    fn log_hess_quadform(&self, x: &[f64], u: &[f64]) -> Option<f64> {
        let y: Vec<f64> = x.iter().map(|v| v * self.lambda).collect();
        Some(self.lambda * self.lambda * self.base.log_hess_quadform(&y, u)?)
    }

    fn can_sample(&self) -> bool {
        self.base.can_sample()
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        self.base.sample(rng, out)?;
        out.iter_mut().for_each(|o| *o /= self.lambda);
        Ok(())
    }

    fn location_scale(&self) -> (Vec<f64>, Vec<f64>) {
        let (c, s) = self.base.location_scale();
        (
            c.iter().map(|v| v / self.lambda).collect(),
            s.iter().map(|v| v / self.lambda).collect(),
        )
    }

    fn normalization(&self) -> Normalization {
        self.base.normalization()
    }

    fn describe(&self) -> String {
        format!("dilation({}, λ={})", self.base.describe(), self.lambda)
    }
}

/// Uniform density on the unit cube [−½, ½]³ convolved with N(0, s²Id₃).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MollifiedBox {
    smoothing: f64,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl MollifiedBox {
    pub fn new(smoothing: f64) -> Result<Self> {
        if !(smoothing > 0.0 && smoothing.is_finite()) {
            return Err(LandauError::Config(format!(
                "smoothing width must be positive, got {smoothing}"
            )));
        }
        Ok(MollifiedBox { smoothing })
    }

    pub fn smoothing(&self) -> f64 {
        self.smoothing
    }

    /// One-dimensional factor u(x) = Φ((x+½)/s) − Φ((x−½)/s), computed from
    /// complementary error functions on the far side to keep relative accuracy.
    pub fn factor(&self, x: f64) -> f64 {
        let s = self.smoothing;
        let (a, b) = ((x + 0.5) / s, (x - 0.5) / s);
        let phi_c = |t: f64| 0.5 * statrs::function::erf::erfc(t / std::f64::consts::SQRT_2);
        if b > 0.0 {
            phi_c(b) - phi_c(a)
        } else if a < 0.0 {
            phi_c(-a) - phi_c(-b)
        } else {
            1.0 - phi_c(a) - phi_c(-b)
        }
    }

    fn factor_derivs(&self, x: f64) -> (f64, f64, f64) {
        let s = self.smoothing;
        let (a, b) = ((x + 0.5) / s, (x - 0.5) / s);
        let pa = INV_SQRT_2PI * (-0.5 * a * a).exp() / s;
        let pb = INV_SQRT_2PI * (-0.5 * b * b).exp() / s;
        let u = self.factor(x);
        let d1 = pa - pb;
        let d2 = -a / s * pa + b / s * pb;
        (u, d1, d2)
    }
}

impl DensityModel for MollifiedBox {
    fn dim(&self) -> usize {
        3
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| self.factor(*v).ln()).sum()
    }

    fn log_grad(&self, x: &[f64], out: &mut [f64]) {
        for (o, v) in out.iter_mut().zip(x) {
            let (u, d1, _) = self.factor_derivs(*v);
            *o = d1 / u;
        }
    }

    fn log_hess_quadform(&self, x: &[f64], u: &[f64]) -> Option<f64> {
        let mut acc = 0.0;
        for (v, w) in x.iter().zip(u) {
            let (f, d1, d2) = self.factor_derivs(*v);
            let g = d1 / f;
            acc += w * w * (d2 / f - g * g);
        }
        Some(acc)
    }

    fn can_sample(&self) -> bool {
        true
    }

    fn sample(&self, rng: &mut dyn RngCore, out: &mut [f64]) -> Result<()> {
        for o in out.iter_mut().take(3) {
            let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5;
            let z: f64 = StandardNormal.sample(rng);
            *o = u + self.smoothing * z;
        }
        Ok(())
    }

    fn location_scale(&self) -> (Vec<f64>, Vec<f64>) {
        let s = (1.0 / 12.0 + self.smoothing * self.smoothing).sqrt();
        (vec![0.0; 3], vec![s; 3])
    }

    fn describe(&self) -> String {
        format!("mollified unit box (s={})", self.smoothing)
    }
}

/// The unnormalized power G = F^β, used to cross-check β-expansions.
#[derive(Clone)]
pub struct PowerTransform {
    base: Arc<dyn DensityModel>,
    beta: f64,
}

impl PowerTransform {
    pub fn new(base: Arc<dyn DensityModel>, beta: f64) -> Self {
        PowerTransform { base, beta }
    }
}

impl DensityModel for PowerTransform {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn log_density(&self, x: &[f64]) -> f64 {
        self.beta * self.base.log_density(x)
    }

    fn log_grad(&self, x: &[f64], out: &mut [f64]) {
        self.base.log_grad(x, out);
        out.iter_mut().for_each(|o| *o *= self.beta);
    }

    fn log_hess_quadform(&self, x: &[f64], u: &[f64]) -> Option<f64> {
        Some(self.beta * self.base.log_hess_quadform(x, u)?)
    }

    fn location_scale(&self) -> (Vec<f64>, Vec<f64>) {
        self.base.location_scale()
    }

    fn normalization(&self) -> Normalization {
        Normalization::Unnormalized
    }

    fn describe(&self) -> String {
        format!("({})^{}", self.base.describe(), self.beta)
    }
}
