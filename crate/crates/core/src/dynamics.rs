//! Euler–Maruyama integration of the conservative N-particle system
//!
//! ```text
//! dVᵢ = 2/(N−1) Σ_{j≠i} b^N(Vᵢ−Vⱼ) dt + √2/√(N−1) Σ_{j≠i} σ^N(Vᵢ−Vⱼ) dB^{ij},
//! B^{ji} = −B^{ij}.
//! ```
//!
//! Each unordered pair contributes one increment Δᵢⱼ to particle i and −Δᵢⱼ to
//! particle j, because b^N is odd and σ^N is even in z. Total momentum is
//! therefore conserved up to rounding. Pairs are enumerated in fixed row
//! blocks whose partition depends only on N; per-block partial sums are
//! reduced in block order, so results do not depend on thread scheduling.
//!
//! A practical step-size guide is dt ≲ 10⁻²·(0.99η)^{−γ}, from the largest
//! drift magnitude of the regularized kernel. It is not enforced.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::DensityModel;
use crate::noise::{aux_rng, CounterNoise, PairNoise};
use crate::numeric::NeumaierSum;
use crate::potentials::{sigma_n_apply, PotentialSpec};
use crate::{LandauError, Result, Vec3};

/// Stream tag for the initial i.i.d. sample.
const INIT_TAG: u64 = 0x1A17;

/// How the cutoff η is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum EtaRule {
    /// A fixed cutoff.
    Fixed(f64),
    /// η(N) = c·N^{−κ}, clipped to [1e−4, 1].
    Power { c: f64, kappa: f64 },
}

impl Default for EtaRule {
    fn default() -> Self {
        EtaRule::Power {
            c: 1.0,
            kappa: 0.25,
        }
    }
}

impl EtaRule {
    pub fn eta(&self, n: usize) -> f64 {
        match *self {
            EtaRule::Fixed(e) => e,
            EtaRule::Power { c, kappa } => (c * (n as f64).powf(-kappa)).clamp(1e-4, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnergyMode {
    /// Plain Euler–Maruyama; the energy drifts at order dt.
    #[default]
    None,
    /// After each step, centered velocities are scaled so that Σ|Vᵢ|² is
    /// restored exactly.
    Rescale,
}

/// Flat key/value form of a simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSimConfig {
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    pub dt: f64,
    pub t_end: f64,
    pub n_particles: usize,
    pub seed: u64,
    #[serde(default)]
    pub energy_mode: EnergyMode,
    #[serde(default = "default_stride")]
    pub snapshot_stride: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<String>,
}

fn default_stride() -> u64 {
    1
}

/// Validated simulation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSimConfig", into = "RawSimConfig")]
pub struct SimConfig {
    pub gamma: f64,
    pub eta_rule: EtaRule,
    pub theta: f64,
    pub dt: f64,
    pub t_end: f64,
    pub n_particles: usize,
    pub seed: u64,
    pub energy_mode: EnergyMode,
    pub snapshot_stride: u64,
    /// Preset name of the initial density.
    pub initial: String,
}

pub const DEFAULT_INITIAL: &str = "maxwellian(1)";

impl SimConfig {
    /// A configuration with default cutoff rule, θ, stride and initial data.
    pub fn new(gamma: f64, dt: f64, t_end: f64, n_particles: usize, seed: u64) -> Result<Self> {
        let cfg = SimConfig {
            gamma,
            eta_rule: EtaRule::default(),
            theta: PotentialSpec::DEFAULT_THETA,
            dt,
            t_end,
            n_particles,
            seed,
            energy_mode: EnergyMode::None,
            snapshot_stride: 1,
            initial: DEFAULT_INITIAL.to_string(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta_rule = EtaRule::Fixed(eta);
        self.validate()?;
        Ok(self)
    }

    pub fn with_energy_mode(mut self, mode: EnergyMode) -> Self {
        self.energy_mode = mode;
        self
    }

    pub fn with_stride(mut self, stride: u64) -> Result<Self> {
        self.snapshot_stride = stride;
        self.validate()?;
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(LandauError::Config(m));
        if self.n_particles < 2 {
            return bad(format!(
                "n_particles must be at least 2, got {}",
                self.n_particles
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        // t_end = 0 is accepted and yields a single initial snapshot.
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be non-negative, got {}", self.t_end));
        }
        if self.t_end > 0.0 && self.t_end < self.dt * (1.0 - 1e-12) {
            return bad(format!(
                "t_end ({}) must be 0 or at least dt ({})",
                self.t_end, self.dt
            ));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        match self.eta_rule {
            EtaRule::Fixed(e) if !(e > 0.0 && e.is_finite()) => {
                return bad(format!("eta must be positive, got {e}"))
            }
            EtaRule::Power { c, kappa } if !(c > 0.0 && kappa > 0.0) => {
                return bad(format!(
                    "eta_c and eta_kappa must be positive, got {c}, {kappa}"
                ))
            }
            _ => {}
        }
        self.potential().map(|_| ())
    }

    /// The cutoff for this particle count.
    pub fn eta(&self) -> f64 {
        self.eta_rule.eta(self.n_particles)
    }

    /// The regularized potential α^N.
    pub fn potential(&self) -> Result<PotentialSpec> {
        if self.gamma == 0.0 {
            Ok(PotentialSpec::maxwell_molecules())
        } else {
            PotentialSpec::with_theta(self.gamma, self.eta(), self.theta)
        }
    }

    /// Number of steps needed to reach t_end.
    pub fn n_steps(&self) -> u64 {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as u64
    }

    /// Stable 64-bit identity of the configuration.
    pub fn config_id(&self) -> u64 {
        let text = serde_json::to_string(self).expect("config serializes");
        // FNV-1a.
        text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }
}

impl TryFrom<RawSimConfig> for SimConfig {
    type Error = LandauError;

    fn try_from(raw: RawSimConfig) -> Result<Self> {
        let eta_rule = match (raw.eta, raw.eta_c, raw.eta_kappa) {
            (Some(e), None, None) => EtaRule::Fixed(e),
            (None, None, None) => EtaRule::default(),
            (None, c, k) => {
                let d = EtaRule::default();
                let EtaRule::Power { c: c0, kappa: k0 } = d else {
                    unreachable!()
                };
                EtaRule::Power {
                    c: c.unwrap_or(c0),
                    kappa: k.unwrap_or(k0),
                }
            }
            (Some(_), _, _) => {
                return Err(LandauError::Config(
                    "give either eta or eta_c/eta_kappa, not both".into(),
                ))
            }
        };
        let cfg = SimConfig {
            gamma: raw.gamma,
            eta_rule,
            theta: raw.theta.unwrap_or(PotentialSpec::DEFAULT_THETA),
            dt: raw.dt,
            t_end: raw.t_end,
            n_particles: raw.n_particles,
            seed: raw.seed,
            energy_mode: raw.energy_mode,
            snapshot_stride: raw.snapshot_stride,
            initial: raw.initial.unwrap_or_else(|| DEFAULT_INITIAL.to_string()),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<SimConfig> for RawSimConfig {
    fn from(c: SimConfig) -> Self {
        let (eta, eta_c, eta_kappa) = match c.eta_rule {
            EtaRule::Fixed(e) => (Some(e), None, None),
            EtaRule::Power { c, kappa } => (None, Some(c), Some(kappa)),
        };
        RawSimConfig {
            gamma: c.gamma,
            eta,
            eta_c,
            eta_kappa,
            theta: Some(c.theta),
            dt: c.dt,
            t_end: c.t_end,
            n_particles: c.n_particles,
            seed: c.seed,
            energy_mode: c.energy_mode,
            snapshot_stride: c.snapshot_stride,
            initial: Some(c.initial),
        }
    }
}

/// Velocities of all particles at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub t: f64,
    pub step_index: u64,
    pub velocities: Vec<Vec3>,
    pub noise_seed: u64,
    pub config_id: u64,
}

impl ParticleState {
    pub fn n(&self) -> usize {
        self.velocities.len()
    }
}

/// Total momentum Σᵢ Vᵢ and energy Σᵢ |Vᵢ|², with compensated summation.
pub fn conserved_quantities(state: &ParticleState) -> (Vec3, f64) {
    momentum_energy(&state.velocities)
}

pub(crate) fn momentum_energy(v: &[Vec3]) -> (Vec3, f64) {
    let mut m = [NeumaierSum::new(); 3];
    let mut e = NeumaierSum::new();
    for x in v {
        for c in 0..3 {
            m[c].add(x[c]);
        }
        e.add(x.norm_squared());
    }
    (
        Vec3::new(m[0].value(), m[1].value(), m[2].value()),
        e.value(),
    )
}

/// Draws N i.i.d. velocities from `g0`, deterministically in the seed.
pub fn init_iid(config: &SimConfig, g0: &dyn DensityModel) -> Result<ParticleState> {
    config.validate()?;
    if g0.dim() != 3 {
        return Err(LandauError::Config(format!(
            "initial density must live on R³, got dimension {}",
            g0.dim()
        )));
    }
    if !g0.can_sample() {
        return Err(LandauError::Config(format!(
            "initial density {} cannot be sampled",
            g0.describe()
        )));
    }
    let mut rng = aux_rng(config.seed, INIT_TAG, 0);
    let mut velocities = Vec::with_capacity(config.n_particles);
    let mut x = [0.0; 3];
    for _ in 0..config.n_particles {
        g0.sample(&mut rng, &mut x)?;
        velocities.push(Vec3::new(x[0], x[1], x[2]));
    }
    Ok(ParticleState {
        t: 0.0,
        step_index: 0,
        velocities,
        noise_seed: config.seed,
        config_id: config.config_id(),
    })
}

/// Wraps explicit velocities as a time-zero state for `config`.
pub fn state_from_velocities(config: &SimConfig, velocities: Vec<Vec3>) -> Result<ParticleState> {
    if velocities.len() != config.n_particles {
        return Err(LandauError::Config(format!(
            "expected {} velocities, got {}",
            config.n_particles,
            velocities.len()
        )));
    }
    if velocities.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(LandauError::Config("velocities must be finite".into()));
    }
    Ok(ParticleState {
        t: 0.0,
        step_index: 0,
        velocities,
        noise_seed: config.seed,
        config_id: config.config_id(),
    })
}

/// Row blocks with roughly equal pair counts; depends only on N.
fn row_blocks(n: usize) -> Vec<std::ops::Range<usize>> {
    let pairs = n * (n - 1) / 2;
    let n_blocks = (pairs / 2048).clamp(1, 64);
    let target = pairs.div_ceil(n_blocks);
    let mut blocks = Vec::with_capacity(n_blocks);
    let mut start = 0;
    let mut acc = 0;
    for i in 0..n {
        acc += n - 1 - i;
        if acc >= target || i + 1 == n {
            blocks.push(start..i + 1);
            start = i + 1;
            acc = 0;
        }
    }
    blocks
}

/// Owns the scratch buffers for stepping one particle count.
pub struct Stepper {
    spec: PotentialSpec,
    dt: f64,
    n: usize,
    energy_mode: EnergyMode,
    drift_coef: f64,
    noise_coef: f64,
    blocks: Vec<std::ops::Range<usize>>,
    partials: Vec<Vec<Vec3>>,
}

impl Stepper {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let n = config.n_particles;
        let blocks = row_blocks(n);
        let partials = vec![vec![Vec3::zeros(); n]; blocks.len()];
        Ok(Stepper {
            spec: config.potential()?,
            dt: config.dt,
            n,
            energy_mode: config.energy_mode,
            drift_coef: 2.0 / (n as f64 - 1.0),
            noise_coef: (2.0 / (n as f64 - 1.0)).sqrt(),
            blocks,
            partials,
        })
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.spec
    }

    /// One Euler–Maruyama step with increments drawn from `noise`.
    pub fn step_with(
        &mut self,
        state: &ParticleState,
        noise: &dyn PairNoise,
    ) -> Result<ParticleState> {
        let n = self.n;
        if state.n() != n {
            return Err(LandauError::Precondition(format!(
                "state has {} particles, stepper expects {n}",
                state.n()
            )));
        }
        let v = &state.velocities;
        let step = state.step_index;
        let spec = self.spec;
        let drift_scale = self.drift_coef * self.dt;
        let noise_scale = self.noise_coef * self.dt.sqrt();

        self.partials
            .par_iter_mut()
            .zip(self.blocks.par_iter())
            .for_each(|(acc, rows)| {
                acc.iter_mut().for_each(|a| *a = Vec3::zeros());
                let mut normals = vec![[0.0; 3]; n];
                for i in rows.clone() {
                    noise.fill_row(step, i, n, &mut normals);
                    let vi = v[i];
                    let mut row_sum = Vec3::zeros();
                    for (k, j) in (i + 1..n).enumerate() {
                        let z = vi - v[j];
                        let r2 = z.norm_squared();
                        if r2 == 0.0 {
                            continue;
                        }
                        let r = r2.sqrt();
                        let alpha = spec.alpha(r);
                        let xi = Vec3::new(normals[k][0], normals[k][1], normals[k][2]);
                        let d = z * (-2.0 * alpha * drift_scale)
                            + sigma_n_apply(alpha.sqrt(), r, &z, &xi) * noise_scale;
                        row_sum += d;
                        acc[j] -= d;
                    }
                    acc[i] += row_sum;
                }
            });

        let mut next: Vec<Vec3> = v.clone();
        for part in &self.partials {
            for (x, d) in next.iter_mut().zip(part) {
                *x += d;
            }
        }
        let new_step = step + 1;
        if next.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
            return Err(LandauError::Blowup { step: new_step });
        }
        if self.energy_mode == EnergyMode::Rescale {
            let (_, e_prev) = momentum_energy(v);
            rescale_energy(&mut next, e_prev);
        }
        Ok(ParticleState {
            t: new_step as f64 * self.dt,
            step_index: new_step,
            velocities: next,
            noise_seed: state.noise_seed,
            config_id: state.config_id,
        })
    }

    /// One step with the counter-based noise of the state's seed.
    pub fn step(&mut self, state: &ParticleState) -> Result<ParticleState> {
        let noise = CounterNoise::new(state.noise_seed);
        self.step_with(state, &noise)
    }
}

/// Scales velocities about their mean so that Σ|Vᵢ|² equals `target`.
fn rescale_energy(v: &mut [Vec3], target: f64) {
    let n = v.len() as f64;
    let (m, _) = momentum_energy(v);
    let mean = m / n;
    let spread = crate::numeric::neumaier_sum(v.iter().map(|x| (x - mean).norm_squared()));
    let thermal = target - n * mean.norm_squared();
    if spread > 0.0 && thermal > 0.0 {
        let s = (thermal / spread).sqrt();
        for x in v.iter_mut() {
            *x = mean + (*x - mean) * s;
        }
    }
}

/// Convenience wrapper: one step of `state` under `config`.
pub fn step(config: &SimConfig, state: &ParticleState) -> Result<ParticleState> {
    Stepper::new(config)?.step(state)
}

/// Callback invoked on every stored snapshot.
pub trait Observer {
    fn observe(&mut self, state: &ParticleState) -> Result<()>;
}

impl<F: FnMut(&ParticleState) -> Result<()>> Observer for F {
    fn observe(&mut self, state: &ParticleState) -> Result<()> {
        self(state)
    }
}

/// Error marker for a trajectory cut short.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryError {
    pub step: u64,
    pub message: String,
}

/// Snapshots of one run, kept in memory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub config: SimConfig,
    pub snapshots: Vec<ParticleState>,
    pub error: Option<TrajectoryError>,
}

impl Trajectory {
    pub fn last(&self) -> &ParticleState {
        self.snapshots
            .last()
            .expect("a trajectory holds its initial state")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }
}

/// Samples the initial state from `g0` and integrates to t_end.
pub fn run(
    config: &SimConfig,
    g0: &dyn DensityModel,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    let init = init_iid(config, g0)?;
    run_from(config, init, observers)
}

/// Integrates from an explicit initial state, storing a snapshot (and calling
/// the observers) at step 0, every `snapshot_stride` steps, and at the final
/// step. A failing step or observer ends the run; the snapshots gathered so
/// far are returned with an error marker.
pub fn run_from(
    config: &SimConfig,
    init: ParticleState,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    run_inner(config, init, observers, true)
}

/// Like [`run_from`] but keeps only the final state in memory.
pub fn run_streaming(
    config: &SimConfig,
    init: ParticleState,
    observers: &mut [&mut dyn Observer],
) -> Result<Trajectory> {
    run_inner(config, init, observers, false)
}

fn run_inner(
    config: &SimConfig,
    init: ParticleState,
    observers: &mut [&mut dyn Observer],
    keep: bool,
) -> Result<Trajectory> {
    let mut stepper = Stepper::new(config)?;
    let noise = CounterNoise::new(config.seed);
    let n_steps = config.n_steps();
    let mut traj = Trajectory {
        config: config.clone(),
        snapshots: Vec::new(),
        error: None,
    };
    let mut notify = |state: &ParticleState, traj: &mut Trajectory| -> Result<()> {
        for o in observers.iter_mut() {
            o.observe(state)?;
        }
        if keep || traj.snapshots.is_empty() {
            traj.snapshots.push(state.clone());
        } else {
            traj.snapshots[0] = state.clone();
        }
        Ok(())
    };
    if let Err(e) = notify(&init, &mut traj) {
        traj.error = Some(TrajectoryError {
            step: 0,
            message: e.to_string(),
        });
        return Ok(traj);
    }
    let mut state = init;
    for s in 1..=n_steps {
        match stepper.step_with(&state, &noise) {
            Ok(next) => state = next,
            Err(e) => {
                traj.error = Some(TrajectoryError {
                    step: s,
                    message: e.to_string(),
                });
                if !keep {
                    traj.snapshots[0] = state;
                }
                return Ok(traj);
            }
        }
        if s % config.snapshot_stride == 0 || s == n_steps {
            if let Err(e) = notify(&state, &mut traj) {
                traj.error = Some(TrajectoryError {
                    step: s,
                    message: e.to_string(),
                });
                return Ok(traj);
            }
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::DiagGaussian;

    fn gauss() -> DiagGaussian {
        DiagGaussian::isotropic(1.0).unwrap()
    }

    #[test]
    fn init_is_deterministic_and_requires_two_particles() {
        let cfg = SimConfig::new(-2.0, 1e-3, 0.01, 2, 11).unwrap();
        let a = init_iid(&cfg, &gauss()).unwrap();
        let b = init_iid(&cfg, &gauss()).unwrap();
        assert_eq!(a, b);
        assert!(SimConfig::new(-2.0, 1e-3, 0.01, 1, 11).is_err());
    }

    #[test]
    fn coincident_pair_does_not_move() {
        let cfg = SimConfig::new(-2.0, 1e-3, 0.01, 2, 3).unwrap();
        let v = Vec3::new(0.5, -0.1, 0.2);
        let s0 = state_from_velocities(&cfg, vec![v, v]).unwrap();
        let s1 = step(&cfg, &s0).unwrap();
        assert_eq!(s1.velocities, s0.velocities);
        assert_eq!(s1.step_index, 1);
        assert!((s1.t - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn two_particles_receive_opposite_increments() {
        let cfg = SimConfig::new(-3.0, 1e-3, 0.01, 2, 3).unwrap();
        let s0 = state_from_velocities(&cfg, vec![Vec3::x(), -Vec3::x()]).unwrap();
        let s1 = step(&cfg, &s0).unwrap();
        let d0 = s1.velocities[0] - s0.velocities[0];
        let d1 = s1.velocities[1] - s0.velocities[1];
        assert_eq!(d0, -d1);
    }

    #[test]
    fn conserved_quantities_examples() {
        let cfg = SimConfig::new(-2.0, 1e-3, 0.01, 2, 3).unwrap();
        let s = state_from_velocities(&cfg, vec![Vec3::x(), -Vec3::x()]).unwrap();
        assert_eq!(conserved_quantities(&s), (Vec3::zeros(), 2.0));
        let cfg = SimConfig::new(-2.0, 1e-3, 0.01, 5, 3).unwrap();
        let s = state_from_velocities(&cfg, vec![Vec3::zeros(); 5]).unwrap();
        assert_eq!(conserved_quantities(&s), (Vec3::zeros(), 0.0));
    }

    #[test]
    fn row_blocks_cover_all_rows_once() {
        for n in [2, 3, 64, 100, 513, 2000] {
            let b = row_blocks(n);
            assert_eq!(b.first().unwrap().start, 0);
            assert_eq!(b.last().unwrap().end, n);
            for w in b.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
            assert!(b.len() <= 64);
        }
    }

    #[test]
    fn t_end_zero_gives_single_snapshot() {
        let cfg = SimConfig::new(-2.0, 1e-3, 0.0, 4, 3).unwrap();
        let traj = run(&cfg, &gauss(), &mut []).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert!(traj.error.is_none());
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(SimConfig::new(-2.0, 0.0, 1.0, 4, 0).is_err());
        assert!(SimConfig::new(-2.0, 0.1, 0.05, 4, 0).is_err());
        assert!(SimConfig::new(-1.0, 0.1, 1.0, 4, 0).is_err());
        assert!(SimConfig::new(0.0, 0.1, 1.0, 4, 0).is_ok());
        assert!(SimConfig::new(-2.0, 0.1, 1.0, 4, 0)
            .unwrap()
            .with_stride(0)
            .is_err());
    }

    #[test]
    fn default_eta_rule_is_clipped_power() {
        assert!((EtaRule::default().eta(16) - 0.5).abs() < 1e-15);
        assert_eq!(EtaRule::default().eta(1), 1.0);
        assert_eq!(
            EtaRule::Power {
                c: 1.0,
                kappa: 10.0
            }
            .eta(1000),
            1e-4
        );
    }
}
