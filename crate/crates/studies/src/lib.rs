//! Multi-seed desk-scale studies of the particle system: energy-drift scaling
//! in dt, anisotropy relaxation for Maxwell molecules, entropy trends, the
//! N-dependence of weak-form residuals, pair-statistic time series and
//! Hölder fits of ι over dyadic lags.
//!
//! Every study takes an explicit seed list and is deterministic in it.

use landau_core::density::DensityModel;
use landau_core::diagnostics::{
    find_nonaligned_triple, iota, Measure, NonAlignedTriple, TestFunction, WeakResidualTracker,
};
use landau_core::dynamics::{
    init_iid, run_from, run_streaming, state_from_velocities, Observer, ParticleState, SimConfig,
};
use landau_core::estimators::{knn_entropy, pair_inverse_square, EmpiricalMeasure};
use landau_core::numeric::{
    fit_line, isotonic_nonincreasing, mean_and_se, median, neumaier_sum, std_dev,
};
use landau_core::potentials::Potential;
use landau_core::{LandauError, Mat3, Result, Vec3};
use rayon::prelude::*;

/// Signed relative energy change (E_T − E_0)/E_0 of one run.
pub fn relative_energy_drift(cfg: &SimConfig, g0: &dyn DensityModel) -> Result<f64> {
    let init = init_iid(cfg, g0)?;
    let e0 = energy(&init.velocities);
    let traj = run_streaming(cfg, init, &mut [])?;
    if let Some(e) = traj.error {
        return Err(LandauError::Blowup { step: e.step });
    }
    Ok((energy(&traj.last().velocities) - e0) / e0)
}

fn energy(v: &[Vec3]) -> f64 {
    neumaier_sum(v.iter().map(|x| x.norm_squared()))
}

/// Terminal drifts at dt and dt/2 over the same seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftScaling {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    /// median |coarse| / median |fine|.
    pub ratio: f64,
}

pub fn energy_drift_scaling(
    base: &SimConfig,
    g0: &dyn DensityModel,
    seeds: &[u64],
) -> Result<DriftScaling> {
    let drifts = |dt: f64| -> Result<Vec<f64>> {
        seeds
            .par_iter()
            .map(|&s| {
                let mut cfg = base.clone().with_seed(s);
                cfg.dt = dt;
                cfg.snapshot_stride = 1;
                relative_energy_drift(&cfg, g0)
            })
            .collect()
    };
    let coarse = drifts(base.dt)?;
    let fine = drifts(base.dt / 2.0)?;
    let abs_median = |v: &[f64]| median(&v.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let ratio = abs_median(&coarse) / abs_median(&fine);
    Ok(DriftScaling {
        coarse,
        fine,
        ratio,
    })
}

/// Covariance (1/N)Σ(vᵢ − m)(vᵢ − m)ᵀ.
pub fn empirical_covariance(v: &[Vec3]) -> Mat3 {
    let n = v.len() as f64;
    let mean = v.iter().fold(Vec3::zeros(), |a, x| a + x) / n;
    v.iter().fold(Mat3::zeros(), |a, x| {
        let d = x - mean;
        a + d * d.transpose()
    }) / n
}

/// Traceless part of a symmetric matrix.
pub fn traceless(m: &Mat3) -> Mat3 {
    m - Mat3::identity() * (m.trace() / 3.0)
}

/// Seed-averaged relaxation of the traceless covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub times: Vec<f64>,
    /// Mean over seeds of ⟨Q(t), Q(0)⟩/|Q(0)|², with Q the traceless covariance.
    pub projection: Vec<f64>,
    /// Least-squares decay rate of log(projection).
    pub rate: f64,
    /// Largest |tr P(t) − tr P(0)|/tr P(0) over seeds and snapshots, P the
    /// second-moment matrix.
    pub trace_drift: f64,
}

pub fn anisotropy_decay(
    base: &SimConfig,
    g0: &dyn DensityModel,
    seeds: &[u64],
) -> Result<DecayFit> {
    let per_seed: Vec<(Vec<f64>, Vec<f64>, f64)> = seeds
        .par_iter()
        .map(|&s| -> Result<_> {
            let cfg = base.clone().with_seed(s);
            let init = init_iid(&cfg, g0)?;
            let q0 = traceless(&empirical_covariance(&init.velocities));
            let tr0 = energy(&init.velocities);
            let mut times = Vec::new();
            let mut proj = Vec::new();
            let mut drift = 0.0f64;
            let mut obs = |st: &ParticleState| -> Result<()> {
                let q = traceless(&empirical_covariance(&st.velocities));
                times.push(st.t);
                proj.push(q.dot(&q0) / q0.norm_squared());
                drift = drift.max((energy(&st.velocities) - tr0).abs() / tr0);
                Ok(())
            };
            let traj = run_streaming(&cfg, init, &mut [&mut obs as &mut dyn Observer])?;
            if let Some(e) = traj.error {
                return Err(LandauError::Blowup { step: e.step });
            }
            Ok((times, proj, drift))
        })
        .collect::<Result<_>>()?;
    let times = per_seed[0].0.clone();
    let projection: Vec<f64> = (0..times.len())
        .map(|k| per_seed.iter().map(|s| s.1[k]).sum::<f64>() / seeds.len() as f64)
        .collect();
    let logs: Vec<f64> = projection.iter().map(|p| p.ln()).collect();
    let (slope, _) = fit_line(&times, &logs);
    let trace_drift = per_seed.iter().map(|s| s.2).fold(0.0, f64::max);
    Ok(DecayFit {
        times,
        projection,
        rate: -slope,
        trace_drift,
    })
}

/// Root-mean-square distance of a series to its best non-increasing fit.
pub fn isotonic_rms_violation(series: &[f64]) -> f64 {
    let fit = isotonic_nonincreasing(series);
    let ss: f64 = series.iter().zip(&fit).map(|(a, b)| (a - b).powi(2)).sum();
    (ss / series.len() as f64).sqrt()
}

/// k-NN entropy series across seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTrend {
    pub times: Vec<f64>,
    /// series[seed][snapshot] of the ∫f log f estimate.
    pub series: Vec<Vec<f64>>,
    /// Median over seeds of the isotonic RMS violation.
    pub violation: f64,
    /// Median over snapshots of the across-seed standard deviation.
    pub dispersion: f64,
}

pub fn entropy_trend(
    base: &SimConfig,
    g0: &dyn DensityModel,
    seeds: &[u64],
    k: usize,
) -> Result<EntropyTrend> {
    let per_seed: Vec<(Vec<f64>, Vec<f64>)> = seeds
        .par_iter()
        .map(|&s| -> Result<_> {
            let cfg = base.clone().with_seed(s);
            let mut times = Vec::new();
            let mut h = Vec::new();
            let mut obs = |st: &ParticleState| -> Result<()> {
                let mu = EmpiricalMeasure::new(st.velocities.clone())?;
                times.push(st.t);
                h.push(knn_entropy(&mu, k)?.value);
                Ok(())
            };
            let init = init_iid(&cfg, g0)?;
            let traj = run_streaming(&cfg, init, &mut [&mut obs as &mut dyn Observer])?;
            if let Some(e) = traj.error {
                return Err(LandauError::Blowup { step: e.step });
            }
            Ok((times, h))
        })
        .collect::<Result<_>>()?;
    let times = per_seed[0].0.clone();
    let series: Vec<Vec<f64>> = per_seed.into_iter().map(|p| p.1).collect();
    let violations: Vec<f64> = series.iter().map(|s| isotonic_rms_violation(s)).collect();
    let stds: Vec<f64> = (0..times.len())
        .map(|t| std_dev(&series.iter().map(|s| s[t]).collect::<Vec<_>>()))
        .collect();
    Ok(EntropyTrend {
        times,
        violation: median(&violations),
        dispersion: median(&stds),
        series,
    })
}

/// |𝓕_{φ,T}| per seed for one configuration, with the bare potential.
pub fn weak_residuals(
    base: &SimConfig,
    g0: &dyn DensityModel,
    seeds: &[u64],
    phi: &dyn TestFunction,
) -> Result<Vec<f64>> {
    let pot = Potential::exact(base.gamma)?;
    seeds
        .par_iter()
        .map(|&s| {
            let cfg = base.clone().with_seed(s);
            let mut tracker = WeakResidualTracker::new(pot);
            let mut last = 0.0;
            let mut obs = |st: &ParticleState| -> Result<()> {
                last = tracker.update(st.t, &st.velocities, phi);
                Ok(())
            };
            let init = init_iid(&cfg, g0)?;
            let traj = run_streaming(&cfg, init, &mut [&mut obs as &mut dyn Observer])?;
            if let Some(e) = traj.error {
                return Err(LandauError::Blowup { step: e.step });
            }
            Ok(last.abs())
        })
        .collect()
}

/// Seed mean and standard error of the pair statistic at each snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSeries {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

pub fn pair_statistic_series(
    base: &SimConfig,
    g0: &dyn DensityModel,
    seeds: &[u64],
) -> Result<PairSeries> {
    let per_seed: Vec<(Vec<f64>, Vec<f64>)> = seeds
        .par_iter()
        .map(|&s| -> Result<_> {
            let cfg = base.clone().with_seed(s);
            let mut times = Vec::new();
            let mut vals = Vec::new();
            let mut obs = |st: &ParticleState| -> Result<()> {
                let mu = EmpiricalMeasure::new(st.velocities.clone())?;
                times.push(st.t);
                vals.push(pair_inverse_square(&mu)?.value);
                Ok(())
            };
            let init = init_iid(&cfg, g0)?;
            let traj = run_streaming(&cfg, init, &mut [&mut obs as &mut dyn Observer])?;
            if let Some(e) = traj.error {
                return Err(LandauError::Blowup { step: e.step });
            }
            Ok((times, vals))
        })
        .collect::<Result<_>>()?;
    let times = per_seed[0].0.clone();
    let (mut mean, mut se) = (Vec::new(), Vec::new());
    for k in 0..times.len() {
        let (m, e) = mean_and_se(&per_seed.iter().map(|s| s.1[k]).collect::<Vec<_>>());
        mean.push(m);
        se.push(e);
    }
    Ok(PairSeries { times, mean, se })
}

/// Mean absolute increments of a uniformly sampled series at lags
/// dt·2^l, l = 0..levels, and the slope of log increment against log lag.
#[derive(Debug, Clone, PartialEq)]
pub struct HolderFit {
    pub lags: Vec<f64>,
    pub increments: Vec<f64>,
    pub exponent: f64,
}

pub fn dyadic_holder_fit(series: &[f64], dt: f64, levels: usize) -> Result<HolderFit> {
    if series.len() <= 1 << levels {
        return Err(LandauError::Precondition(format!(
            "series of length {} too short for {levels} dyadic levels",
            series.len()
        )));
    }
    let mut lags = Vec::new();
    let mut increments = Vec::new();
    for l in 0..=levels {
        let m = 1usize << l;
        let inc: Vec<f64> = series.windows(m + 1).map(|w| (w[m] - w[0]).abs()).collect();
        lags.push(dt * m as f64);
        increments.push(inc.iter().sum::<f64>() / inc.len() as f64);
    }
    if increments.iter().any(|&x| x <= 0.0) {
        return Err(LandauError::DegenerateCloud(
            "series has zero increments".into(),
        ));
    }
    let lx: Vec<f64> = lags.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = increments.iter().map(|x| x.ln()).collect();
    let (exponent, _) = fit_line(&lx, &ly);
    Ok(HolderFit {
        lags,
        increments,
        exponent,
    })
}

/// Equal-weight clusters of isotropic Gaussian particles.
pub fn cluster_cloud(centers: &[Vec3], sigma: f64, n: usize, seed: u64) -> Vec<Vec3> {
    use landau_core::noise::aux_rng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = aux_rng(seed, 0xC1, 0);
    (0..n)
        .map(|i| {
            let c = centers[i % centers.len()];
            let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
            c + Vec3::new(g(), g(), g()) * sigma
        })
        .collect()
}

/// ι along a trajectory started from `init`, evaluated at every stored
/// snapshot, for the triple found on the initial cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct IotaSeries {
    pub triple: NonAlignedTriple,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn iota_series(
    cfg: &SimConfig,
    init: Vec<Vec3>,
    delta: f64,
    radius: f64,
    kappa: f64,
) -> Result<IotaSeries> {
    let mu0 = EmpiricalMeasure::new(init.clone())?;
    let triple = find_nonaligned_triple(&Measure::Empirical(&mu0), delta, radius, kappa)?
        .ok_or_else(|| {
            LandauError::Precondition("no non-aligned triple on the initial cloud".into())
        })?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut obs = |st: &ParticleState| -> Result<()> {
        let mu = EmpiricalMeasure::new(st.velocities.clone())?;
        times.push(st.t);
        values.push(iota(&Measure::Empirical(&mu), &triple));
        Ok(())
    };
    let state = state_from_velocities(cfg, init)?;
    let traj = run_from(cfg, state, &mut [&mut obs as &mut dyn Observer])?;
    if let Some(e) = traj.error {
        return Err(LandauError::Blowup { step: e.step });
    }
    Ok(IotaSeries {
        triple,
        times,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_series_has_no_violation() {
        assert_eq!(isotonic_rms_violation(&[3.0, 2.0, 2.0, -1.0]), 0.0);
        // One bump of height 1 over two points: the fit averages them.
        let v = isotonic_rms_violation(&[0.0, 1.0]);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn holder_fit_recovers_power_laws() {
        let dt = 1e-3;
        let lin: Vec<f64> = (0..200).map(|k| 2.0 * k as f64 * dt).collect();
        assert!((dyadic_holder_fit(&lin, dt, 5).unwrap().exponent - 1.0).abs() < 1e-12);
        // An alternating 0/1 series has zero increments at even lags.
        let flat: Vec<f64> = (0..200).map(|k| (k % 2) as f64).collect();
        assert!(dyadic_holder_fit(&flat, dt, 5).is_err());
        assert!(dyadic_holder_fit(&lin[..16], dt, 5).is_err());
    }

    #[test]
    fn covariance_of_symmetric_cloud() {
        let v = vec![
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, -2.0, 0.0),
        ];
        let c = empirical_covariance(&v);
        assert!((c - Mat3::from_diagonal(&Vec3::new(0.5, 2.0, 0.0))).amax() < 1e-15);
        assert!(traceless(&c).trace().abs() < 1e-15);
    }

    #[test]
    fn cluster_cloud_alternates_centres() {
        let c = [Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0)];
        let pts = cluster_cloud(&c, 0.01, 6, 1);
        for (i, p) in pts.iter().enumerate() {
            assert!((p - c[i % 2]).norm() < 0.1);
        }
    }
}
