use landau_core::density::DiagGaussian;
use landau_core::dynamics::{
    conserved_quantities, init_iid, run, run_from, state_from_velocities, EnergyMode,
    ParticleState, SimConfig, Stepper,
};
use landau_core::noise::{CounterNoise, PairNoise};
use landau_core::{LandauError, Vec3};
use proptest::prelude::*;

fn gauss() -> DiagGaussian {
    DiagGaussian::isotropic(1.0).unwrap()
}

fn velocities(traj: &landau_core::dynamics::Trajectory) -> Vec<Vec<Vec3>> {
    traj.snapshots
        .iter()
        .map(|s| s.velocities.clone())
        .collect()
}

#[test]
fn same_seed_gives_bitwise_identical_trajectories() {
    let cfg = SimConfig::new(-3.0, 1e-3, 0.02, 40, 9).unwrap();
    let a = run(&cfg, &gauss(), &mut []).unwrap();
    let b = run(&cfg, &gauss(), &mut []).unwrap();
    assert_eq!(velocities(&a), velocities(&b));
    let c = run(&cfg.clone().with_seed(10), &gauss(), &mut []).unwrap();
    assert_ne!(velocities(&a), velocities(&c));
}

#[test]
fn result_does_not_depend_on_thread_count() {
    // Large enough that the pair loop splits into several row blocks.
    let cfg = SimConfig::new(-2.0, 1e-3, 0.005, 300, 4).unwrap();
    let go = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run(&cfg, &gauss(), &mut []).unwrap())
    };
    let one = go(1);
    let four = go(4);
    assert_eq!(velocities(&one), velocities(&four));
}

/// Noise of a relabelled system: pair (i, j) of the permuted system uses
/// the increment of pair (perm[i], perm[j]) of the original one.
struct Relabelled {
    inner: CounterNoise,
    perm: Vec<usize>,
}

impl PairNoise for Relabelled {
    fn pair_normals(&self, step: u64, i: usize, j: usize, n: usize) -> [f64; 3] {
        let (a, b) = (self.perm[i], self.perm[j]);
        if a < b {
            self.inner.pair_normals(step, a, b, n)
        } else {
            let x = self.inner.pair_normals(step, b, a, n);
            [-x[0], -x[1], -x[2]]
        }
    }
}

#[test]
fn dynamics_are_exchangeable_under_relabelled_noise() {
    let n = 24;
    let cfg = SimConfig::new(-3.0, 1e-3, 0.01, n, 2).unwrap();
    let init = init_iid(&cfg, &gauss()).unwrap();
    // perm[i] is the original label of particle i in the permuted system.
    let perm: Vec<usize> = (0..n).map(|i| (7 * i + 3) % n).collect();
    let permuted = ParticleState {
        velocities: perm.iter().map(|&p| init.velocities[p]).collect(),
        ..init.clone()
    };
    let noise = CounterNoise::new(cfg.seed);
    let relabelled = Relabelled {
        inner: noise,
        perm: perm.clone(),
    };
    let mut s1 = Stepper::new(&cfg).unwrap();
    let mut s2 = Stepper::new(&cfg).unwrap();
    let (mut a, mut b) = (init, permuted);
    for _ in 0..10 {
        a = s1.step_with(&a, &noise).unwrap();
        b = s2.step_with(&b, &relabelled).unwrap();
    }
    for (i, &p) in perm.iter().enumerate() {
        assert!((b.velocities[i] - a.velocities[p]).amax() < 1e-12);
    }
}

#[test]
fn zero_horizon_keeps_only_the_initial_state() {
    let cfg = SimConfig::new(-2.0, 1e-2, 0.0, 8, 1).unwrap();
    let traj = run(&cfg, &gauss(), &mut []).unwrap();
    assert_eq!(traj.snapshots.len(), 1);
    assert_eq!(traj.last().t, 0.0);
    assert!(traj.error.is_none());
}

#[test]
fn snapshots_follow_the_stride_and_include_the_final_step() {
    let cfg = SimConfig::new(-2.0, 1e-2, 0.07, 8, 1)
        .unwrap()
        .with_stride(3)
        .unwrap();
    let traj = run(&cfg, &gauss(), &mut []).unwrap();
    let steps: Vec<u64> = traj.snapshots.iter().map(|s| s.step_index).collect();
    assert_eq!(steps, vec![0, 3, 6, 7]);
}

#[test]
fn overflow_is_reported_with_its_step() {
    let cfg = SimConfig::new(0.0, 1e-3, 0.01, 2, 0).unwrap();
    let state = state_from_velocities(
        &cfg,
        vec![Vec3::new(1e308, 0.0, 0.0), Vec3::new(-1e308, 0.0, 0.0)],
    )
    .unwrap();
    let traj = run_from(&cfg, state, &mut []).unwrap();
    let err = traj.error.expect("overflow must stop the run");
    assert_eq!(err.step, 1);
    assert_eq!(traj.snapshots.len(), 1);
}

/// Standard normals except for one poisoned step.
struct Poisoned {
    inner: CounterNoise,
    at: u64,
}

impl PairNoise for Poisoned {
    fn pair_normals(&self, step: u64, i: usize, j: usize, n: usize) -> [f64; 3] {
        if step == self.at {
            [f64::NAN; 3]
        } else {
            self.inner.pair_normals(step, i, j, n)
        }
    }
}

#[test]
fn stepper_reports_the_failing_step_number() {
    let cfg = SimConfig::new(-2.0, 1e-3, 0.01, 6, 0).unwrap();
    let mut state = init_iid(&cfg, &gauss()).unwrap();
    let noise = Poisoned {
        inner: CounterNoise::new(0),
        at: 4,
    };
    let mut stepper = Stepper::new(&cfg).unwrap();
    let err = loop {
        match stepper.step_with(&state, &noise) {
            Ok(s) => state = s,
            Err(e) => break e,
        }
    };
    assert!(matches!(err, LandauError::Blowup { step: 5 }), "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn momentum_is_conserved_for_any_configuration(
        n in 2usize..40,
        gamma in prop_oneof![Just(0.0), -3.0..=-2.0f64],
        seed in 0u64..1000,
        dt_exp in 2i32..5,
    ) {
        let dt = 10f64.powi(-dt_exp);
        let cfg = SimConfig::new(gamma, dt, 20.0 * dt, n, seed).unwrap();
        let mut state = init_iid(&cfg, &gauss()).unwrap();
        let mut stepper = Stepper::new(&cfg).unwrap();
        let (p0, e0) = conserved_quantities(&state);
        let scale = (e0 / n as f64).sqrt();
        for _ in 0..20 {
            state = stepper.step(&state).unwrap();
        }
        let (p1, _) = conserved_quantities(&state);
        prop_assert!((p1 - p0).amax() <= 20.0 * 1e-12 * scale);
    }

    #[test]
    fn rescale_mode_keeps_energy(n in 2usize..40, seed in 0u64..1000) {
        let cfg = SimConfig::new(-2.5, 1e-2, 0.1, n, seed)
            .unwrap()
            .with_energy_mode(EnergyMode::Rescale);
        let init = init_iid(&cfg, &gauss()).unwrap();
        let (_, e0) = conserved_quantities(&init);
        let traj = run_from(&cfg, init, &mut []).unwrap();
        for s in &traj.snapshots {
            let (_, e) = conserved_quantities(s);
            prop_assert!((e - e0).abs() <= 1e-12 * e0);
        }
    }
}
